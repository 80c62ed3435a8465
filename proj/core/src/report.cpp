#include <geolp/error.hpp>
#include <geolp/fit.hpp>
#include <geolp/report.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace geolp {

void RatioReport::add(RatioRow row)
{
    if (!(row.lhs >= 0.0) || !(row.rhs >= 0.0)) throw DomainError(check_id + ": negative or NaN norm");
    if (row.rhs == 0.0) {
        if (row.lhs == 0.0) return;
        throw InequalityViolation(check_id + ": right side vanishes, left side " + format_double(row.lhs));
    }
    row.ratio = row.lhs / row.rhs;
    rows.push_back(row);
}

void RatioReport::add(double lhs, double rhs, int sample_id, int resolution, int k, int k_prime, int k_dprime)
{
    add(RatioRow{sample_id, k, k_prime, k_dprime, lhs, rhs, 0.0, resolution});
}

void RatioReport::append(const RatioReport& other)
{
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

double RatioReport::max_ratio() const
{
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.ratio);
    return m;
}

double RatioReport::max_ratio_at(int resolution) const
{
    double m = 0.0;
    for (const auto& r : rows) {
        if (r.resolution == resolution) m = std::max(m, r.ratio);
    }
    return m;
}

std::vector<int> RatioReport::resolutions() const
{
    std::set<int> s;
    for (const auto& r : rows) s.insert(r.resolution);
    return {s.begin(), s.end()};
}

double RatioReport::drift() const
{
    const auto res = resolutions();
    if (res.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return relative_drift(max_ratio_at(res.front()), max_ratio_at(res.back()));
}

bool RatioReport::mark_stability(double tolerance)
{
    const double d = drift();
    stable = std::isfinite(d) && d < tolerance;
    return stable;
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

std::string band(int k)
{
    return k == no_band ? std::string() : std::to_string(k);
}

} // namespace

void write_csv_header(std::ostream& os)
{
    os << "check_id,config_hash,sample_id,k,k_prime,k_dprime,lhs,rhs,ratio,fit_exponent,resolution,stable\n";
}

void write_csv(std::ostream& os, const RatioReport& report, const std::string& config_hash)
{
    const std::string fit = format_double(report.fit_exponent);
    for (const auto& r : report.rows) {
        os << report.check_id << ',' << config_hash << ',' << r.sample_id << ',' << band(r.k) << ','
           << band(r.k_prime) << ',' << band(r.k_dprime) << ',' << format_double(r.lhs) << ','
           << format_double(r.rhs) << ',' << format_double(r.ratio) << ',' << fit << ',' << r.resolution << ','
           << (report.stable ? 1 : 0) << '\n';
    }
}

} // namespace geolp
