#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace geolp {

/// Placeholder for band columns that do not apply to a row.
inline constexpr int no_band = std::numeric_limits<int>::min();

struct RatioRow
{
    int sample_id = -1;
    int k = no_band;
    int k_prime = no_band;
    int k_dprime = no_band;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    int resolution = 0;
};

/// Per-sample ratios of one inequality, possibly at several resolutions.
struct RatioReport
{
    explicit RatioReport(std::string check_id = {})
        : check_id(std::move(check_id))
    {}

    std::string check_id;
    std::vector<RatioRow> rows;
    double fit_exponent = std::numeric_limits<double>::quiet_NaN();
    bool stable = false;

    /// Records lhs/rhs. Rows with lhs = rhs = 0 are skipped; rhs = 0 < lhs throws InequalityViolation.
    void add(RatioRow row);
    void add(double lhs, double rhs, int sample_id, int resolution, int k = no_band, int k_prime = no_band,
             int k_dprime = no_band);
    void append(const RatioReport& other);

    double max_ratio() const;
    double max_ratio_at(int resolution) const;
    std::vector<int> resolutions() const;
    /// Relative change of the max ratio between the coarsest and finest resolution.
    double drift() const;
    /// Sets `stable` from drift() < tolerance; needs at least two resolutions.
    bool mark_stability(double tolerance = 0.2);
};

void write_csv_header(std::ostream& os);
void write_csv(std::ostream& os, const RatioReport& report, const std::string& config_hash);
std::string format_double(double v);

} // namespace geolp
