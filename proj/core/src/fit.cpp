#include <geolp/fit.hpp>

#include <cmath>
#include <limits>

namespace geolp {

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t m = std::min(x.size(), y.size());
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / m;
    const double my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

double fit_decay_exponent(const std::vector<double>& x, const std::vector<double>& y, double floor)
{
    std::vector<double> xs, ls;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (y[i] > floor && std::isfinite(y[i])) {
            xs.push_back(x[i]);
            ls.push_back(std::log2(y[i]));
        }
    }
    return -fit_slope(xs, ls);
}

double fit_convergence_rate(const std::vector<int>& n, const std::vector<double>& err)
{
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n.size() && i < err.size(); ++i) {
        x.push_back(std::log(double(n[i])));
        y.push_back(std::log(err[i]));
    }
    return -fit_slope(x, y);
}

double relative_drift(double a, double b)
{
    if (a == b) return 0.0;
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(b - a) / std::abs(a);
}

} // namespace geolp
