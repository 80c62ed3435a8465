#pragma once

#include <vector>

namespace geolp {

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Decay exponent α in y ≈ C·2^{−α x}, fitted on entries with y > floor.
double fit_decay_exponent(const std::vector<double>& x, const std::vector<double>& y, double floor = 0.0);

/// Convergence order α in err ≈ C·n^{−α}.
double fit_convergence_rate(const std::vector<int>& n, const std::vector<double>& err);

/// |b − a| / |a|, or 0 when both vanish.
double relative_drift(double a, double b);

} // namespace geolp
