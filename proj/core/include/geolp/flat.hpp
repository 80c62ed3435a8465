#pragma once

#include <geolp/norms.hpp>
#include <geolp/report.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace geolp {

/// Real f(t, x) on the n×n periodic grid over [0,2π)² and n_t uniform nodes of I = [0,1].
/// Column j of values() is the slice t_j = j/(n_t−1); rows use the node index i1 + n·i2.
/// n is a power of two ≥ 8; n_t = 1 means a purely spatial field.
class FlatField
{
public:
    FlatField(int n, int n_t = 1);
    FlatField(int n, Eigen::MatrixXd values);

    static FlatField from_function(int n, int n_t, const std::function<double(double, double, double)>& f);

    int n() const { return n_; }
    int n_t() const { return int(values_.cols()); }
    Eigen::Index nodes() const { return values_.rows(); }
    double x(int i) const;
    double t(int j) const;
    /// Spacing of the t nodes; 0 when n_t = 1.
    double dt() const;
    /// Area element (2π/n)².
    double cell() const;

    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& values() { return values_; }
    FlatField slice(int j) const;

    FlatField& operator+=(const FlatField& o);
    FlatField& operator-=(const FlatField& o);
    FlatField& operator*=(double c);
    friend FlatField operator+(FlatField a, const FlatField& b) { return a += b; }
    friend FlatField operator-(FlatField a, const FlatField& b) { return a -= b; }
    friend FlatField operator*(double c, FlatField a) { return a *= c; }

private:
    int n_;
    Eigen::MatrixXd values_;
};

/// Pointwise product; both factors must share the grid.
FlatField pointwise(const FlatField& a, const FlatField& b);

/// Smooth radial cutoff: 1 on [0,1], 0 on [2,∞).
double flat_cutoff(double r);
/// χ(r) = φ(r) − φ(2r), supported in [½, 2], with Σ_k χ(2^{−k}r) = 1 for r > 0.
double flat_bump(double r);

/// Largest k whose band |ξ| < 2^{k+1} fits strictly inside the Nyquist square.
int flat_max_band(int n);
/// Largest k for which a product of two band-≤k fields is alias-free.
int flat_product_band(int n);
/// Smallest K with Σ_{k≤K} P_k + P_{<0} = I on the whole lattice.
int flat_top_band(int n);

/// Multiplies each slice's spectrum by a real even symbol m(ξ₁, ξ₂).
FlatField apply_symbol(const FlatField& f, const std::function<double(int, int)>& symbol);
/// (P_k f)^(ξ) = χ(2^{−k}|ξ|) f^(ξ).
FlatField fourier_project(const FlatField& f, int k);
/// P_J = Σ_{k=lo}^{hi} P_k.
FlatField fourier_project(const FlatField& f, int lo, int hi);
/// P_{<0}; on the integer lattice this keeps the mean only.
FlatField fourier_low(const FlatField& f);
/// Largest |ξ|_∞ whose coefficient exceeds tol·max over all slices.
int flat_frequency_extent(const FlatField& f, double tol = 1e-12);

/// Spectral ∂_{x^axis}, axis ∈ {1, 2}; the Nyquist mode is annihilated.
FlatField flat_partial(const FlatField& f, int axis);
/// Fourth-order differences in t; needs n_t ≥ 5.
FlatField flat_dt(const FlatField& f);
/// ∫_I f dt by the trapezoid rule.
FlatField flat_time_integral(const FlatField& f);
/// ∫_0^t f by the cumulative trapezoid rule.
FlatField flat_cumulative(const FlatField& f);

/// ‖f(t_j)‖_{L^p(T²)} for a single slice j.
double flat_lebesgue(const FlatField& f, double p, int j = 0);
/// L_x^p L_t^q or L_t^q L_x^p over I×T².
double flat_mixed(const FlatField& f, const NormSpec& spec);
/// Σ_{k≥0} 2^{θk}‖P_k f‖_{L²} + ‖P_{<0} f‖_{L²} of slice j.
double flat_besov(const FlatField& f, double theta = 0.0, int j = 0);
/// L_t^q B⁰_{2,1}.
double flat_besov_mixed(const FlatField& f, double q);
/// Sobolev norms on I×T² over all (t, x) derivatives up to order 1 or 2.
double flat_h1(const FlatField& f);
double flat_h2(const FlatField& f);

/// Random band-limited fields Σ_ξ w(ξ) Re(c_ξ(t) e^{iξ·x}) with w = (1+|ξ|²)^{−slope/2},
/// |ξ| < 2^{max_band+1}, and c_ξ(t) = Σ_{m<t_modes} z_m e^{iπmt}, z_m complex normal.
/// Coefficients are drawn per sample and stream, so the family does not depend on n.
struct FlatSampleSpec
{
    int count = 200;
    int max_band = 2;
    double slope = 2.0;
    int t_modes = 3;
    std::uint64_t seed = 1;
};

FlatField flat_random_field(int n, int n_t, const FlatSampleSpec& spec, int sample, int stream = 0);

/// Empirical constants of LP2–LP4 and residuals of the exact LP1, LP5 and partition identities.
struct FlatPropertyReport
{
    std::vector<RatioReport> constants;
    double lp1_residual = 0.0;
    double lp5_dt_residual = 0.0;
    double lp5_integral_residual = 0.0;
    double partition_residual = 0.0;
};

FlatPropertyReport flat_property_report(const std::vector<FlatField>& samples);

/// ‖∂_t f‖_{L_x^∞L_t²} / ‖f‖_{H²}.
RatioReport flat_sharp_trace_check(const std::vector<FlatField>& family);
/// Same ratio with ∂_t replaced by ∂_{x¹}.
RatioReport flat_sharp_trace_dx1(const std::vector<FlatField>& family);
/// f_K = φ(t) Σ_{1≤|ξ|≤2^K} ξ₁ sin(ξ·x)/|ξ|⁴ for K = 1..flat_max_band(n); the ∂_{x¹} ratio grows
/// like √K. fit_exponent holds the slope of log ratio against log K.
RatioReport flat_trace_counterexample(int n, int n_t = 64);

using FlatPair = std::pair<FlatField, FlatField>;

/// ‖∫_I ∂_t g·h‖_{B⁰_{2,1}} / (‖g‖_{H¹}‖h‖_{H¹}).
RatioReport flat_bilinear_trace_check(const std::vector<FlatPair>& family);

struct FlatProductReport
{
    /// ‖∫_I g·h‖_{B⁰} / ((‖g‖_{H¹} + ‖g‖_{L_x^∞L_t²})‖h‖_{L_t²B⁰}).
    RatioReport integrated;
    /// ‖g·∫_0^t h‖_{L_t²B⁰} / ((‖g‖_{H¹} + ‖g‖_{L_x^∞L_t²})‖h‖_{L_t¹B⁰}).
    RatioReport cumulative;
};

FlatProductReport flat_product_trace_check(const std::vector<FlatPair>& family);

struct DyadicProductReport
{
    /// ‖P_k(g_{k′}h_{k″})‖_{L_t^∞L_x²} / (‖g_{k′}‖_{H¹}‖h_{k″}‖_{H¹}) outside the low-low case.
    RatioReport ratios;
    /// Largest low-low ratio (k ≥ k′+3 and k ≥ k″+3); zero up to round-off.
    double low_low_max = 0.0;
    /// ‖g_{k′}‖_{L_t^∞L_x²} / (2^{k′/2}‖g_{k′}‖_{H¹}).
    RatioReport bernstein;
};

/// k ranges over 0..flat_max_band(n), k′ and k″ over 0..input_band. The decay exponent in
/// |k′−k| + |k″−k| is fitted to the per-distance maxima.
DyadicProductReport dyadic_product_check(const std::vector<FlatPair>& family, int input_band);

} // namespace geolp
