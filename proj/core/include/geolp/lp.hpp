#pragma once

#include <geolp/heat.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace geolp {

/// m(τ) = c·dⁿ/dτⁿ[τ^N e^{−τ}] with Laplace symbol m̂(μ) = c·N!·μⁿ/(1+μ)^{N+1},
/// normalized so that sup m̂ = 1.
class LPKernel
{
public:
    /// Requires 2 ≤ n_der ≤ N.
    explicit LPKernel(int N = 8, int n_der = 4);

    int N() const { return m_N; }
    int n_der() const { return m_n; }
    /// Overall factor c·N!.
    double scale() const { return m_scale; }

    double symbol(double mu) const;
    double time_kernel(double tau) const;
    /// Maximizer n/(N+1−n) of the symbol.
    double peak() const;
    /// sup_μ μ·m̂(μ) in closed form.
    double sup_mu_symbol() const;
    /// sup_μ m̂(μ)/μ in closed form.
    double sup_symbol_over_mu() const;
    std::string name() const;

private:
    double raw(double mu) const;

    int m_N;
    int m_n;
    double m_scale;
};

LPKernel make_kernel(int N = 8, int n_der = 4);
double symbol(const LPKernel& kernel, double mu);

enum class LPMode { raw, normalized };

std::string to_string(LPMode mode);
LPMode parse_lp_mode(const std::string& s);

/// The projections {P_k}, k_min ≤ k ≤ k_max, as spectral multipliers.
class LPFamily
{
public:
    LPFamily(LPKernel kernel, int k_min, int k_max, LPMode mode);

    const LPKernel& kernel() const { return m_kernel; }
    int k_min() const { return m_kmin; }
    int k_max() const { return m_kmax; }
    LPMode mode() const { return m_mode; }

    /// σ_k(λ) = m̂(2^{−2k}λ).
    double sigma(int k, double lambda) const;
    /// s_k(λ) in normalized mode, σ_k(λ) in raw mode.
    double symbol(int k, double lambda) const;
    /// Symbol of P_{<0}.
    double low_symbol(double lambda) const;

    VectorXd multiplier(int k, const VectorXd& lambda) const;
    VectorXd low_multiplier(const VectorXd& lambda) const;

private:
    void check(int k) const;

    LPKernel m_kernel;
    int m_kmin;
    int m_kmax;
    LPMode m_mode;
};

TensorField project(const TensorField& f, int k, const LPFamily& family, const EigenBasis& basis);
/// P_I for I = [k_lo, k_hi]; empty when k_lo > k_hi.
TensorField project_band(
    const TensorField& f, int k_lo, int k_hi, const LPFamily& family, const EigenBasis& basis);
TensorField low_part(const TensorField& f, const LPFamily& family, const EigenBasis& basis);

struct QuadratureConfig
{
    int nodes = 400;
    /// Sets the lower τ limit 2^{−2(k_max+5)}.
    int k_max = 8;
    /// Upper τ limit before rescaling for negative k.
    double tau_max = 4096.0;
    /// Compare against the spectral symbol and throw beyond `tolerance`·‖F‖.
    bool verify = false;
    double tolerance = 1e-6;
};

/// ∫₀^∞ m_k(τ)U(τ)F dτ by the log-τ trapezoid rule.
TensorField project_quadrature(
    const TensorField& f,
    int k,
    const LPKernel& kernel,
    const EigenBasis& basis,
    const QuadratureConfig& cfg = {});

struct LPPropertyRow
{
    std::string property_id;
    LPMode mode;
    int rank;
    double p;
    int k;
    int k_prime;
    double lhs;
    double bound;
    double ratio;
    double fitted_exponent;
};

struct LPReportConfig
{
    int k_lo = 0;
    int k_hi = 5;
    /// Kernel of the second family in the almost-orthogonality property.
    LPKernel second_kernel{10, 4};
    /// Exponent p in the curvature-dependent bounds.
    double curvature_p = 4.0;
};

struct LPPropertyReport
{
    std::vector<LPPropertyRow> rows;
    /// Max ratio per property id.
    std::map<std::string, double> constants;
    /// Fitted decay exponent of almost orthogonality, per p.
    std::map<double, double> orthogonality_exponent;
    /// sup_k |Σ P_k² + P_{<0}² − I| relative residual (normalized mode only).
    double reconstruction_residual = 0.0;
    double curvature_l2 = 0.0;
    std::string kernel;

    void write_csv(std::ostream& os) const;
};

/// Empirical constants of the LP properties i)–x) over the samples.
/// Rank-1 samples and P_k∇f rows need `rank1`.
LPPropertyReport property_report(
    const LPFamily& family,
    const Surface& s,
    const EigenBasis& rank0,
    const EigenBasis* rank1,
    const std::vector<TensorField>& samples,
    const LPReportConfig& cfg = {});

} // namespace geolp
