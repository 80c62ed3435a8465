#pragma once

#include <geolp/heat.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace geolp {

enum class Substrate { torus, sphere };

std::string to_string(Substrate s);
Substrate parse_substrate(const std::string& s);

/// Band-limited trigonometric pattern a·Σ_j c_j cos(k_j·ω + φ_j + 2πν_j s) with
/// Σ|c_j| = 1, so that |value| ≤ amplitude everywhere.
class Pattern
{
public:
    Pattern() = default;
    Pattern(double amplitude, std::uint64_t seed, int band, int terms = 6);

    double amplitude() const { return m_amplitude; }
    double operator()(double s, double w1, double w2) const;

private:
    struct Mode
    {
        int k1, k2;
        double c, phase, nu;
    };
    double m_amplitude = 0.0;
    std::vector<Mode> m_modes;
};

/// Synthetic geodesic foliation data on [0,1] × S.
struct FoliationConfig
{
    Substrate substrate = Substrate::torus;
    /// Torus grid size.
    int n = 16;
    /// Sphere harmonic degree.
    int l_max = 16;
    MetricRecipe initial = MetricRecipe::flat();
    double r0 = 20.0;
    int n_s = 24;
    double delta0_target = 0.05;
    /// trχ carries the background 2/(r0+s) when set.
    bool cone_background = true;
    std::uint64_t seed = 1;
    int band = 2;
    double trchi_amplitude = 0.0;
    double chihat_amplitude = 0.0;
    double zeta_amplitude = 0.0;
    double beta_amplitude = 0.0;

    /// Throws ConfigError.
    void validate() const;
    /// Same data with the slice count and spatial resolution replaced.
    FoliationConfig refined(int resolution, int slices) const;
    std::string name() const;
};

/// Exact cone background trχ = 2/(r0+s) with every perturbation zero.
FoliationConfig minkowski_cone(double r0, Substrate substrate, int resolution = 16, int n_s = 24);

/// Per-node 2×2 field M[a][c], stored row-major as M[2a+c].
using MixedField = std::array<VectorXd, 4>;

class FoliatedMetric : public std::enable_shared_from_this<FoliatedMetric>
{
public:
    FoliatedMetric(const FoliatedMetric&) = delete;
    FoliatedMetric& operator=(const FoliatedMetric&) = delete;

    const FoliationConfig& config() const { return m_cfg; }
    Substrate substrate() const { return m_cfg.substrate; }
    int slices() const { return int(m_slices.size()); }
    double h() const { return 1.0 / (slices() - 1); }
    double s(int i) const { return i * h(); }
    double r(int i) const { return m_cfg.r0 + s(i); }
    Index nodes() const { return m_slices.front()->nodes(); }

    const Surface& slice(int i) const { return *m_slices[i]; }
    std::shared_ptr<const Surface> slice_ptr(int i) const { return m_slices[i]; }
    /// nullptr on the sphere substrate.
    const MetricField* torus_slice(int i) const;
    const Surface& initial() const { return slice(0); }

    const VectorXd& trchi(int i) const { return m_trchi[i]; }
    /// χ_a^c from the prescribed data.
    const MixedField& chi_mixed(int i) const { return m_chi_mixed[i]; }
    /// χ_a^c = ½γ^{cb}∂_sγ_ab measured from the evolved metric.
    const MixedField& measured_chi_mixed(int i) const { return m_measured[i]; }
    /// Torus substrate only.
    const TensorField& chi(int i) const { return m_chi[i]; }
    const TensorField& chihat(int i) const { return m_chihat[i]; }
    const TensorField& zeta(int i) const { return m_zeta[i]; }
    const TensorField& beta(int i) const { return m_beta[i]; }

    /// Slice eigenbasis, computed on first use and cached.
    const EigenBasis& basis(int i, int rank) const;

    /// sup over slices of |∂_sγ − 2χ| with ∂_s by fourth-order differences.
    double first_variation_residual() const;

private:
    friend std::shared_ptr<const FoliatedMetric> build_foliation(const FoliationConfig& cfg);
    FoliatedMetric() = default;

    struct Cache
    {
        std::once_flag once;
        std::unique_ptr<EigenBasis> basis;
    };

    FoliationConfig m_cfg;
    std::vector<std::shared_ptr<const Surface>> m_slices;
    std::vector<VectorXd> m_trchi;
    std::vector<MixedField> m_chi_mixed;
    std::vector<MixedField> m_measured;
    std::vector<TensorField> m_chi;
    std::vector<TensorField> m_chihat;
    std::vector<TensorField> m_zeta;
    std::vector<TensorField> m_beta;
    mutable std::vector<std::array<std::unique_ptr<Cache>, 2>> m_cache;
};

/// Integrates ∂_sγ = 2χ slice by slice with the classical Runge-Kutta method.
/// Throws InvalidMetric with the slice and node on loss of definiteness.
std::shared_ptr<const FoliatedMetric> build_foliation(const FoliationConfig& cfg);

/// S-tangent tensor field sampled on every slice of a foliation.
struct FoliatedTensor
{
    FoliatedTensor() = default;
    FoliatedTensor(std::shared_ptr<const FoliatedMetric> metric, std::vector<TensorField> slices);

    /// The same field F0 on every slice.
    static FoliatedTensor constant(std::shared_ptr<const FoliatedMetric> metric, const TensorField& f0);

    std::shared_ptr<const FoliatedMetric> metric;
    std::vector<TensorField> slices;

    int rank() const { return slices.front().rank; }
    int count() const { return int(slices.size()); }

    FoliatedTensor& operator+=(const FoliatedTensor& o);
    FoliatedTensor& operator*=(double c);
};

FoliatedTensor operator+(FoliatedTensor a, const FoliatedTensor& b);
FoliatedTensor operator-(FoliatedTensor a, const FoliatedTensor& b);
FoliatedTensor operator*(double c, FoliatedTensor a);

/// Σᵢ M_{aᵢ}{}^c F_{a₁..c..a_r} per node.
TensorField contract_mixed(const MixedField& m, const TensorField& f);

/// ∂_s by fourth-order differences, one-sided at the ends.
FoliatedTensor s_derivative(const FoliatedTensor& f);
/// Slice-wise ∇.
FoliatedTensor nabla(const FoliatedTensor& f);
/// (∇_LF) = ∂_sF − Σᵢ χ_{aᵢ}{}^c F_{..c..}; rank ≤ 2.
FoliatedTensor nabla_L(const FoliatedTensor& f);

/// Solves ∇_LF + k·trχ·F = G with F(0) = F0.
FoliatedTensor transport_solve(double k_weight, const FoliatedTensor& g, const TensorField& f0);

struct CommutatorRow
{
    std::string identity;
    int slices;
    Index nodes;
    /// sup over slices and nodes of |LHS − RHS|.
    double residual;
    /// sup |RHS|.
    double scale;
    /// sup |(½trχζ + χ̂·ζ − β) − (½∇trχ − div χ̂)|; zero for identities without it.
    double codazzi_defect;
};

/// Evaluates the commutator identities applicable to a scalar (∇, Δ) or a
/// 1-form (div) with the left side built from the evolved metric alone.
std::vector<CommutatorRow> commutator_residual(const FoliatedTensor& f);

struct ReversePair
{
    FoliatedTensor w;
    FoliatedTensor W;
    /// ‖div W − w‖_{L_x^pL_t^∞} for p = 1, 2.
    std::map<double, double> defect;
    /// Δ0·‖F‖_{L_x^{2p/(2−p)}L_t^1} for p = 1, 2.
    std::map<double, double> bound;
};

/// w with ∇_Lw = div F, W with ∇_LW − χ·W = F, both vanishing on S₀.
ReversePair reverse_pair(const FoliatedTensor& f);

struct AssumptionRow
{
    std::string name;
    double value;
    /// Upper bound the value is compared against; infinity for informative rows.
    double target;
    bool pass;
};

struct AssumptionReport
{
    std::vector<AssumptionRow> rows;
    double delta0_target = 0.0;
    /// Largest value among rows that carry the Δ0 target.
    double delta0_measured = 0.0;
    bool compliant = false;

    double value(const std::string& name) const;
};

/// K2 exponent of Λ^{−γ}.
inline constexpr double k2_gamma = 0.55;

AssumptionReport assumption_report(const FoliatedMetric& fol);

} // namespace geolp
