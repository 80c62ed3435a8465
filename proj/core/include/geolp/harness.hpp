#pragma once

#include <geolp/foliation.hpp>
#include <geolp/lp.hpp>
#include <geolp/norms.hpp>
#include <geolp/report.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace geolp {

/// Random band-limited fields on a foliation. On the torus the modes are the chart Fourier modes
/// e^{iξ·ω} with |ξ| ≤ max_frequency; on the sphere the harmonics Y_lm with l ≤ max_frequency.
/// Coefficients are complex normal times (1+λ)^{−slope/2}, λ the reference eigenvalue (|ξ|² or
/// l(l+1)/r0²), modulated in s by Σ_{m<t_modes} z_m e^{iπms}. Values ride along the generators,
/// so the same functions are sampled at every resolution.
struct SampleSpec
{
    int count = 16;
    int rank = 0;
    double slope = 2.0;
    int t_modes = 2;
    int max_frequency = 6;
    std::uint64_t seed = 1;

    /// Throws ConfigError on a negative count, rank outside {0, 1}, or t_modes < 1.
    void validate() const;
};

/// Sample `sample` of stream `stream`; independent of how many other samples are drawn.
FoliatedTensor sample_field(const SampleSpec& spec, const std::shared_ptr<const FoliatedMetric>& fol, int sample,
                            int stream = 0);
std::vector<FoliatedTensor> sample_family(const SampleSpec& spec, const std::shared_ptr<const FoliatedMetric>& fol,
                                          int stream = 0);

/// Data of one theorem sample. For sharp_trace, G holds the 1-form F̌ and the remainder
/// ∇F − ∇_LF̌ is formed inside; for sharp_trace_corollary and homog_transport only F (or W0) is used.
struct TheoremSample
{
    FoliatedTensor F;
    FoliatedTensor G;
    TensorField W0;
};

/// Theorem ids: bilinear_trace, bilinear_trace_scalar, product_I, product_I_scalar, product_II,
/// sharp_trace, sharp_trace_corollary, homog_transport, product_I_dyadic.
const std::vector<std::string>& theorem_ids();

/// Builds `spec.count` samples for a theorem: F from stream 0, G from stream 1 (rank 1 for
/// sharp_trace), W0 from the initial slice of stream 2 (zero for the scalar variants).
std::vector<TheoremSample> theorem_family(const std::string& id, const SampleSpec& spec,
                                          const std::shared_ptr<const FoliatedMetric>& fol);

/// σ in the dyadic product bound.
inline constexpr double dyadic_sigma = 0.25;

/// Per-sample LHS/RHS for a theorem (k = band for product_I_dyadic). Rows with zero data are
/// skipped; a vanishing right side under a nonzero left side throws InequalityViolation.
RatioReport theorem_ratio(const std::string& id, const std::vector<TheoremSample>& family, const LPFamily& lp);

/// Probe ids: commutator_q, commutator_L1, equiv_L, gn_k, tricky_bernstein, int_strong_bernstein,
/// heat_besov, dyadic_ibp.
const std::vector<std::string>& probe_ids();

/// Exponent q used by a probe; q < 2 probes use 1.8.
double probe_exponent(const std::string& id);

/// Required fitted decay exponent, or NaN when the probe only reports a constant.
double probe_margin(const std::string& id);

/// Dyadic quantities over k (over (k, k′, k″) for dyadic_ibp, which pairs family[i] with
/// partners[i]). Decay probes report LHS/𝓝₁ so that fit_exponent is the decay rate in k
/// (in |k′−k″| + |k′−k| for dyadic_ibp); constant probes include the stated 2^k power in the RHS.
RatioReport dyadic_probe(const std::string& id, const std::vector<FoliatedTensor>& family, const LPFamily& lp,
                         const std::vector<FoliatedTensor>& partners = {});

/// Merges one report per resolution (coarse to fine), keeps the finest fit exponent and sets
/// the stability flag from the max-ratio drift.
RatioReport refinement_study(const std::vector<RatioReport>& per_resolution, double tolerance = 0.2);

/// Resolution column for a foliation: n on the torus, l_max on the sphere.
int resolution_of(const FoliatedMetric& fol);

/// LP family matched to the foliation's resolution: k from −4 to the largest band the
/// initial slice resolves.
LPFamily harness_family(const FoliatedMetric& fol, const LPKernel& kernel, LPMode mode = LPMode::normalized);

} // namespace geolp
