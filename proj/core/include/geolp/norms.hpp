#pragma once

#include <geolp/foliation.hpp>
#include <geolp/lp.hpp>

#include <string>
#include <vector>

namespace geolp {

/// L_x^p L_t^q (outer x) or L_t^q L_x^p (outer t). x-integrals use dμ₀ of S₀,
/// t-integrals the trapezoid rule on the slice grid.
struct NormSpec
{
    enum class Order { x_then_t, t_then_x };

    Order order = Order::t_then_x;
    double p = 2.0;
    double q = 2.0;

    static NormSpec Lx_Lt(double p, double q) { return {Order::x_then_t, p, q}; }
    static NormSpec Lt_Lx(double q, double p) { return {Order::t_then_x, p, q}; }

    /// Throws DomainError unless p, q ∈ [1, ∞].
    void validate() const;
    std::string name() const;
};

double mixed_norm(const FoliatedTensor& f, const NormSpec& spec);
/// L_t²L_x² with the slice measures dμ_s.
double foliation_l2(const FoliatedTensor& f);

/// Σ_{k≥0} 2^{ak}‖P_kF‖_{L²} + ‖P_{<0}F‖_{L²}.
double besov_surface(const TensorField& f, double a, const LPFamily& family, const EigenBasis& basis);

enum class BasisPolicy { slice_wise, frozen_initial };

std::string to_string(BasisPolicy p);
BasisPolicy parse_basis_policy(const std::string& s);

/// 𝓑^a with L_t^∞L_x² per band.
double hyper_B(const FoliatedTensor& f, double a, const LPFamily& family,
               BasisPolicy policy = BasisPolicy::slice_wise);
/// 𝓟^a with L_t²L_x² per band.
double hyper_P(const FoliatedTensor& f, double a, const LPFamily& family,
               BasisPolicy policy = BasisPolicy::slice_wise);

/// [P_{<0}F, P_0F, …, P_{k_max}F] slice by slice; coefficients are computed once per slice.
std::vector<FoliatedTensor> band_decomposition(const FoliatedTensor& f, const LPFamily& family,
                                               BasisPolicy policy = BasisPolicy::slice_wise);

/// Slice-wise ∇²F; the surface Hessian for scalars.
FoliatedTensor hessian_slices(const FoliatedTensor& f);

/// Slice-wise P_k.
FoliatedTensor project_slices(const FoliatedTensor& f, int k, const LPFamily& family,
                              BasisPolicy policy = BasisPolicy::slice_wise);
/// Slice-wise P_{<0}.
FoliatedTensor low_part_slices(const FoliatedTensor& f, const LPFamily& family,
                               BasisPolicy policy = BasisPolicy::slice_wise);

/// ‖F‖ + ‖∇F‖ + ‖∇_LF‖ in L_t²L_x².
double n1(const FoliatedTensor& f);
/// 𝓝₁ plus ‖∇²F‖ and ‖∇∇_LF‖.
double n2(const FoliatedTensor& f);

struct Envelope
{
    double epsilon;
    std::vector<int> k;
    /// 𝓝̄₁[F_k].
    std::vector<double> raw;
    /// Σ_{k′}2^{−ε|k−k′|}𝓝̄₁[F_{k′}].
    std::vector<double> smoothed;
};

inline constexpr double default_envelope_epsilon = 0.125;

/// Envelope over k = 0..family.k_max(). Throws DomainError unless 0 < ε ≤ 1/4.
Envelope n1_envelope(const FoliatedTensor& f, double epsilon, const LPFamily& family);

} // namespace geolp
