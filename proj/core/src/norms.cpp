#include <geolp/norms.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace geolp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string exponent_name(double p)
{
    if (std::isinf(p)) return "inf";
    std::ostringstream os;
    os << p;
    return os.str();
}

/// Trapezoid weights on the slice grid.
VectorXd time_weights(int n, double h)
{
    VectorXd w = VectorXd::Constant(n, h);
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    return w;
}

double lp_sum(const VectorXd& a, const VectorXd& w, double p)
{
    if (std::isinf(p)) return a.size() ? a.maxCoeff() : 0.0;
    if (p == 2.0) return std::sqrt(w.dot(a.cwiseAbs2()));
    return std::pow(w.dot(a.array().pow(p).matrix()), 1.0 / p);
}

const EigenBasis& pick_basis(const FoliatedMetric& fol, int i, int rank, BasisPolicy policy)
{
    return fol.basis(policy == BasisPolicy::slice_wise ? i : 0, rank);
}

double hyper_norm(const FoliatedTensor& f, double a, const LPFamily& family, BasisPolicy policy, double q)
{
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("hypersurface Besov exponent must lie in [0, 1]");
    const auto pieces = band_decomposition(f, family, policy);
    const NormSpec spec = NormSpec::Lt_Lx(q, 2.0);
    double total = mixed_norm(pieces[0], spec);
    for (int k = 0; k + 1 < int(pieces.size()); ++k) total += std::exp2(a * k) * mixed_norm(pieces[k + 1], spec);
    return total;
}

} // namespace

std::vector<FoliatedTensor> band_decomposition(const FoliatedTensor& f, const LPFamily& family, BasisPolicy policy)
{
    const auto& fol = *f.metric;
    const int k_max = family.k_max();
    std::vector<std::vector<TensorField>> pieces(k_max + 2);
    for (int i = 0; i < f.count(); ++i) {
        const EigenBasis& b = pick_basis(fol, i, f.rank(), policy);
        const VectorXd c = b.coefficients(f.slices[i]);
        pieces[0].push_back(b.synthesize(c.cwiseProduct(family.low_multiplier(b.eigenvalues()))));
        for (int k = 0; k <= k_max; ++k) {
            pieces[k + 1].push_back(b.synthesize(c.cwiseProduct(family.multiplier(k, b.eigenvalues()))));
        }
    }
    std::vector<FoliatedTensor> out;
    out.reserve(pieces.size());
    for (auto& p : pieces) out.emplace_back(f.metric, std::move(p));
    return out;
}

FoliatedTensor hessian_slices(const FoliatedTensor& f)
{
    if (f.rank() != 0) return nabla(nabla(f));
    std::vector<TensorField> out;
    for (int i = 0; i < f.count(); ++i) out.push_back(f.metric->slice(i).hessian(f.slices[i].values()));
    return FoliatedTensor(f.metric, std::move(out));
}


void NormSpec::validate() const
{
    if (!(p >= 1.0) || !(q >= 1.0)) throw DomainError("mixed norm exponents must lie in [1, inf]");
}

std::string NormSpec::name() const
{
    if (order == Order::x_then_t) return "Lx_" + exponent_name(p) + "_Lt_" + exponent_name(q);
    return "Lt_" + exponent_name(q) + "_Lx_" + exponent_name(p);
}

double mixed_norm(const FoliatedTensor& f, const NormSpec& spec)
{
    spec.validate();
    const auto& fol = *f.metric;
    const int n = f.count();
    const VectorXd w0 = fol.initial().weights();
    const VectorXd wt = time_weights(n, fol.h());
    std::vector<VectorXd> a(n);
    for (int i = 0; i < n; ++i) a[i] = pointwise_norm(f.slices[i], fol.slice(i));

    if (spec.order == NormSpec::Order::t_then_x) {
        VectorXd inner(n);
        for (int i = 0; i < n; ++i) inner[i] = lp_sum(a[i], w0, spec.p);
        return lp_sum(inner, wt, spec.q);
    }
    const Index N = fol.nodes();
    VectorXd inner(N);
    VectorXd column(n);
    for (Index x = 0; x < N; ++x) {
        for (int i = 0; i < n; ++i) column[i] = a[i][x];
        inner[x] = lp_sum(column, wt, spec.q);
    }
    return lp_sum(inner, w0, spec.p);
}

double foliation_l2(const FoliatedTensor& f)
{
    const auto& fol = *f.metric;
    const VectorXd wt = time_weights(f.count(), fol.h());
    double total = 0.0;
    for (int i = 0; i < f.count(); ++i) {
        const double v = l2_norm(f.slices[i], fol.slice(i));
        total += wt[i] * v * v;
    }
    return std::sqrt(total);
}

double besov_surface(const TensorField& f, double a, const LPFamily& family, const EigenBasis& basis)
{
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("Besov exponent must be finite and >= 0");
    const VectorXd c = basis.coefficients(f);
    auto norm_of = [&](const VectorXd& m) {
        const TensorField p = basis.synthesize(c.cwiseProduct(m));
        return std::sqrt(std::max(basis.inner(p, p), 0.0));
    };
    double total = norm_of(family.low_multiplier(basis.eigenvalues()));
    for (int k = std::max(0, family.k_min()); k <= family.k_max(); ++k) {
        total += std::exp2(a * k) * norm_of(family.multiplier(k, basis.eigenvalues()));
    }
    return total;
}

std::string to_string(BasisPolicy p)
{
    return p == BasisPolicy::slice_wise ? "slice_wise" : "frozen_initial";
}

BasisPolicy parse_basis_policy(const std::string& s)
{
    if (s == "slice_wise") return BasisPolicy::slice_wise;
    if (s == "frozen_initial") return BasisPolicy::frozen_initial;
    throw ConfigError("unknown basis policy '" + s + "' (expected slice_wise or frozen_initial)");
}

double hyper_B(const FoliatedTensor& f, double a, const LPFamily& family, BasisPolicy policy)
{
    return hyper_norm(f, a, family, policy, inf);
}

double hyper_P(const FoliatedTensor& f, double a, const LPFamily& family, BasisPolicy policy)
{
    return hyper_norm(f, a, family, policy, 2.0);
}

FoliatedTensor project_slices(const FoliatedTensor& f, int k, const LPFamily& family, BasisPolicy policy)
{
    std::vector<TensorField> out;
    for (int i = 0; i < f.count(); ++i) out.push_back(project(f.slices[i], k, family, pick_basis(*f.metric, i, f.rank(), policy)));
    return FoliatedTensor(f.metric, std::move(out));
}

FoliatedTensor low_part_slices(const FoliatedTensor& f, const LPFamily& family, BasisPolicy policy)
{
    std::vector<TensorField> out;
    for (int i = 0; i < f.count(); ++i) out.push_back(low_part(f.slices[i], family, pick_basis(*f.metric, i, f.rank(), policy)));
    return FoliatedTensor(f.metric, std::move(out));
}

double n1(const FoliatedTensor& f)
{
    const NormSpec l2 = NormSpec::Lt_Lx(2.0, 2.0);
    return mixed_norm(f, l2) + mixed_norm(nabla(f), l2) + mixed_norm(nabla_L(f), l2);
}

double n2(const FoliatedTensor& f)
{
    const NormSpec l2 = NormSpec::Lt_Lx(2.0, 2.0);
    return n1(f) + mixed_norm(hessian_slices(f), l2) + mixed_norm(nabla(nabla_L(f)), l2);
}

Envelope n1_envelope(const FoliatedTensor& f, double epsilon, const LPFamily& family)
{
    if (!(epsilon > 0.0 && epsilon <= 0.25)) throw DomainError("envelope epsilon must lie in (0, 1/4]");
    const NormSpec l2 = NormSpec::Lt_Lx(2.0, 2.0);
    const auto pieces = band_decomposition(f, family, BasisPolicy::slice_wise);
    const auto lpieces = band_decomposition(nabla_L(f), family, BasisPolicy::slice_wise);
    Envelope env;
    env.epsilon = epsilon;
    for (int k = 0; k <= family.k_max(); ++k) {
        const FoliatedTensor& fk = pieces[k + 1];
        env.k.push_back(k);
        env.raw.push_back(mixed_norm(fk, l2) + mixed_norm(nabla(fk), l2) + mixed_norm(lpieces[k + 1], l2));
    }
    for (std::size_t k = 0; k < env.raw.size(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < env.raw.size(); ++j) {
            s += std::exp2(-epsilon * std::abs(double(k) - double(j))) * env.raw[j];
        }
        env.smoothed.push_back(s);
    }
    return env;
}

} // namespace geolp
