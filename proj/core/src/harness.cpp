#include <geolp/error.hpp>
#include <geolp/fit.hpp>
#include <geolp/harness.hpp>
#include <geolp/heat.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace geolp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
const NormSpec l2l2 = NormSpec::Lt_Lx(2.0, 2.0);
const NormSpec sup_l2 = NormSpec::Lt_Lx(inf, 2.0);
const NormSpec trace = NormSpec::Lx_Lt(inf, 2.0);

/// Nodal samples of the real mode functions and their reference eigenvalues.
struct ModeTable
{
    MatrixXd values;
    std::vector<double> lambda;
};

ModeTable torus_modes(const ChartGrid& g, int max_frequency)
{
    ModeTable t;
    std::vector<VectorXd> cols;
    for (int a = 0; a <= max_frequency; ++a) {
        for (int b = -max_frequency; b <= max_frequency; ++b) {
            if (a == 0 && b < 0) continue;
            const int r2 = a * a + b * b;
            if (r2 > max_frequency * max_frequency) continue;
            VectorXd c(g.nodes()), s(g.nodes());
            for (int i2 = 0; i2 < g.n; ++i2) {
                for (int i1 = 0; i1 < g.n; ++i1) {
                    const double th = a * g.coord(i1) + b * g.coord(i2);
                    c[g.node(i1, i2)] = std::cos(th);
                    s[g.node(i1, i2)] = std::sin(th);
                }
            }
            cols.push_back(c);
            t.lambda.push_back(r2);
            if (r2 > 0) {
                cols.push_back(s);
                t.lambda.push_back(r2);
            }
        }
    }
    t.values.resize(g.nodes(), Index(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) t.values.col(Index(j)) = cols[j];
    return t;
}

ModeTable sphere_modes(const SpectralSphere& s, int max_frequency, double r0)
{
    const int l_top = std::min(max_frequency, s.l_max());
    ModeTable t;
    const Index count = Index(l_top + 1) * (l_top + 1);
    // The basis is orthonormal in dμ of radius r; rescale to unit-sphere harmonics.
    t.values = s.basis_values().leftCols(count) * s.radius();
    for (Index j = 0; j < count; ++j) t.lambda.push_back(double(s.degree(j)) * (s.degree(j) + 1) / (r0 * r0));
    return t;
}

ModeTable mode_table(const FoliatedMetric& fol, int max_frequency)
{
    if (const auto* m = fol.torus_slice(0)) return torus_modes(m->grid(), max_frequency);
    const auto* s = dynamic_cast<const SpectralSphere*>(&fol.slice(0));
    if (!s) throw DomainError("sample_field: unsupported surface");
    return sphere_modes(*s, max_frequency, fol.config().r0);
}

/// F·G slice by slice.
FoliatedTensor contract(const FoliatedTensor& f, const FoliatedTensor& g)
{
    std::vector<TensorField> out;
    for (int i = 0; i < f.count(); ++i) out.push_back(dot(f.slices[i], g.slices[i], f.metric->slice(i)));
    return FoliatedTensor(f.metric, std::move(out));
}

/// Components of a 1-form in a γ-orthonormal frame of each torus slice.
std::array<FoliatedTensor, 2> frame_components(const FoliatedTensor& f)
{
    std::array<std::vector<TensorField>, 2> out;
    for (int i = 0; i < f.count(); ++i) {
        const MetricField* m = f.metric->torus_slice(i);
        if (!m) throw RankError("1-form norms need the torus substrate");
        const auto& g = m->gamma();
        const VectorXd& f1 = f.slices[i].comps.col(0);
        const VectorXd& f2 = f.slices[i].comps.col(1);
        const VectorXd ratio = g[1].cwiseQuotient(g[0]);
        const VectorXd e2_norm = (g[2] - g[1].cwiseProduct(ratio)).cwiseSqrt();
        out[0].push_back(TensorField::scalar(f1.cwiseQuotient(g[0].cwiseSqrt())));
        out[1].push_back(TensorField::scalar((f2 - ratio.cwiseProduct(f1)).cwiseQuotient(e2_norm)));
    }
    return {FoliatedTensor(f.metric, std::move(out[0])), FoliatedTensor(f.metric, std::move(out[1]))};
}

/// 𝓟⁰ (q = 2) or 𝓑⁰ (q = ∞); 1-forms by the scalar characterization in an orthonormal frame.
double hyper0(const FoliatedTensor& f, const LPFamily& lp, bool sup)
{
    if (f.rank() == 0) return sup ? hyper_B(f, 0.0, lp) : hyper_P(f, 0.0, lp);
    if (f.rank() != 1) throw RankError("hypersurface Besov norms support rank <= 1");
    double total = 0.0;
    for (const auto& c : frame_components(f)) total += sup ? hyper_B(c, 0.0, lp) : hyper_P(c, 0.0, lp);
    return total;
}

double initial_besov(const TensorField& w0, const FoliatedMetric& fol, const LPFamily& lp)
{
    if (w0.rank != 0) throw RankError("initial data Besov norm supports scalars");
    return besov_surface(w0, 0.0, lp, fol.basis(0, 0));
}

FoliatedTensor zero_like(const FoliatedTensor& f, int rank)
{
    return FoliatedTensor::constant(f.metric, TensorField(rank, f.metric->nodes()));
}

double g_norm(const FoliatedTensor& g)
{
    return n1(g) + mixed_norm(g, trace);
}

const std::map<std::string, std::pair<double, double>>& probe_table()
{
    // id → (q, required decay exponent)
    static const std::map<std::string, std::pair<double, double>> t{
        {"commutator_q", {1.8, 0.45}},
        {"commutator_L1", {1.0, 0.9}},
        {"equiv_L", {1.8, std::numeric_limits<double>::quiet_NaN()}},
        {"gn_k", {inf, std::numeric_limits<double>::quiet_NaN()}},
        {"tricky_bernstein", {3.0, std::numeric_limits<double>::quiet_NaN()}},
        {"int_strong_bernstein", {4.0, std::numeric_limits<double>::quiet_NaN()}},
        {"heat_besov", {inf, std::numeric_limits<double>::quiet_NaN()}},
        {"dyadic_ibp", {inf, 0.2}},
    };
    return t;
}

/// Decay exponent of the per-x maxima of the report's ratios.
double fit_maxima(const std::map<int, double>& best)
{
    double peak = 0.0;
    for (const auto& [x, v] : best) peak = std::max(peak, v);
    std::vector<double> xs, ys;
    for (const auto& [x, v] : best) {
        xs.push_back(x);
        ys.push_back(v);
    }
    return fit_decay_exponent(xs, ys, 1e-13 * peak);
}

/// ∫_0^1 ‖∇²U(τ)F‖_{L_t^∞L_x²} dτ on a log-spaced τ grid, plus τ₀·‖∇²U(τ₀)F‖ for [0, τ₀].
double heat_hessian_integral(const FoliatedTensor& f)
{
    constexpr int points = 25;
    constexpr double tau0 = 1e-4;
    const auto& fol = *f.metric;
    std::vector<double> tau(points);
    for (int j = 0; j < points; ++j) tau[j] = tau0 * std::pow(1.0 / tau0, double(j) / (points - 1));
    std::vector<double> sup(points, 0.0);
    for (int i = 0; i < f.count(); ++i) {
        const EigenBasis& b = fol.basis(i, 0);
        const VectorXd c = b.coefficients(f.slices[i]);
        for (int j = 0; j < points; ++j) {
            const VectorXd m = (-tau[j] * b.eigenvalues().array()).exp().matrix();
            const TensorField u = b.synthesize(c.cwiseProduct(m));
            const TensorField h = fol.slice(i).hessian(u.values());
            sup[j] = std::max(sup[j], l2_norm(h, fol.slice(i)));
        }
    }
    double total = tau0 * sup[0];
    for (int j = 1; j < points; ++j) total += 0.5 * (tau[j] - tau[j - 1]) * (sup[j] + sup[j - 1]);
    return total;
}

} // namespace

void SampleSpec::validate() const
{
    if (count < 0) throw ConfigError("sample count must be nonnegative");
    if (rank < 0 || rank > 1) throw ConfigError("sample rank must be 0 or 1");
    if (t_modes < 1) throw ConfigError("t_modes must be positive");
    if (max_frequency < 0) throw ConfigError("max_frequency must be nonnegative");
}

FoliatedTensor sample_field(const SampleSpec& spec, const std::shared_ptr<const FoliatedMetric>& fol, int sample,
                            int stream)
{
    spec.validate();
    if (spec.rank == 1 && !fol->torus_slice(0)) throw ConfigError("rank-1 samples need the torus substrate");
    const ModeTable modes = mode_table(*fol, spec.max_frequency);
    std::seed_seq seq{std::uint64_t(spec.seed), std::uint64_t(sample), std::uint64_t(stream)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;

    const int comps = spec.rank == 0 ? 1 : 2;
    const Index M = modes.values.cols();
    // z[c](j, m): complex coefficient of mode j, time mode m, component c.
    std::vector<Eigen::MatrixXcd> z(comps, Eigen::MatrixXcd(M, spec.t_modes));
    for (int c = 0; c < comps; ++c) {
        for (Index j = 0; j < M; ++j) {
            const double w = std::pow(1.0 + modes.lambda[j], -0.5 * spec.slope);
            for (int m = 0; m < spec.t_modes; ++m) {
                const double a = normal(rng), b = normal(rng);
                z[c](j, m) = w * std::complex<double>(a, b);
            }
        }
    }
    std::vector<TensorField> slices;
    for (int i = 0; i < fol->slices(); ++i) {
        Eigen::VectorXcd phase(spec.t_modes);
        for (int m = 0; m < spec.t_modes; ++m) phase[m] = std::polar(1.0, std::numbers::pi * m * fol->s(i));
        TensorField f(spec.rank, fol->nodes());
        for (int c = 0; c < comps; ++c) f.comps.col(c) = modes.values * (z[c] * phase).real();
        slices.push_back(std::move(f));
    }
    return FoliatedTensor(fol, std::move(slices));
}

std::vector<FoliatedTensor> sample_family(const SampleSpec& spec, const std::shared_ptr<const FoliatedMetric>& fol,
                                          int stream)
{
    spec.validate();
    std::vector<FoliatedTensor> out;
    for (int i = 0; i < spec.count; ++i) out.push_back(sample_field(spec, fol, i, stream));
    return out;
}

const std::vector<std::string>& theorem_ids()
{
    static const std::vector<std::string> ids{
        "bilinear_trace", "bilinear_trace_scalar", "product_I", "product_I_scalar", "product_II",
        "sharp_trace", "sharp_trace_corollary", "homog_transport", "product_I_dyadic",
    };
    return ids;
}

std::vector<TheoremSample> theorem_family(const std::string& id, const SampleSpec& spec,
                                          const std::shared_ptr<const FoliatedMetric>& fol)
{
    const auto& ids = theorem_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw ConfigError("unknown theorem id '" + id + "'");
    spec.validate();
    SampleSpec g_spec = spec;
    if (id == "sharp_trace") g_spec.rank = 1;
    SampleSpec w_spec = spec;
    w_spec.rank = 0;
    const bool zero_initial = id == "bilinear_trace_scalar" || id == "product_I_scalar" || id == "product_I_dyadic";
    std::vector<TheoremSample> out;
    for (int i = 0; i < spec.count; ++i) {
        TheoremSample s;
        s.F = sample_field(spec, fol, i, 0);
        s.G = sample_field(g_spec, fol, i, 1);
        s.W0 = zero_initial ? TensorField(0, fol->nodes()) : sample_field(w_spec, fol, i, 2).slices.front();
        if (id == "product_II" && spec.rank != 0) s.W0 = sample_field(spec, fol, i, 2).slices.front();
        out.push_back(std::move(s));
    }
    return out;
}

RatioReport theorem_ratio(const std::string& id, const std::vector<TheoremSample>& family, const LPFamily& lp)
{
    const auto& ids = theorem_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw ConfigError("unknown theorem id '" + id + "'");
    RatioReport r(id);
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const TheoremSample& s = family[sid];
        const auto& fol = *s.F.metric;
        const int res = resolution_of(fol);
        if (id == "bilinear_trace" || id == "bilinear_trace_scalar") {
            const FoliatedTensor W = transport_solve(0.0, contract(nabla_L(s.F), s.G), s.W0);
            const bool scalar = id == "bilinear_trace_scalar";
            const double rhs = scalar ? n1(s.F) * n1(s.G)
                                      : initial_besov(s.W0, fol, lp) + n1(s.F) * g_norm(s.G);
            r.add(hyper0(W, lp, true), rhs, sid, res);
        } else if (id == "product_I" || id == "product_I_scalar") {
            const FoliatedTensor W = transport_solve(0.0, contract(s.F, s.G), s.W0);
            const double base = hyper0(s.F, lp, false) * g_norm(s.G);
            const double rhs = id == "product_I_scalar" ? base : initial_besov(s.W0, fol, lp) + base;
            r.add(hyper0(W, lp, true), rhs, sid, res);
        } else if (id == "product_II") {
            TensorField w0 = s.W0;
            if (w0.rank != s.F.rank()) w0 = TensorField(s.F.rank(), fol.nodes());
            const FoliatedTensor W = transport_solve(0.0, s.F, w0);
            const double w0_norm = w0.rank == 0 ? initial_besov(w0, fol, lp)
                                                : hyper0(FoliatedTensor::constant(s.F.metric, w0), lp, true);
            const double rhs = (hyper0(s.F, lp, false) + w0_norm) * g_norm(s.G);
            r.add(hyper0(contract(s.G, W), lp, false), rhs, sid, res);
        } else if (id == "sharp_trace") {
            if (s.F.rank() != 0 || s.G.rank() != 1) throw RankError("sharp_trace needs scalar F and a 1-form F̌");
            const FoliatedTensor remainder = nabla(s.F) - nabla_L(s.G);
            r.add(mixed_norm(s.F, trace), n1(s.F) + n1(s.G) + hyper0(remainder, lp, false), sid, res);
        } else if (id == "sharp_trace_corollary") {
            const FoliatedTensor lf = nabla_L(s.F);
            const double h = mixed_norm(hessian_slices(s.F), l2l2);
            const double ll = mixed_norm(nabla_L(lf), l2l2);
            const double f = mixed_norm(s.F, l2l2);
            r.add(mixed_norm(lf, trace), std::sqrt(h * h + ll * ll + f * f), sid, res);
        } else if (id == "homog_transport") {
            const FoliatedTensor w = transport_solve(0.0, zero_like(s.F, 0), s.W0);
            r.add(hyper0(w, lp, true), initial_besov(s.W0, fol, lp), sid, res);
        } else {
            const FoliatedTensor W = transport_solve(0.0, contract(s.F, s.G), TensorField(0, fol.nodes()));
            const auto w_pieces = band_decomposition(W, lp);
            const auto f_pieces = band_decomposition(s.F, lp);
            std::vector<double> fk;
            for (int k = 0; k <= lp.k_max(); ++k) fk.push_back(mixed_norm(f_pieces[k + 1], l2l2));
            const double f_total = mixed_norm(s.F, l2l2);
            const double gn = g_norm(s.G);
            for (int k = 0; k <= lp.k_max(); ++k) {
                double a = std::exp2(-dyadic_sigma * k) * f_total;
                for (int kp = 0; kp <= lp.k_max(); ++kp) a += std::exp2(-dyadic_sigma * std::abs(k - kp)) * fk[kp];
                r.add(mixed_norm(w_pieces[k + 1], sup_l2), a * gn, sid, res, k);
            }
        }
    }
    return r;
}

const std::vector<std::string>& probe_ids()
{
    static const std::vector<std::string> ids{
        "commutator_q", "commutator_L1", "equiv_L", "gn_k", "tricky_bernstein", "int_strong_bernstein",
        "heat_besov", "dyadic_ibp",
    };
    return ids;
}

double probe_exponent(const std::string& id)
{
    const auto it = probe_table().find(id);
    if (it == probe_table().end()) throw ConfigError("unknown probe id '" + id + "'");
    return it->second.first;
}

double probe_margin(const std::string& id)
{
    const auto it = probe_table().find(id);
    if (it == probe_table().end()) throw ConfigError("unknown probe id '" + id + "'");
    return it->second.second;
}

RatioReport dyadic_probe(const std::string& id, const std::vector<FoliatedTensor>& family, const LPFamily& lp,
                         const std::vector<FoliatedTensor>& partners)
{
    const double q = probe_exponent(id);
    RatioReport r(id);
    std::map<int, double> best;
    const auto track = [&](int x, double lhs, double rhs) {
        if (rhs > 0.0) best[x] = std::max(best[x], lhs / rhs);
    };
    if (id == "dyadic_ibp" && partners.size() != family.size()) {
        throw DomainError("dyadic_ibp needs one partner per sample");
    }
    const int K = lp.k_max();
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const FoliatedTensor& F = family[sid];
        const int res = resolution_of(*F.metric);
        if (id == "heat_besov") {
            r.add(heat_hessian_integral(F), hyper_B(F, 0.0, lp), sid, res);
            continue;
        }
        const auto pieces = band_decomposition(F, lp);
        if (id == "commutator_q" || id == "commutator_L1") {
            const auto lpieces = band_decomposition(nabla_L(F), lp);
            const double rhs = n1(F);
            const NormSpec spec = NormSpec::Lt_Lx(q, 2.0);
            for (int k = 0; k <= K; ++k) {
                const FoliatedTensor comm = lpieces[k + 1] - nabla_L(pieces[k + 1]);
                const double lhs = mixed_norm(comm, spec) + std::exp2(-k) * mixed_norm(nabla(comm), spec);
                r.add(lhs, rhs, sid, res, k);
                track(k, lhs, rhs);
            }
            continue;
        }
        const Envelope env = n1_envelope(F, default_envelope_epsilon, lp);
        if (id == "dyadic_ibp") {
            const FoliatedTensor& G = partners[sid];
            const auto gpieces = band_decomposition(G, lp);
            const Envelope genv = n1_envelope(G, default_envelope_epsilon, lp);
            for (int k1 = 0; k1 <= K; ++k1) {
                for (int k2 = 0; k2 <= k1; ++k2) {
                    const FoliatedTensor prod = contract(pieces[k1 + 1], gpieces[k2 + 1]);
                    const FoliatedTensor boundary = prod - FoliatedTensor::constant(prod.metric, prod.slices.front());
                    const auto bp = band_decomposition(boundary, lp);
                    const double rhs = env.smoothed[k1] * genv.smoothed[k2];
                    for (int k = 0; k <= k2; ++k) {
                        const double lhs = mixed_norm(bp[k + 1], sup_l2);
                        r.add(lhs, rhs, sid, res, k, k1, k2);
                        track((k1 - k2) + (k1 - k), lhs, rhs);
                    }
                }
            }
            continue;
        }
        for (int k = 0; k <= K; ++k) {
            const FoliatedTensor& fk = pieces[k + 1];
            const double e = env.smoothed[k];
            double lhs = 0.0, rhs = 0.0;
            if (id == "equiv_L") {
                lhs = mixed_norm(nabla_L(fk), NormSpec::Lt_Lx(q, 2.0));
                rhs = e;
            } else if (id == "gn_k") {
                lhs = mixed_norm(fk, NormSpec::Lt_Lx(q, 2.0));
                rhs = std::exp2(-0.5 * k) * e;
            } else if (id == "tricky_bernstein") {
                lhs = mixed_norm(nabla(fk), NormSpec::Lt_Lx(q, 4.0));
                rhs = std::exp2(k * (1.0 - 1.0 / q)) * e;
            } else {
                lhs = mixed_norm(fk, NormSpec::Lt_Lx(q, inf));
                rhs = std::exp2(k * (0.5 - 1.0 / q)) * e;
            }
            r.add(lhs, rhs, sid, res, k);
            track(k, lhs, rhs);
        }
    }
    if (!best.empty()) r.fit_exponent = fit_maxima(best);
    return r;
}

RatioReport refinement_study(const std::vector<RatioReport>& per_resolution, double tolerance)
{
    if (per_resolution.size() < 2) throw DomainError("refinement_study needs at least two resolutions");
    RatioReport out(per_resolution.front().check_id);
    for (const auto& r : per_resolution) {
        if (r.check_id != out.check_id) throw DomainError("refinement_study: mixed check ids");
        out.append(r);
    }
    out.fit_exponent = per_resolution.back().fit_exponent;
    out.mark_stability(tolerance);
    return out;
}

int resolution_of(const FoliatedMetric& fol)
{
    if (const auto* m = fol.torus_slice(0)) return m->grid().n;
    if (const auto* s = dynamic_cast<const SpectralSphere*>(&fol.slice(0))) return s->l_max();
    return int(fol.nodes());
}

LPFamily harness_family(const FoliatedMetric& fol, const LPKernel& kernel, LPMode mode)
{
    double lambda_max = 0.0;
    if (const auto* m = fol.torus_slice(0)) {
        lambda_max = std::pow(m->grid().n / 2, 2);
    } else if (const auto* s = dynamic_cast<const SpectralSphere*>(&fol.slice(0))) {
        lambda_max = double(s->l_max()) * (s->l_max() + 1) / (s->radius() * s->radius());
    }
    const int k_max = std::max(0, int(std::floor(0.5 * std::log2(std::max(lambda_max, 1.0)))));
    return LPFamily(kernel, -4, k_max, mode);
}

} // namespace geolp
