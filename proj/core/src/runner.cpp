#include <geolp/error.hpp>
#include <geolp/fit.hpp>
#include <geolp/flat.hpp>
#include <geolp/heat.hpp>
#include <geolp/runner.hpp>

#include "quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace geolp {

namespace {

using json = nlohmann::json;

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();
/// Ratios below this are treated as round-off when judging refinement drift.
constexpr double drift_floor = 1e-9;

template <class Key, class T>
class Memo
{
public:
    T get(const Key& key, const std::function<T()>& make)
    {
        std::unique_lock lock(m_mutex);
        auto it = m_cache.find(key);
        if (it != m_cache.end()) {
            auto f = it->second;
            lock.unlock();
            return f.get();
        }
        std::packaged_task<T()> task(make);
        auto f = task.get_future().share();
        m_cache.emplace(key, f);
        lock.unlock();
        task();
        return f.get();
    }

private:
    std::mutex m_mutex;
    std::map<Key, std::shared_future<T>> m_cache;
};

} // namespace

struct RunContext::Impl
{
    Memo<std::string, std::shared_ptr<const FoliatedMetric>> foliations;
    Memo<std::pair<int, int>, std::shared_ptr<const MetricField>> metrics;
    Memo<std::pair<int, int>, std::shared_ptr<const EigenBasis>> bases;
    Memo<std::string, std::shared_ptr<const CheckOutcome>> flat;
    Memo<std::string, std::shared_ptr<const AssumptionReport>> assumptions;
};

namespace {

// ---------------------------------------------------------------- samples

/// Σ_{|ξ|≤modes} (1+|ξ|²)^{-1} Re(z_ξ e^{iξ·ω}); identical at shared chart points for every n.
VectorXd chart_field(const ChartGrid& g, std::uint64_t seed, int index, int modes = 4)
{
    std::seed_seq seq{seed, std::uint64_t(index), std::uint64_t(7)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    VectorXd v = VectorXd::Zero(g.nodes());
    for (int a = 0; a <= modes; ++a) {
        for (int b = -modes; b <= modes; ++b) {
            if ((a == 0 && b < 0) || a * a + b * b > modes * modes) continue;
            const double w = 1.0 / (1.0 + a * a + b * b);
            const double re = normal(rng) * w, im = normal(rng) * w;
            for (int i2 = 0; i2 < g.n; ++i2) {
                for (int i1 = 0; i1 < g.n; ++i1) {
                    const double th = a * g.coord(i1) + b * g.coord(i2);
                    v[g.node(i1, i2)] += re * std::cos(th) - im * std::sin(th);
                }
            }
        }
    }
    return v;
}

VectorXd sphere_field(const SpectralSphere& s, std::uint64_t seed, int index, int l_top = 6)
{
    std::seed_seq seq{seed, std::uint64_t(index), std::uint64_t(11)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    VectorXd c = VectorXd::Zero(s.coefficients());
    for (int l = 0; l <= std::min(l_top, s.l_max()); ++l) {
        for (int m = -l; m <= l; ++m) c[SpectralSphere::coefficient_index(l, m)] = normal(rng) / (1.0 + l * l);
    }
    return s.synthesize(c);
}

double smooth_f(double x, double y)
{
    return std::sin(x) * std::cos(2.0 * y) + 0.5 * std::cos(3.0 * x + y) + 0.25 * std::sin(y);
}

VectorXd sample_on(const MetricField& m, const std::function<double(double, double)>& f)
{
    const auto& g = m.grid();
    VectorXd v(g.nodes());
    for (int i2 = 0; i2 < g.n; ++i2) {
        for (int i1 = 0; i1 < g.n; ++i1) v[g.node(i1, i2)] = f(g.coord(i1), g.coord(i2));
    }
    return v;
}

FoliatedTensor smooth_scalar(const std::shared_ptr<const FoliatedMetric>& fol)
{
    std::vector<TensorField> out;
    for (int i = 0; i < fol->slices(); ++i) {
        const double t = fol->s(i);
        const auto& g = fol->torus_slice(i)->grid();
        VectorXd v(fol->nodes());
        for (int b = 0; b < g.n; ++b) {
            for (int a = 0; a < g.n; ++a) {
                const double x = g.coord(a), y = g.coord(b);
                v[g.node(a, b)] = std::sin(x + 2 * y) * std::cos(1.3 * t) + 0.5 * std::cos(2 * x - y + t);
            }
        }
        out.push_back(TensorField::scalar(v));
    }
    return FoliatedTensor(fol, std::move(out));
}

FlatSampleSpec flat_spec(const RunConfig& cfg, int count)
{
    FlatSampleSpec s;
    s.count = count;
    s.seed = cfg.seed;
    return s;
}

std::vector<FlatField> flat_fields(const RunConfig& cfg, int n, int count, int n_t)
{
    const FlatSampleSpec spec = flat_spec(cfg, count);
    std::vector<FlatField> out;
    for (int i = 0; i < count; ++i) out.push_back(flat_random_field(n, n_t, spec, i));
    return out;
}

std::vector<FlatPair> flat_pairs(const RunConfig& cfg, int n, int count, int max_band)
{
    FlatSampleSpec spec = flat_spec(cfg, count);
    spec.max_band = max_band;
    std::vector<FlatPair> out;
    for (int i = 0; i < count; ++i) out.emplace_back(flat_random_field(n, 64, spec, i, 0), flat_random_field(n, 64, spec, i, 1));
    return out;
}

// ---------------------------------------------------------------- helpers

std::string rung_name(const Rung& r)
{
    return std::to_string(r.first) + "x" + std::to_string(r.second);
}

/// Merges per-resolution reports and marks stability; round-off constants count as stable.
RatioReport refine(const std::vector<RatioReport>& per_resolution, double tol = 0.2)
{
    RatioReport r = refinement_study(per_resolution, tol);
    const auto res = r.resolutions();
    if (r.max_ratio_at(res.front()) < drift_floor && r.max_ratio_at(res.back()) < drift_floor) r.stable = true;
    return r;
}

void add_rate(CheckOutcome& out, const std::string& name, const std::vector<int>& ns, const std::vector<double>& err,
              double bound)
{
    out.add_metric(name, fit_convergence_rate(ns, err), bound, false);
    Series s{name, "n", "error", {}, err};
    for (int n : ns) s.x.push_back(n);
    out.series.push_back(std::move(s));
}

LPKernel kernel_of(const RunConfig& cfg)
{
    return LPKernel(cfg.kernel.N, cfg.kernel.n_der);
}

int torus_k_max(int n)
{
    return std::max(0, int(std::floor(std::log2(n / 2.0))));
}


// ---------------------------------------------------------------- geometry

void check_gauss_bonnet(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    for (int l : cfg.sphere_ladder) {
        SpectralSphere s(l, cfg.sphere_radius);
        out.add_metric("sphere_error_l" + std::to_string(l), std::abs(s.integrate(s.gauss_curvature()) - 4.0 * pi),
                       1e-10);
    }
    const auto m = build_torus_metric(cfg.torus_ladder.back(), MetricRecipe::perturbed(0.3, cfg.seed));
    out.add_metric("torus_integral", std::abs(m->integrate(m->gauss_curvature())), 1e-3);
}

void check_metric_compatibility(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    std::vector<double> err;
    for (int n : cfg.torus_ladder) {
        const auto m = ctx.torus(n);
        TensorField g(2, m->nodes());
        g.comps.col(0) = m->gamma()[0];
        g.comps.col(1) = m->gamma()[1];
        g.comps.col(2) = m->gamma()[1];
        g.comps.col(3) = m->gamma()[2];
        err.push_back(m->covariant_derivative(g).comps.cwiseAbs().maxCoeff());
    }
    add_rate(out, "rate", cfg.torus_ladder, err, 1.9);
}

void check_bochner(CheckOutcome& out, RunContext& ctx, int rank)
{
    const auto& cfg = ctx.config();
    std::vector<double> err;
    for (int n : cfg.torus_ladder) {
        const auto m = ctx.torus(n);
        TensorField f = TensorField::scalar(sample_on(*m, smooth_f));
        if (rank == 1) f = m->covariant_derivative(f);
        err.push_back(bochner_residual(f, *m).residual);
    }
    add_rate(out, "rate", cfg.torus_ladder, err, 1.9);
}

void check_sphere_bochner(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const double r = cfg.sphere_radius;
    SpectralSphere s(cfg.sphere_ladder.front(), r);
    double worst = 0.0;
    for (int l = 1; l <= s.l_max(); ++l) {
        const TensorField y = TensorField::scalar(s.basis_values().col(SpectralSphere::coefficient_index(l, l / 2)));
        const double lam = l * (l + 1.0) / (r * r);
        const double closed = (lam * lam - lam / (r * r)) * std::pow(l2_norm(y, s), 2);
        const auto b = bochner_residual(y, s);
        worst = std::max({worst, std::abs(b.lhs - closed) / closed, std::abs(b.rhs - closed) / closed});
    }
    out.add_metric("closed_form_error", worst, 1e-10);
}

// ---------------------------------------------------------------- heat

void check_heat_identity(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const int n = cfg.torus_ladder.front();
    const auto m = ctx.torus(n);
    const auto b = ctx.torus_basis(n, 0);
    const TensorField F = TensorField::scalar(chart_field(m->grid(), cfg.seed, 0, n / 2 - 1));
    out.add_metric("torus_max_error", (evolve(F, 0.0, *b).comps - F.comps).cwiseAbs().maxCoeff(), 1e-10);
    SpectralSphere s(cfg.sphere_ladder.front(), cfg.sphere_radius);
    const EigenBasis sb = eigendecompose(s, 0);
    const TensorField G = TensorField::scalar(sphere_field(s, cfg.seed, 0));
    out.add_metric("sphere_max_error", (evolve(G, 0.0, sb).comps - G.comps).cwiseAbs().maxCoeff(), 1e-10);
}

void check_heat_semigroup(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const int n = cfg.torus_ladder.front();
    const auto m = ctx.torus(n);
    const auto b = ctx.torus_basis(n, 0);
    const TensorField F = TensorField::scalar(chart_field(m->grid(), cfg.seed, 1, n / 2 - 1));
    double worst = 0.0;
    for (auto [a, c] : {std::pair{0.03, 0.07}, std::pair{0.5, 0.25}, std::pair{1e-4, 2.0}}) {
        const TensorField lhs = evolve(evolve(F, a, *b), c, *b);
        worst = std::max(worst, l2_norm(lhs - evolve(F, a + c, *b), *m) / l2_norm(F, *m));
    }
    out.add_metric("relative_error", worst, 1e-10);
}

void check_heat_smoothing(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const std::vector<double> taus{0.01, 0.1, 1.0, 4.0};
    std::map<std::string, std::vector<RatioReport>> per_id;
    for (int n : {cfg.torus_ladder.front(), cfg.torus_ladder.back()}) {
        const auto m = ctx.torus(n);
        const auto b0 = ctx.torus_basis(n, 0);
        const auto b1 = ctx.torus_basis(n, 1);
        std::vector<TensorField> samples;
        for (int i = 0; i < 3; ++i) samples.push_back(TensorField::scalar(chart_field(m->grid(), cfg.seed, 10 + i)));
        samples.push_back(m->covariant_derivative(TensorField::scalar(chart_field(m->grid(), cfg.seed, 20))));
        const SmoothingReport rep = smoothing_report(*m, *b0, b1.get(), samples, taus);
        std::map<std::string, RatioReport> at;
        for (const auto& row : rep.rows) {
            auto [it, fresh] = at.try_emplace(row.estimate_id, "heat_smoothing." + row.estimate_id);
            it->second.add(row.lhs, row.bound_shape, row.sample, n);
        }
        for (auto& [id, r] : at) per_id[id].push_back(std::move(r));
    }
    for (const auto& [id, reports] : per_id) out.reports.push_back(refine(reports));
    out.add_metric("estimates", double(per_id.size()), 8.0, false);
}

void check_heat_sphere_gradient(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    SpectralSphere s(cfg.sphere_ladder.back(), cfg.sphere_radius);
    const EigenBasis b = eigendecompose(s, 0);
    double worst = 0.0;
    for (double tau : {1e-3, 1e-2, 0.1, 1.0}) {
        for (int l = 1; l <= s.l_max(); ++l) {
            const TensorField Y = TensorField::scalar(s.basis_values().col(SpectralSphere::coefficient_index(l, 0)));
            const TensorField g = s.covariant_derivative(evolve(Y, tau, b));
            worst = std::max(worst, l2_norm(g, s) / l2_norm(Y, s) * std::sqrt(2.0 * std::numbers::e * tau));
        }
    }
    out.add_metric("normalized_ratio", worst, 1.0 + 1e-12);
}

// ---------------------------------------------------------------- LP

void check_lp_selfadjoint(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const int n = cfg.torus_ladder.front();
    const auto m = ctx.torus(n);
    const auto b = ctx.torus_basis(n, 0);
    const TensorField F = TensorField::scalar(chart_field(m->grid(), cfg.seed, 2, n / 2 - 1));
    const TensorField G = TensorField::scalar(chart_field(m->grid(), cfg.seed, 3, n / 2 - 1));
    const double scale = l2_norm(F, *m) * l2_norm(G, *m);
    double worst = 0.0;
    for (LPMode mode : {LPMode::raw, LPMode::normalized}) {
        const LPFamily fam(kernel_of(cfg), -4, torus_k_max(n), mode);
        for (int k = fam.k_min(); k <= fam.k_max(); ++k) {
            const double a = b->inner(project(F, k, fam, *b), G);
            const double c = b->inner(F, project(G, k, fam, *b));
            worst = std::max(worst, std::abs(a - c) / scale);
        }
    }
    out.add_metric("relative_asymmetry", worst, 1e-10);
}

void check_lp_reconstruction(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const int n = cfg.torus_ladder.front();
    const auto m = ctx.torus(n);
    const auto b = ctx.torus_basis(n, 0);
    const LPFamily fam(kernel_of(cfg), -4, torus_k_max(n) + 2, LPMode::normalized);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const TensorField F = TensorField::scalar(chart_field(m->grid(), cfg.seed, 30 + i, n / 2 - 1));
        TensorField acc = low_part(low_part(F, fam, *b), fam, *b);
        for (int k = 0; k <= fam.k_max(); ++k) acc += project(project(F, k, fam, *b), k, fam, *b);
        worst = std::max(worst, l2_norm(acc - F, *m) / l2_norm(F, *m));
    }
    out.add_metric("relative_error", worst, 1e-10);
}

void check_lp_quadrature(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    SpectralSphere s(cfg.sphere_ladder.back(), 1.0);
    const EigenBasis b = eigendecompose(s, 0);
    const LPKernel kernel = kernel_of(cfg);
    const LPFamily raw(kernel, -6, 8, LPMode::raw);
    // Degrees 1 and 11 first so the selection spans l(l+1) ∈ [2, 132].
    std::vector<int> degrees{1, 11};
    for (int l = 2; l <= 10; ++l) degrees.push_back(l);
    std::vector<std::pair<int, int>> modes;
    for (int l : degrees) {
        for (int m : {0, l, -l, l / 2, -(l / 2)}) {
            if (std::find(modes.begin(), modes.end(), std::pair{l, m}) == modes.end()) modes.emplace_back(l, m);
        }
    }
    modes.resize(50);
    double worst = 0.0, lo = inf, hi = 0.0;
    for (auto [l, m] : modes) {
        const TensorField Y = b.eigenvector(SpectralSphere::coefficient_index(l, m));
        lo = std::min(lo, l * (l + 1.0));
        hi = std::max(hi, l * (l + 1.0));
        for (int k = -1; k <= 4; ++k) {
            const TensorField q = project_quadrature(Y, k, kernel, b);
            worst = std::max(worst, l2_norm(q - project(Y, k, raw, b), s) / l2_norm(Y, s));
        }
    }
    out.add_metric("relative_error", worst, 1e-6);
    out.add_metric("eigenfunctions", double(modes.size()), 50.0, false);
    out.add_metric("octaves", std::log2(hi / lo), 6.0, false);
}

void check_lp_kernel_moments(CheckOutcome& out, RunContext& ctx)
{
    const LPKernel kernel = kernel_of(ctx.config());
    VectorXd x, w;
    detail::gauss_legendre(24, x, w);
    // Composite Gauss-Legendre on [0, 200]; the integrand is below 1e-60 beyond.
    const int panels = 400;
    const double width = 200.0 / panels;
    std::vector<double> moment(kernel.n_der() + 1, 0.0);
    for (int p = 0; p < panels; ++p) {
        for (Index i = 0; i < x.size(); ++i) {
            const double t = width * (p + 0.5 * (x[i] + 1.0));
            const double m = kernel.time_kernel(t) * 0.5 * width * w[i];
            for (int j = 0; j <= kernel.n_der(); ++j) moment[j] += std::pow(t, j) * m;
        }
    }
    double worst = 0.0;
    for (int j = 0; j < kernel.n_der(); ++j) worst = std::max(worst, std::abs(moment[j]));
    out.add_metric("max_vanishing_moment", worst, 1e-9);
    out.add_metric("first_nonvanishing_moment", std::abs(moment[kernel.n_der()]), 1e-3, false);
}

void check_lp_properties(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const int n0 = cfg.torus_ladder.front();
    const LPFamily fam(kernel_of(cfg), -4, torus_k_max(2 * n0), cfg.kernel.mode);
    LPReportConfig rc;
    rc.k_hi = torus_k_max(n0);
    std::map<std::string, std::vector<RatioReport>> per_id;
    double orth = inf;
    for (int n : {n0, 2 * n0}) {
        const auto m = ctx.torus(n);
        const auto b0 = ctx.torus_basis(n, 0);
        const auto b1 = ctx.torus_basis(n, 1);
        std::vector<TensorField> samples;
        for (int i = 0; i < 3; ++i) samples.push_back(TensorField::scalar(chart_field(m->grid(), cfg.seed, 40 + i)));
        samples.push_back(m->covariant_derivative(samples.front()));
        const LPPropertyReport rep = property_report(fam, *m, *b0, b1.get(), samples, rc);
        std::map<std::string, RatioReport> at;
        for (const auto& row : rep.rows) {
            auto [it, fresh] = at.try_emplace(row.property_id, "lp_properties." + row.property_id);
            it->second.add(row.lhs, row.bound, 0, n, row.k, row.k_prime);
        }
        for (auto& [id, r] : at) per_id[id].push_back(std::move(r));
        orth = std::min(orth, rep.orthogonality_exponent.at(2.0));
        if (cfg.kernel.mode == LPMode::normalized) {
            out.add_metric("reconstruction_residual_n" + std::to_string(n), rep.reconstruction_residual, 1e-10);
        }
    }
    for (const auto& [id, reports] : per_id) out.reports.push_back(refine(reports));
    out.add_metric("almost_orthogonality_exponent", orth, 1.9, false);

    const RatioReport& bern = out.report("lp_properties.strong_scalar_bernstein");
    std::map<int, double> per_k;
    for (const auto& row : bern.rows) {
        if (row.resolution == 2 * n0) per_k[row.k] = std::max(per_k[row.k], row.ratio);
    }
    Series s{"strong_scalar_bernstein", "k", "max_ratio", {}, {}};
    for (auto [k, v] : per_k) {
        s.x.push_back(k);
        s.y.push_back(v);
    }
    out.add_metric("strong_scalar_bernstein_bands", double(per_k.size()), double(rc.k_hi - rc.k_lo + 1), false);
    out.add_metric("strong_scalar_bernstein_max", bern.max_ratio(), inf);
    out.series.push_back(std::move(s));
}

// ---------------------------------------------------------------- norms

void check_norm_ordering(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const auto fol = ctx.foliation(cfg.foliation_ladder.front());
    const LPFamily lp = ctx.family_for(*fol);
    SampleSpec spec = cfg.samples;
    spec.seed = cfg.seed;
    double minkowski = 0.0, besov = 0.0;
    for (const auto& F : sample_family(spec, fol)) {
        minkowski = std::max(minkowski, mixed_norm(F, NormSpec::Lt_Lx(inf, 2.0)) / mixed_norm(F, NormSpec::Lx_Lt(2.0, inf)));
        if (cfg.kernel.mode != LPMode::normalized) continue;
        for (int i = 0; i < fol->slices(); i += std::max(1, fol->slices() / 4)) {
            const double l2 = l2_norm(F.slices[i], fol->slice(i));
            besov = std::max(besov, l2 / besov_surface(F.slices[i], 0.0, lp, fol->basis(i, 0)));
        }
    }
    out.add_metric("minkowski_ratio", minkowski, 1.0 + 1e-12);
    if (cfg.kernel.mode == LPMode::normalized) out.add_metric("l2_over_besov", besov, 1.0 + 1e-10);
}

void check_n1_envelope(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const auto fol = ctx.foliation(cfg.foliation_ladder.front());
    const LPFamily lp = ctx.family_for(*fol);
    SampleSpec spec = cfg.samples;
    spec.seed = cfg.seed;
    double dominance = 0.0, variation = 0.0;
    for (const auto& F : sample_family(spec, fol)) {
        const Envelope e = n1_envelope(F, default_envelope_epsilon, lp);
        for (std::size_t k = 0; k < e.raw.size(); ++k) {
            dominance = std::max(dominance, e.raw[k] / e.smoothed[k]);
            if (k > 0) {
                const double step = std::abs(std::log2(e.smoothed[k] / e.smoothed[k - 1]));
                variation = std::max(variation, step / e.epsilon);
            }
        }
    }
    out.add_metric("raw_over_envelope", dominance, 1.0 + 1e-12);
    out.add_metric("log_variation_over_epsilon", variation, 1.0 + 1e-12);
}

// ---------------------------------------------------------------- flat

void flat_outcome_for(const std::string& id, CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    const auto& ladder = cfg.flat_ladder;
    if (id == "flat_lp_properties") {
        std::map<std::string, std::vector<RatioReport>> per_id;
        for (int n : ladder) {
            FlatPropertyReport rep = flat_property_report(flat_fields(cfg, n, cfg.flat_property_samples, 16));
            for (auto& r : rep.constants) {
                r.check_id = "flat_lp_properties." + r.check_id;
                per_id[r.check_id].push_back(std::move(r));
            }
            const std::string tag = "_n" + std::to_string(n);
            out.add_metric("lp1_orthogonality" + tag, rep.lp1_residual, 1e-10);
            out.add_metric("lp5_derivative" + tag, rep.lp5_dt_residual, 1e-10);
            out.add_metric("lp5_integral" + tag, rep.lp5_integral_residual, 1e-10);
            out.add_metric("partition" + tag, rep.partition_residual, 1e-10);
        }
        for (const auto& [rid, reports] : per_id) out.reports.push_back(refine(reports));
    } else if (id == "flat_sharp_trace") {
        std::vector<RatioReport> per;
        for (int n : ladder) per.push_back(flat_sharp_trace_check(flat_fields(cfg, n, cfg.flat_samples, 64)));
        out.reports.push_back(refine(per));
    } else if (id == "flat_trace_counterexample") {
        RatioReport r = flat_trace_counterexample(ladder.back());
        out.add_metric("growth_exponent", r.fit_exponent, 0.0, false);
        out.metrics.back().pass = r.fit_exponent > 0.0;
        Series s{"ratio", "K", "ratio", {}, {}};
        for (const auto& row : r.rows) {
            s.x.push_back(row.k);
            s.y.push_back(row.ratio);
        }
        out.series.push_back(std::move(s));
        out.reports.push_back(std::move(r));
    } else if (id == "flat_bilinear_trace") {
        std::vector<RatioReport> per;
        for (int n : ladder) per.push_back(flat_bilinear_trace_check(flat_pairs(cfg, n, cfg.flat_samples, 2)));
        out.reports.push_back(refine(per));
    } else if (id == "flat_product_trace") {
        std::vector<RatioReport> integrated, cumulative;
        for (int n : ladder) {
            FlatProductReport r = flat_product_trace_check(flat_pairs(cfg, n, cfg.flat_samples, 2));
            integrated.push_back(std::move(r.integrated));
            cumulative.push_back(std::move(r.cumulative));
        }
        out.reports.push_back(refine(integrated));
        out.reports.push_back(refine(cumulative));
    } else if (id == "flat_dyadic_product") {
        const int band = flat_product_band(ladder.front());
        std::vector<RatioReport> ratios, bern;
        double low_low = 0.0;
        for (int n : ladder) {
            DyadicProductReport r = dyadic_product_check(flat_pairs(cfg, n, cfg.flat_pairs, band), band);
            low_low = std::max(low_low, r.low_low_max);
            out.add_metric("decay_exponent_n" + std::to_string(n), r.ratios.fit_exponent, 0.25, false);
            ratios.push_back(std::move(r.ratios));
            bern.push_back(std::move(r.bernstein));
        }
        out.add_metric("low_low_max", low_low, 1e-12);
        out.reports.push_back(refine(ratios));
        out.reports.push_back(refine(bern));
    } else {
        throw ConfigError("unknown flat check '" + id + "'");
    }
}

// ---------------------------------------------------------------- foliation

void check_first_variation(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    std::vector<double> err;
    for (int ns : cfg.torus_ladder) {
        err.push_back(ctx.stress({cfg.torus_ladder.front(), ns})->first_variation_residual());
    }
    add_rate(out, "rate", cfg.torus_ladder, err, 3.5);
}

void check_commutator(CheckOutcome& out, RunContext& ctx, const std::string& identity)
{
    const auto& cfg = ctx.config();
    std::vector<double> err;
    for (int n : cfg.torus_ladder) {
        const auto fol = ctx.stress({n, n});
        const FoliatedTensor f = smooth_scalar(fol);
        const auto rows = identity == "divergence" ? commutator_residual(nabla(f)) : commutator_residual(f);
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.identity == identity; });
        err.push_back(it->residual);
    }
    add_rate(out, "rate", cfg.torus_ladder, err, 1.9);
}

void check_assumptions(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    for (const auto& rung : cfg.foliation_ladder) {
        const auto rep = ctx.assumptions("curved:" + rung_name(rung), ctx.foliation(rung));
        for (const auto& row : rep->rows) {
            if (std::isfinite(row.target)) out.add_metric(row.name + "_" + rung_name(rung), row.value, row.target);
        }
        out.add_metric("delta0_" + rung_name(rung), rep->delta0_measured, rep->delta0_target);
    }
}

void check_reverse_pair(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    SampleSpec spec = cfg.samples;
    spec.seed = cfg.seed;
    spec.rank = 1;
    std::map<double, std::vector<RatioReport>> per_p;
    for (const auto& rung : cfg.foliation_ladder) {
        const auto fol = ctx.foliation(rung);
        std::map<double, RatioReport> at;
        for (int i = 0; i < spec.count; ++i) {
            const ReversePair pr = reverse_pair(sample_field(spec, fol, i, 3));
            for (const auto& [p, d] : pr.defect) {
                auto [it, fresh] = at.try_emplace(p, "reverse_pair.L" + std::to_string(int(p)));
                it->second.add(d, pr.bound.at(p), i, rung.first);
            }
        }
        for (auto& [p, r] : at) per_p[p].push_back(std::move(r));
    }
    for (const auto& [p, reports] : per_p) out.reports.push_back(refine(reports));
}

// ---------------------------------------------------------------- harness

void flag_assumptions(CheckOutcome& out, RunContext& ctx, const std::shared_ptr<const FoliatedMetric>& fol,
                      const std::string& key)
{
    if (!ctx.assumptions(key, fol)->compliant) out.assumption_failure = true;
}

void check_theorem(const std::string& id, CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    SampleSpec spec = cfg.samples;
    spec.seed = cfg.seed;
    std::vector<RatioReport> per;
    for (const auto& rung : cfg.foliation_ladder) {
        const auto fol = ctx.foliation(rung);
        flag_assumptions(out, ctx, fol, "curved:" + rung_name(rung));
        per.push_back(theorem_ratio(id, theorem_family(id, spec, fol), ctx.family_for(*fol)));
    }
    out.reports.push_back(refine(per));
}

void check_probe(const std::string& id, CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    SampleSpec spec = cfg.samples;
    spec.seed = cfg.seed;
    std::vector<RatioReport> per;
    for (const auto& rung : cfg.foliation_ladder) {
        const auto fol = ctx.foliation(rung);
        flag_assumptions(out, ctx, fol, "curved:" + rung_name(rung));
        const auto family = sample_family(spec, fol, 0);
        const auto partners = id == "dyadic_ibp" ? sample_family(spec, fol, 1) : std::vector<FoliatedTensor>{};
        per.push_back(dyadic_probe(id, family, ctx.family_for(*fol), partners));
    }
    const double margin = probe_margin(id);
    RatioReport r = refine(per);
    if (!std::isnan(margin)) out.add_metric("decay_exponent", r.fit_exponent, margin, false);
    out.add_metric("q", probe_exponent(id), probe_exponent(id) < 2.0 ? 1.8 : inf);
    out.reports.push_back(std::move(r));
}

/// Cone id → (flat check, flat report id).
const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& cone_pairs()
{
    static const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> t{
        {"bilinear_trace_scalar", {"flat_bilinear_trace", "bilinear_trace"}},
        {"product_I_scalar", {"flat_product_trace", "product_trace"}},
        {"product_II", {"flat_product_trace", "product_trace_cumulative"}},
        {"sharp_trace_corollary", {"flat_sharp_trace", "sharp_trace"}},
    };
    return t;
}

void check_cone(CheckOutcome& out, RunContext& ctx)
{
    const auto& cfg = ctx.config();
    SampleSpec spec = cfg.samples;
    spec.seed = cfg.seed;
    for (const auto& [id, flat] : cone_pairs()) {
        std::vector<RatioReport> per;
        for (const auto& rung : cfg.cone_ladder) {
            const auto fol = ctx.cone(rung);
            flag_assumptions(out, ctx, fol, "cone:" + rung_name(rung));
            RatioReport r = theorem_ratio(id, theorem_family(id, spec, fol), ctx.family_for(*fol));
            r.check_id = "cone." + id;
            per.push_back(std::move(r));
        }
        out.reports.push_back(refine(per));
        const CheckOutcome& f = ctx.flat_outcome(flat.first);
        const RatioReport& fr = f.report(flat.second);
        const double flat_c = fr.max_ratio_at(fr.resolutions().back());
        out.add_metric(id + "_over_flat", out.reports.back().max_ratio() / flat_c, 3.0);
    }
}

// ---------------------------------------------------------------- registry

using CheckFn = std::function<void(CheckOutcome&, RunContext&)>;

struct Entry
{
    CheckInfo info;
    CheckFn run;
};

const std::vector<Entry>& registry()
{
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> e{
            {{"gauss_bonnet", "surface_geometry", "Gauss-Bonnet: total curvature 4π on the round sphere, 0 on the torus"},
             check_gauss_bonnet},
            {{"metric_compatibility", "surface_geometry", "metric compatibility ∇γ = 0 under grid refinement"},
             check_metric_compatibility},
            {{"bochner_scalar", "surface_geometry", "scalar Bochner identity ‖∇²f‖² = ‖Δf‖² − ∫K|∇f|²"},
             [](CheckOutcome& o, RunContext& c) { check_bochner(o, c, 0); }},
            {{"bochner_tensor", "surface_geometry", "Bochner identity for 1-forms"},
             [](CheckOutcome& o, RunContext& c) { check_bochner(o, c, 1); }},
            {{"sphere_bochner", "surface_geometry", "Bochner identity on sphere eigenfunctions in closed form"},
             check_sphere_bochner},
            {{"heat_identity", "heat_semigroup", "U(0) = I"}, check_heat_identity},
            {{"heat_semigroup", "heat_semigroup", "semigroup law U(a)U(b) = U(a+b)"}, check_heat_semigroup},
            {{"heat_smoothing", "heat_semigroup", "heat-flow smoothing estimates in L^p and Gagliardo-Nirenberg form"},
             check_heat_smoothing},
            {{"heat_sphere_gradient", "heat_semigroup", "gradient bound ‖∇U(τ)F‖ ≤ (2eτ)^{-1/2}‖F‖ on the sphere"},
             check_heat_sphere_gradient},
            {{"lp_selfadjoint", "lp_projections", "P_k is selfadjoint"}, check_lp_selfadjoint},
            {{"lp_reconstruction", "lp_projections", "normalized partition Σ P_k² + P_{<0}² = I"},
             check_lp_reconstruction},
            {{"lp_quadrature", "lp_projections", "heat-kernel quadrature of P_k against its spectral symbol"},
             check_lp_quadrature},
            {{"lp_kernel_moments", "lp_projections", "vanishing moments of the LP time kernel"},
             check_lp_kernel_moments},
            {{"lp_properties", "lp_projections",
              "LP properties: boundedness, almost orthogonality, finite band, Bernstein"},
             check_lp_properties},
            {{"norm_ordering", "norms_besov", "Minkowski ordering of mixed norms and L² ≤ B⁰_{2,1}"},
             check_norm_ordering},
            {{"n1_envelope", "norms_besov", "dyadic 𝓝₁ envelope dominates and varies slowly"}, check_n1_envelope},
        };
        for (const auto& [id, anchor] : std::vector<std::pair<std::string, std::string>>{
                 {"flat_lp_properties", "flat LP projections: orthogonality, commutation with ∂_t and ∫dt, bounds"},
                 {"flat_sharp_trace", "flat sharp trace ‖∂_tf‖_{L_x^∞L_t²} ≲ ‖f‖_{H²}"},
                 {"flat_trace_counterexample", "failure of the sharp trace bound for ∂_{x¹}"},
                 {"flat_bilinear_trace", "flat bilinear trace ‖∫∂_tg·h‖_{B⁰} ≲ ‖g‖_{H¹}‖h‖_{H¹}"},
                 {"flat_product_trace", "flat product trace estimates, integrated and cumulative"},
                 {"flat_dyadic_product", "dyadic product decay and low-low vanishing in the flat case"},
             }) {
            e.push_back({{id, "flat_lp", anchor}, [id](CheckOutcome& o, RunContext& c) {
                             const CheckOutcome& r = c.flat_outcome(id);
                             o.reports = r.reports;
                             o.metrics = r.metrics;
                             o.series = r.series;
                         }});
        }
        e.push_back({{"first_variation", "null_foliation", "first variation ∂_sγ = 2χ under s refinement"},
                     check_first_variation});
        e.push_back({{"commutator_scalar", "null_foliation", "commutator [∇_L, ∇]f = −χ·∇f for scalars"},
                     [](CheckOutcome& o, RunContext& c) { check_commutator(o, c, "scalar_gradient"); }});
        e.push_back({{"commutator_laplacian", "null_foliation", "commutator [∇_L, Δ]f for scalars"},
                     [](CheckOutcome& o, RunContext& c) { check_commutator(o, c, "scalar_laplacian"); }});
        e.push_back({{"commutator_divergence", "null_foliation", "commutator [∇_L, div]F for 1-forms"},
                     [](CheckOutcome& o, RunContext& c) { check_commutator(o, c, "divergence"); }});
        e.push_back({{"assumptions", "null_foliation", "bootstrap assumptions on trχ, χ̂, ζ, β and the slice metric"},
                     check_assumptions});
        e.push_back({{"reverse_pair", "null_foliation", "reverse transport pair w, W with div W ≈ w"},
                     check_reverse_pair});
        const std::map<std::string, std::string> theorem_anchor{
            {"bilinear_trace", "bilinear trace estimate for transport solutions"},
            {"bilinear_trace_scalar", "bilinear trace estimate with vanishing initial data"},
            {"product_I", "first product estimate for transport solutions"},
            {"product_I_scalar", "first product estimate with vanishing initial data"},
            {"product_II", "second product estimate for transport solutions"},
            {"sharp_trace", "sharp trace estimate for ∇_L-derivatives"},
            {"sharp_trace_corollary", "sharp trace corollary in Sobolev form"},
            {"homog_transport", "Besov bound for homogeneous transport"},
            {"product_I_dyadic", "dyadic form of the first product estimate"},
        };
        for (const auto& id : theorem_ids()) {
            e.push_back({{id, "estimate_harness", theorem_anchor.at(id)},
                         [id](CheckOutcome& o, RunContext& c) { check_theorem(id, o, c); }});
        }
        const std::map<std::string, std::string> probe_anchor{
            {"commutator_q", "commutator [P_k, ∇_L] in L_t^q with q < 2"},
            {"commutator_L1", "commutator [P_k, ∇_L] in L_t¹"},
            {"equiv_L", "∇_L P_k F equivalence with the envelope"},
            {"gn_k", "dyadic Gagliardo-Nirenberg bound in L_t^∞"},
            {"tricky_bernstein", "Bernstein bound for ∇P_k F in L_t^q L_x⁴"},
            {"int_strong_bernstein", "integrated strong Bernstein bound in L_t^q L_x^∞"},
            {"heat_besov", "heat-flow characterization of the Besov norm"},
            {"dyadic_ibp", "dyadic integration by parts boundary term"},
        };
        for (const auto& id : probe_ids()) {
            e.push_back({{id, "estimate_harness", probe_anchor.at(id)},
                         [id](CheckOutcome& o, RunContext& c) { check_probe(id, o, c); }});
        }
        e.push_back({{"cone_comparison", "estimate_harness", "Minkowski cone reproduces the flat constants"},
                     check_cone});
        return e;
    }();
    return entries;
}

// ---------------------------------------------------------------- configuration

json recipe_json(const MetricRecipe& r)
{
    return {{"name", r.name()}, {"amplitude", r.amplitude}, {"mode1", r.mode1}, {"mode2", r.mode2},
            {"seed", r.seed}, {"band", r.band}};
}

json foliation_json(const FoliationConfig& c)
{
    return {{"substrate", to_string(c.substrate)},
            {"n", c.n},
            {"l_max", c.l_max},
            {"initial", recipe_json(c.initial)},
            {"r0", c.r0},
            {"n_s", c.n_s},
            {"delta0_target", c.delta0_target},
            {"cone_background", c.cone_background},
            {"seed", c.seed},
            {"band", c.band},
            {"trchi_amplitude", c.trchi_amplitude},
            {"chihat_amplitude", c.chihat_amplitude},
            {"zeta_amplitude", c.zeta_amplitude},
            {"beta_amplitude", c.beta_amplitude}};
}

void require(bool ok, const std::string& what)
{
    if (!ok) throw ConfigError(what);
}

template <class T>
void require_ascending(const std::vector<T>& v, const std::string& field, std::size_t min_size = 2)
{
    require(v.size() >= min_size, field + " needs at least " + std::to_string(min_size) + " entries");
    for (std::size_t i = 1; i < v.size(); ++i) require(v[i - 1] < v[i], field + " must be strictly ascending");
}

void require_ascending_rungs(const std::vector<Rung>& v, const std::string& field)
{
    require(v.size() >= 2, field + " needs at least 2 rungs");
    for (std::size_t i = 1; i < v.size(); ++i) {
        require(v[i - 1].first < v[i].first && v[i - 1].second <= v[i].second, field + " must be ascending");
    }
}

} // namespace

RunConfig::RunConfig()
{
    foliation.r0 = 20.0;
    foliation.trchi_amplitude = foliation.chihat_amplitude = foliation.zeta_amplitude = foliation.beta_amplitude = 1e-3;
    stress.r0 = 1.0;
    stress.n = 16;
    stress.initial = MetricRecipe::perturbed(0.1, 3);
    stress.trchi_amplitude = stress.chihat_amplitude = stress.zeta_amplitude = stress.beta_amplitude = 0.2;
    cone_r0 = std::sqrt(pi);
    samples.count = 4;
}

void RunConfig::validate() const
{
    require(kernel.n_der >= 2 && kernel.N >= kernel.n_der + 1, "kernel: need n_der >= 2 and N > n_der");
    require_ascending(torus_ladder, "torus.ladder");
    for (int n : torus_ladder) require(n >= 8 && n % 2 == 0, "torus.ladder: sizes must be even and >= 8");
    require_ascending(sphere_ladder, "sphere.l_max", 1);
    require(sphere_ladder.front() >= 2, "sphere.l_max must be >= 2");
    require(sphere_radius > 0.0, "sphere.radius must be positive");
    require_ascending_rungs(foliation_ladder, "foliation.ladder");
    require_ascending_rungs(cone_ladder, "cone.ladder");
    for (const auto& r : foliation_ladder) require(r.first >= 8 && r.second >= 5, "foliation.ladder: rung too small");
    for (const auto& r : cone_ladder) require(r.first >= 2 && r.second >= 5, "cone.ladder: rung too small");
    require(cone_r0 > 0.0, "cone.r0 must be positive");
    foliation.validate();
    stress.validate();
    samples.validate();
    require_ascending(flat_ladder, "flat.ladder");
    for (int n : flat_ladder) require(n >= 16 && (n & (n - 1)) == 0, "flat.ladder: sizes must be powers of two >= 16");
    require(flat_samples > 0 && flat_pairs > 0 && flat_property_samples > 0, "flat: sample counts must be positive");
    for (const auto& id : suites) check_info(id);
    require(!output.empty(), "output must not be empty");
}

std::string RunConfig::canonical() const
{
    json j;
    j["seed"] = seed;
    j["kernel"] = {{"N", kernel.N}, {"n_der", kernel.n_der}, {"mode", to_string(kernel.mode)}};
    j["torus"] = {{"ladder", torus_ladder}, {"metric", recipe_json(torus_metric)}};
    j["sphere"] = {{"l_max", sphere_ladder}, {"radius", sphere_radius}};
    j["foliation"] = foliation_json(foliation);
    j["foliation"]["ladder"] = foliation_ladder;
    j["stress"] = foliation_json(stress);
    j["cone"] = {{"r0", cone_r0}, {"ladder", cone_ladder}};
    j["samples"] = {{"count", samples.count},
                    {"rank", samples.rank},
                    {"slope", samples.slope},
                    {"t_modes", samples.t_modes},
                    {"max_frequency", samples.max_frequency}};
    j["flat"] = {{"ladder", flat_ladder},
                 {"samples", flat_samples},
                 {"pairs", flat_pairs},
                 {"property_samples", flat_property_samples}};
    j["suites"] = suites;
    return j.dump();
}

std::string RunConfig::hash() const
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- outcomes

Metric& CheckOutcome::add_metric(std::string name, double value, double bound, bool upper)
{
    const bool pass = upper ? value <= bound : value >= bound;
    metrics.push_back({std::move(name), value, bound, upper, pass});
    return metrics.back();
}

const Metric& CheckOutcome::metric(const std::string& name) const
{
    for (const auto& m : metrics) {
        if (m.name == name) return m;
    }
    throw DomainError("check '" + id + "' has no metric '" + name + "'");
}

const RatioReport& CheckOutcome::report(const std::string& check_id) const
{
    for (const auto& r : reports) {
        if (r.check_id == check_id) return r;
    }
    throw DomainError("check '" + id + "' has no report '" + check_id + "'");
}

bool CheckOutcome::passed() const
{
    if (!error.empty()) return false;
    for (const auto& m : metrics) {
        if (!m.pass) return false;
    }
    for (const auto& r : reports) {
        if (r.resolutions().size() >= 2 && !r.stable) return false;
    }
    return true;
}

int RunSummary::exit_code() const
{
    int code = 0;
    for (const auto& o : outcomes) {
        if (o.config_error) return 3;
        if (!o.passed()) code = 2;
    }
    return code;
}

// ---------------------------------------------------------------- context

RunContext::RunContext(RunConfig cfg)
    : m_cfg(std::move(cfg))
    , m_impl(std::make_unique<Impl>())
{
    m_cfg.validate();
}

RunContext::~RunContext() = default;

LPFamily RunContext::family_for(const FoliatedMetric& fol) const
{
    return harness_family(fol, LPKernel(m_cfg.kernel.N, m_cfg.kernel.n_der), m_cfg.kernel.mode);
}

std::shared_ptr<const FoliatedMetric> RunContext::foliation(const Rung& rung)
{
    return m_impl->foliations.get("curved:" + rung_name(rung),
                                  [&] { return build_foliation(m_cfg.foliation.refined(rung.first, rung.second)); });
}

std::shared_ptr<const FoliatedMetric> RunContext::cone(const Rung& rung)
{
    return m_impl->foliations.get("cone:" + rung_name(rung), [&] {
        return build_foliation(minkowski_cone(m_cfg.cone_r0, Substrate::sphere, rung.first, rung.second));
    });
}

std::shared_ptr<const FoliatedMetric> RunContext::stress(const Rung& rung)
{
    return m_impl->foliations.get("stress:" + rung_name(rung),
                                  [&] { return build_foliation(m_cfg.stress.refined(rung.first, rung.second)); });
}

std::shared_ptr<const MetricField> RunContext::torus(int n)
{
    return m_impl->metrics.get({n, 0}, [&] { return build_torus_metric(n, m_cfg.torus_metric); });
}

std::shared_ptr<const EigenBasis> RunContext::torus_basis(int n, int rank)
{
    return m_impl->bases.get({n, rank}, [&] {
        return std::shared_ptr<const EigenBasis>(std::make_shared<EigenBasis>(eigendecompose(*torus(n), rank)));
    });
}

std::shared_ptr<const AssumptionReport> RunContext::assumptions(const std::string& key,
                                                                const std::shared_ptr<const FoliatedMetric>& fol)
{
    return m_impl->assumptions.get(key, [&] {
        return std::shared_ptr<const AssumptionReport>(std::make_shared<AssumptionReport>(assumption_report(*fol)));
    });
}

const CheckOutcome& RunContext::flat_outcome(const std::string& id)
{
    return *m_impl->flat.get(id, [&] {
        auto out = std::make_shared<CheckOutcome>();
        out->id = id;
        flat_outcome_for(id, *out, *this);
        return std::shared_ptr<const CheckOutcome>(out);
    });
}

// ---------------------------------------------------------------- running

const std::vector<CheckInfo>& check_catalog()
{
    static const std::vector<CheckInfo> catalog = [] {
        std::vector<CheckInfo> c;
        for (const auto& e : registry()) c.push_back(e.info);
        return c;
    }();
    return catalog;
}

const CheckInfo& check_info(const std::string& id)
{
    for (const auto& c : check_catalog()) {
        if (c.id == id) return c;
    }
    throw ConfigError("unknown check id '" + id + "'");
}

CheckOutcome run_check(const std::string& id, RunContext& ctx)
{
    CheckOutcome out;
    out.id = id;
    try {
        const auto& entries = registry();
        const auto it = std::find_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.info.id == id; });
        if (it == entries.end()) throw ConfigError("unknown check id '" + id + "'");
        it->run(out, ctx);
    } catch (const ConfigError& e) {
        out.error = e.what();
        out.config_error = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

RunSummary run_suites(const RunConfig& cfg, int jobs, std::ostream& log)
{
    const auto start = std::chrono::steady_clock::now();
    RunContext ctx(cfg);
    std::vector<std::string> ids;
    for (const auto& c : check_catalog()) {
        if (cfg.suites.empty() || std::find(cfg.suites.begin(), cfg.suites.end(), c.id) != cfg.suites.end()) {
            ids.push_back(c.id);
        }
    }
    RunSummary summary;
    summary.config_hash = cfg.hash();
    summary.outcomes.resize(ids.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) {
            const auto t0 = std::chrono::steady_clock::now();
            summary.outcomes[i] = run_check(ids[i], ctx);
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const auto& o = summary.outcomes[i];
            std::lock_guard lock(log_mutex);
            log << (o.passed() ? "ok   " : "FAIL ") << o.id << " (" << format_double(std::round(dt * 10) / 10) << " s)";
            if (!o.error.empty()) log << ": " << o.error;
            for (const auto& m : o.metrics) {
                if (!m.pass) log << "\n       " << m.name << " = " << format_double(m.value) << (m.upper ? " > " : " < ")
                                 << format_double(m.bound);
            }
            for (const auto& r : o.reports) {
                if (r.resolutions().size() >= 2 && !r.stable) {
                    log << "\n       " << r.check_id << ": drift " << format_double(r.drift()) << " between resolutions "
                        << r.resolutions().front() << " and " << r.resolutions().back();
                }
            }
            if (o.assumption_failure) log << "\n       foliation failed its assumption report";
            log << '\n' << std::flush;
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, int(ids.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

std::string outcome_csv(const CheckOutcome& outcome, const std::string& config_hash)
{
    std::ostringstream os;
    write_csv_header(os);
    for (const auto& r : outcome.reports) write_csv(os, r, config_hash);
    return os.str();
}

std::filesystem::path output_directory(const RunConfig& cfg)
{
    const char* root = std::getenv("GEOLP_OUT");
    return root && *root ? std::filesystem::path(root) / cfg.output : std::filesystem::path(cfg.output);
}

namespace {

json number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

void write_file(const std::filesystem::path& p, const std::string& body)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + p.string());
    f << body;
}

} // namespace

void write_outputs(const RunSummary& summary, const RunConfig& cfg, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "plots");
    json checks = json::array();
    for (const auto& o : summary.outcomes) {
        write_file(dir / (o.id + ".csv"), outcome_csv(o, summary.config_hash));
        for (const auto& s : o.series) {
            std::ostringstream os;
            os << s.x_label << ',' << s.y_label << '\n';
            for (std::size_t i = 0; i < s.x.size(); ++i) os << format_double(s.x[i]) << ',' << format_double(s.y[i]) << '\n';
            write_file(dir / "plots" / (o.id + "." + s.name + ".csv"), os.str());
        }
        json metrics = json::array();
        for (const auto& m : o.metrics) {
            metrics.push_back({{"name", m.name}, {"value", number(m.value)}, {"bound", number(m.bound)},
                               {"kind", m.upper ? "upper" : "lower"}, {"pass", m.pass}});
        }
        json reports = json::array();
        for (const auto& r : o.reports) {
            json per = json::object();
            for (int res : r.resolutions()) per[std::to_string(res)] = number(r.max_ratio_at(res));
            const bool refined = r.resolutions().size() >= 2;
            reports.push_back({{"check_id", r.check_id},
                               {"rows", r.rows.size()},
                               {"max_ratio", number(r.rows.empty() ? 0.0 : r.max_ratio())},
                               {"max_ratio_by_resolution", per},
                               {"drift", refined ? number(r.drift()) : json(nullptr)},
                               {"stable", refined ? json(r.stable) : json(nullptr)},
                               {"fit_exponent", number(r.fit_exponent)}});
        }
        const auto& info = check_info(o.id);
        checks.push_back({{"id", o.id},
                          {"module", info.module},
                          {"anchor", info.anchor},
                          {"passed", o.passed()},
                          {"assumption_failure", o.assumption_failure},
                          {"error", o.error},
                          {"metrics", metrics},
                          {"reports", reports}});
    }
    bool assumption_failure = false;
    for (const auto& o : summary.outcomes) assumption_failure = assumption_failure || o.assumption_failure;
    json j;
    j["header"] = {{"config_hash", summary.config_hash},
                   {"exit_code", summary.exit_code()},
                   {"assumption_failure", assumption_failure},
                   {"seconds", summary.seconds}};
    j["config"] = json::parse(cfg.canonical());
    j["checks"] = checks;
    write_file(dir / "summary.json", j.dump(2) + "\n");
}

} // namespace geolp
