#include <geolp/foliation.hpp>
#include <geolp/norms.hpp>

#include "stencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace geolp {

namespace {

using detail::derivative_at;

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

/// Cubic Lagrange weights for the midpoint of [s_i, s_{i+1}].
struct Midpoint
{
    int start;
    std::array<double, 4> w;
};

Midpoint midpoint_stencil(int i, int n)
{
    if (i == 0) return {0, {5.0 / 16, 15.0 / 16, -5.0 / 16, 1.0 / 16}};
    if (i == n - 2) return {n - 4, {1.0 / 16, -5.0 / 16, 15.0 / 16, 5.0 / 16}};
    return {i - 1, {-1.0 / 16, 9.0 / 16, 9.0 / 16, -1.0 / 16}};
}

template <class T, class Get>
T midpoint_at(int i, int n, Get get)
{
    const Midpoint st = midpoint_stencil(i, n);
    T out = st.w[0] * get(st.start);
    for (int j = 1; j < 4; ++j) out = out + st.w[j] * get(st.start + j);
    return out;
}

MixedField interpolate_mixed(const FoliatedMetric& fol, int i)
{
    const Midpoint st = midpoint_stencil(i, fol.slices());
    MixedField out;
    for (int j = 0; j < 4; ++j) {
        out[j] = VectorXd::Zero(fol.nodes());
        for (int q = 0; q < 4; ++q) out[j] += st.w[q] * fol.chi_mixed(st.start + q)[j];
    }
    return out;
}

double sup_norm(const TensorField& f, const Surface& s)
{
    const VectorXd a = pointwise_norm(f, s);
    return a.size() ? a.maxCoeff() : 0.0;
}

/// Rank-2 field with components (11, 12, 21, 22) from a symmetric triple.
TensorField symmetric_tensor(const VectorXd& t11, const VectorXd& t12, const VectorXd& t22)
{
    TensorField out(2, t11.size());
    out.comps.col(0) = t11;
    out.comps.col(1) = t12;
    out.comps.col(2) = t12;
    out.comps.col(3) = t22;
    return out;
}

/// M[a][c] = T_ab γ^{bc} for symmetric T given as (11, 12, 22).
MixedField lower_upper(const std::array<VectorXd, 3>& t, const std::array<VectorXd, 3>& inv)
{
    auto T = [&](int a, int b) -> const VectorXd& { return t[a + b]; };
    auto G = [&](int a, int b) -> const VectorXd& { return inv[a + b]; };
    MixedField out;
    for (int a = 0; a < 2; ++a) {
        for (int c = 0; c < 2; ++c) {
            out[2 * a + c] = (T(a, 0).array() * G(0, c).array() + T(a, 1).array() * G(1, c).array()).matrix();
        }
    }
    return out;
}

struct TorusData
{
    const FoliationConfig& cfg;
    const ChartGrid& grid;
    std::array<Pattern, 8> pattern;

    double background(double s) const { return cfg.cone_background ? 2.0 / (cfg.r0 + s) : 0.0; }

    VectorXd sample(int which, double s) const
    {
        VectorXd v(grid.nodes());
        for (int i2 = 0; i2 < grid.n; ++i2) {
            for (int i1 = 0; i1 < grid.n; ++i1) v[grid.node(i1, i2)] = pattern[which](s, grid.coord(i1), grid.coord(i2));
        }
        return v;
    }

    VectorXd trchi(double s) const { return (sample(0, s).array() + background(s)).matrix(); }

    /// χ̂ = q − ½(γ^{ab}q_ab)γ, as (11, 12, 22).
    std::array<VectorXd, 3> chihat(double s, const std::array<VectorXd, 3>& g) const
    {
        const VectorXd q11 = sample(1, s), q12 = sample(2, s), q22 = sample(3, s);
        const VectorXd det = (g[0].array() * g[2].array() - g[1].array() * g[1].array()).matrix();
        const VectorXd tr =
            ((g[2].array() * q11.array() - 2.0 * g[1].array() * q12.array() + g[0].array() * q22.array()) /
             det.array())
                .matrix();
        return {(q11.array() - 0.5 * tr.array() * g[0].array()).matrix(),
                (q12.array() - 0.5 * tr.array() * g[1].array()).matrix(),
                (q22.array() - 0.5 * tr.array() * g[2].array()).matrix()};
    }

    std::array<VectorXd, 3> rate(double s, const std::array<VectorXd, 3>& g) const
    {
        const VectorXd t = trchi(s);
        const auto ch = chihat(s, g);
        std::array<VectorXd, 3> out;
        for (int j = 0; j < 3; ++j) out[j] = (t.array() * g[j].array() + 2.0 * ch[j].array()).matrix();
        return out;
    }
};

std::array<VectorXd, 3> axpy(const std::array<VectorXd, 3>& y, double h, const std::array<VectorXd, 3>& k)
{
    return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]};
}

void check_same_metric(const FoliatedTensor& a, const FoliatedTensor& b)
{
    if (a.metric != b.metric) throw DomainError("foliated tensors live on different foliations");
    if (a.rank() != b.rank()) throw RankError("foliated tensors have different ranks");
}

/// ∂_sF = (1 + extra)·χ·F − k·trχ·F + G, F(0) = F0.
FoliatedTensor integrate_transport(double extra, double k_weight, const FoliatedTensor& g, const TensorField& f0)
{
    const auto& fol = *g.metric;
    if (f0.rank != g.rank()) throw RankError("transport_solve: F0 and G differ in rank");
    if (f0.nodes() != fol.nodes()) throw DomainError("transport_solve: F0 has the wrong node count");
    const int n = fol.slices();
    const double h = fol.h();
    const double c = 1.0 + extra;

    auto rhs = [&](const MixedField& m, const VectorXd& tr, const TensorField& G, const TensorField& F) {
        TensorField out = c * contract_mixed(m, F);
        out -= scale(F, k_weight * tr);
        out += G;
        return out;
    };

    std::vector<TensorField> out{f0};
    out.reserve(n);
    for (int i = 0; i + 1 < n; ++i) {
        const MixedField m_mid = interpolate_mixed(fol, i);
        const VectorXd tr_mid = midpoint_at<VectorXd>(i, n, [&](int j) { return fol.trchi(j); });
        const TensorField g_mid = midpoint_at<TensorField>(i, n, [&](int j) { return g.slices[j]; });
        const TensorField& F = out.back();
        const TensorField k1 = rhs(fol.chi_mixed(i), fol.trchi(i), g.slices[i], F);
        const TensorField k2 = rhs(m_mid, tr_mid, g_mid, F + (0.5 * h) * k1);
        const TensorField k3 = rhs(m_mid, tr_mid, g_mid, F + (0.5 * h) * k2);
        const TensorField k4 = rhs(fol.chi_mixed(i + 1), fol.trchi(i + 1), g.slices[i + 1], F + h * k3);
        out.push_back(F + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    return FoliatedTensor(g.metric, std::move(out));
}

FoliatedTensor scalar_field(const std::shared_ptr<const FoliatedMetric>& fol, const std::vector<VectorXd>& v)
{
    std::vector<TensorField> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(TensorField::scalar(x));
    return FoliatedTensor(fol, std::move(out));
}

} // namespace

std::string to_string(Substrate s)
{
    return s == Substrate::torus ? "torus" : "sphere";
}

Substrate parse_substrate(const std::string& s)
{
    if (s == "torus") return Substrate::torus;
    if (s == "sphere") return Substrate::sphere;
    throw ConfigError("unknown substrate '" + s + "' (expected torus or sphere)");
}

Pattern::Pattern(double amplitude, std::uint64_t seed, int band, int terms)
    : m_amplitude(amplitude)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> mode(-band, band);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    double total = 0.0;
    for (int j = 0; j < terms; ++j) {
        Mode m{mode(rng), mode(rng), normal(rng), two_pi * unit(rng), unit(rng)};
        total += std::abs(m.c);
        m_modes.push_back(m);
    }
    for (auto& m : m_modes) m.c /= total;
}

double Pattern::operator()(double s, double w1, double w2) const
{
    if (m_amplitude == 0.0) return 0.0;
    double v = 0.0;
    for (const auto& m : m_modes) v += m.c * std::cos(m.k1 * w1 + m.k2 * w2 + m.phase + two_pi * m.nu * s);
    return m_amplitude * v;
}

void FoliationConfig::validate() const
{
    if (substrate == Substrate::torus && n < 8) throw ConfigError("foliation: torus grid needs n >= 8");
    if (substrate == Substrate::sphere && l_max < 2) throw ConfigError("foliation: sphere needs l_max >= 2");
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw ConfigError("foliation: r0 must be positive");
    if (n_s < 5) throw ConfigError("foliation: n_s must be at least 5");
    if (!(delta0_target > 0.0 && delta0_target < 0.5)) throw ConfigError("foliation: delta0_target must lie in (0, 1/2)");
    if (band < 1) throw ConfigError("foliation: band must be >= 1");
    if (substrate == Substrate::torus && 2 * band >= n / 2) throw ConfigError("foliation: band too wide for the grid");
    for (double a : {trchi_amplitude, chihat_amplitude, zeta_amplitude, beta_amplitude}) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("foliation: amplitudes must be finite and >= 0");
        if (substrate == Substrate::sphere && a != 0.0) {
            throw ConfigError("foliation: the sphere substrate carries the unperturbed cone only");
        }
    }
}

FoliationConfig FoliationConfig::refined(int resolution, int slices) const
{
    FoliationConfig out = *this;
    if (substrate == Substrate::torus) {
        out.n = resolution;
    } else {
        out.l_max = resolution;
    }
    out.n_s = slices;
    return out;
}

std::string FoliationConfig::name() const
{
    std::ostringstream os;
    os << to_string(substrate) << ";res=" << (substrate == Substrate::torus ? n : l_max) << ";n_s=" << n_s
       << ";r0=" << r0 << ";cone=" << (cone_background ? 1 : 0);
    if (substrate == Substrate::torus) {
        os << ";initial=" << initial.name() << ";seed=" << seed << ";band=" << band << ";trchi=" << trchi_amplitude
           << ";chihat=" << chihat_amplitude << ";zeta=" << zeta_amplitude << ";beta=" << beta_amplitude;
    }
    return os.str();
}

FoliationConfig minkowski_cone(double r0, Substrate substrate, int resolution, int n_s)
{
    if (!(r0 > 0.0)) throw DomainError("minkowski_cone requires r0 > 0");
    FoliationConfig cfg;
    cfg.substrate = substrate;
    cfg.r0 = r0;
    cfg.n_s = n_s;
    if (substrate == Substrate::torus) {
        cfg.n = resolution;
    } else {
        cfg.l_max = resolution;
    }
    return cfg;
}

const MetricField* FoliatedMetric::torus_slice(int i) const
{
    return dynamic_cast<const MetricField*>(m_slices[i].get());
}

const EigenBasis& FoliatedMetric::basis(int i, int rank) const
{
    if (rank < 0 || rank > 1) throw RankError("slice eigenbases exist for rank 0 and 1 only");
    if (i < 0 || i >= slices()) throw DomainError("slice index out of range");
    Cache& c = *m_cache[i][rank];
    std::call_once(c.once, [&] { c.basis = std::make_unique<EigenBasis>(eigendecompose(slice(i), rank)); });
    return *c.basis;
}

double FoliatedMetric::first_variation_residual() const
{
    if (substrate() == Substrate::sphere) return 0.0;
    const int n = slices();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) {
            const VectorXd d = derivative_at<VectorXd>(i, n, h(), [&](int q) { return torus_slice(q)->gamma()[j]; });
            const int col = (j == 0) ? 0 : (j == 1 ? 1 : 3);
            worst = std::max(worst, (d - 2.0 * m_chi[i].comps.col(col)).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

std::shared_ptr<const FoliatedMetric> build_foliation(const FoliationConfig& cfg)
{
    cfg.validate();
    std::shared_ptr<FoliatedMetric> fol(new FoliatedMetric());
    fol->m_cfg = cfg;
    const int n_s = cfg.n_s;
    const double h = 1.0 / (n_s - 1);
    auto s_of = [&](int i) { return i * h; };

    if (cfg.substrate == Substrate::sphere) {
        for (int i = 0; i < n_s; ++i) {
            const double R = cfg.cone_background ? cfg.r0 + s_of(i) : cfg.r0;
            auto sphere = std::make_shared<SpectralSphere>(cfg.l_max, R);
            const Index N = sphere->nodes();
            const double rate = cfg.cone_background ? 1.0 / R : 0.0;
            fol->m_trchi.push_back(VectorXd::Constant(N, 2.0 * rate));
            MixedField m{VectorXd::Constant(N, rate), VectorXd::Zero(N), VectorXd::Zero(N), VectorXd::Constant(N, rate)};
            fol->m_chi_mixed.push_back(m);
            fol->m_measured.push_back(m);
            VectorXd sin2(N);
            for (Index a = 0; a < N; ++a) sin2[a] = std::pow(std::sin(sphere->theta(a)), 2);
            // χ = ½∂_s(R²g̊) = R R′ g̊.
            const double rr = cfg.cone_background ? R : 0.0;
            fol->m_chi.push_back(symmetric_tensor(VectorXd::Constant(N, rr), VectorXd::Zero(N), rr * sin2));
            fol->m_chihat.push_back(TensorField(2, N));
            fol->m_zeta.push_back(TensorField(1, N));
            fol->m_beta.push_back(TensorField(1, N));
            fol->m_slices.push_back(std::move(sphere));
        }
    } else {
        const ChartGrid grid(cfg.n);
        TorusData data{cfg, grid, {}};
        const std::array<double, 8> amp{cfg.trchi_amplitude, cfg.chihat_amplitude, cfg.chihat_amplitude,
                                        cfg.chihat_amplitude, cfg.zeta_amplitude,   cfg.zeta_amplitude,
                                        cfg.beta_amplitude,   cfg.beta_amplitude};
        for (int j = 0; j < 8; ++j) data.pattern[j] = Pattern(amp[j], cfg.seed * 16 + j, cfg.band);

        std::array<VectorXd, 3> g;
        for (auto& c : g) c.resize(grid.nodes());
        for (int i2 = 0; i2 < grid.n; ++i2) {
            for (int i1 = 0; i1 < grid.n; ++i1) {
                const auto v = cfg.initial.evaluate(grid.coord(i1), grid.coord(i2));
                for (int j = 0; j < 3; ++j) g[j][grid.node(i1, i2)] = v[j];
            }
        }
        std::vector<std::array<VectorXd, 3>> gammas{g};
        for (int i = 0; i + 1 < n_s; ++i) {
            const double s = s_of(i);
            const auto k1 = data.rate(s, g);
            const auto k2 = data.rate(s + 0.5 * h, axpy(g, 0.5 * h, k1));
            const auto k3 = data.rate(s + 0.5 * h, axpy(g, 0.5 * h, k2));
            const auto k4 = data.rate(s + h, axpy(g, h, k3));
            for (int j = 0; j < 3; ++j) g[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            gammas.push_back(g);
        }
        for (int i = 0; i < n_s; ++i) {
            std::shared_ptr<MetricField> slice;
            try {
                slice = std::make_shared<MetricField>(grid, gammas[i]);
            } catch (const InvalidMetric& e) {
                throw InvalidMetric("foliation lost positive definiteness at slice " + std::to_string(i) + ": " + e.what(),
                                    e.node, i);
            }
            const double s = s_of(i);
            const VectorXd tr = data.trchi(s);
            const auto ch = data.chihat(s, gammas[i]);
            std::array<VectorXd, 3> chi;
            for (int j = 0; j < 3; ++j) chi[j] = (0.5 * tr.array() * gammas[i][j].array() + ch[j].array()).matrix();
            fol->m_trchi.push_back(tr);
            fol->m_chi_mixed.push_back(lower_upper(chi, slice->inverse()));
            fol->m_chi.push_back(symmetric_tensor(chi[0], chi[1], chi[2]));
            fol->m_chihat.push_back(symmetric_tensor(ch[0], ch[1], ch[2]));
            TensorField zeta(1, grid.nodes()), beta(1, grid.nodes());
            zeta.comps.col(0) = data.sample(4, s);
            zeta.comps.col(1) = data.sample(5, s);
            beta.comps.col(0) = data.sample(6, s);
            beta.comps.col(1) = data.sample(7, s);
            fol->m_zeta.push_back(std::move(zeta));
            fol->m_beta.push_back(std::move(beta));
            fol->m_slices.push_back(std::move(slice));
        }
        for (int i = 0; i < n_s; ++i) {
            std::array<VectorXd, 3> half;
            for (int j = 0; j < 3; ++j) {
                half[j] = 0.5 * derivative_at<VectorXd>(i, n_s, h, [&](int q) { return gammas[q][j]; });
            }
            fol->m_measured.push_back(lower_upper(half, fol->torus_slice(i)->inverse()));
        }
    }
    fol->m_cache.resize(n_s);
    for (auto& c : fol->m_cache) {
        c[0] = std::make_unique<FoliatedMetric::Cache>();
        c[1] = std::make_unique<FoliatedMetric::Cache>();
    }
    return fol;
}

FoliatedTensor::FoliatedTensor(std::shared_ptr<const FoliatedMetric> m, std::vector<TensorField> s)
    : metric(std::move(m))
    , slices(std::move(s))
{
    if (!metric) throw DomainError("foliated tensor without a foliation");
    if (int(slices.size()) != metric->slices()) throw DomainError("slice count differs from the foliation");
    for (const auto& t : slices) {
        if (t.rank != slices.front().rank) throw RankError("rank varies across slices");
        if (t.nodes() != metric->nodes()) throw DomainError("slice field has the wrong node count");
    }
}

FoliatedTensor FoliatedTensor::constant(std::shared_ptr<const FoliatedMetric> m, const TensorField& f0)
{
    std::vector<TensorField> s(m->slices(), f0);
    return FoliatedTensor(std::move(m), std::move(s));
}

FoliatedTensor& FoliatedTensor::operator+=(const FoliatedTensor& o)
{
    check_same_metric(*this, o);
    for (int i = 0; i < count(); ++i) slices[i] += o.slices[i];
    return *this;
}

FoliatedTensor& FoliatedTensor::operator*=(double c)
{
    for (auto& t : slices) t *= c;
    return *this;
}

FoliatedTensor operator+(FoliatedTensor a, const FoliatedTensor& b)
{
    a += b;
    return a;
}

FoliatedTensor operator-(FoliatedTensor a, const FoliatedTensor& b)
{
    check_same_metric(a, b);
    for (int i = 0; i < a.count(); ++i) a.slices[i] -= b.slices[i];
    return a;
}

FoliatedTensor operator*(double c, FoliatedTensor a)
{
    a *= c;
    return a;
}

TensorField contract_mixed(const MixedField& m, const TensorField& f)
{
    const int r = f.rank;
    TensorField out(r, f.nodes());
    for (int A = 0; A < f.components(); ++A) {
        for (int i = 0; i < r; ++i) {
            const int shift = r - 1 - i;
            const int a = (A >> shift) & 1;
            for (int c = 0; c < 2; ++c) {
                const int Ac = (A & ~(1 << shift)) | (c << shift);
                out.comps.col(A).array() += m[2 * a + c].array() * f.comps.col(Ac).array();
            }
        }
    }
    return out;
}

FoliatedTensor s_derivative(const FoliatedTensor& f)
{
    const int n = f.count();
    const double h = f.metric->h();
    std::vector<TensorField> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(derivative_at<TensorField>(i, n, h, [&](int j) { return f.slices[j]; }));
    return FoliatedTensor(f.metric, std::move(out));
}

FoliatedTensor nabla(const FoliatedTensor& f)
{
    std::vector<TensorField> out;
    out.reserve(f.count());
    for (int i = 0; i < f.count(); ++i) out.push_back(f.metric->slice(i).covariant_derivative(f.slices[i]));
    return FoliatedTensor(f.metric, std::move(out));
}

FoliatedTensor nabla_L(const FoliatedTensor& f)
{
    if (f.rank() > 2) throw RankError("nabla_L supports rank <= 2");
    FoliatedTensor out = s_derivative(f);
    for (int i = 0; i < f.count(); ++i) out.slices[i] -= contract_mixed(f.metric->chi_mixed(i), f.slices[i]);
    return out;
}

FoliatedTensor transport_solve(double k_weight, const FoliatedTensor& g, const TensorField& f0)
{
    if (g.rank() > 2) throw RankError("transport_solve supports rank <= 2");
    return integrate_transport(0.0, k_weight, g, f0);
}

std::vector<CommutatorRow> commutator_residual(const FoliatedTensor& f)
{
    const auto& fol = *f.metric;
    const int n = f.count();
    const double h = fol.h();
    const bool torus = fol.substrate() == Substrate::torus;
    std::vector<CommutatorRow> rows;

    auto chihat_mixed = [&](int i) {
        const TensorField& c = fol.chihat(i);
        return lower_upper({c.comps.col(0), c.comps.col(1), c.comps.col(3)}, fol.slice(i).inverse_metric());
    };

    if (f.rank() == 0) {
        const FoliatedTensor grad = nabla(f);
        const FoliatedTensor ds_grad = s_derivative(grad);
        const FoliatedTensor ds = s_derivative(f);
        const FoliatedTensor grad_ds = nabla(ds);
        CommutatorRow row{"scalar_gradient", n, fol.nodes(), 0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const Surface& S = fol.slice(i);
            const TensorField lhs =
                ds_grad.slices[i] - contract_mixed(fol.measured_chi_mixed(i), grad.slices[i]) - grad_ds.slices[i];
            const TensorField rhs = -1.0 * contract_mixed(fol.chi_mixed(i), grad.slices[i]);
            row.residual = std::max(row.residual, sup_norm(lhs - rhs, S));
            row.scale = std::max(row.scale, sup_norm(rhs, S));
        }
        rows.push_back(row);

        std::vector<TensorField> lap;
        for (int i = 0; i < n; ++i) lap.push_back(fol.slice(i).laplacian(f.slices[i]));
        CommutatorRow lrow{"scalar_laplacian", n, fol.nodes(), 0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const Surface& S = fol.slice(i);
            const TensorField ds_lap = derivative_at<TensorField>(i, n, h, [&](int j) { return lap[j]; });
            const TensorField lhs = ds_lap - S.laplacian(ds.slices[i]);
            TensorField rhs = TensorField::scalar(-fol.trchi(i).cwiseProduct(lap[i].values()));
            if (torus) {
                const TensorField hess = S.hessian(f.slices[i].values());
                const TensorField div_chihat = S.divergence(fol.chihat(i));
                rhs.comps.col(0) -= 2.0 * pointwise_inner(fol.chihat(i), hess, S);
                rhs.comps.col(0) -= 2.0 * pointwise_inner(div_chihat, grad.slices[i], S);
                const TensorField grad_tr = S.covariant_derivative(TensorField::scalar(fol.trchi(i)));
                const TensorField printed = grad_tr + 2.0 * contract_mixed(chihat_mixed(i), fol.zeta(i)) +
                                            scale(fol.zeta(i), fol.trchi(i));
                lrow.codazzi_defect = std::max(lrow.codazzi_defect, sup_norm(printed + 2.0 * div_chihat, S));
            }
            lrow.residual = std::max(lrow.residual, sup_norm(lhs - rhs, S));
            lrow.scale = std::max(lrow.scale, sup_norm(rhs, S));
        }
        rows.push_back(lrow);
        return rows;
    }
    if (f.rank() == 1) {
        if (!torus) throw RankError("the sphere substrate supports scalar fields only");
        std::vector<TensorField> div;
        for (int i = 0; i < n; ++i) div.push_back(fol.slice(i).divergence(f.slices[i]));
        FoliatedTensor nl = s_derivative(f);
        for (int i = 0; i < n; ++i) nl.slices[i] -= contract_mixed(fol.measured_chi_mixed(i), f.slices[i]);
        CommutatorRow row{"divergence", n, fol.nodes(), 0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const Surface& S = fol.slice(i);
            const TensorField ds_div = derivative_at<TensorField>(i, n, h, [&](int j) { return div[j]; });
            const TensorField lhs = ds_div - S.divergence(nl.slices[i]);
            const TensorField grad_tr = S.covariant_derivative(TensorField::scalar(fol.trchi(i)));
            const TensorField div_chihat = S.divergence(fol.chihat(i));
            const TensorField intrinsic = 0.5 * grad_tr - div_chihat;
            TensorField rhs = TensorField::scalar(-pointwise_inner(fol.chi(i), S.covariant_derivative(f.slices[i]), S));
            rhs.comps.col(0) += pointwise_inner(intrinsic, f.slices[i], S);
            const TensorField printed = 0.5 * scale(fol.zeta(i), fol.trchi(i)) +
                                        contract_mixed(chihat_mixed(i), fol.zeta(i)) - fol.beta(i);
            row.codazzi_defect = std::max(row.codazzi_defect, sup_norm(printed - intrinsic, S));
            row.residual = std::max(row.residual, sup_norm(lhs - rhs, S));
            row.scale = std::max(row.scale, sup_norm(rhs, S));
        }
        rows.push_back(row);
        return rows;
    }
    throw RankError("commutator_residual accepts scalars and 1-forms");
}

ReversePair reverse_pair(const FoliatedTensor& f)
{
    if (f.rank() != 1) throw RankError("reverse_pair requires a 1-form");
    const auto& fol = *f.metric;
    std::vector<TensorField> div;
    for (int i = 0; i < f.count(); ++i) div.push_back(fol.slice(i).divergence(f.slices[i]));
    ReversePair out;
    out.w = integrate_transport(0.0, 0.0, FoliatedTensor(f.metric, std::move(div)), TensorField(0, fol.nodes()));
    out.W = integrate_transport(1.0, 0.0, f, TensorField(1, fol.nodes()));
    std::vector<TensorField> d;
    for (int i = 0; i < f.count(); ++i) d.push_back(fol.slice(i).divergence(out.W.slices[i]) - out.w.slices[i]);
    const FoliatedTensor defect(f.metric, std::move(d));
    const double delta0 = fol.config().delta0_target;
    out.defect[1.0] = mixed_norm(defect, NormSpec::Lx_Lt(1.0, inf));
    out.defect[2.0] = mixed_norm(defect, NormSpec::Lx_Lt(2.0, inf));
    out.bound[1.0] = delta0 * mixed_norm(f, NormSpec::Lx_Lt(2.0, 1.0));
    out.bound[2.0] = delta0 * mixed_norm(f, NormSpec::Lx_Lt(inf, 1.0));
    return out;
}

double AssumptionReport::value(const std::string& name) const
{
    for (const auto& r : rows) {
        if (r.name == name) return r.value;
    }
    throw DomainError("assumption report has no row '" + name + "'");
}

AssumptionReport assumption_report(const FoliatedMetric& fol)
{
    const auto self = fol.shared_from_this();
    const int n = fol.slices();
    const double h = fol.h();
    const double target = fol.config().delta0_target;
    const bool torus = fol.substrate() == Substrate::torus;
    const Surface& S0 = fol.initial();
    const Index N = fol.nodes();
    AssumptionReport rep;
    rep.delta0_target = target;
    auto add = [&](const std::string& name, double value, double bound) {
        rep.rows.push_back({name, value, bound, value <= bound});
    };

    double a1_mean = 0.0, a1_osc = 0.0;
    for (int i = 0; i < n; ++i) {
        const Surface& S = fol.slice(i);
        const double mean = S.integrate(fol.trchi(i)) / S.area();
        a1_mean = std::max(a1_mean, fol.r(i) * std::abs(mean - 2.0 / fol.r(i)));
        a1_osc = std::max(a1_osc, fol.r(i) * (fol.trchi(i).array() - mean).abs().maxCoeff());
    }
    add("A1_mean", a1_mean, target);
    add("A1_oscillation", a1_osc, target);

    std::vector<VectorXd> tr(n);
    for (int i = 0; i < n; ++i) tr[i] = fol.trchi(i);
    const FoliatedTensor trchi = scalar_field(self, tr);
    add("A2_grad_trchi_Lx2_Ltinf", mixed_norm(nabla(trchi), NormSpec::Lx_Lt(2.0, inf)), target);
    if (torus) {
        std::vector<TensorField> ch, ze, be;
        for (int i = 0; i < n; ++i) {
            ch.push_back(fol.chihat(i));
            ze.push_back(fol.zeta(i));
            be.push_back(fol.beta(i));
        }
        const FoliatedTensor chihat(self, std::move(ch)), zeta(self, std::move(ze)), beta(self, std::move(be));
        add("A2_chihat_Lxinf_Lt2", mixed_norm(chihat, NormSpec::Lx_Lt(inf, 2.0)), target);
        add("A2_zeta_Lxinf_Lt2", mixed_norm(zeta, NormSpec::Lx_Lt(inf, 2.0)), target);
        add("A2_N1_chihat", n1(chihat), target);
        add("A2_N1_zeta", n1(zeta), target);
        add("K1_beta", mixed_norm(beta, NormSpec::Lt_Lx(2.0, 2.0)), target);
    } else {
        for (const char* name : {"A2_chihat_Lxinf_Lt2", "A2_zeta_Lxinf_Lt2", "A2_N1_chihat", "A2_N1_zeta", "K1_beta"}) {
            add(name, 0.0, target);
        }
    }

    // γ̊_s = (r(s)/r0)²γ̊ with γ̊ = δ on the torus and the round metric on the sphere.
    double g_sup = 0.0, ginv_sup = 0.0;
    VectorXd ws = VectorXd::Zero(N);
    const double r0 = fol.config().r0;
    if (torus) {
        std::array<std::vector<VectorXd>, 3> diff;
        for (int j = 0; j < 3; ++j) {
            for (int i = 0; i < n; ++i) {
                const double ref = (j == 1) ? 0.0 : std::pow(fol.r(i) / r0, 2);
                diff[j].push_back((fol.torus_slice(i)->gamma()[j].array() - ref).matrix());
            }
        }
        for (int i = 0; i < n; ++i) {
            const MetricField& M = *fol.torus_slice(i);
            VectorXd sq = VectorXd::Zero(N);
            for (int j = 0; j < 3; ++j) {
                const double mult = (j == 1) ? 2.0 : 1.0;
                const VectorXd ds = derivative_at<VectorXd>(i, n, h, [&](int q) { return diff[j][q]; });
                sq += mult * ds.cwiseAbs2();
                for (int axis = 0; axis < 2; ++axis) sq += mult * M.fd_partial(M.gamma()[j], axis).cwiseAbs2();
                g_sup = std::max(g_sup, M.gamma()[j].cwiseAbs().maxCoeff());
                ginv_sup = std::max(ginv_sup, M.inverse()[j].cwiseAbs().maxCoeff());
            }
            ws = ws.cwiseMax(sq.cwiseSqrt());
        }
    } else {
        std::vector<double> diff(n);
        for (int i = 0; i < n; ++i) {
            const double R = dynamic_cast<const SpectralSphere&>(fol.slice(i)).radius();
            diff[i] = R * R - fol.r(i) * fol.r(i);
        }
        const auto& sphere0 = dynamic_cast<const SpectralSphere&>(S0);
        for (int i = 0; i < n; ++i) {
            const double R = dynamic_cast<const SpectralSphere&>(fol.slice(i)).radius();
            const double ds = derivative_at<double>(i, n, h, [&](int q) { return diff[q]; });
            for (Index a = 0; a < N; ++a) {
                const double th = sphere0.theta(a);
                const double s2 = std::pow(std::sin(th), 2);
                const double dth = diff[i] * 2.0 * std::sin(th) * std::cos(th);
                ws[a] = std::max(ws[a], std::sqrt(ds * ds * (1.0 + s2 * s2) + dth * dth));
                g_sup = std::max(g_sup, R * R);
                ginv_sup = std::max(ginv_sup, 1.0 / (R * R * std::max(s2, 1e-300)));
            }
        }
    }
    add("WS_gamma_sup", g_sup, inf);
    add("WS_gamma_inverse_sup", ginv_sup, inf);
    add("WS_dgamma_Lx2_Ltinf", std::sqrt(S0.integrate(ws.cwiseAbs2())), target);

    std::vector<VectorXd> kdev(n), k2(n);
    for (int i = 0; i < n; ++i) {
        kdev[i] = (fol.slice(i).gauss_curvature().array() - 1.0 / (fol.r(i) * fol.r(i))).matrix();
        const EigenBasis& b = fol.basis(i, 0);
        const VectorXd mult = (1.0 + b.eigenvalues().array()).pow(-0.5 * k2_gamma).matrix();
        k2[i] = b.apply(TensorField::scalar(kdev[i]), mult).values();
    }
    add("K1_curvature", mixed_norm(scalar_field(self, kdev), NormSpec::Lt_Lx(2.0, 2.0)), target);
    add("K2_Lx2_Ltinf", mixed_norm(scalar_field(self, k2), NormSpec::Lx_Lt(2.0, inf)), target);

    double vmin = inf, vmax = 0.0;
    for (int i = 0; i < n; ++i) {
        VectorXd ratio;
        if (torus) {
            ratio = (fol.torus_slice(i)->sqrt_det().array() / fol.torus_slice(0)->sqrt_det().array()).matrix();
        } else {
            const double R = dynamic_cast<const SpectralSphere&>(fol.slice(i)).radius();
            const double R0 = dynamic_cast<const SpectralSphere&>(S0).radius();
            ratio = VectorXd::Constant(N, (R * R) / (R0 * R0));
        }
        vmin = std::min(vmin, ratio.minCoeff());
        vmax = std::max(vmax, ratio.maxCoeff());
    }
    rep.rows.push_back({"volume_ratio_min", vmin, 1.0, vmin >= 1.0 - 1e-12});
    add("volume_ratio_max", vmax, 2.0 * std::pow(1.5, 6));
    if (!torus) {
        double dev = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ra = std::sqrt(fol.slice(i).area() / (4.0 * std::numbers::pi));
            dev = std::max(dev, std::abs(ra - fol.r(i)) / fol.r(i));
        }
        add("r_area_deviation", dev, inf);
    }

    rep.compliant = true;
    for (const auto& r : rep.rows) {
        if (r.target == target) rep.delta0_measured = std::max(rep.delta0_measured, r.value);
        if (!r.pass) rep.compliant = false;
    }
    return rep;
}

} // namespace geolp
