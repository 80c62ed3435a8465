#include <geolp/surface.hpp>

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace geolp {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

/// Component slot of the symmetric pair (a, b) in the (11, 12, 22) layout.
int sym(int a, int b)
{
    return a + b;
}

int digit(int multi, int i, int rank)
{
    return (multi >> (rank - 1 - i)) & 1;
}

int with_digit(int multi, int i, int rank, int value)
{
    const int shift = rank - 1 - i;
    return (multi & ~(1 << shift)) | (value << shift);
}

/// Raises index i of F with the inverse metric.
TensorField raise(const TensorField& f, int i, const std::array<VectorXd, 3>& inv)
{
    TensorField out(f.rank, f.nodes());
    for (int A = 0; A < f.components(); ++A) {
        const int a = digit(A, i, f.rank);
        for (int c = 0; c < 2; ++c) {
            out.comps.col(A).array() +=
                inv[sym(a, c)].array() * f.comps.col(with_digit(A, i, f.rank, c)).array();
        }
    }
    return out;
}

} // namespace

ChartGrid::ChartGrid(int n)
    : n(n)
    , h(two_pi / n)
{
    if (n < 8 || n % 2 != 0) {
        throw DomainError("chart size must be even and at least 8, got " + std::to_string(n));
    }
}

Index ChartGrid::node(int i1, int i2) const
{
    i1 = ((i1 % n) + n) % n;
    i2 = ((i2 % n) + n) % n;
    return i1 + Index(n) * i2;
}

TensorField::TensorField(int rank, Index nodes)
    : rank(rank)
    , comps(MatrixXd::Zero(nodes, 1 << rank))
{}

TensorField TensorField::scalar(VectorXd values)
{
    TensorField f;
    f.rank = 0;
    f.comps = std::move(values);
    return f;
}

TensorField TensorField::from_flat(int rank, const VectorXd& stacked)
{
    const Index n = stacked.size() >> rank;
    TensorField f(rank, n);
    f.comps = Eigen::Map<const MatrixXd>(stacked.data(), n, 1 << rank);
    return f;
}

VectorXd TensorField::flat() const
{
    return Eigen::Map<const VectorXd>(comps.data(), comps.size());
}

VectorXd TensorField::values() const
{
    if (rank != 0) throw RankError("values() requires a scalar field");
    return comps.col(0);
}

TensorField& TensorField::operator+=(const TensorField& o)
{
    comps += o.comps;
    return *this;
}

TensorField& TensorField::operator-=(const TensorField& o)
{
    comps -= o.comps;
    return *this;
}

TensorField& TensorField::operator*=(double c)
{
    comps *= c;
    return *this;
}

TensorField operator+(TensorField a, const TensorField& b)
{
    return a += b;
}

TensorField operator-(TensorField a, const TensorField& b)
{
    return a -= b;
}

TensorField operator*(double c, TensorField a)
{
    return a *= c;
}

TensorField scale(const TensorField& f_tensor, const VectorXd& f)
{
    TensorField out = f_tensor;
    for (int A = 0; A < out.components(); ++A) out.comps.col(A).array() *= f.array();
    return out;
}

MetricRecipe MetricRecipe::flat()
{
    return {};
}

MetricRecipe MetricRecipe::conformal(double amplitude, int mode1, int mode2)
{
    MetricRecipe r;
    r.kind = Kind::conformal;
    r.amplitude = amplitude;
    r.mode1 = mode1;
    r.mode2 = mode2;
    return r;
}

MetricRecipe MetricRecipe::perturbed(double epsilon, std::uint64_t seed, int band)
{
    MetricRecipe r;
    r.kind = Kind::perturbed;
    r.amplitude = epsilon;
    r.seed = seed;
    r.band = band;
    return r;
}

std::array<double, 3> MetricRecipe::evaluate(double w1, double w2) const
{
    switch (kind) {
    case Kind::flat: return {1.0, 0.0, 1.0};
    case Kind::conformal: {
        const double phi = amplitude * std::sin(mode1 * w1) * std::sin(mode2 * w2);
        const double e = std::exp(2.0 * phi);
        return {e, 0.0, e};
    }
    case Kind::perturbed: {
        // Coefficients are normalized by their absolute sum, so sup|γ_ab − δ_ab| ≤ ε
        // holds on every grid.
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        std::array<double, 3> g{1.0, 0.0, 1.0};
        for (int comp = 0; comp < 3; ++comp) {
            double value = 0.0;
            double total = 0.0;
            for (int m1 = -band; m1 <= band; ++m1) {
                for (int m2 = 0; m2 <= band; ++m2) {
                    if (m2 == 0 && m1 <= 0) continue;
                    const double a = normal(rng);
                    const double b = normal(rng);
                    const double arg = m1 * w1 + m2 * w2;
                    value += a * std::cos(arg) + b * std::sin(arg);
                    total += std::abs(a) + std::abs(b);
                }
            }
            g[comp] += amplitude * value / total;
        }
        return g;
    }
    }
    return {1.0, 0.0, 1.0};
}

std::string MetricRecipe::name() const
{
    switch (kind) {
    case Kind::flat: return "flat";
    case Kind::conformal: return "conformal";
    case Kind::perturbed: return "perturbed";
    }
    return "flat";
}

MetricField::MetricField(ChartGrid grid, Components gamma)
    : m_grid(grid)
    , m_gamma(std::move(gamma))
{
    const Index N = m_grid.nodes();
    const int n = m_grid.n;
    const double h = m_grid.h;
    for (const auto& g : m_gamma) {
        if (g.size() != N) throw DomainError("metric component size does not match the grid");
    }

    for (auto& v : m_inv) v.resize(N);
    m_sqrt_det.resize(N);
    for (Index i = 0; i < N; ++i) {
        const double det = m_gamma[0][i] * m_gamma[2][i] - m_gamma[1][i] * m_gamma[1][i];
        if (!(m_gamma[0][i] > 0.0) || !(det > 0.0)) {
            throw InvalidMetric(
                "metric is not positive definite at node " + std::to_string(i),
                static_cast<long>(i));
        }
        m_inv[0][i] = m_gamma[2][i] / det;
        m_inv[1][i] = -m_gamma[1][i] / det;
        m_inv[2][i] = m_gamma[0][i] / det;
        m_sqrt_det[i] = std::sqrt(det);
    }
    m_weights = m_sqrt_det * (h * h);

    m_diff = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int d = i - j;
            const double sign = (d % 2 == 0) ? 1.0 : -1.0;
            m_diff(i, j) = 0.5 * sign / std::tan(d * h / 2.0);
        }
    }

    std::array<std::array<VectorXd, 2>, 3> dg;
    for (int c = 0; c < 3; ++c) {
        for (int axis = 0; axis < 2; ++axis) dg[c][axis] = fd_partial(m_gamma[c], axis);
    }
    for (int c = 0; c < 2; ++c) {
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                VectorXd gam = VectorXd::Zero(N);
                for (int d = 0; d < 2; ++d) {
                    const VectorXd lowered =
                        dg[sym(d, b)][a] + dg[sym(d, a)][b] - dg[sym(a, b)][d];
                    gam.array() += 0.5 * m_inv[sym(c, d)].array() * lowered.array();
                }
                m_christoffel[c][a][b] = std::move(gam);
            }
        }
    }

    // Brioschi formula with u = ω¹, v = ω².
    const VectorXd& E = m_gamma[0];
    const VectorXd& F = m_gamma[1];
    const VectorXd& G = m_gamma[2];
    const VectorXd& Eu = dg[0][0];
    const VectorXd& Ev = dg[0][1];
    const VectorXd& Fu = dg[1][0];
    const VectorXd& Fv = dg[1][1];
    const VectorXd& Gu = dg[2][0];
    const VectorXd& Gv = dg[2][1];
    const VectorXd Evv = fd_second(E, 1);
    const VectorXd Guu = fd_second(G, 0);
    const VectorXd Fuv = fd_partial(Fu, 1);
    m_curvature.resize(N);
    for (Index i = 0; i < N; ++i) {
        Eigen::Matrix3d A;
        A << -0.5 * Evv[i] + Fuv[i] - 0.5 * Guu[i], 0.5 * Eu[i], Fu[i] - 0.5 * Ev[i],
            Fv[i] - 0.5 * Gu[i], E[i], F[i],
            0.5 * Gv[i], F[i], G[i];
        Eigen::Matrix3d B;
        B << 0.0, 0.5 * Ev[i], 0.5 * Gu[i],
            0.5 * Ev[i], E[i], F[i],
            0.5 * Gu[i], F[i], G[i];
        const double det = E[i] * G[i] - F[i] * F[i];
        m_curvature[i] = (A.determinant() - B.determinant()) / (det * det);
    }
}

MetricField MetricField::from_function(
    int n,
    const std::function<std::array<double, 3>(double, double)>& gamma)
{
    ChartGrid grid(n);
    Components comps;
    for (auto& c : comps) c.resize(grid.nodes());
    for (int i2 = 0; i2 < n; ++i2) {
        for (int i1 = 0; i1 < n; ++i1) {
            const auto g = gamma(grid.coord(i1), grid.coord(i2));
            const Index k = grid.node(i1, i2);
            for (int c = 0; c < 3; ++c) comps[c][k] = g[c];
        }
    }
    return MetricField(grid, std::move(comps));
}

std::shared_ptr<const MetricField> build_torus_metric(int n, const MetricRecipe& recipe)
{
    return std::make_shared<const MetricField>(MetricField::from_function(
        n, [&recipe](double w1, double w2) { return recipe.evaluate(w1, w2); }));
}

VectorXd MetricField::partial(const VectorXd& f, int axis) const
{
    const int n = m_grid.n;
    Eigen::Map<const MatrixXd> M(f.data(), n, n);
    MatrixXd out = (axis == 0) ? MatrixXd(m_diff * M) : MatrixXd(M * m_diff.transpose());
    return Eigen::Map<const VectorXd>(out.data(), out.size());
}

VectorXd MetricField::fd_partial(const VectorXd& f, int axis) const
{
    const int n = m_grid.n;
    VectorXd out(f.size());
    for (int i2 = 0; i2 < n; ++i2) {
        for (int i1 = 0; i1 < n; ++i1) {
            auto at = [&](int d) {
                return axis == 0 ? f[m_grid.node(i1 + d, i2)] : f[m_grid.node(i1, i2 + d)];
            };
            out[m_grid.node(i1, i2)] =
                (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * m_grid.h);
        }
    }
    return out;
}

VectorXd MetricField::fd_second(const VectorXd& f, int axis) const
{
    const int n = m_grid.n;
    const double h2 = m_grid.h * m_grid.h;
    VectorXd out(f.size());
    for (int i2 = 0; i2 < n; ++i2) {
        for (int i1 = 0; i1 < n; ++i1) {
            auto at = [&](int d) {
                return axis == 0 ? f[m_grid.node(i1 + d, i2)] : f[m_grid.node(i1, i2 + d)];
            };
            out[m_grid.node(i1, i2)] =
                (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h2);
        }
    }
    return out;
}

TensorField MetricField::covariant_derivative(const TensorField& f) const
{
    const int r = f.rank;
    if (r > max_rank()) {
        throw RankError("covariant_derivative supports rank <= 3, got " + std::to_string(r));
    }
    TensorField out(r + 1, f.nodes());
    for (int b = 0; b < 2; ++b) {
        for (int A = 0; A < f.components(); ++A) {
            auto col = out.comps.col((b << r) | A);
            col = partial(f.comps.col(A), b);
            for (int i = 0; i < r; ++i) {
                const int a = digit(A, i, r);
                for (int c = 0; c < 2; ++c) {
                    col.array() -= m_christoffel[c][b][a].array() *
                                   f.comps.col(with_digit(A, i, r, c)).array();
                }
            }
        }
    }
    return out;
}

TensorField MetricField::hessian(const VectorXd& f) const
{
    return covariant_derivative(covariant_derivative(TensorField::scalar(f)));
}

TensorField MetricField::divergence(const TensorField& f) const
{
    const int r = f.rank;
    if (r < 1) throw RankError("divergence requires rank >= 1");
    if (r > 4) throw RankError("divergence supports rank <= 4");
    const int q = r - 1;
    const Index N = f.nodes();
    TensorField out(q, N);
    for (int A = 0; A < (1 << q); ++A) {
        // T^b_A = γ^{bc} F_{cA}
        std::array<VectorXd, 2> raised;
        for (int b = 0; b < 2; ++b) {
            raised[b] = VectorXd::Zero(N);
            for (int c = 0; c < 2; ++c) {
                raised[b].array() += m_inv[sym(b, c)].array() * f.comps.col((c << q) | A).array();
            }
        }
        VectorXd value = VectorXd::Zero(N);
        for (int b = 0; b < 2; ++b) {
            const VectorXd density = m_sqrt_det.cwiseProduct(raised[b]);
            value += partial(density, b);
        }
        value.array() /= m_sqrt_det.array();
        out.comps.col(A) = value;
    }
    // Christoffel corrections on the remaining free indices.
    for (int A = 0; A < (1 << q); ++A) {
        for (int i = 0; i < q; ++i) {
            const int a = digit(A, i, q);
            for (int d = 0; d < 2; ++d) {
                const int Ad = with_digit(A, i, q, d);
                for (int b = 0; b < 2; ++b) {
                    for (int c = 0; c < 2; ++c) {
                        out.comps.col(A).array() -= m_christoffel[d][b][a].array() *
                                                    m_inv[sym(b, c)].array() *
                                                    f.comps.col((c << q) | Ad).array();
                    }
                }
            }
        }
    }
    return out;
}

TensorField MetricField::laplacian(const TensorField& f) const
{
    if (f.rank > 2) throw RankError("laplace_beltrami supports rank <= 2");
    return divergence(covariant_derivative(f));
}

TensorField covariant_derivative(const TensorField& f, const Surface& s)
{
    return s.covariant_derivative(f);
}

TensorField divergence(const TensorField& f, const Surface& s)
{
    return s.divergence(f);
}

TensorField laplace_beltrami(const TensorField& f, const Surface& s)
{
    return s.laplacian(f);
}

VectorXd gauss_curvature(const Surface& s)
{
    return s.gauss_curvature();
}

double integrate(const VectorXd& f, const Surface& s)
{
    return s.integrate(f);
}

TensorField raise_indices(const TensorField& f, const std::array<VectorXd, 3>& inverse)
{
    TensorField up = f;
    for (int i = 0; i < f.rank; ++i) up = raise(up, i, inverse);
    return up;
}

VectorXd pointwise_inner(const TensorField& f, const TensorField& g, const Surface& s)
{
    if (f.rank != g.rank) throw RankError("pointwise_inner requires equal ranks");
    const TensorField up = raise_indices(g, s.inverse_metric());
    VectorXd out = VectorXd::Zero(f.nodes());
    for (int A = 0; A < f.components(); ++A) {
        out.array() += f.comps.col(A).array() * up.comps.col(A).array();
    }
    return out;
}

VectorXd pointwise_norm(const TensorField& f, const Surface& s)
{
    return pointwise_inner(f, f, s).cwiseMax(0.0).cwiseSqrt();
}

TensorField dot(const TensorField& f, const TensorField& g, const Surface& s)
{
    return TensorField::scalar(pointwise_inner(f, g, s));
}

double lebesgue_norm(const TensorField& f, double p, const Surface& s)
{
    const VectorXd a = pointwise_norm(f, s);
    if (std::isinf(p)) return a.size() ? a.maxCoeff() : 0.0;
    if (p == 2.0) return std::sqrt(s.integrate(a.cwiseProduct(a)));
    return std::pow(s.integrate(a.array().pow(p).matrix()), 1.0 / p);
}

double l2_norm(const TensorField& f, const Surface& s)
{
    return lebesgue_norm(f, 2.0, s);
}

BochnerResult bochner_residual(const TensorField& f, const Surface& s)
{
    const VectorXd K = s.gauss_curvature();
    auto sq = [&](const TensorField& t) { return pointwise_inner(t, t, s); };
    BochnerResult out{};
    if (f.rank == 0) {
        const TensorField grad = s.covariant_derivative(f);
        out.lhs = s.integrate(sq(s.hessian(f.values())));
        out.rhs = s.integrate(sq(s.laplacian(f))) - s.integrate(K.cwiseProduct(sq(grad)));
    } else if (f.rank == 1) {
        const TensorField grad = s.covariant_derivative(f);
        const TensorField grad2 = s.covariant_derivative(grad);
        const TensorField lap = s.divergence(grad);
        const TensorField div = s.divergence(f);
        const VectorXd curv_term = 2.0 * sq(grad) - sq(div);
        out.lhs = s.integrate(sq(grad2));
        out.rhs = s.integrate(sq(lap)) - s.integrate(K.cwiseProduct(curv_term)) +
                  s.integrate(K.cwiseProduct(K).cwiseProduct(sq(f)));
    } else {
        throw RankError("bochner_residual supports rank 0 or 1");
    }
    const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
    out.residual = scale > 0.0 ? std::abs(out.lhs - out.rhs) / scale : 0.0;
    return out;
}

void write_field_csv(std::ostream& os, const TensorField& f, int n)
{
    os << "rank,n\n" << f.rank << ',' << n << '\n';
    os.precision(17);
    for (Index i = 0; i < f.nodes(); ++i) {
        for (int A = 0; A < f.components(); ++A) {
            if (A) os << ',';
            os << f.comps(i, A);
        }
        os << '\n';
    }
}

} // namespace geolp
