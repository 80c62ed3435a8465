#include <geolp/surface.hpp>

#include "quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace geolp {

void detail::gauss_legendre(int n, VectorXd& x, VectorXd& w)
{
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
    x = es.eigenvalues();
    w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

struct SpectralSphere::Tables
{
    int n_theta = 0;
    int n_phi = 0;
    VectorXd theta;
    VectorXd unit_weights;
    // Values of the unit-sphere orthonormal real harmonics and their coordinate
    // derivatives; rows are nodes, columns coefficient indices.
    MatrixXd Y, Yt, Yp, Ytt, Ytp, Ypp;
};

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const SpectralSphere::Tables> build_tables(int lmax)
{
    auto t = std::make_shared<SpectralSphere::Tables>();
    t->n_theta = lmax + 1;
    t->n_phi = 2 * lmax + 2;
    VectorXd x, w;
    detail::gauss_legendre(t->n_theta, x, w);
    // Order nodes from north to south.
    t->theta.resize(t->n_theta);
    VectorXd wt(t->n_theta);
    for (int i = 0; i < t->n_theta; ++i) {
        t->theta[i] = std::acos(x[t->n_theta - 1 - i]);
        wt[i] = w[t->n_theta - 1 - i];
    }
    const Index nodes = Index(t->n_theta) * t->n_phi;
    const Index ncoef = Index(lmax + 1) * (lmax + 1);
    t->unit_weights.resize(nodes);
    for (auto* M : {&t->Y, &t->Yt, &t->Yp, &t->Ytt, &t->Ytp, &t->Ypp}) {
        M->setZero(nodes, ncoef);
    }

    const double dphi = 2.0 * pi / t->n_phi;
    MatrixXd P(lmax + 1, lmax + 1);
    MatrixXd dP(lmax + 1, lmax + 1);
    for (int it = 0; it < t->n_theta; ++it) {
        const double th = t->theta[it];
        const double c = std::cos(th);
        const double s = std::sin(th);
        P.setZero();
        dP.setZero();
        P(0, 0) = 1.0 / std::sqrt(4.0 * pi);
        for (int m = 1; m <= lmax; ++m) {
            P(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * P(m - 1, m - 1);
        }
        for (int m = 0; m < lmax; ++m) P(m + 1, m) = std::sqrt(2.0 * m + 3.0) * c * P(m, m);
        for (int m = 0; m <= lmax; ++m) {
            for (int l = m + 2; l <= lmax; ++l) {
                const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
                const double b = std::sqrt(
                    (double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
                P(l, m) = a * (c * P(l - 1, m) - b * P(l - 2, m));
            }
        }
        for (int m = 0; m <= lmax; ++m) {
            for (int l = m; l <= lmax; ++l) {
                const double prev = (l - 1 >= m) ? P(l - 1, m) : 0.0;
                const double f =
                    std::sqrt((double(l) * l - double(m) * m) * (2.0 * l + 1.0) / (2.0 * l - 1.0));
                dP(l, m) = (l * c * P(l, m) - (l > 0 ? f * prev : 0.0)) / s;
            }
        }
        for (int ip = 0; ip < t->n_phi; ++ip) {
            const Index node = ip + Index(t->n_phi) * it;
            const double ph = ip * dphi;
            t->unit_weights[node] = wt[it] * dphi;
            for (int l = 0; l <= lmax; ++l) {
                for (int m = -l; m <= l; ++m) {
                    const int am = std::abs(m);
                    const double norm = (m == 0) ? 1.0 : std::sqrt(2.0);
                    double ang, dang, ddang;
                    if (m >= 0) {
                        ang = std::cos(am * ph);
                        dang = -am * std::sin(am * ph);
                    } else {
                        ang = std::sin(am * ph);
                        dang = am * std::cos(am * ph);
                    }
                    ddang = -double(am) * am * ang;
                    const double p = norm * P(l, am);
                    const double dp = norm * dP(l, am);
                    const double ddp =
                        -(c / s) * dp - (l * (l + 1.0) - am * am / (s * s)) * p;
                    const Index j = SpectralSphere::coefficient_index(l, m);
                    t->Y(node, j) = p * ang;
                    t->Yt(node, j) = dp * ang;
                    t->Yp(node, j) = p * dang;
                    t->Ytt(node, j) = ddp * ang;
                    t->Ytp(node, j) = dp * dang;
                    t->Ypp(node, j) = p * ddang;
                }
            }
        }
    }
    return t;
}

std::shared_ptr<const SpectralSphere::Tables> tables_for(int lmax)
{
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const SpectralSphere::Tables>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[lmax];
    if (!slot) slot = build_tables(lmax);
    return slot;
}

} // namespace

SpectralSphere::SpectralSphere(int l_max, double r)
    : m_lmax(l_max)
    , m_r(r)
{
    if (l_max < 1) throw DomainError("sphere l_max must be >= 1");
    if (!(r > 0.0)) throw DomainError("sphere radius must be positive");
    m_tables = tables_for(l_max);
    m_degree.resize(coefficients());
    for (int l = 0; l <= l_max; ++l) {
        for (int m = -l; m <= l; ++m) m_degree[coefficient_index(l, m)] = l;
    }
    m_weights = m_tables->unit_weights * (r * r);
    const Index N = nodes();
    m_inv[0].resize(N);
    m_inv[1] = VectorXd::Zero(N);
    m_inv[2].resize(N);
    for (Index i = 0; i < N; ++i) {
        const double s = std::sin(theta(i));
        m_inv[0][i] = 1.0 / (r * r);
        m_inv[2][i] = 1.0 / (r * r * s * s);
    }
}

int SpectralSphere::n_theta() const
{
    return m_tables->n_theta;
}

int SpectralSphere::n_phi() const
{
    return m_tables->n_phi;
}

Index SpectralSphere::nodes() const
{
    return Index(m_tables->n_theta) * m_tables->n_phi;
}

double SpectralSphere::theta(Index node) const
{
    return m_tables->theta[node / m_tables->n_phi];
}

double SpectralSphere::phi(Index node) const
{
    return (node % m_tables->n_phi) * 2.0 * pi / m_tables->n_phi;
}

VectorXd SpectralSphere::analyze(const VectorXd& f) const
{
    return m_r * (m_tables->Y.transpose() * m_tables->unit_weights.cwiseProduct(f));
}

VectorXd SpectralSphere::synthesize(const VectorXd& c) const
{
    return (m_tables->Y * c) / m_r;
}

const MatrixXd& SpectralSphere::basis_values() const
{
    return m_tables->Y;
}

double SpectralSphere::eigenvalue(Index j) const
{
    const double l = m_degree[j];
    return l * (l + 1.0) / (m_r * m_r);
}

TensorField SpectralSphere::covariant_derivative(const TensorField& f) const
{
    if (f.rank != 0) throw RankError("the spectral sphere differentiates scalar fields only");
    const VectorXd c = analyze(f.values()) / m_r;
    TensorField out(1, nodes());
    out.comps.col(0) = m_tables->Yt * c;
    out.comps.col(1) = m_tables->Yp * c;
    return out;
}

TensorField SpectralSphere::hessian(const VectorXd& f) const
{
    const VectorXd c = analyze(f) / m_r;
    const VectorXd ft = m_tables->Yt * c;
    const VectorXd fp = m_tables->Yp * c;
    TensorField out(2, nodes());
    out.comps.col(0) = m_tables->Ytt * c;
    out.comps.col(1) = m_tables->Ytp * c;
    out.comps.col(3) = m_tables->Ypp * c;
    for (Index i = 0; i < nodes(); ++i) {
        const double th = theta(i);
        out.comps(i, 1) -= std::cos(th) / std::sin(th) * fp[i];
        out.comps(i, 3) += std::sin(th) * std::cos(th) * ft[i];
    }
    out.comps.col(2) = out.comps.col(1);
    return out;
}

TensorField SpectralSphere::divergence(const TensorField&) const
{
    throw RankError("the spectral sphere supports scalar fields only");
}

TensorField SpectralSphere::laplacian(const TensorField& f) const
{
    if (f.rank != 0) throw RankError("the spectral sphere supports scalar fields only");
    VectorXd c = analyze(f.values());
    for (Index j = 0; j < c.size(); ++j) c[j] *= -eigenvalue(j);
    return TensorField::scalar(synthesize(c));
}

VectorXd SpectralSphere::gauss_curvature() const
{
    return VectorXd::Constant(nodes(), 1.0 / (m_r * m_r));
}

} // namespace geolp
