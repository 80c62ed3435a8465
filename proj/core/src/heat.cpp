#include <geolp/heat.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <lapacke.h>

#include <cmath>
#include <limits>
#include <ostream>

namespace geolp {

namespace {

constexpr double zero_eigenvalue = 1e-8;

/// Symmetric eigensolve; returns ascending eigenvalues and overwrites B with eigenvectors.
VectorXd symmetric_eigensolve(MatrixXd& B)
{
    const lapack_int n = static_cast<lapack_int>(B.rows());
    VectorXd w(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, B.data(), n, w.data());
    if (info != 0) {
        throw Error("symmetric eigensolver failed to converge (info " + std::to_string(info) + ")");
    }
    return w;
}

EigenBasis torus_basis(const MetricField& m, int rank)
{
    const Index N = m.nodes();
    if (rank == 0 && N > 4096) throw BudgetError("rank-0 eigensolve is limited to n^2 <= 4096");
    if (rank == 1 && N > 2048) throw BudgetError("rank-1 eigensolve is limited to n^2 <= 2048");
    const int comps = 1 << rank;
    const Index dof = N * comps;

    MatrixXd A(dof, dof);
    VectorXd unit = VectorXd::Zero(dof);
    for (Index j = 0; j < dof; ++j) {
        unit[j] = 1.0;
        A.col(j) = -m.laplacian(TensorField::from_flat(rank, unit)).flat();
        unit[j] = 0.0;
    }

    // Per-node factor L with L·Lᵀ equal to the mass block w·γ^{-1} (rank 1) or w (rank 0).
    const auto& inv = m.inverse_metric();
    const VectorXd& w = m.weights();
    std::vector<Eigen::Matrix2d> L(N), Linv(N);
    for (Index i = 0; i < N; ++i) {
        Eigen::Matrix2d M;
        if (rank == 0) {
            M << w[i], 0.0, 0.0, 1.0;
        } else {
            M << w[i] * inv[0][i], w[i] * inv[1][i], w[i] * inv[1][i], w[i] * inv[2][i];
        }
        L[i] = M.llt().matrixL();
        Linv[i] = L[i].inverse();
    }

    // C = Lᵀ A L^{-T}, then symmetrize.
    if (rank == 0) {
        for (Index i = 0; i < N; ++i) A.row(i) *= L[i](0, 0);
        for (Index j = 0; j < N; ++j) A.col(j) *= Linv[j](0, 0);
    } else {
        for (Index i = 0; i < N; ++i) {
            const Eigen::Matrix2d Lt = L[i].transpose();
            for (Index c = 0; c < dof; ++c) {
                const double a0 = A(i, c);
                const double a1 = A(i + N, c);
                A(i, c) = Lt(0, 0) * a0 + Lt(0, 1) * a1;
                A(i + N, c) = Lt(1, 0) * a0 + Lt(1, 1) * a1;
            }
        }
        for (Index j = 0; j < N; ++j) {
            const Eigen::Matrix2d R = Linv[j].transpose();
            for (Index r = 0; r < dof; ++r) {
                const double a0 = A(r, j);
                const double a1 = A(r, j + N);
                A(r, j) = a0 * R(0, 0) + a1 * R(1, 0);
                A(r, j + N) = a0 * R(0, 1) + a1 * R(1, 1);
            }
        }
    }
    MatrixXd B = 0.5 * (A + A.transpose());
    A.resize(0, 0);

    VectorXd lambda = symmetric_eigensolve(B);
    // v = L^{-T} u
    if (rank == 0) {
        for (Index i = 0; i < N; ++i) B.row(i) *= Linv[i](0, 0);
    } else {
        for (Index i = 0; i < N; ++i) {
            const Eigen::Matrix2d R = Linv[i].transpose();
            for (Index c = 0; c < dof; ++c) {
                const double u0 = B(i, c);
                const double u1 = B(i + N, c);
                B(i, c) = R(0, 0) * u0 + R(0, 1) * u1;
                B(i + N, c) = R(1, 0) * u0 + R(1, 1) * u1;
            }
        }
    }
    return EigenBasis(rank, std::move(lambda), std::move(B), w, inv, true);
}

EigenBasis sphere_basis(const SpectralSphere& s)
{
    VectorXd lambda(s.coefficients());
    for (Index j = 0; j < lambda.size(); ++j) lambda[j] = s.eigenvalue(j);
    return EigenBasis(
        0, std::move(lambda), s.basis_values() / s.radius(), s.weights(), s.inverse_metric(), false);
}

double norm_p(const TensorField& f, double p, const Surface& s)
{
    return lebesgue_norm(f, p, s);
}

} // namespace

EigenBasis::EigenBasis(
    int rank,
    VectorXd eigenvalues,
    MatrixXd vectors,
    VectorXd weights,
    std::array<VectorXd, 3> inverse,
    bool complete)
    : m_rank(rank)
    , m_eigenvalues(std::move(eigenvalues))
    , m_vectors(std::move(vectors))
    , m_weights(std::move(weights))
    , m_inverse(std::move(inverse))
    , m_complete(complete)
{
    for (Index j = 0; j < m_eigenvalues.size(); ++j) {
        double& l = m_eigenvalues[j];
        if (std::abs(l) <= zero_eigenvalue || l < 0.0) l = 0.0;
    }
}

VectorXd EigenBasis::mass(const TensorField& f) const
{
    TensorField up = raise_indices(f, m_inverse);
    for (int A = 0; A < up.components(); ++A) up.comps.col(A).array() *= m_weights.array();
    return up.flat();
}

VectorXd EigenBasis::coefficients(const TensorField& f) const
{
    if (f.rank != m_rank) throw RankError("field rank does not match the eigenbasis");
    return m_vectors.transpose() * mass(f);
}

TensorField EigenBasis::synthesize(const VectorXd& c) const
{
    return TensorField::from_flat(m_rank, m_vectors * c);
}

TensorField EigenBasis::apply(const TensorField& f, const VectorXd& multiplier) const
{
    return synthesize(multiplier.cwiseProduct(coefficients(f)));
}

TensorField EigenBasis::eigenvector(Index j) const
{
    return TensorField::from_flat(m_rank, m_vectors.col(j));
}

double EigenBasis::inner(const TensorField& f, const TensorField& g) const
{
    return g.flat().dot(mass(f));
}

EigenBasis eigendecompose(const Surface& s, int rank)
{
    if (rank < 0 || rank > 1) throw RankError("eigendecompose supports rank 0 and 1");
    if (const auto* m = dynamic_cast<const MetricField*>(&s)) return torus_basis(*m, rank);
    if (const auto* sph = dynamic_cast<const SpectralSphere*>(&s)) {
        if (rank != 0) throw RankError("the spectral sphere supports scalar fields only");
        return sphere_basis(*sph);
    }
    throw DomainError("eigendecompose: unsupported surface type");
}

TensorField evolve(const TensorField& f, double tau, const EigenBasis& basis)
{
    if (tau < 0.0) throw DomainError("heat time must be nonnegative");
    if (tau == 0.0) return f;
    const VectorXd m = (-tau * basis.eigenvalues().array()).exp().matrix();
    return basis.apply(f, m);
}

TensorField spectral_laplacian(const TensorField& f, const EigenBasis& basis)
{
    return basis.apply(f, -basis.eigenvalues());
}

void SmoothingReport::write_csv(std::ostream& os) const
{
    os << "estimate_id,p,q,tau,lhs,bound_shape,ratio\n";
    os.precision(17);
    for (const auto& r : rows) {
        os << r.estimate_id << ',' << r.p << ',' << r.q << ',' << r.tau << ',' << r.lhs << ','
           << r.bound_shape << ',' << r.ratio << '\n';
    }
}

SmoothingReport smoothing_report(
    const Surface& s,
    const EigenBasis& rank0,
    const EigenBasis* rank1,
    const std::vector<TensorField>& samples,
    const std::vector<double>& taus)
{
    const double inf = std::numeric_limits<double>::infinity();
    SmoothingReport report;
    report.scalar_only = {"strong_scalar_heat", "strong_scalar_heat_dual"};

    auto add = [&](const std::string& id, double p, double q, double tau, double lhs,
                   double bound, int sample, int rank) {
        if (!(bound > 0.0)) return;
        const double ratio = lhs / bound;
        report.rows.push_back({id, p, q, tau, lhs, bound, ratio, sample, rank});
        auto [it, inserted] = report.constants.emplace(id, ratio);
        if (!inserted) it->second = std::max(it->second, ratio);
    };

    for (std::size_t si = 0; si < samples.size(); ++si) {
        const TensorField& f = samples[si];
        const int r = f.rank;
        const EigenBasis* basis = (r == 0) ? &rank0 : rank1;
        if (!basis) throw RankError("smoothing_report needs a rank-1 basis for rank-1 samples");
        const int sample = static_cast<int>(si);
        const double f2 = norm_p(f, 2.0, s);
        const double f1 = norm_p(f, 1.0, s);
        const double grad_f = norm_p(s.covariant_derivative(f), 2.0, s);
        const VectorXd coef = basis->coefficients(f);
        const VectorXd& lam = basis->eigenvalues();

        for (double tau : taus) {
            const VectorXd decay = (-tau * lam.array()).exp().matrix();
            const TensorField u = basis->synthesize(decay.cwiseProduct(coef));
            for (double p : {1.0, 2.0, 4.0, inf}) {
                add("lpheat1", p, p, tau, norm_p(u, p, s), norm_p(f, p, s), sample, r);
            }
            const double grad_u = norm_p(s.covariant_derivative(u), 2.0, s);
            add("l2heat2_nab", 2, 2, tau, grad_u, grad_f, sample, r);
            add("l2heat2", 2, 2, tau, grad_u, std::pow(tau, -0.5) * f2, sample, r);
            if (r == 0 && rank1) {
                const TensorField ugrad = evolve(s.covariant_derivative(f), tau, *rank1);
                add("l2heat_grad", 2, 2, tau, norm_p(ugrad, 2.0, s), std::pow(tau, -0.5) * f2,
                    sample, r);
            }
            const VectorXd lap = lam.cwiseProduct(decay).cwiseProduct(coef);
            add("l2heat3", 2, 2, tau, norm_p(basis->synthesize(lap), 2.0, s), f2 / tau, sample, r);
            for (double p : {4.0, 6.0}) {
                add("heat_gn", p, 2, tau, norm_p(u, p, s),
                    (1.0 + std::pow(tau, -(1.0 - 2.0 / p))) * f2, sample, r);
            }
            for (double q : {4.0 / 3.0, 1.8}) {
                add("dual_heat_gn", 2, q, tau, norm_p(u, 2.0, s),
                    (1.0 + std::pow(tau, 1.0 - 2.0 / q)) * norm_p(f, q, s), sample, r);
            }
            if (r == 0) {
                add("strong_scalar_heat", inf, 2, tau, norm_p(u, inf, s), (1.0 + 1.0 / tau) * f2,
                    sample, r);
                add("strong_scalar_heat_dual", 2, 1, tau, norm_p(u, 2.0, s),
                    (1.0 + std::pow(tau, -0.5)) * f1, sample, r);
            }
        }
    }
    return report;
}

} // namespace geolp
