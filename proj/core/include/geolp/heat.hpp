#pragma once

#include <geolp/surface.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace geolp {

/// Spectral data of the (symmetrized) Laplacian acting on rank-r fields.
/// Eigenvectors are orthonormal in the dμ-weighted, metric-contracted inner product.
class EigenBasis
{
public:
    EigenBasis() = default;
    EigenBasis(
        int rank,
        VectorXd eigenvalues,
        MatrixXd vectors,
        VectorXd weights,
        std::array<VectorXd, 3> inverse,
        bool complete);

    int rank() const { return m_rank; }
    /// Ascending; values with |λ| ≤ 1e-8 are stored as exactly 0.
    const VectorXd& eigenvalues() const { return m_eigenvalues; }
    const MatrixXd& vectors() const { return m_vectors; }
    Index size() const { return m_eigenvalues.size(); }
    /// False when the basis spans a proper subspace of the nodal fields (sphere).
    bool complete() const { return m_complete; }

    VectorXd coefficients(const TensorField& f) const;
    TensorField synthesize(const VectorXd& c) const;
    /// Σ_j m_j ⟨F, v_j⟩ v_j.
    TensorField apply(const TensorField& f, const VectorXd& multiplier) const;
    TensorField eigenvector(Index j) const;
    double inner(const TensorField& f, const TensorField& g) const;

private:
    VectorXd mass(const TensorField& f) const;

    int m_rank = 0;
    VectorXd m_eigenvalues;
    MatrixXd m_vectors;
    VectorXd m_weights;
    std::array<VectorXd, 3> m_inverse;
    bool m_complete = true;
};

/// Full spectrum of the discrete Laplacian on rank-0 or rank-1 fields.
/// Torus budget: n² ≤ 4096 for rank 0 and n² ≤ 2048 for rank 1.
EigenBasis eigendecompose(const Surface& s, int rank = 0);

/// U(τ)F = Σ_j e^{−λ_j τ}⟨F, v_j⟩v_j.
TensorField evolve(const TensorField& f, double tau, const EigenBasis& basis);

/// −Δ applied through the basis.
TensorField spectral_laplacian(const TensorField& f, const EigenBasis& basis);

struct SmoothingRow
{
    std::string estimate_id;
    double p;
    double q;
    double tau;
    double lhs;
    double bound_shape;
    double ratio;
    int sample;
    int rank;
};

struct SmoothingReport
{
    std::vector<SmoothingRow> rows;
    /// Max ratio per estimate id.
    std::map<std::string, double> constants;
    /// Estimates valid for scalars only.
    std::vector<std::string> scalar_only;

    void write_csv(std::ostream& os) const;
};

/// Empirical constants of the heat-flow smoothing estimates over samples and τ.
/// `rank1` enables U(τ)∇f for scalar samples and is required for rank-1 samples.
SmoothingReport smoothing_report(
    const Surface& s,
    const EigenBasis& rank0,
    const EigenBasis* rank1,
    const std::vector<TensorField>& samples,
    const std::vector<double>& taus);

} // namespace geolp
