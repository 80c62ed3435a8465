#pragma once

#include <geolp/error.hpp>

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace geolp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Doubly periodic square chart with coordinates (ω¹, ω²) ∈ [0, 2π)².
/// Node (i1, i2) is stored at i1 + n·i2.
struct ChartGrid
{
    explicit ChartGrid(int n);

    int n;
    double h;

    Index nodes() const { return Index(n) * n; }
    Index node(int i1, int i2) const;
    double coord(int i) const { return i * h; }
};

/// Covariant tensor of rank r sampled at the nodes of a surface.
/// Column c of `comps` is the component (a1..ar) whose bits read a1 first.
struct TensorField
{
    TensorField() = default;
    TensorField(int rank, Index nodes);

    static TensorField scalar(VectorXd values);
    static TensorField from_flat(int rank, const VectorXd& stacked);

    int rank = 0;
    MatrixXd comps;

    Index nodes() const { return comps.rows(); }
    int components() const { return 1 << rank; }
    VectorXd flat() const;
    VectorXd values() const;

    TensorField& operator+=(const TensorField& o);
    TensorField& operator-=(const TensorField& o);
    TensorField& operator*=(double c);
};

TensorField operator+(TensorField a, const TensorField& b);
TensorField operator-(TensorField a, const TensorField& b);
TensorField operator*(double c, TensorField a);

/// Multiplies every component of F by the scalar field f.
TensorField scale(const TensorField& f_tensor, const VectorXd& f);

/// A closed 2-surface carrying the discrete calculus used by every other module.
class Surface
{
public:
    virtual ~Surface() = default;

    virtual Index nodes() const = 0;
    /// Quadrature weights realizing dμ.
    virtual const VectorXd& weights() const = 0;
    /// Per-node inverse metric components (γ^11, γ^12, γ^22).
    virtual const std::array<VectorXd, 3>& inverse_metric() const = 0;
    /// Highest input rank accepted by covariant_derivative.
    virtual int max_rank() const = 0;

    virtual TensorField covariant_derivative(const TensorField& f) const = 0;
    virtual TensorField hessian(const VectorXd& f) const = 0;
    virtual TensorField divergence(const TensorField& f) const = 0;
    virtual TensorField laplacian(const TensorField& f) const = 0;
    virtual VectorXd gauss_curvature() const = 0;

    double integrate(const VectorXd& f) const { return weights().dot(f); }
    double area() const { return weights().sum(); }
};

/// Recipe for an analytic torus metric; evaluation at the nodes makes the same
/// recipe comparable across resolutions.
struct MetricRecipe
{
    enum class Kind { flat, conformal, perturbed };

    Kind kind = Kind::flat;
    /// φ amplitude (conformal) or ε (perturbed).
    double amplitude = 0.0;
    int mode1 = 1;
    int mode2 = 1;
    std::uint64_t seed = 0;
    int band = 2;

    static MetricRecipe flat();
    static MetricRecipe conformal(double amplitude, int mode1 = 1, int mode2 = 1);
    static MetricRecipe perturbed(double epsilon, std::uint64_t seed, int band = 2);

    /// γ_11, γ_12, γ_22 at (ω¹, ω²).
    std::array<double, 3> evaluate(double w1, double w2) const;
    std::string name() const;
};

/// Metric on the periodic chart with cached Christoffel symbols.
class MetricField : public Surface
{
public:
    using Components = std::array<VectorXd, 3>;

    /// Validates positive-definiteness; throws InvalidMetric naming the node.
    MetricField(ChartGrid grid, Components gamma);

    static MetricField from_function(
        int n,
        const std::function<std::array<double, 3>(double, double)>& gamma);

    const ChartGrid& grid() const { return m_grid; }
    const Components& gamma() const { return m_gamma; }
    const Components& inverse() const { return m_inv; }
    const VectorXd& sqrt_det() const { return m_sqrt_det; }
    /// Γ^c_{ab}, indexed [c][a][b].
    const VectorXd& christoffel(int c, int a, int b) const { return m_christoffel[c][a][b]; }
    /// 1-D Fourier differentiation matrix on n points.
    const MatrixXd& diff_matrix() const { return m_diff; }

    /// Spectral partial derivative of a nodal field along axis 0 (ω¹) or 1 (ω²).
    VectorXd partial(const VectorXd& f, int axis) const;
    /// Fourth-order centered difference along an axis.
    VectorXd fd_partial(const VectorXd& f, int axis) const;
    VectorXd fd_second(const VectorXd& f, int axis) const;

    Index nodes() const override { return m_grid.nodes(); }
    const VectorXd& weights() const override { return m_weights; }
    const std::array<VectorXd, 3>& inverse_metric() const override { return m_inv; }
    int max_rank() const override { return 3; }

    TensorField covariant_derivative(const TensorField& f) const override;
    TensorField hessian(const VectorXd& f) const override;
    TensorField divergence(const TensorField& f) const override;
    TensorField laplacian(const TensorField& f) const override;
    VectorXd gauss_curvature() const override { return m_curvature; }

private:
    ChartGrid m_grid;
    Components m_gamma;
    Components m_inv;
    VectorXd m_sqrt_det;
    VectorXd m_weights;
    MatrixXd m_diff;
    std::array<std::array<std::array<VectorXd, 2>, 2>, 2> m_christoffel;
    VectorXd m_curvature;
};

std::shared_ptr<const MetricField> build_torus_metric(int n, const MetricRecipe& recipe);

/// Round sphere of radius r with real spherical harmonics up to l_max, sampled
/// on a Gauss-Legendre (θ) × uniform (φ) grid. Scalar fields only.
class SpectralSphere : public Surface
{
public:
    SpectralSphere(int l_max, double r);

    int l_max() const { return m_lmax; }
    double radius() const { return m_r; }
    Index coefficients() const { return Index(m_lmax + 1) * (m_lmax + 1); }
    static Index coefficient_index(int l, int m) { return Index(l) * l + l + m; }
    int degree(Index j) const { return m_degree[j]; }
    int n_theta() const;
    int n_phi() const;
    double theta(Index node) const;
    double phi(Index node) const;

    /// Coefficients in the dμ-orthonormal basis Y_lm / r.
    VectorXd analyze(const VectorXd& f) const;
    VectorXd synthesize(const VectorXd& c) const;
    /// Samples of the orthonormal basis; columns indexed by coefficient_index.
    const MatrixXd& basis_values() const;
    /// Laplacian eigenvalue l(l+1)/r² of coefficient j (sign: −Δ).
    double eigenvalue(Index j) const;

    Index nodes() const override;
    const VectorXd& weights() const override { return m_weights; }
    const std::array<VectorXd, 3>& inverse_metric() const override { return m_inv; }
    int max_rank() const override { return 0; }

    TensorField covariant_derivative(const TensorField& f) const override;
    TensorField hessian(const VectorXd& f) const override;
    TensorField divergence(const TensorField& f) const override;
    TensorField laplacian(const TensorField& f) const override;
    VectorXd gauss_curvature() const override;

    struct Tables;

private:
    int m_lmax;
    double m_r;
    std::shared_ptr<const Tables> m_tables;
    std::vector<int> m_degree;
    VectorXd m_weights;
    std::array<VectorXd, 3> m_inv;
};

TensorField covariant_derivative(const TensorField& f, const Surface& s);
TensorField divergence(const TensorField& f, const Surface& s);
TensorField laplace_beltrami(const TensorField& f, const Surface& s);
VectorXd gauss_curvature(const Surface& s);
double integrate(const VectorXd& f, const Surface& s);

/// Raises every index of F with the given per-node inverse metric.
TensorField raise_indices(const TensorField& f, const std::array<VectorXd, 3>& inverse);

/// γ^{a1b1}···F_{a..}G_{b..} per node.
VectorXd pointwise_inner(const TensorField& f, const TensorField& g, const Surface& s);
VectorXd pointwise_norm(const TensorField& f, const Surface& s);
/// Contracts F and G (same rank) into a scalar field.
TensorField dot(const TensorField& f, const TensorField& g, const Surface& s);
/// (∫|F|^p dμ)^{1/p}; p = ∞ gives the nodal maximum of |F|.
double lebesgue_norm(const TensorField& f, double p, const Surface& s);
double l2_norm(const TensorField& f, const Surface& s);

struct BochnerResult
{
    double lhs;
    double rhs;
    double residual;
};

/// Both sides of the scalar (rank 0) or rank-1 Bochner identity.
BochnerResult bochner_residual(const TensorField& f, const Surface& s);

/// Writes "rank,n" followed by one row per node with every component.
void write_field_csv(std::ostream& os, const TensorField& f, int n);

} // namespace geolp
