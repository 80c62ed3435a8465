#include <doctest.h>

#include <geolp/surface.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace geolp;

namespace {

constexpr double pi = std::numbers::pi;

VectorXd sample_on(const MetricField& m, const std::function<double(double, double)>& f)
{
    const auto& g = m.grid();
    VectorXd v(g.nodes());
    for (int i2 = 0; i2 < g.n; ++i2) {
        for (int i1 = 0; i1 < g.n; ++i1) v[g.node(i1, i2)] = f(g.coord(i1), g.coord(i2));
    }
    return v;
}

double smooth_f(double x, double y)
{
    return std::sin(x) * std::cos(2.0 * y) + 0.5 * std::cos(3.0 * x + y) + 0.25 * std::sin(y);
}

// Least-squares slope of log(err) against log(1/n).
double fitted_rate(const std::vector<int>& ns, const std::vector<double>& errs)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double x = -std::log(double(ns[i]));
        const double y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

const std::vector<int> ladder{16, 24, 32};

} // namespace

TEST_CASE("chart grid is periodic")
{
    ChartGrid g(16);
    CHECK(g.node(-1, 0) == g.node(15, 0));
    CHECK(g.node(3, 16) == g.node(3, 0));
    CHECK(g.h == doctest::Approx(2.0 * pi / 16));
    CHECK_THROWS_AS(ChartGrid(7), DomainError);
    CHECK_THROWS_AS(ChartGrid(6), DomainError);
}

TEST_CASE("flat recipe gives the identity metric")
{
    const auto m = build_torus_metric(16, MetricRecipe::flat());
    CHECK(m->nodes() == 256);
    CHECK(m->gamma()[0].isApproxToConstant(1.0));
    CHECK(m->gamma()[1].isZero());
    CHECK(m->gamma()[2].isApproxToConstant(1.0));
    CHECK(m->gauss_curvature().cwiseAbs().maxCoeff() < 1e-14);
    CHECK(m->area() == doctest::Approx(4.0 * pi * pi).epsilon(1e-14));
}

TEST_CASE("conformal recipe: determinant and curvature against the closed form")
{
    const double a = 0.1;
    const auto m = build_torus_metric(32, MetricRecipe::conformal(a));
    const VectorXd phi = sample_on(*m, [&](double x, double y) { return a * std::sin(x) * std::sin(y); });
    const VectorXd det = m->sqrt_det().cwiseProduct(m->sqrt_det());
    CHECK((det - (4.0 * phi).array().exp().matrix()).cwiseAbs().maxCoeff() < 1e-13);

    // K = −e^{−2φ}Δ₀φ with Δ₀φ = −2φ.
    std::vector<double> errs;
    for (int n : ladder) {
        const auto mn = build_torus_metric(n, MetricRecipe::conformal(a));
        const VectorXd p = sample_on(*mn, [&](double x, double y) { return a * std::sin(x) * std::sin(y); });
        const VectorXd K = (2.0 * p.array() * (-2.0 * p.array()).exp()).matrix();
        errs.push_back((mn->gauss_curvature() - K).cwiseAbs().maxCoeff());
    }
    CHECK(errs.back() < 1e-4);
    CHECK(fitted_rate(ladder, errs) >= 1.9);
}

TEST_CASE("perturbed recipe respects its sup-distortion")
{
    const double eps = 0.05;
    const auto m = build_torus_metric(32, MetricRecipe::perturbed(eps, 7));
    double dist = 0.0;
    dist = std::max(dist, (m->gamma()[0].array() - 1.0).abs().maxCoeff());
    dist = std::max(dist, m->gamma()[1].cwiseAbs().maxCoeff());
    dist = std::max(dist, (m->gamma()[2].array() - 1.0).abs().maxCoeff());
    CHECK(dist <= eps);
    CHECK(dist > 0.0);
    const auto again = build_torus_metric(32, MetricRecipe::perturbed(eps, 7));
    CHECK(again->gamma()[1] == m->gamma()[1]);
}

TEST_CASE("non positive definite metric names the node")
{
    try {
        MetricField::from_function(8, [](double x, double y) {
            const bool bad = x > 3.0 && y > 3.0;
            return std::array<double, 3>{1.0, bad ? 2.0 : 0.0, 1.0};
        });
        FAIL("expected InvalidMetric");
    } catch (const InvalidMetric& e) {
        ChartGrid g(8);
        CHECK(e.node == g.node(4, 4));
    }
}

TEST_CASE("inverse metric and area density")
{
    const auto m = build_torus_metric(16, MetricRecipe::perturbed(0.2, 3));
    const auto& g = m->gamma();
    const auto& inv = m->inverse();
    for (Index i = 0; i < m->nodes(); ++i) {
        CHECK(std::abs(g[0][i] * inv[0][i] + g[1][i] * inv[1][i] - 1.0) < 1e-12);
        CHECK(std::abs(g[0][i] * inv[1][i] + g[1][i] * inv[2][i]) < 1e-12);
        CHECK(std::abs(g[1][i] * inv[1][i] + g[2][i] * inv[2][i] - 1.0) < 1e-12);
        CHECK(m->sqrt_det()[i] > 0.0);
    }
}

TEST_CASE("covariant derivative on the flat torus is the Fourier derivative")
{
    const auto m = build_torus_metric(16, MetricRecipe::flat());
    const VectorXd f = sample_on(*m, smooth_f);
    const TensorField df = m->covariant_derivative(TensorField::scalar(f));
    const VectorXd fx = sample_on(*m, [](double x, double y) {
        return std::cos(x) * std::cos(2.0 * y) - 1.5 * std::sin(3.0 * x + y);
    });
    const VectorXd fy = sample_on(*m, [](double x, double y) {
        return -2.0 * std::sin(x) * std::sin(2.0 * y) - 0.5 * std::sin(3.0 * x + y) +
               0.25 * std::cos(y);
    });
    CHECK((df.comps.col(0) - fx).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((df.comps.col(1) - fy).cwiseAbs().maxCoeff() < 1e-12);

    const TensorField dc = m->covariant_derivative(TensorField::scalar(VectorXd::Constant(256, 3.0)));
    CHECK(dc.comps.cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(m->covariant_derivative(TensorField(4, 256)), RankError);
}

TEST_CASE("metric compatibility converges at second order or better")
{
    std::vector<double> errs;
    for (int n : ladder) {
        const auto m = build_torus_metric(n, MetricRecipe::conformal(0.2, 1, 2));
        TensorField g(2, m->nodes());
        g.comps.col(0) = m->gamma()[0];
        g.comps.col(1) = m->gamma()[1];
        g.comps.col(2) = m->gamma()[1];
        g.comps.col(3) = m->gamma()[2];
        errs.push_back(m->covariant_derivative(g).comps.cwiseAbs().maxCoeff());
    }
    CHECK(errs[2] < errs[0]);
    CHECK(fitted_rate(ladder, errs) >= 1.9);
}

TEST_CASE("divergence and Laplacian")
{
    const auto m = build_torus_metric(24, MetricRecipe::perturbed(0.1, 11));
    const VectorXd f = sample_on(*m, smooth_f);
    const VectorXd g = sample_on(*m, [](double x, double y) { return std::cos(x - 2.0 * y) + std::sin(2.0 * x); });
    const TensorField F = TensorField::scalar(f);
    const TensorField G = TensorField::scalar(g);

    SUBCASE("div grad equals the Laplacian")
    {
        const TensorField a = m->divergence(m->covariant_derivative(F));
        const TensorField b = m->laplacian(F);
        CHECK((a.comps - b.comps).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_THROWS_AS(m->divergence(F), RankError);
    }
    SUBCASE("self-adjointness")
    {
        const double lhs = m->integrate(m->laplacian(F).values().cwiseProduct(g));
        const double rhs = m->integrate(f.cwiseProduct(m->laplacian(G).values()));
        CHECK(std::abs(lhs - rhs) <= 1e-8 * l2_norm(F, *m) * l2_norm(G, *m));
    }
    SUBCASE("integration by parts for a 1-form")
    {
        const TensorField W = m->covariant_derivative(TensorField::scalar(f.cwiseProduct(g)));
        const double lhs = m->integrate(m->divergence(W).values().cwiseProduct(g));
        const double rhs = -m->integrate(pointwise_inner(W, m->covariant_derivative(G), *m));
        CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(rhs));
    }
    SUBCASE("constants are harmonic")
    {
        const TensorField c = TensorField::scalar(VectorXd::Constant(m->nodes(), 2.0));
        CHECK(m->laplacian(c).comps.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("flat Laplacian of a Fourier mode")
{
    const auto m = build_torus_metric(16, MetricRecipe::flat());
    const VectorXd e = sample_on(*m, [](double x, double y) { return std::cos(2.0 * x + 3.0 * y); });
    const TensorField L = m->laplacian(TensorField::scalar(e));
    CHECK((L.values() + 13.0 * e).cwiseAbs().maxCoeff() < 1e-11);
    const TensorField F = m->covariant_derivative(TensorField::scalar(e));
    CHECK((m->divergence(F).values() + 13.0 * e).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("Gauss-Bonnet")
{
    SUBCASE("sphere integrates K to 4 pi")
    {
        for (double r : {1.0, 2.0}) {
            SpectralSphere s(16, r);
            CHECK(std::abs(s.integrate(s.gauss_curvature()) - 4.0 * pi) < 1e-10);
            CHECK(s.gauss_curvature()[0] == doctest::Approx(1.0 / (r * r)));
        }
    }
    SUBCASE("torus integrates K to zero under refinement")
    {
        std::vector<double> errs;
        for (int n : ladder) {
            const auto m = build_torus_metric(n, MetricRecipe::perturbed(0.3, 5));
            errs.push_back(std::abs(m->integrate(m->gauss_curvature())));
        }
        CHECK(errs.back() < 1e-3);
    }
}

TEST_CASE("Lebesgue norms")
{
    const auto m = build_torus_metric(16, MetricRecipe::conformal(0.1));
    const TensorField c = TensorField::scalar(VectorXd::Constant(m->nodes(), -3.0));
    for (double p : {1.0, 2.0, 4.0}) {
        CHECK(lebesgue_norm(c, p, *m) == doctest::Approx(3.0 * std::pow(m->area(), 1.0 / p)));
    }
    CHECK(lebesgue_norm(c, INFINITY, *m) == doctest::Approx(3.0));

    // |F| uses the metric contraction: on γ = e^{2φ}δ, |df| = e^{−φ}|∂f|.
    const VectorXd x = sample_on(*m, [](double a, double) { return std::sin(a); });
    TensorField F = m->covariant_derivative(TensorField::scalar(x));
    const VectorXd phi = sample_on(*m, [](double a, double b) { return 0.1 * std::sin(a) * std::sin(b); });
    const VectorXd expected = ((-phi).array().exp() * F.comps.col(0).array().abs()).matrix();
    CHECK((pointwise_norm(F, *m) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sphere spectral calculus")
{
    SpectralSphere s(16, 2.0);
    const MatrixXd& Y = s.basis_values();
    SUBCASE("orthonormal basis")
    {
        const MatrixXd G = (Y / s.radius()).transpose() * s.weights().asDiagonal() * (Y / s.radius());
        CHECK((G - MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("Laplacian eigenvalues")
    {
        const Index j = SpectralSphere::coefficient_index(5, -3);
        const VectorXd y = Y.col(j);
        const VectorXd Ly = s.laplacian(TensorField::scalar(y)).values();
        CHECK((Ly + 30.0 / 4.0 * y).cwiseAbs().maxCoeff() < 1e-11);
        CHECK(s.eigenvalue(j) == doctest::Approx(7.5));
    }
    SUBCASE("gradient matches the Laplacian through integration by parts")
    {
        const Index j = SpectralSphere::coefficient_index(4, 2);
        const TensorField y = TensorField::scalar(Y.col(j) / s.radius());
        const double grad2 = s.integrate(pointwise_inner(s.covariant_derivative(y), s.covariant_derivative(y), s));
        CHECK(grad2 == doctest::Approx(20.0 / 4.0).epsilon(1e-11));
    }
    SUBCASE("coordinate gradient of cos theta")
    {
        const VectorXd z = Y.col(SpectralSphere::coefficient_index(1, 0));
        const TensorField dz = s.covariant_derivative(TensorField::scalar(z));
        for (Index i = 0; i < s.nodes(); i += 37) {
            const double c = std::sqrt(3.0 / (4.0 * pi));
            CHECK(dz.comps(i, 0) == doctest::Approx(-c * std::sin(s.theta(i))).epsilon(1e-11));
            CHECK(std::abs(dz.comps(i, 1)) < 1e-12);
        }
    }
    SUBCASE("scalar-only substrate")
    {
        CHECK_THROWS_AS(s.divergence(TensorField(1, s.nodes())), RankError);
    }
}

TEST_CASE("Bochner identities")
{
    SUBCASE("flat torus is exact for band-limited f")
    {
        const auto m = build_torus_metric(16, MetricRecipe::flat());
        const auto r = bochner_residual(TensorField::scalar(sample_on(*m, smooth_f)), *m);
        CHECK(r.residual <= 1e-10);
        TensorField F = m->covariant_derivative(TensorField::scalar(sample_on(*m, smooth_f)));
        F.comps.col(0).array() += 0.3;
        CHECK(bochner_residual(F, *m).residual <= 1e-10);
    }
    SUBCASE("sphere eigenfunction against the closed form")
    {
        const double r = 1.5;
        SpectralSphere s(16, r);
        const int l = 6;
        const TensorField y = TensorField::scalar(s.basis_values().col(SpectralSphere::coefficient_index(l, 1)) / r);
        const double lam = l * (l + 1.0) / (r * r);
        const auto b = bochner_residual(y, s);
        CHECK(b.lhs == doctest::Approx(lam * lam - lam / (r * r)).epsilon(1e-10));
        CHECK(b.rhs == doctest::Approx(lam * lam - lam / (r * r)).epsilon(1e-10));
    }
    SUBCASE("conformal torus converges for scalars and gradients")
    {
        std::vector<double> scal, vec;
        for (int n : ladder) {
            const auto m = build_torus_metric(n, MetricRecipe::conformal(0.2, 1, 1));
            const VectorXd f = sample_on(*m, smooth_f);
            scal.push_back(bochner_residual(TensorField::scalar(f), *m).residual);
            const TensorField F = m->covariant_derivative(TensorField::scalar(f));
            vec.push_back(bochner_residual(F, *m).residual);
        }
        MESSAGE("scalar Bochner residuals " << scal[0] << " " << scal[1] << " " << scal[2]);
        MESSAGE("tensor Bochner residuals " << vec[0] << " " << vec[1] << " " << vec[2]);
        CHECK(fitted_rate(ladder, scal) >= 1.9);
        CHECK(fitted_rate(ladder, vec) >= 1.9);
    }
}

TEST_CASE("field CSV header")
{
    std::ostringstream os;
    write_field_csv(os, TensorField(1, 4), 2);
    CHECK(os.str().rfind("rank,n\n1,2\n", 0) == 0);
}
