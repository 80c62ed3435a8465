#include <doctest.h>

#include <geolp/lp.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace geolp;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// Independent evaluation of m(τ) = c·dⁿ/dτⁿ[τ^N e^{−τ}] through the Leibniz rule
/// written with the falling factorial.
double reference_kernel(double tau, int N, int n, double c)
{
    if (!(tau < 1e3)) return 0.0;
    double sum = 0.0;
    for (int j = 0; j <= n; ++j) {
        double binom = 1.0;
        for (int i = 0; i < j; ++i) binom = binom * (n - i) / (i + 1);
        double falling = 1.0;
        for (int i = 0; i < j; ++i) falling *= N - i;
        const double power = (tau > 0.0) ? std::exp((N - j) * std::log(tau) - tau) : 0.0;
        sum += binom * falling * power * (((n - j) % 2) ? -1.0 : 1.0);
    }
    return c * sum;
}

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

TensorField random_scalar(const Surface& s, const EigenBasis& b, unsigned seed, double max_lambda)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    VectorXd c = VectorXd::Zero(b.size());
    for (Index j = 0; j < b.size(); ++j) {
        if (b.eigenvalues()[j] <= max_lambda) c[j] = normal(rng) / (1.0 + b.eigenvalues()[j]);
    }
    (void)s;
    return b.synthesize(c);
}

} // namespace

TEST_CASE("kernel construction")
{
    CHECK_THROWS_AS(make_kernel(4, 5), DomainError);
    CHECK_THROWS_AS(make_kernel(8, 1), DomainError);
    const LPKernel k = make_kernel();
    CHECK(k.N() == 8);
    CHECK(k.n_der() == 4);
    CHECK(symbol(k, 0.0) == 0.0);
    CHECK(k.peak() == doctest::Approx(0.8));
    CHECK(symbol(k, 0.8) == doctest::Approx(1.0).epsilon(1e-14));
    // Closed form: c·N! = (9/4)^9 (5/4)^... fixed by m̂(4/5) = 1.
    const double expected_scale = std::pow(1.8, 9) / std::pow(0.8, 4);
    CHECK(k.scale() == doctest::Approx(expected_scale).epsilon(1e-13));
    for (double mu : {0.1, 0.5, 0.79, 0.81, 2.0, 10.0}) CHECK(symbol(k, mu) < 1.0);
    // Decay μ^{n−N−1} at infinity.
    CHECK(symbol(k, 1e6) * std::pow(1e6, 5) == doctest::Approx(k.scale()).epsilon(1e-5));
}

TEST_CASE("kernel moments vanish by independent quadrature")
{
    for (auto [N, n] : {std::pair{8, 4}, std::pair{10, 4}, std::pair{6, 2}}) {
        const LPKernel k = make_kernel(N, n);
        const double c = k.scale() / factorial(N);
        boost::math::quadrature::exp_sinh<double> integrator;
        for (int j = 0; j <= n - 1; ++j) {
            auto g = [&](double t) { return (t < 1e3) ? std::pow(t, j) * reference_kernel(t, N, n, c) : 0.0; };
            const double moment = integrator.integrate(g, 0.0, inf, 1e-15);
            CHECK(std::abs(moment) <= 1e-9);
        }
        // The n-th moment does not vanish: (−1)^n n! m̂^{(n)}(0) ≠ 0.
        auto g = [&](double t) { return (t < 1e3) ? std::pow(t, n) * reference_kernel(t, N, n, c) : 0.0; };
        CHECK(std::abs(integrator.integrate(g, 0.0, inf, 1e-15)) > 1e-3);
        for (double t : {0.0, 0.3, 2.0, 7.5, 20.0}) {
            CHECK(k.time_kernel(t) == doctest::Approx(reference_kernel(t, N, n, c)).epsilon(1e-12));
        }
        for (double t : {1e3, 1e100, 1e300, inf}) CHECK(k.time_kernel(t) == 0.0);
    }
}

TEST_CASE("Laplace transform of the time kernel matches the symbol")
{
    const LPKernel k = make_kernel();
    const double c = k.scale() / factorial(8);
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double mu : {0.25, 1.0, 3.0}) {
        auto g = [&](double t) { return (t < 1e3) ? reference_kernel(t, 8, 4, c) * std::exp(-mu * t) : 0.0; };
        CHECK(std::abs(integrator.integrate(g, 0.0, inf, 1e-15) - symbol(k, mu)) <= 1e-8);
    }
}

TEST_CASE("closed-form suprema")
{
    const LPKernel k = make_kernel();
    double best_mu = 0.0, best_over = 0.0;
    for (int i = 1; i < 200000; ++i) {
        const double mu = i * 1e-4;
        best_mu = std::max(best_mu, mu * symbol(k, mu));
        best_over = std::max(best_over, symbol(k, mu) / mu);
    }
    CHECK(k.sup_mu_symbol() == doctest::Approx(best_mu).epsilon(1e-6));
    CHECK(k.sup_symbol_over_mu() == doctest::Approx(best_over).epsilon(1e-6));
}

TEST_CASE("normalized family is a partition of unity")
{
    const LPFamily fam(make_kernel(), -6, 10, LPMode::normalized);
    for (double lam : {1e-3, 0.5, 1.0, 7.0, 100.0, 3000.0}) {
        double sum = fam.low_symbol(lam) * fam.low_symbol(lam);
        double full = 0.0;
        for (int k = 0; k <= 10; ++k) sum += fam.symbol(k, lam) * fam.symbol(k, lam);
        for (int k = -6; k <= 10; ++k) full += fam.symbol(k, lam) * fam.symbol(k, lam);
        CHECK(std::abs(sum - 1.0) < 1e-12);
        CHECK(std::abs(full - 1.0) < 1e-12);
    }
    CHECK(fam.low_symbol(0.0) == 1.0);
    CHECK(fam.symbol(3, 0.0) == 0.0);
    CHECK_THROWS_AS(fam.symbol(11, 1.0), DomainError);

    const LPFamily raw(make_kernel(), -6, 10, LPMode::raw);
    for (double lam : {0.5, 20.0, 900.0}) {
        for (int k = -6; k <= 10; ++k) {
            CHECK(raw.symbol(k, lam) >= 0.0);
            CHECK(raw.symbol(k, lam) <= 1.0);
        }
    }
}

TEST_CASE("projections on a curved torus")
{
    const auto m = build_torus_metric(16, MetricRecipe::perturbed(0.1, 2));
    const EigenBasis b = eigendecompose(*m, 0);
    const LPFamily raw(make_kernel(), -4, 6, LPMode::raw);
    const LPFamily norm(make_kernel(), -4, 6, LPMode::normalized);
    const TensorField F = random_scalar(*m, b, 1, 60.0);
    const TensorField G = random_scalar(*m, b, 2, 60.0);
    const double nF = l2_norm(F, *m);

    SUBCASE("eigenfunctions are multiplied by the shifted symbol")
    {
        for (Index j : {5, 40, 120}) {
            const TensorField v = b.eigenvector(j);
            const double lam = b.eigenvalues()[j];
            for (int k : {-1, 0, 2}) {
                const TensorField Pv = project(v, k, raw, b);
                const double expect = symbol(raw.kernel(), std::ldexp(lam, -2 * k));
                CHECK((Pv.comps - expect * v.comps).cwiseAbs().maxCoeff() < 1e-12);
            }
        }
    }
    SUBCASE("constants are annihilated")
    {
        const TensorField one = TensorField::scalar(VectorXd::Ones(m->nodes()));
        for (int k = -4; k <= 6; ++k) CHECK(project(one, k, raw, b).comps.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("selfadjointness")
    {
        for (int k = 0; k <= 4; ++k) {
            for (const LPFamily* fam : {&raw, &norm}) {
                const double a = b.inner(project(F, k, *fam, b), G);
                const double c = b.inner(F, project(G, k, *fam, b));
                CHECK(std::abs(a - c) <= 1e-10 * nF * l2_norm(G, *m));
            }
        }
    }
    SUBCASE("normalized reconstruction")
    {
        TensorField acc = low_part(low_part(F, norm, b), norm, b);
        for (int k = 0; k <= 6; ++k) acc += project(project(F, k, norm, b), k, norm, b);
        CHECK(l2_norm(acc - F, *m) <= 1e-10 * nF);
    }
    SUBCASE("empty band")
    {
        CHECK(project_band(F, 3, 2, raw, b).comps.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single bands contract in L2 in normalized mode")
    {
        for (int k = -4; k <= 6; ++k) CHECK(l2_norm(project(F, k, norm, b), *m) <= nF * (1.0 + 1e-12));
    }
}

TEST_CASE("flat torus frequency localization")
{
    const int n = 32;
    const auto m = build_torus_metric(n, MetricRecipe::flat());
    const EigenBasis b = eigendecompose(*m, 0);
    const LPFamily raw(make_kernel(), -8, 10, LPMode::raw);
    // |n|² = 16 = 2^{2·2}.
    VectorXd e(m->nodes());
    for (int i2 = 0; i2 < n; ++i2) {
        for (int i1 = 0; i1 < n; ++i1) e[m->grid().node(i1, i2)] = std::cos(4.0 * m->grid().coord(i1));
    }
    const TensorField F = TensorField::scalar(e);
    const double nF = l2_norm(F, *m);
    for (int k = -8; k <= 10; ++k) {
        const double ratio = l2_norm(project(F, k, raw, b), *m) / nF;
        CHECK(ratio == doctest::Approx(symbol(raw.kernel(), std::ldexp(16.0, -2 * k))).epsilon(1e-10));
        const double tail = std::max(symbol(raw.kernel(), std::ldexp(1.0, 12)), symbol(raw.kernel(), std::ldexp(1.0, -12)));
        if (std::abs(k - 2) >= 6) CHECK(ratio <= tail * (1.0 + 1e-9));
    }
}

TEST_CASE("quadrature agrees with the spectral projection")
{
    SpectralSphere s(24, 1.0);
    const EigenBasis b = eigendecompose(s, 0);
    const LPKernel kernel = make_kernel();
    const LPFamily raw(kernel, -6, 8, LPMode::raw);
    // 50 eigenfunctions with λ = l(l+1) from 2 to 600, about 8 octaves.
    int count = 0;
    double worst = 0.0;
    for (int l = 1; l <= 24 && count < 50; ++l) {
        for (int mm : {-l, 0, l}) {
            if (count >= 50) break;
            const TensorField Y = b.eigenvector(SpectralSphere::coefficient_index(l, mm));
            for (int k : {-1, 0, 2, 4}) {
                const TensorField q = project_quadrature(Y, k, kernel, b);
                const TensorField p = project(Y, k, raw, b);
                worst = std::max(worst, l2_norm(q - p, s) / l2_norm(Y, s));
            }
            ++count;
        }
    }
    CHECK(count == 50);
    CHECK(worst <= 1e-6);
    MESSAGE("worst quadrature disagreement " << worst);

    // k = 0 at λ = 2 (closest to 1 on the unit sphere) against m̂(λ).
    const TensorField Y = b.eigenvector(SpectralSphere::coefficient_index(1, 0));
    const TensorField q = project_quadrature(Y, 0, kernel, b);
    CHECK((q.comps - symbol(kernel, 2.0) * Y.comps).cwiseAbs().maxCoeff() < 1e-8);

    const TensorField zero = TensorField::scalar(VectorXd::Zero(s.nodes()));
    CHECK(project_quadrature(zero, 1, kernel, b).comps.cwiseAbs().maxCoeff() == 0.0);

    QuadratureConfig coarse;
    coarse.nodes = 12;
    coarse.verify = true;
    CHECK_THROWS_AS(project_quadrature(Y, 0, kernel, b, coarse), DomainError);
}

TEST_CASE("property report on the sphere")
{
    SpectralSphere s(16, 1.0);
    const EigenBasis b = eigendecompose(s, 0);
    std::vector<TensorField> samples;
    for (unsigned i = 0; i < 4; ++i) samples.push_back(random_scalar(s, b, 10 + i, 300.0));
    const LPFamily raw(make_kernel(), -6, 8, LPMode::raw);
    LPReportConfig cfg;
    cfg.k_hi = 4;
    const LPPropertyReport rep = property_report(raw, s, b, nullptr, samples, cfg);

    // Raw finite band: ‖ΔP_kF‖ ≤ sup μ m̂(μ)·2^{2k}‖F‖ and ‖P_kF‖ ≤ sup m̂(μ)/μ·2^{-2k}‖ΔF‖.
    double fb = 0.0, fbi = 0.0;
    for (const auto& r : rep.rows) {
        if (r.property_id == "finite_band_laplacian" && r.p == 2.0) fb = std::max(fb, r.ratio);
        if (r.property_id == "finite_band_laplacian_inverse" && r.p == 2.0) fbi = std::max(fbi, r.ratio);
    }
    CHECK(fb <= raw.kernel().sup_mu_symbol() + 1e-9);
    CHECK(fbi <= raw.kernel().sup_symbol_over_mu() + 1e-9);
    CHECK(rep.constants.at("reproducing") < 1e-12);
    CHECK(rep.constants.at("bessel") < 2.0);
    CHECK(rep.orthogonality_exponent.at(2.0) >= 1.9);
    CHECK(rep.curvature_l2 == doctest::Approx(std::sqrt(4.0 * M_PI)).epsilon(1e-10));
    for (const auto& [id, c] : rep.constants) CHECK_MESSAGE(std::isfinite(c), id);
}

TEST_CASE("normalized property report")
{
    const auto m = build_torus_metric(12, MetricRecipe::conformal(0.1));
    const EigenBasis b0 = eigendecompose(*m, 0);
    const EigenBasis b1 = eigendecompose(*m, 1);
    std::vector<TensorField> samples{random_scalar(*m, b0, 3, 30.0)};
    samples.push_back(m->covariant_derivative(samples[0]));
    const LPFamily fam(make_kernel(), -4, 6, LPMode::normalized);
    LPReportConfig cfg;
    cfg.k_hi = 3;
    const LPPropertyReport rep = property_report(fam, *m, b0, &b1, samples, cfg);
    CHECK(rep.reconstruction_residual <= 1e-10);
    CHECK(rep.constants.at("bessel") <= 1.0 + 1e-10);
    CHECK(rep.constants.count("finite_band_gradient_dual") == 1);
    CHECK(rep.constants.count("strong_scalar_bernstein") == 1);
}
