#include <doctest.h>

#include <geolp/norms.hpp>

#include <cmath>
#include <random>

using namespace geolp;

namespace {

/// γ(s) = γ(0) on every slice.
std::shared_ptr<const FoliatedMetric> product(int n = 12, int n_s = 9, MetricRecipe initial = MetricRecipe::flat())
{
    FoliationConfig c = minkowski_cone(1.0, Substrate::torus, n, n_s);
    c.cone_background = false;
    c.initial = initial;
    return build_foliation(c);
}

TensorField band_limited(const ChartGrid& g, std::mt19937_64& rng, int band)
{
    std::normal_distribution<double> normal;
    VectorXd v = VectorXd::Zero(g.nodes());
    for (int k1 = -band; k1 <= band; ++k1) {
        for (int k2 = -band; k2 <= band; ++k2) {
            const double a = normal(rng), ph = normal(rng);
            for (int b = 0; b < g.n; ++b) {
                for (int c = 0; c < g.n; ++c) v[g.node(c, b)] += a * std::cos(k1 * g.coord(c) + k2 * g.coord(b) + ph);
            }
        }
    }
    return TensorField::scalar(v);
}

FoliatedTensor random_foliated(const std::shared_ptr<const FoliatedMetric>& fol, unsigned seed)
{
    std::mt19937_64 rng(seed);
    const auto& g = fol->torus_slice(0)->grid();
    const TensorField a = band_limited(g, rng, 3), b = band_limited(g, rng, 3);
    std::vector<TensorField> s;
    for (int i = 0; i < fol->slices(); ++i) {
        const double t = fol->s(i);
        s.push_back(std::cos(3.0 * t) * a + (t * t) * b);
    }
    return FoliatedTensor(fol, std::move(s));
}

} // namespace

TEST_CASE("mixed norms")
{
    const auto fol = product();
    const Index N = fol->nodes();
    const double area = fol->initial().area();

    SUBCASE("constant field on the unit interval")
    {
        const FoliatedTensor c = FoliatedTensor::constant(fol, TensorField::scalar(VectorXd::Constant(N, -3.0)));
        CHECK(mixed_norm(c, NormSpec::Lx_Lt(INFINITY, 2.0)) == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(mixed_norm(c, NormSpec::Lt_Lx(2.0, 2.0)) == doctest::Approx(3.0 * std::sqrt(area)).epsilon(1e-14));
    }
    SUBCASE("separable fields factorize")
    {
        std::mt19937_64 rng(4);
        const TensorField b = band_limited(fol->torus_slice(0)->grid(), rng, 2);
        std::vector<TensorField> s;
        VectorXd a(fol->slices());
        for (int i = 0; i < fol->slices(); ++i) {
            a[i] = 1.0 + std::sin(2.0 * fol->s(i));
            s.push_back(a[i] * b);
        }
        const FoliatedTensor F(fol, s);
        // Trapezoid L_t^2 of a, independently.
        double at = 0.0;
        for (int i = 0; i < fol->slices(); ++i) at += (i == 0 || i == fol->slices() - 1 ? 0.5 : 1.0) * fol->h() * a[i] * a[i];
        at = std::sqrt(at);
        for (double p : {1.0, 2.0, 4.0}) {
            const double bx = lebesgue_norm(b, p, fol->initial());
            CHECK(mixed_norm(F, NormSpec::Lt_Lx(2.0, p)) == doctest::Approx(at * bx).epsilon(1e-12));
            CHECK(mixed_norm(F, NormSpec::Lx_Lt(p, 2.0)) == doctest::Approx(at * bx).epsilon(1e-12));
        }
        CHECK(mixed_norm(F, NormSpec::Lx_Lt(2.0, INFINITY)) ==
              doctest::Approx(a.maxCoeff() * l2_norm(b, fol->initial())).epsilon(1e-12));
    }
    SUBCASE("L_t^inf L_x^2 <= L_x^2 L_t^inf and homogeneity")
    {
        for (unsigned seed = 0; seed < 100; ++seed) {
            const FoliatedTensor F = random_foliated(fol, seed);
            const double lhs = mixed_norm(F, NormSpec::Lt_Lx(INFINITY, 2.0));
            CHECK(lhs <= mixed_norm(F, NormSpec::Lx_Lt(2.0, INFINITY)) * (1.0 + 1e-12));
            if (seed < 5) CHECK(mixed_norm(-2.5 * F, NormSpec::Lt_Lx(INFINITY, 2.0)) == doctest::Approx(2.5 * lhs));
        }
    }
    SUBCASE("exponent validation and names")
    {
        const FoliatedTensor c = FoliatedTensor::constant(fol, TensorField(0, N));
        CHECK_THROWS_AS(mixed_norm(c, NormSpec::Lt_Lx(0.5, 2.0)), DomainError);
        CHECK(NormSpec::Lx_Lt(INFINITY, 2.0).name() == "Lx_inf_Lt_2");
        CHECK(NormSpec::Lt_Lx(2.0, 1.8).name() == "Lt_2_Lx_1.8");
    }
}

TEST_CASE("foliation L2 and product L2 are comparable")
{
    FoliationConfig c;
    c.n = 12;
    c.n_s = 9;
    c.r0 = 20.0;
    c.trchi_amplitude = c.chihat_amplitude = 1e-3;
    const auto fol = build_foliation(c);
    for (unsigned seed = 0; seed < 10; ++seed) {
        const FoliatedTensor F = random_foliated(fol, seed);
        const double ratio = foliation_l2(F) / mixed_norm(F, NormSpec::Lt_Lx(2.0, 2.0));
        CHECK(ratio >= 1.0);
        CHECK(ratio <= std::sqrt(2.0 * std::pow(1.5, 6)));
    }
}

TEST_CASE("surface Besov norm")
{
    const auto m = build_torus_metric(12, MetricRecipe::conformal(0.1));
    const EigenBasis b = eigendecompose(*m, 0);
    const LPFamily fam(make_kernel(), -4, 6, LPMode::normalized);
    CHECK(besov_surface(TensorField(0, m->nodes()), 1.0, fam, b) == 0.0);
    const TensorField c = TensorField::scalar(VectorXd::Constant(m->nodes(), 2.0));
    CHECK(besov_surface(c, 0.5, fam, b) == doctest::Approx(2.0 * std::sqrt(m->area())).epsilon(1e-12));

    // Eigenfunction with λ near 2^{2k0}: B^a = ‖F‖·(s_{<0}(λ) + Σ_k 2^{ak}s_k(λ)).
    Index j = 0;
    while (b.eigenvalues()[j] < 16.0) ++j;
    const TensorField v = b.eigenvector(j);
    const double lam = b.eigenvalues()[j];
    for (double a : {0.0, 0.5, 1.0}) {
        double expect = fam.low_symbol(lam);
        for (int k = 0; k <= 6; ++k) expect += std::exp2(a * k) * fam.symbol(k, lam);
        CHECK(besov_surface(v, a, fam, b) == doctest::Approx(expect).epsilon(1e-10));
    }
    CHECK_THROWS_AS(besov_surface(v, -0.1, fam, b), DomainError);
}

TEST_CASE("hypersurface Besov norms")
{
    const auto fol = product(12, 7, MetricRecipe::perturbed(0.1, 2));
    const LPFamily fam(make_kernel(), -4, 5, LPMode::normalized);
    std::mt19937_64 rng(9);
    const TensorField f0 = band_limited(fol->torus_slice(0)->grid(), rng, 3);
    const FoliatedTensor F = FoliatedTensor::constant(fol, f0);

    for (double a : {0.0, 0.5}) {
        // B-norm weights use the S₀ measure; on a product metric slice measures coincide.
        CHECK(hyper_B(F, a, fam) == doctest::Approx(besov_surface(f0, a, fam, fol->basis(0, 0))).epsilon(1e-10));
        CHECK(hyper_P(F, a, fam) == doctest::Approx(hyper_B(F, a, fam)).epsilon(1e-10));
    }
    CHECK(hyper_B(F, 0.0, fam, BasisPolicy::frozen_initial) == doctest::Approx(hyper_B(F, 0.0, fam)).epsilon(1e-12));
    CHECK_THROWS_AS(hyper_B(F, 1.5, fam), DomainError);

    for (unsigned seed = 0; seed < 5; ++seed) {
        const FoliatedTensor G = random_foliated(fol, 30 + seed);
        CHECK(hyper_P(G, 0.0, fam) <= hyper_B(G, 0.0, fam) * (1.0 + 1e-12));
        CHECK(hyper_B(-3.0 * G, 0.5, fam) == doctest::Approx(3.0 * hyper_B(G, 0.5, fam)).epsilon(1e-12));
        // Monotone in a once P_{<0} is removed.
        FoliatedTensor H = G - low_part_slices(G, fam);
        CHECK(hyper_B(H, 0.25, fam) <= hyper_B(H, 0.75, fam) * (1.0 + 1e-12));
    }
}

TEST_CASE("N1 and N2")
{
    const auto fol = product();
    const double area = fol->initial().area();
    const FoliatedTensor c = FoliatedTensor::constant(fol, TensorField::scalar(VectorXd::Constant(fol->nodes(), 1.5)));
    CHECK(n1(c) == doctest::Approx(1.5 * std::sqrt(area)).epsilon(1e-12));
    CHECK(n2(c) == doctest::Approx(1.5 * std::sqrt(area)).epsilon(1e-12));
    for (unsigned seed = 0; seed < 5; ++seed) {
        const FoliatedTensor F = random_foliated(fol, seed);
        CHECK(n1(F) <= n2(F));
        CHECK(n1(nabla(F)) <= n2(nabla(F)));
    }
}

TEST_CASE("N1 envelope")
{
    const auto fol = product(16, 7);
    const LPFamily fam(make_kernel(), -4, 6, LPMode::normalized);
    const double eps = default_envelope_epsilon;

    const Envelope env = n1_envelope(random_foliated(fol, 3), eps, fam);
    REQUIRE(env.smoothed.size() == 7);
    for (std::size_t k = 0; k < env.smoothed.size(); ++k) {
        for (std::size_t j = 0; j < env.smoothed.size(); ++j) {
            const double d = std::abs(double(k) - double(j));
            CHECK(env.smoothed[k] <= std::exp2(eps * d) * env.smoothed[j] * (1.0 + 1e-12));
        }
    }

    // Single eigenfunction at λ = 16 = 2^{2·2}: peak at k0 = 2, decay away from it.
    const EigenBasis& b = fol->basis(0, 0);
    Index j = 0;
    while (b.eigenvalues()[j] < 16.0 - 1e-9) ++j;
    REQUIRE(b.eigenvalues()[j] == doctest::Approx(16.0));
    const Envelope one = n1_envelope(FoliatedTensor::constant(fol, b.eigenvector(j)), eps, fam);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < one.smoothed.size(); ++k) {
        if (one.smoothed[k] > one.smoothed[peak]) peak = k;
    }
    CHECK(peak == 2);
    for (std::size_t k = peak + 1; k < one.smoothed.size(); ++k) CHECK(one.smoothed[k] < one.smoothed[k - 1]);
    for (std::size_t k = peak; k > 0; --k) CHECK(one.smoothed[k - 1] < one.smoothed[k]);

    CHECK_THROWS_AS(n1_envelope(random_foliated(fol, 3), 0.3, fam), DomainError);
    CHECK_THROWS_AS(n1_envelope(random_foliated(fol, 3), 0.0, fam), DomainError);
}
