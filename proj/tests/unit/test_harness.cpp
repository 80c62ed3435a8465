#include <doctest.h>

#include <geolp/error.hpp>
#include <geolp/harness.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace geolp;

namespace {

/// γ = δ on every slice with χ = 0: transport is the identity in s.
std::shared_ptr<const FoliatedMetric> product_torus(int n = 12, int n_s = 9)
{
    FoliationConfig c;
    c.n = n;
    c.n_s = n_s;
    c.cone_background = false;
    return build_foliation(c);
}

std::shared_ptr<const FoliatedMetric> compliant_torus(int n = 12, int n_s = 9)
{
    FoliationConfig c;
    c.n = n;
    c.n_s = n_s;
    c.r0 = 20.0;
    c.trchi_amplitude = c.chihat_amplitude = c.zeta_amplitude = c.beta_amplitude = 1e-3;
    return build_foliation(c);
}

FoliatedTensor from_function(const std::shared_ptr<const FoliatedMetric>& fol,
                             const std::function<double(double, double, double)>& f)
{
    std::vector<TensorField> out;
    for (int i = 0; i < fol->slices(); ++i) {
        const auto& g = fol->torus_slice(i)->grid();
        VectorXd v(fol->nodes());
        for (int b = 0; b < g.n; ++b) {
            for (int a = 0; a < g.n; ++a) v[g.node(a, b)] = f(fol->s(i), g.coord(a), g.coord(b));
        }
        out.push_back(TensorField::scalar(v));
    }
    return FoliatedTensor(fol, std::move(out));
}

} // namespace

TEST_CASE("ratio report bookkeeping")
{
    RatioReport r("demo");
    r.add(0.0, 0.0, 0, 16);
    CHECK(r.rows.empty());
    CHECK_THROWS_AS(r.add(1.0, 0.0, 0, 16), InequalityViolation);
    CHECK_THROWS_AS(r.add(-1.0, 1.0, 0, 16), DomainError);
    CHECK_THROWS_AS(r.add(std::nan(""), 1.0, 0, 16), DomainError);
    r.add(1.0, 4.0, 0, 16, 2);
    r.add(1.0, 2.0, 1, 16, 3);
    r.add(1.1, 2.0, 0, 32, 2);
    CHECK(r.max_ratio() == doctest::Approx(0.55));
    CHECK(r.max_ratio_at(16) == doctest::Approx(0.5));
    CHECK(r.resolutions() == std::vector<int>{16, 32});
    CHECK(r.drift() == doctest::Approx(0.1));
    CHECK(r.mark_stability(0.2));
    CHECK_FALSE(r.mark_stability(0.05));

    std::ostringstream os;
    write_csv_header(os);
    write_csv(os, r, "abc");
    std::istringstream lines(os.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "check_id,config_hash,sample_id,k,k_prime,k_dprime,lhs,rhs,ratio,fit_exponent,resolution,stable");
    CHECK(first == "demo,abc,0,2,,,1,4,0.25,,16,0");
}

TEST_CASE("sample fields")
{
    const auto fol = compliant_torus();
    SampleSpec spec;
    spec.count = 3;

    SUBCASE("deterministic and independent of the family size")
    {
        const auto a = sample_family(spec, fol);
        spec.count = 5;
        const auto b = sample_family(spec, fol);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < fol->slices(); ++j) CHECK((a[i].slices[j].comps - b[i].slices[j].comps).norm() == 0.0);
        }
        CHECK((a[0].slices[0].comps - a[1].slices[0].comps).norm() > 0.0);
        CHECK((sample_field(spec, fol, 0, 1).slices[0].comps - a[0].slices[0].comps).norm() > 0.0);
    }
    SUBCASE("same values at every resolution")
    {
        const auto fine = compliant_torus(24, 9);
        const auto f = sample_field(spec, fol, 0);
        const auto g = sample_field(spec, fine, 0);
        for (int j = 0; j < 12; j += 3) {
            for (int i = 0; i < 12; i += 5) {
                const Index coarse = fol->torus_slice(0)->grid().node(i, j);
                const Index fine_node = fine->torus_slice(0)->grid().node(2 * i, 2 * j);
                CHECK(f.slices[4].comps(coarse, 0) == doctest::Approx(g.slices[4].comps(fine_node, 0)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("rank 1 draws two components")
    {
        spec.rank = 1;
        const auto f = sample_field(spec, fol, 0);
        CHECK(f.rank() == 1);
        CHECK((f.slices[0].comps.col(0) - f.slices[0].comps.col(1)).norm() > 0.0);
    }
    SUBCASE("empty family and invalid specs")
    {
        spec.count = 0;
        CHECK(sample_family(spec, fol).empty());
        CHECK(theorem_family("product_I", spec, fol).empty());
        spec.count = -1;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.count = 1;
        spec.rank = 2;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.rank = 0;
        spec.t_modes = 0;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
    SUBCASE("sphere samples are scalar")
    {
        const auto sphere = build_foliation(minkowski_cone(1.0, Substrate::sphere, 8, 5));
        CHECK(sample_field(spec, sphere, 0).rank() == 0);
        spec.rank = 1;
        CHECK_THROWS_AS(sample_field(spec, sphere, 0), ConfigError);
    }
}

TEST_CASE("theorem ratios")
{
    SUBCASE("homogeneous transport is the identity on a product foliation")
    {
        const auto fol = product_torus();
        const LPFamily lp = harness_family(*fol, LPKernel());
        SampleSpec spec;
        spec.count = 3;
        const RatioReport r = theorem_ratio("homog_transport", theorem_family("homog_transport", spec, fol), lp);
        REQUIRE(r.rows.size() == 3);
        for (const auto& row : r.rows) CHECK(row.ratio == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("trace corollary closed form")
    {
        const auto fol = product_torus(16, 9);
        const LPFamily lp = harness_family(*fol, LPKernel());
        TheoremSample s{from_function(fol, [](double t, double x, double) { return t * std::cos(x); }),
                        from_function(fol, [](double, double, double) { return 0.0; }), TensorField(0, fol->nodes())};
        const RatioReport r = theorem_ratio("sharp_trace_corollary", {s}, lp);
        REQUIRE(r.rows.size() == 1);
        // LHS = sup_x (∫ cos²x ds)^{1/2} = 1; RHS² = ‖∇²F‖² + ‖F‖² = 2·2π²·∫s² ds, ∫ by the trapezoid rule.
        double s2 = 0.0;
        for (int i = 0; i < fol->slices(); ++i) {
            const double w = (i == 0 || i == fol->slices() - 1) ? 0.5 * fol->h() : fol->h();
            s2 += w * fol->s(i) * fol->s(i);
        }
        const double pi = std::numbers::pi;
        CHECK(r.rows[0].lhs == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(r.rows[0].rhs == doctest::Approx(std::sqrt(4.0 * pi * pi * s2)).epsilon(1e-10));
    }
    SUBCASE("scale invariance")
    {
        const auto fol = compliant_torus();
        const LPFamily lp = harness_family(*fol, LPKernel());
        SampleSpec spec;
        spec.count = 2;
        for (const std::string id : {"bilinear_trace_scalar", "product_I_scalar", "homog_transport"}) {
            auto family = theorem_family(id, spec, fol);
            const RatioReport base = theorem_ratio(id, family, lp);
            for (auto& s : family) {
                s.F *= 3.0;
                s.G *= 0.25;
                s.W0 *= 0.75;
            }
            const RatioReport scaled = theorem_ratio(id, family, lp);
            REQUIRE(base.rows.size() == scaled.rows.size());
            for (std::size_t i = 0; i < base.rows.size(); ++i) {
                CHECK(scaled.rows[i].ratio == doctest::Approx(base.rows[i].ratio).epsilon(1e-10));
            }
        }
    }
    SUBCASE("zero data is skipped")
    {
        const auto fol = compliant_torus();
        const LPFamily lp = harness_family(*fol, LPKernel());
        const auto zero = from_function(fol, [](double, double, double) { return 0.0; });
        TheoremSample s{zero, zero, TensorField(0, fol->nodes())};
        for (const std::string id : {"bilinear_trace", "product_I", "product_II", "homog_transport", "product_I_dyadic"}) {
            CHECK(theorem_ratio(id, {s}, lp).rows.empty());
        }
    }
    SUBCASE("finite ratios on a compliant foliation")
    {
        const auto fol = compliant_torus();
        const LPFamily lp = harness_family(*fol, LPKernel());
        SampleSpec spec;
        spec.count = 2;
        for (const auto& id : theorem_ids()) {
            const RatioReport r = theorem_ratio(id, theorem_family(id, spec, fol), lp);
            CHECK(!r.rows.empty());
            CHECK(std::isfinite(r.max_ratio()));
        }
    }
    SUBCASE("unknown ids")
    {
        const auto fol = product_torus();
        CHECK_THROWS_AS(theorem_family("nope", SampleSpec{}, fol), ConfigError);
        CHECK_THROWS_AS(probe_exponent("nope"), ConfigError);
    }
}

TEST_CASE("dyadic probes")
{
    CHECK(probe_exponent("commutator_q") == 1.8);
    CHECK(probe_exponent("commutator_L1") == 1.0);
    CHECK(probe_margin("commutator_q") == 0.45);
    CHECK(probe_margin("commutator_L1") == 0.9);
    CHECK(probe_margin("dyadic_ibp") == 0.2);
    CHECK(std::isnan(probe_margin("gn_k")));

    const auto fol = compliant_torus(16, 9);
    const LPFamily lp = harness_family(*fol, LPKernel());
    SampleSpec spec;
    spec.count = 2;
    const auto family = sample_family(spec, fol, 0);
    const auto partners = sample_family(spec, fol, 1);
    for (const auto& id : probe_ids()) {
        const RatioReport r = dyadic_probe(id, family, lp, partners);
        CHECK(!r.rows.empty());
        CHECK(std::isfinite(r.max_ratio()));
    }
    CHECK_THROWS_AS(dyadic_probe("dyadic_ibp", family, lp), DomainError);

    SUBCASE("commutator vanishes on a product foliation")
    {
        const auto flat = product_torus(16, 9);
        const auto f = sample_family(spec, flat, 0);
        const RatioReport r = dyadic_probe("commutator_q", f, harness_family(*flat, LPKernel()));
        for (const auto& row : r.rows) CHECK(row.ratio < 1e-10);
    }
}

TEST_CASE("refinement and resolution helpers")
{
    const auto coarse = product_torus(12, 9);
    const auto fine = product_torus(16, 9);
    CHECK(resolution_of(*coarse) == 12);
    CHECK(harness_family(*fine, LPKernel()).k_max() == 3);
    CHECK(harness_family(*fine, LPKernel()).k_min() == -4);
    const auto sphere = build_foliation(minkowski_cone(1.0, Substrate::sphere, 8, 5));
    CHECK(resolution_of(*sphere) == 8);
    CHECK(harness_family(*sphere, LPKernel()).k_max() == 3);

    RatioReport a("x"), b("x"), c("y");
    a.add(1.0, 2.0, 0, 12);
    b.add(1.0, 1.9, 0, 16);
    b.fit_exponent = 1.5;
    const RatioReport r = refinement_study({a, b});
    CHECK(r.stable);
    CHECK(r.fit_exponent == 1.5);
    CHECK(r.rows.size() == 2);
    CHECK_THROWS_AS(refinement_study({a}), DomainError);
    CHECK_THROWS_AS(refinement_study({a, c}), DomainError);
}
