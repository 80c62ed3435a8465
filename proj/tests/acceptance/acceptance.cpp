// Runs the default desk-scale suite and grades acceptance criteria 1-9 with explicit thresholds.

#include <geolp/lp.hpp>
#include <geolp/runner.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace geolp;

namespace {

constexpr double exact_tol = 1e-10;
constexpr double drift_tol = 0.2;
constexpr double round_off = 1e-9;

struct Grade
{
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            notes.push_back(what);
        }
    }
};

std::string num(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

class Results
{
public:
    explicit Results(const RunSummary& s)
    {
        for (const auto& o : s.outcomes) m_by_id.emplace(o.id, &o);
    }

    const CheckOutcome* find(const std::string& id) const
    {
        const auto it = m_by_id.find(id);
        return it == m_by_id.end() ? nullptr : it->second;
    }

    /// Metric value, NaN when the check or metric is missing.
    double metric(const std::string& id, const std::string& name) const
    {
        const CheckOutcome* o = find(id);
        if (!o) return std::nan("");
        for (const auto& m : o->metrics) {
            if (m.name == name) return m.value;
        }
        return std::nan("");
    }

private:
    std::map<std::string, const CheckOutcome*> m_by_id;
};

void at_most(Grade& g, const Results& r, const std::string& id, const std::string& name, double bound)
{
    const double v = r.metric(id, name);
    g.require(v <= bound, id + "." + name + " = " + num(v) + " > " + num(bound));
}

void at_least(Grade& g, const Results& r, const std::string& id, const std::string& name, double bound)
{
    const double v = r.metric(id, name);
    g.require(v >= bound, id + "." + name + " = " + num(v) + " < " + num(bound));
}

double relative_drift(const RatioReport& rep)
{
    const auto res = rep.resolutions();
    if (res.size() < 2) return std::nan("");
    const double a = rep.max_ratio_at(res.front());
    const double b = rep.max_ratio_at(res.back());
    if (a < round_off && b < round_off) return 0.0;
    return std::abs(b - a) / a;
}

/// Every report of a check is nonempty, finite and drifts by less than 20% across resolutions.
void stable_reports(Grade& g, const Results& r, const std::string& id, std::size_t min_reports = 1)
{
    const CheckOutcome* o = r.find(id);
    if (!o) {
        g.require(false, id + " missing");
        return;
    }
    g.require(o->error.empty(), id + " threw: " + o->error);
    g.require(o->reports.size() >= min_reports, id + ": " + std::to_string(o->reports.size()) + " reports");
    for (const auto& rep : o->reports) {
        const double d = relative_drift(rep);
        g.require(!rep.rows.empty() && std::isfinite(rep.max_ratio()), rep.check_id + ": no finite ratio");
        g.require(d < drift_tol, rep.check_id + ": drift " + num(d));
    }
}

std::size_t rows_at_finest(const RatioReport& rep)
{
    const int finest = rep.resolutions().back();
    std::size_t n = 0;
    for (const auto& row : rep.rows) n += row.resolution == finest;
    return n;
}

Grade exact_identities(const Results& r)
{
    Grade g;
    at_most(g, r, "heat_identity", "torus_max_error", exact_tol);
    at_most(g, r, "heat_identity", "sphere_max_error", exact_tol);
    at_most(g, r, "heat_semigroup", "relative_error", exact_tol);
    at_most(g, r, "lp_selfadjoint", "relative_asymmetry", exact_tol);
    at_most(g, r, "lp_reconstruction", "relative_error", exact_tol);
    const RunConfig cfg;
    for (int n : cfg.flat_ladder) {
        const std::string tag = "_n" + std::to_string(n);
        at_most(g, r, "flat_lp_properties", "lp1_orthogonality" + tag, exact_tol);
        at_most(g, r, "flat_lp_properties", "lp5_derivative" + tag, exact_tol);
        at_most(g, r, "flat_lp_properties", "lp5_integral" + tag, exact_tol);
    }
    for (int l : cfg.sphere_ladder) at_most(g, r, "gauss_bonnet", "sphere_error_l" + std::to_string(l), exact_tol);
    return g;
}

Grade convergence_rates(const Results& r)
{
    Grade g;
    for (const std::string id : {"metric_compatibility", "bochner_scalar", "bochner_tensor", "commutator_scalar"}) {
        at_least(g, r, id, "rate", 1.9);
    }
    return g;
}

/// Moments ∫₀^∞ τ^j m(τ) dτ by tanh-sinh on the half line, independent of the suite's quadrature.
Grade quadrature_and_moments(const Results& r)
{
    Grade g;
    at_most(g, r, "lp_quadrature", "relative_error", 1e-6);
    at_least(g, r, "lp_quadrature", "eigenfunctions", 50.0);
    at_least(g, r, "lp_quadrature", "octaves", 6.0);
    at_most(g, r, "lp_kernel_moments", "max_vanishing_moment", 1e-9);

    const RunConfig cfg;
    const LPKernel kernel(cfg.kernel.N, cfg.kernel.n_der);
    boost::math::quadrature::exp_sinh<double> integrator;
    for (int j = 0; j < kernel.n_der(); ++j) {
        const double m = integrator.integrate([&](double t) {
            const double k = kernel.time_kernel(t);
            return k == 0.0 ? 0.0 : std::pow(t, j) * k;
        });
        g.require(std::abs(m) < 1e-9, "independent moment " + std::to_string(j) + " = " + num(m));
    }
    return g;
}

Grade lp_properties(const Results& r)
{
    Grade g;
    stable_reports(g, r, "lp_properties", 10);
    at_least(g, r, "lp_properties", "almost_orthogonality_exponent", 1.9);
    const double covered = r.metric("lp_properties", "strong_scalar_bernstein_bands");
    const CheckOutcome* o = r.find("lp_properties");
    if (o) {
        const RatioReport& bern = o->report("lp_properties.strong_scalar_bernstein");
        std::map<int, double> worst;
        for (const auto& row : bern.rows) worst[row.k] = std::max(worst[row.k], row.ratio);
        g.require(double(worst.size()) >= covered && covered > 0, "strong scalar Bernstein misses bands");
        for (const auto& [k, v] : worst) g.require(std::isfinite(v), "strong scalar Bernstein k=" + std::to_string(k));
    }
    return g;
}

Grade heat_flow(const Results& r)
{
    Grade g;
    stable_reports(g, r, "heat_smoothing", 8);
    at_most(g, r, "heat_sphere_gradient", "normalized_ratio", 1.0 + 1e-12);
    return g;
}

Grade flat_suite(const Results& r)
{
    Grade g;
    const RunConfig cfg;
    for (const std::string id : {"flat_sharp_trace", "flat_bilinear_trace", "flat_product_trace"}) {
        stable_reports(g, r, id);
        if (const CheckOutcome* o = r.find(id)) {
            for (const auto& rep : o->reports) {
                g.require(rows_at_finest(rep) >= std::size_t(cfg.flat_samples),
                          rep.check_id + ": " + std::to_string(rows_at_finest(rep)) + " samples");
            }
        }
    }
    const double growth = r.metric("flat_trace_counterexample", "growth_exponent");
    g.require(growth > 0.0, "counterexample growth exponent " + num(growth));
    at_most(g, r, "flat_dyadic_product", "low_low_max", 1e-12);
    for (int n : cfg.flat_ladder) at_least(g, r, "flat_dyadic_product", "decay_exponent_n" + std::to_string(n), 0.25);
    return g;
}

Grade curved_suite(const Results& r)
{
    Grade g;
    const RunConfig cfg;
    for (const auto& [a, b] : cfg.foliation_ladder) {
        at_most(g, r, "assumptions", "delta0_" + std::to_string(a) + "x" + std::to_string(b), 0.05);
    }
    for (const auto& id : theorem_ids()) {
        stable_reports(g, r, id);
        if (const CheckOutcome* o = r.find(id)) g.require(!o->assumption_failure, id + ": assumption failure");
    }
    stable_reports(g, r, "cone_comparison", 4);
    if (const CheckOutcome* o = r.find("cone_comparison")) {
        for (const auto& m : o->metrics) g.require(m.value <= 3.0, m.name + " = " + num(m.value));
        g.require(o->metrics.size() >= 4, "cone comparison has too few pairs");
    }
    return g;
}

Grade probe_margins(const Results& r)
{
    Grade g;
    g.require(probe_exponent("commutator_q") == 1.8, "commutator_q does not use q = 1.8");
    at_least(g, r, "commutator_q", "decay_exponent", 0.45);
    at_least(g, r, "commutator_L1", "decay_exponent", 0.9);
    at_least(g, r, "dyadic_ibp", "decay_exponent", 0.2);
    return g;
}

Grade determinism(const RunSummary& first, const RunSummary& second)
{
    Grade g;
    g.require(first.outcomes.size() == second.outcomes.size(), "reruns ran different checks");
    for (std::size_t i = 0; i < std::min(first.outcomes.size(), second.outcomes.size()); ++i) {
        const auto& a = first.outcomes[i];
        g.require(outcome_csv(a, first.config_hash) == outcome_csv(second.outcomes[i], second.config_hash),
                  a.id + ".csv differs");
    }
    return g;
}

} // namespace

int main()
{
    const RunConfig cfg;
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    const RunSummary first = run_suites(cfg, 1, log);
    const RunSummary second = run_suites(cfg, 2, log);
    const Results r(first);

    std::vector<std::string> errors;
    for (const auto& o : first.outcomes) {
        if (!o.error.empty()) errors.push_back(o.id + ": " + o.error);
    }

    const std::vector<std::pair<std::string, std::function<Grade()>>> criteria{
        {"exact identities at 1e-10", [&] { return exact_identities(r); }},
        {"convergence rates >= 1.9", [&] { return convergence_rates(r); }},
        {"LP quadrature and kernel moments", [&] { return quadrature_and_moments(r); }},
        {"LP property constants", [&] { return lp_properties(r); }},
        {"heat-flow shapes and sphere gradient bound", [&] { return heat_flow(r); }},
        {"flat estimates", [&] { return flat_suite(r); }},
        {"curved estimates and Minkowski cone", [&] { return curved_suite(r); }},
        {"dyadic probe margins", [&] { return probe_margins(r); }},
        {"CSV determinism across reruns", [&] { return determinism(first, second); }},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Grade g;
        try {
            g = criteria[i].second();
        } catch (const std::exception& e) {
            g.require(false, std::string("threw: ") + e.what());
        }
        all = all && g.pass;
        std::cout << "criterion " << i + 1 << ' ' << (g.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << '\n';
        for (const auto& n : g.notes) std::cout << "    " << n << '\n';
    }
    for (const auto& e : errors) std::cout << "    error in " << e << '\n';
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "suite ran twice in " << std::lround(seconds) << " s\n";
    return all && errors.empty() ? 0 : 1;
}
