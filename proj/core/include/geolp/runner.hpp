#pragma once

#include <geolp/foliation.hpp>
#include <geolp/heat.hpp>
#include <geolp/harness.hpp>
#include <geolp/lp.hpp>
#include <geolp/report.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace geolp {

struct CheckInfo
{
    std::string id;
    std::string module;
    /// Short description of the statement the check exercises.
    std::string anchor;
};

/// Every check in execution order: geometry, heat, LP, norms, flat, foliation, harness.
const std::vector<CheckInfo>& check_catalog();
/// Throws ConfigError for an unknown id.
const CheckInfo& check_info(const std::string& id);

struct KernelSpec
{
    int N = 8;
    int n_der = 4;
    LPMode mode = LPMode::normalized;
};

/// (resolution, slices) for foliation ladders; resolution is n on the torus, l_max on the sphere.
using Rung = std::pair<int, int>;

struct RunConfig
{
    std::uint64_t seed = 1;
    KernelSpec kernel;

    /// Torus grids for the convergence ladders and the heat/LP refinement pair (first, last).
    std::vector<int> torus_ladder{16, 24, 32};
    MetricRecipe torus_metric = MetricRecipe::conformal(0.2, 1, 1);
    std::vector<int> sphere_ladder{12, 24};
    double sphere_radius = 1.0;

    /// Compliant foliation for the curved estimates, refined along `foliation_ladder`.
    FoliationConfig foliation;
    std::vector<Rung> foliation_ladder{{24, 32}, {32, 48}};
    /// Strongly perturbed foliation for the commutator convergence ladder (n = n_s = torus_ladder).
    FoliationConfig stress;
    double cone_r0;
    std::vector<Rung> cone_ladder{{16, 32}, {24, 48}};
    SampleSpec samples;

    std::vector<int> flat_ladder{32, 64};
    int flat_samples = 200;
    int flat_pairs = 50;
    int flat_property_samples = 50;

    /// Check ids to run; empty means the whole catalog.
    std::vector<std::string> suites;
    std::string output = "geolp-out";

    RunConfig();

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Canonical JSON of every field that affects results (the output directory excluded).
    std::string canonical() const;
    /// 16 hex digits of FNV-1a over canonical().
    std::string hash() const;
};

struct Metric
{
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    /// Pass when value ≤ bound (upper) or value ≥ bound (lower).
    bool upper = true;
    bool pass = false;
};

struct Series
{
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<double> y;
};

struct CheckOutcome
{
    std::string id;
    std::vector<RatioReport> reports;
    std::vector<Metric> metrics;
    std::vector<Series> series;
    /// Set when the check ran on a foliation that failed its assumption report.
    bool assumption_failure = false;
    /// Diagnostic of an exception thrown by the check.
    std::string error;
    bool config_error = false;

    Metric& add_metric(std::string name, double value, double bound, bool upper = true);
    const Metric& metric(const std::string& name) const;
    const RatioReport& report(const std::string& check_id) const;
    /// Metrics pass, multi-resolution reports are stable and nothing threw.
    bool passed() const;
};

class RunContext;

/// Runs one check; exceptions are caught into the outcome.
CheckOutcome run_check(const std::string& id, RunContext& ctx);

struct RunSummary
{
    std::string config_hash;
    std::vector<CheckOutcome> outcomes;
    double seconds = 0.0;

    /// 0 when every check passed, 3 on a configuration error, 2 otherwise.
    int exit_code() const;
};

/// Shared, read-only inputs built on first use: foliations, bases and flat constants.
class RunContext
{
public:
    explicit RunContext(RunConfig cfg);
    ~RunContext();
    RunContext(const RunContext&) = delete;
    RunContext& operator=(const RunContext&) = delete;

    const RunConfig& config() const { return m_cfg; }
    LPFamily family_for(const FoliatedMetric& fol) const;
    /// Compliant foliation at a rung of the foliation ladder.
    std::shared_ptr<const FoliatedMetric> foliation(const Rung& rung);
    /// Minkowski cone on the sphere at a rung of the cone ladder.
    std::shared_ptr<const FoliatedMetric> cone(const Rung& rung);
    /// Stress foliation with resolution n and n_s slices.
    std::shared_ptr<const FoliatedMetric> stress(const Rung& rung);
    std::shared_ptr<const MetricField> torus(int n);
    std::shared_ptr<const EigenBasis> torus_basis(int n, int rank);
    /// Assumption report of a foliation obtained from this context, computed once per key.
    std::shared_ptr<const AssumptionReport> assumptions(const std::string& key,
                                                        const std::shared_ptr<const FoliatedMetric>& fol);
    /// Outcome of a flat check, computed once.
    const CheckOutcome& flat_outcome(const std::string& id);

    struct Impl;

private:
    RunConfig m_cfg;
    std::unique_ptr<Impl> m_impl;
};

/// Runs the configured suites on `jobs` threads and reports progress lines to `log`.
RunSummary run_suites(const RunConfig& cfg, int jobs, std::ostream& log);

/// One `<id>.csv` per check, `summary.json`, and `plots/<id>.<series>.csv`.
void write_outputs(const RunSummary& summary, const RunConfig& cfg, const std::filesystem::path& dir);

/// Body of the per-check CSV (header included).
std::string outcome_csv(const CheckOutcome& outcome, const std::string& config_hash);

/// Output directory: cfg.output under $GEOLP_OUT when set.
std::filesystem::path output_directory(const RunConfig& cfg);

} // namespace geolp
