#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgthmm/common.hpp"
#include "mgthmm/mgt.hpp"
#include "mgthmm/system.hpp"

namespace mgthmm {

enum class MethodKind { Reference, Hmm, TwoGrid, Mgt };

std::string_view to_string(MethodKind m);
MethodKind parse_method(std::string_view name);

enum class TimeScaling {
    Fixed,
    /// T = 1 / eps
    InverseEps,
};

struct ExperimentSpec {
    std::string name;
    ProblemId problem = ProblemId::LinearRotation;
    ParameterSet overrides;
    MethodKind method = MethodKind::Hmm;
    /// k, L, P, m, strategy, dt, dt_coupled, T, layer, inverter, eta.
    MgtConfig mgt;
    /// Deepest evaluator order; defaults to k + L.
    std::optional<int> max_order;
    std::vector<double> eps;
    TimeScaling time_scaling = TimeScaling::Fixed;
    std::vector<double> checkpoints;
    std::uint64_t seed = 0;
    /// CSV file name (relative to the output directory).
    std::string output;

    int levels() const;
    int evaluator_order() const;
    double final_time(double eps) const;
    /// Method label written to the CSV.
    std::string method_label() const;
    /// Throws ConfigError on violated invariants. `sweep` requires >= 3 values
    /// in strictly decreasing order.
    void validate(bool sweep = false) const;
};

/// Per-experiment defaults for the micro-solver and finite-difference step.
InverterSpec default_inverter(ProblemId id);
double default_eta(ProblemId id);

/// Parses key = value lines; `[experiment]` opens a block, keys before the
/// first block are defaults for every block. `#` and `;` start comments.
std::vector<ExperimentSpec> parse_config(std::string_view text);
std::vector<ExperimentSpec> load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Config text of a named preset; throws ConfigError for unknown names.
std::string preset_text(std::string_view name);

/// Fine-grid reference trajectory of the slow variables.
struct ReferenceTrajectory {
    double dt_sample = 0.0;
    double dt_ref = 0.0;
    std::vector<Vec> states;
    EvalCounters counters;
    double wall_ms = 0.0;

    /// Slow state at t = n * dt_sample; throws if t is off the sample grid.
    const Vec& at(double t) const;
};

/// On-disk cache of reference trajectories, keyed by a content hash.
/// Writes go to a temporary file that is renamed into place.
class ReferenceCache {
public:
    /// An empty directory disables caching.
    ReferenceCache() = default;
    explicit ReferenceCache(std::filesystem::path dir);

    bool enabled() const { return !dir_.empty(); }
    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path_for(std::uint64_t key) const;

    /// nullopt when absent or unreadable.
    std::optional<ReferenceTrajectory> load(std::uint64_t key) const;
    void store(std::uint64_t key, const ReferenceTrajectory& ref) const;

private:
    std::filesystem::path dir_;
};

/// Reference step min(dt_coupled, 0.1 eps), shrunk to divide dt_sample.
double reference_step(double eps, double dt_coupled, double dt_sample);
std::uint64_t reference_key(const FastSlowSystem& sys, double dt_ref, double dt_sample, double T);
ReferenceTrajectory compute_reference(const FastSlowSystem& sys, double dt_ref, double dt_sample, double T);
/// Loads from the cache or computes and stores.
ReferenceTrajectory get_reference(const FastSlowSystem& sys, double dt_ref, double dt_sample, double T,
                                  const ReferenceCache& cache, bool* from_cache = nullptr);

struct CsvRow {
    double eps = 0.0;
    std::string method;
    int k = 0;
    int L = 0;
    int P = 0;
    int m = 0;
    double dt = 0.0;
    double T = 0.0;
    double error_l2 = 0.0;
    std::uint64_t micro_calls = 0;
    std::uint64_t f_evals = 0;
    std::uint64_t g_evals = 0;
    double wall_ms = 0.0;
};

inline constexpr std::string_view kCsvHeader = "eps,method,k,L,P,m,dt,T,error_l2,micro_calls,f_evals,g_evals,wall_ms";

std::string format_row(const CsvRow& row);
void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

/// Outcome of one (spec, eps) run.
struct RunResult {
    CsvRow row;
    RunRecord record;
    ReferenceTrajectory reference;
    bool ok = true;
    std::string failure;
    /// Error at each checkpoint of the spec.
    std::vector<double> checkpoint_errors;
};

struct RunOptions {
    ReferenceCache cache;
    int jobs = 1;
};

/// Layer, solver and error-vs-reference pipeline. Configuration errors throw
/// ConfigError; solver failures are caught and reported in the result with
/// the failing stage named.
RunResult run_experiment(const ExperimentSpec& spec, double eps, const RunOptions& opts = {});

/// Every (spec, eps) pair in input order, up to opts.jobs in parallel.
std::vector<RunResult> run_all(const std::vector<ExperimentSpec>& specs, const RunOptions& opts = {});

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

/// Least squares fit of log10(error) on log10(eps); needs >= 3 points with
/// positive finite errors.
SlopeFit fit_slope(const std::vector<double>& eps, const std::vector<double>& errors);

struct SweepResult {
    ExperimentSpec spec;
    std::vector<RunResult> runs;
    std::optional<SlopeFit> fit;
    bool all_ok() const;
};

/// One run per eps, up to opts.jobs in parallel; failed rows are excluded
/// from the fit.
SweepResult sweep(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Cost and error of several methods at system-time checkpoints. All specs
/// must share problem, overrides and eps; checkpoints must lie in (0, T].
std::vector<CsvRow> compare_cost(const std::vector<ExperimentSpec>& specs, const RunOptions& opts = {});

struct DriftDemo {
    /// t,method,x1,x2
    std::vector<std::string> trajectory_lines;
    std::vector<CsvRow> summary;
};

/// Linear drift problem from x0 = (1, 0): reference and HMM_0, HMM_1, HMM_2.
/// `sample_every` thins the trajectory output.
DriftDemo drift_demo(double eps, double T, double dt = 1e-3, int sample_every = 10, const RunOptions& opts = {});

}  // namespace mgthmm
