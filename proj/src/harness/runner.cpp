#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "mgthmm/harness.hpp"

namespace mgthmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

CsvRow base_row(const ExperimentSpec& spec, double eps, double T) {
    CsvRow r;
    r.eps = eps;
    r.method = spec.method_label();
    r.k = spec.method == MethodKind::Reference ? 0 : spec.mgt.k;
    r.L = spec.levels();
    r.P = r.L > 0 ? spec.mgt.P : 0;
    r.m = r.L > 0 ? spec.mgt.m : 0;
    r.dt = spec.mgt.dt;
    r.T = T;
    return r;
}

// Index of system time t in a record whose samples start at times.front()
// with spacing dt; -1 when t precedes the first sample.
long long sample_index(const RunRecord& rec, double t, double dt) {
    const double ratio = (t - rec.times.front()) / dt;
    if (ratio < -1e-6) return -1;
    const long long n = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(n)) > 1e-6 || n >= static_cast<long long>(rec.times.size())) {
        throw ConfigError("checkpoint is not on the fine grid of the run");
    }
    return n;
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec, double eps, const RunOptions& opts) {
    ExperimentSpec one = spec;
    one.eps = {eps};
    one.validate();

    const FastSlowSystem sys = make_problem(spec.problem, eps, spec.overrides);
    const double T = spec.final_time(eps);
    MgtConfig cfg = spec.mgt;
    cfg.T = T;
    cfg.L = spec.levels();

    RunResult res;
    res.row = base_row(spec, eps, T);
    std::string stage = "reference";
    try {
        res.reference = get_reference(sys, reference_step(eps, cfg.dt_coupled, cfg.dt), cfg.dt, T, opts.cache);
        if (spec.method == MethodKind::Reference) {
            res.record.method = "reference";
            for (std::size_t i = 0; i < res.reference.states.size(); ++i) {
                res.record.times.push_back(static_cast<double>(i) * cfg.dt);
            }
            res.record.states = res.reference.states;
            res.record.counters = res.reference.counters;
            res.record.wall_ms = res.reference.wall_ms;
            res.row.error_l2 = 0.0;
            res.row.f_evals = res.reference.counters.f_evals;
            res.row.g_evals = res.reference.counters.g_evals;
            res.row.wall_ms = res.reference.wall_ms;
            res.checkpoint_errors.assign(spec.checkpoints.size(), 0.0);
            return res;
        }

        ManifoldEvaluator ev(sys, cfg.inverter, cfg.eta, spec.evaluator_order());
        stage = "initial layer";
        const LayerResult layer = solve_initial_layer(sys, sys.x0, sys.y0, cfg, ev);
        if (layer.t_exit > T) throw NumericalError("initial layer extends past the final time");
        stage = "solver";
        const double t0 = layer.t_exit;
        switch (spec.method) {
            case MethodKind::Hmm: res.record = solve_hmm(sys, cfg.k, layer.x, cfg.dt, t0, T, ev); break;
            case MethodKind::TwoGrid: res.record = solve_two_grid(sys, cfg, layer.x, t0, ev); break;
            case MethodKind::Mgt: res.record = solve_mgt(sys, cfg, layer.x, t0, ev); break;
            case MethodKind::Reference: break;
        }
        res.record.layer = layer;
        stage = "error";
        res.row.error_l2 = (res.record.final_state() - res.reference.at(T)).norm();
        res.row.micro_calls = res.record.counters.micro_calls;
        res.row.f_evals = res.record.counters.f_evals;
        res.row.g_evals = res.record.counters.g_evals;
        res.row.wall_ms = res.record.wall_ms;
        for (double c : spec.checkpoints) {
            const long long n = sample_index(res.record, c, cfg.dt);
            res.checkpoint_errors.push_back(
                n < 0 ? kNaN : (res.record.states[static_cast<std::size_t>(n)] - res.reference.at(c)).norm());
        }
        if (!std::isfinite(res.row.error_l2)) throw NumericalError("non-finite final error");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        res.ok = false;
        res.failure = stage + ": " + e.what();
        res.row.error_l2 = kNaN;
    }
    return res;
}

std::vector<RunResult> run_all(const std::vector<ExperimentSpec>& specs, const RunOptions& opts) {
    std::vector<std::pair<const ExperimentSpec*, double>> jobs;
    for (const auto& s : specs) {
        s.validate();
        for (double e : s.eps) jobs.emplace_back(&s, e);
    }
    std::vector<RunResult> out(jobs.size());
    parallel_for(jobs.size(), opts.jobs, [&](std::size_t i) { out[i] = run_experiment(*jobs[i].first, jobs[i].second, opts); });
    return out;
}

SlopeFit fit_slope(const std::vector<double>& eps, const std::vector<double>& errors) {
    if (eps.size() != errors.size()) throw ConfigError("fit_slope: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (eps[i] > 0.0 && errors[i] > 0.0 && std::isfinite(errors[i])) {
            lx.push_back(std::log10(eps[i]));
            ly.push_back(std::log10(errors[i]));
        }
    }
    if (lx.size() < 3) throw ConfigError("fit_slope: at least 3 valid points are required");
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("fit_slope: eps values are all equal");
    SlopeFit fit;
    fit.points = lx.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += r * r;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

bool SweepResult::all_ok() const {
    for (const auto& r : runs) {
        if (!r.ok) return false;
    }
    return true;
}

SweepResult sweep(const ExperimentSpec& spec, const RunOptions& opts) {
    spec.validate(/*sweep=*/true);
    SweepResult out;
    out.spec = spec;
    out.runs.resize(spec.eps.size());
    parallel_for(spec.eps.size(), opts.jobs, [&](std::size_t i) { out.runs[i] = run_experiment(spec, spec.eps[i], opts); });
    std::vector<double> e, err;
    for (const auto& r : out.runs) {
        if (!r.ok) continue;
        e.push_back(r.row.eps);
        err.push_back(r.row.error_l2);
    }
    try {
        out.fit = fit_slope(e, err);
    } catch (const ConfigError&) {
        out.fit.reset();
    }
    return out;
}

std::vector<CsvRow> compare_cost(const std::vector<ExperimentSpec>& specs, const RunOptions& opts) {
    if (specs.empty()) throw ConfigError("compare: no experiments");
    const auto& first = specs.front();
    std::vector<double> checkpoints = first.checkpoints;
    for (const auto& s : specs) {
        if (s.problem != first.problem || s.overrides != first.overrides) {
            throw ConfigError("compare: experiments must share problem and parameters");
        }
        if (s.eps.size() != 1 || first.eps.size() != 1 || s.eps.front() != first.eps.front()) {
            throw ConfigError("compare: experiments must share a single eps value");
        }
        if (!s.checkpoints.empty() && s.checkpoints != checkpoints) {
            if (checkpoints.empty()) {
                checkpoints = s.checkpoints;
            } else {
                throw ConfigError("compare: experiments list different checkpoints");
            }
        }
    }
    if (checkpoints.empty()) checkpoints = {first.final_time(first.eps.front())};
    std::vector<ExperimentSpec> jobs = specs;
    for (auto& s : jobs) {
        s.checkpoints = checkpoints;
        s.validate();
    }
    std::vector<RunResult> results(jobs.size());
    parallel_for(jobs.size(), opts.jobs, [&](std::size_t i) { results[i] = run_experiment(jobs[i], jobs[i].eps.front(), opts); });

    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& r = results[i];
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            CsvRow row = r.row;
            row.T = checkpoints[c];
            if (!r.ok) {
                rows.push_back(row);
                continue;
            }
            row.error_l2 = r.checkpoint_errors[c];
            if (jobs[i].method == MethodKind::Reference) {
                rows.push_back(row);
                continue;
            }
            const long long n = sample_index(r.record, checkpoints[c], jobs[i].mgt.dt);
            const EvalCounters cost = n < 0 ? EvalCounters{} : r.record.cumulative[static_cast<std::size_t>(n)];
            row.micro_calls = cost.micro_calls;
            row.f_evals = cost.f_evals;
            row.g_evals = cost.g_evals;
            rows.push_back(row);
        }
    }
    return rows;
}

DriftDemo drift_demo(double eps, double T, double dt, int sample_every, const RunOptions& opts) {
    if (sample_every < 1) throw ConfigError("drift_demo: sample stride must be positive");
    const FastSlowSystem sys = make_problem(ProblemId::LinearDrift, eps);
    step_count(0.0, T, dt);
    const ReferenceTrajectory ref = get_reference(sys, reference_step(eps, 1e-4, dt), dt, T, opts.cache);

    DriftDemo out;
    auto emit = [&](const std::string& label, const std::vector<Vec>& states) {
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (i % static_cast<std::size_t>(sample_every) != 0 && i + 1 != states.size()) continue;
            char buf[160];
            std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g", static_cast<double>(i) * dt, label.c_str(),
                          states[i](0), states[i](1));
            out.trajectory_lines.emplace_back(buf);
        }
    };
    emit("reference", ref.states);
    CsvRow ref_row;
    ref_row.eps = eps;
    ref_row.method = "reference";
    ref_row.dt = dt;
    ref_row.T = T;
    ref_row.f_evals = ref.counters.f_evals;
    ref_row.g_evals = ref.counters.g_evals;
    ref_row.wall_ms = ref.wall_ms;
    out.summary.push_back(ref_row);

    for (int k = 0; k <= 2; ++k) {
        ManifoldEvaluator ev(sys, default_inverter(ProblemId::LinearDrift), default_eta(ProblemId::LinearDrift), 2);
        const RunRecord rec = solve_hmm(sys, k, sys.x0, dt, 0.0, T, ev);
        emit("hmm" + std::to_string(k), rec.states);
        CsvRow row;
        row.eps = eps;
        row.method = "hmm";
        row.k = k;
        row.dt = dt;
        row.T = T;
        row.error_l2 = (rec.final_state() - ref.at(T)).norm();
        row.micro_calls = rec.counters.micro_calls;
        row.f_evals = rec.counters.f_evals;
        row.g_evals = rec.counters.g_evals;
        row.wall_ms = rec.wall_ms;
        out.summary.push_back(row);
    }
    return out;
}

}  // namespace mgthmm
