#include "mgthmm/mgt.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <sstream>

#include "mgthmm/extrap.hpp"

namespace mgthmm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// RK4 with a precomputed first stage.
template <class Field>
Vec rk4_from_k1(Field&& field, double t, const Vec& x, double dt, const Vec& k1) {
    const double half = 0.5 * dt;
    const Vec k2 = field(t + half, x + half * k1);
    const Vec k3 = field(t + half, x + half * k2);
    const Vec k4 = field(t + dt, x + dt * k3);
    Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out.allFinite()) throw NumericalError("RK4: non-finite state");
    return out;
}

template <class Field>
Vec rk4(Field&& field, double t, const Vec& x, double dt) {
    const Vec k1 = field(t, x);
    return rk4_from_k1(field, t, x, dt, k1);
}

std::string echo(const MgtConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "k=" << c.k << " L=" << c.L << " P=" << c.P << " m=" << c.m << " strategy=" << to_string(c.strategy)
       << " dt=" << c.dt << " dt_coupled=" << c.dt_coupled << " T=" << c.T << " eta=" << c.eta
       << " inverter=" << to_string(c.inverter.method);
    return os.str();
}

void record(RunRecord& rec, double t, const Vec& x, const EvalCounters& c) {
    rec.times.push_back(t);
    rec.states.push_back(x);
    rec.cumulative.push_back(c);
}

}  // namespace

double GridHierarchy::tau(int level) const { return dt * static_cast<double>(stride(level)); }

long long GridHierarchy::stride(int level) const {
    long long s = 1;
    for (int i = 0; i < level; ++i) s *= P;
    return s;
}

int GridHierarchy::highest_level(long long n) const {
    int best = 0;
    for (int l = 1; l <= L; ++l) {
        if (on_level(n, l)) best = l;
    }
    return best;
}

std::string_view to_string(CorrectionStrategy s) {
    return s == CorrectionStrategy::Field ? "field" : "manifold";
}

CorrectionStrategy parse_strategy(std::string_view name) {
    std::string key;
    for (char c : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (key == "field") return CorrectionStrategy::Field;
    if (key == "manifold") return CorrectionStrategy::Manifold;
    throw ConfigError("unknown correction strategy '" + std::string(name) + "'");
}

void MgtConfig::validate(int max_order) const {
    if (k < 0) throw ConfigError("k must be non-negative");
    if (L < 0) throw ConfigError("L must be non-negative");
    if (L >= 1 && P < 2) throw ConfigError("refinement factor P must be at least 2");
    if (m < 0) throw ConfigError("extrapolation order m must be non-negative");
    if (!(T > 0.0)) throw ConfigError("final time T must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(dt_coupled > 0.0) || dt_coupled > dt) throw ConfigError("dt_coupled must lie in (0, dt]");
    if (k + L > max_order) {
        throw ConfigError("k + L = " + std::to_string(k + L) + " exceeds max_order " + std::to_string(max_order));
    }
    if (strategy == CorrectionStrategy::Manifold && L != 1) {
        throw ConfigError("manifold correction strategy supports L = 1 only");
    }
    if (!(layer.c_layer > 0.0) || !(layer.c_time > 0.0)) throw ConfigError("layer constants must be positive");
}

long long step_count(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw ConfigError("step size must be positive");
    const double span = t1 - t0;
    if (span < 0.0) throw ConfigError("end time precedes start time");
    const double ratio = span / dt;
    const long long n = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(n)) > 1e-6) {
        throw ConfigError("time span " + std::to_string(span) + " is not a multiple of the step " +
                          std::to_string(dt));
    }
    return n;
}

Vec rk4_step(const TimeField& field, double t, const Vec& x, double dt) {
    if (!(dt > 0.0)) throw ConfigError("rk4_step: dt must be positive");
    return rk4(field, t, x, dt);
}

RunRecord solve_reference(const FastSlowSystem& sys, const Vec& x0, const Vec& y0, double dt_ref, double T,
                          long long sample_every) {
    if (x0.size() != sys.n_x || y0.size() != sys.n_y) throw DimensionError("solve_reference: bad initial state");
    if (sample_every < 1) throw ConfigError("sample stride must be positive");
    const auto start = Clock::now();
    const long long n = step_count(0.0, T, dt_ref);
    const int nx = sys.n_x;
    const int ny = sys.n_y;
    const double inv_eps = 1.0 / sys.eps;

    RunRecord rec;
    rec.method = "reference";
    EvalCounters& c = rec.counters;
    auto field = [&](double, const Vec& z) -> Vec {
        Vec dz(nx + ny);
        const Vec x = z.head(nx);
        const Vec y = z.tail(ny);
        dz.head(nx) = eval_f(sys, x, y, c);
        dz.tail(ny) = inv_eps * eval_g(sys, x, y, c);
        return dz;
    };
    Vec z(nx + ny);
    z << x0, y0;
    auto sample = [&](double t) {
        rec.times.push_back(t);
        rec.states.push_back(z.head(nx));
        rec.fast_states.push_back(z.tail(ny));
        rec.cumulative.push_back(c);
    };
    sample(0.0);
    for (long long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt_ref;
        z = rk4(field, t, z, dt_ref);
        if (!(z.lpNorm<Eigen::Infinity>() < 1e6)) {
            throw NumericalError("reference solver unstable at t = " + std::to_string(t + dt_ref));
        }
        if ((i + 1) % sample_every == 0) sample(static_cast<double>(i + 1) * dt_ref);
    }
    if (n % sample_every != 0) sample(static_cast<double>(n) * dt_ref);
    rec.wall_ms = elapsed_ms(start);
    std::ostringstream os;
    os.precision(17);
    os << "dt_ref=" << dt_ref << " T=" << T;
    rec.config_echo = os.str();
    return rec;
}

LayerResult solve_initial_layer(const FastSlowSystem& sys, const Vec& x0, const Vec& y0, const MgtConfig& cfg,
                                ManifoldEvaluator& ev) {
    if (x0.size() != sys.n_x || y0.size() != sys.n_y) throw DimensionError("initial layer: bad initial state");
    const EvalCounters before = ev.counters();
    LayerResult res;
    res.x = x0;
    res.y = y0;
    ev.seed_warm_start(y0);
    const int target = cfg.k + cfg.L;
    res.threshold = cfg.layer.c_layer * std::pow(sys.eps, target + 1);
    if (!cfg.layer.enabled) return res;

    const long long stride = step_count(0.0, cfg.dt, cfg.dt_coupled);
    if (stride < 1) throw ConfigError("dt_coupled must divide dt");
    const double t_cap = cfg.layer.c_time * sys.eps * std::abs(std::log(sys.eps));
    const int nx = sys.n_x;
    const int ny = sys.n_y;
    const double inv_eps = 1.0 / sys.eps;
    EvalCounters& c = ev.counters();
    auto field = [&](double, const Vec& z) -> Vec {
        Vec dz(nx + ny);
        const Vec x = z.head(nx);
        const Vec y = z.tail(ny);
        dz.head(nx) = eval_f(sys, x, y, c);
        dz.tail(ny) = inv_eps * eval_g(sys, x, y, c);
        return dz;
    };

    Vec z(nx + ny);
    z << x0, y0;
    long long fine = 0;
    for (;;) {
        const Vec x = z.head(nx);
        const Vec y = z.tail(ny);
        const double t = static_cast<double>(fine) * cfg.dt;
        res.residual = (y - ev.gamma(target, x)).norm();
        res.t_exit = t;
        res.x = x;
        res.y = y;
        if (res.residual <= res.threshold) break;
        if (t >= t_cap) {
            res.warning = res.residual > 10.0 * res.threshold;
            break;
        }
        for (long long s = 0; s < stride; ++s) {
            z = rk4(field, t + static_cast<double>(s) * cfg.dt_coupled, z, cfg.dt_coupled);
            ++res.steps;
        }
        if (!(z.lpNorm<Eigen::Infinity>() < 1e6)) throw NumericalError("initial layer: coupled solver unstable");
        ++fine;
    }
    res.cost = ev.counters() - before;
    return res;
}

RunRecord solve_hmm(const FastSlowSystem& sys, int k, const Vec& x_start, double dt, double t_start, double T,
                    ManifoldEvaluator& ev) {
    if (x_start.size() != sys.n_x) throw DimensionError("solve_hmm: bad initial state");
    if (k < 0 || k > ev.max_order()) throw ConfigError("solve_hmm: order outside evaluator range");
    const auto start = Clock::now();
    const long long n = step_count(t_start, T, dt);
    const EvalCounters base = ev.counters();

    RunRecord rec;
    rec.method = "hmm";
    rec.k = k;
    auto field = [&](double, const Vec& x) -> Vec { return ev.force(k, x); };
    Vec x = x_start;
    record(rec, t_start, x, ev.counters() - base);
    for (long long i = 0; i < n; ++i) {
        const double t = t_start + static_cast<double>(i) * dt;
        x = rk4(field, t, x, dt);
        record(rec, t_start + static_cast<double>(i + 1) * dt, x, ev.counters() - base);
    }
    rec.counters = ev.counters() - base;
    rec.wall_ms = elapsed_ms(start);
    std::ostringstream os;
    os.precision(17);
    os << "k=" << k << " dt=" << dt << " T=" << T << " eta=" << ev.eta()
       << " inverter=" << to_string(ev.inverter().method);
    rec.config_echo = os.str();
    return rec;
}

RunRecord solve_two_grid(const FastSlowSystem& sys, const MgtConfig& cfg, const Vec& x_start, double t_start,
                         ManifoldEvaluator& ev) {
    if (cfg.L != 1) throw ConfigError("two-grid solver requires L = 1");
    RunRecord rec = solve_mgt(sys, cfg, x_start, t_start, ev);
    rec.method = "twogrid";
    return rec;
}

RunRecord solve_mgt(const FastSlowSystem& sys, const MgtConfig& cfg, const Vec& x_start, double t_start,
                    ManifoldEvaluator& ev) {
    cfg.validate(ev.max_order());
    if (cfg.L < 1) throw ConfigError("multigrid solver requires L >= 1");
    if (x_start.size() != sys.n_x) throw DimensionError("solve_mgt: bad initial state");
    const auto start = Clock::now();
    const long long n_steps = step_count(t_start, cfg.T, cfg.dt);
    const EvalCounters base = ev.counters();
    const GridHierarchy grid = cfg.grid();
    const int k = cfg.k;
    const int L = cfg.L;
    const bool manifold = cfg.strategy == CorrectionStrategy::Manifold;

    RunRecord rec;
    rec.method = "mgt";
    rec.k = k;
    rec.L = L;
    rec.config_echo = echo(cfg);

    // history[l - 1] holds the stencil of level l
    std::vector<StencilHistory> history(static_cast<std::size_t>(L),
                                        StencilHistory(static_cast<std::size_t>(cfg.m) + 1));
    auto extrapolants_above = [&](int level, double t, Vec acc) -> Vec {
        for (int l = level + 1; l <= L; ++l) acc += history[static_cast<std::size_t>(l) - 1].evaluate(t);
        return acc;
    };
    // Time coordinates of stencils are taken relative to t_start.
    auto local = [&](double t) { return t - t_start; };

    const long long n_warm = cfg.mode == CorrectionMode::Extrapolate ? cfg.m * grid.stride(L) : 0;

    Vec x = x_start;
    record(rec, t_start, x, ev.counters() - base);
    for (long long n = 0; n < n_steps; ++n) {
        const double t = t_start + static_cast<double>(n) * cfg.dt;

        if (cfg.mode == CorrectionMode::Zero) {
            x = rk4([&](double, const Vec& xs) -> Vec { return ev.force(k, xs); }, t, x, cfg.dt);
        } else if (cfg.mode == CorrectionMode::ExactEveryStage) {
            auto field = [&](double, const Vec& xs) -> Vec {
                if (manifold) {
                    const auto g = ev.gamma_ladder(k + 1, xs);
                    return ev.eval_f(xs, g[k] + (g[k + 1] - g[k]));
                }
                const auto ladder = ev.force_ladder(k + L, xs);
                Vec acc = ladder[k];
                for (int l = 1; l <= L; ++l) acc += correction(k + l, ladder);
                return acc;
            };
            x = rk4(field, t, x, cfg.dt);
        } else {
            const bool warm = n < n_warm;
            const int node_level = grid.highest_level(n);
            if (warm || node_level >= 1) {
                // exact order k + top on this step
                const int top = warm ? L : node_level;
                Vec k1;
                if (manifold) {
                    const auto g = ev.gamma_ladder(k + top, x);
                    if (node_level >= 1) history[0].push(local(t), g[k + 1] - g[k]);
                    k1 = ev.eval_f(x, g[k + top]);
                } else {
                    const auto ladder = ev.force_ladder(k + top, x);
                    for (int l = 1; l <= node_level; ++l) {
                        history[static_cast<std::size_t>(l) - 1].push(local(t), correction(k + l, ladder));
                    }
                    k1 = extrapolants_above(top, local(t), ladder[k + top]);
                }
                auto field = [&](double ts, const Vec& xs) -> Vec {
                    if (manifold) return ev.eval_f(xs, ev.gamma(k + top, xs));
                    return extrapolants_above(top, local(ts), ev.force(k + top, xs));
                };
                x = rk4_from_k1(field, t, x, cfg.dt, k1);
            } else {
                auto field = [&](double ts, const Vec& xs) -> Vec {
                    if (manifold) {
                        const Vec y = ev.gamma(k, xs) + history[0].evaluate(local(ts));
                        return ev.eval_f(xs, y);
                    }
                    return extrapolants_above(0, local(ts), ev.force(k, xs));
                };
                x = rk4(field, t, x, cfg.dt);
            }
        }
        record(rec, t_start + static_cast<double>(n + 1) * cfg.dt, x, ev.counters() - base);
    }
    rec.counters = ev.counters() - base;
    rec.wall_ms = elapsed_ms(start);
    return rec;
}

ParameterSuggestion suggest_parameters(int k, int L, int q, double eps) {
    if (q < 1) throw ConfigError("macro-solver order q must be at least 1");
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
    if (k < 0 || L < 0) throw ConfigError("k and L must be non-negative");
    ParameterSuggestion s;
    if (L == 0) {
        s.m = q - 1;
        s.P = 1;
        s.dt_hint = std::pow(eps, static_cast<double>(k + 1) / q);
        s.tau_hints = {s.dt_hint};
        return s;
    }
    const double m_plus_one = static_cast<double>(q) * (L + 1) / static_cast<double>(k + L + 1);
    s.m = std::clamp(static_cast<int>(std::lround(m_plus_one)) - 1, 0, q - 1);
    const double mp1 = s.m + 1.0;
    s.P = std::max(2, static_cast<int>(std::ceil(std::pow(eps, -1.0 / mp1) - 1e-12)));
    for (int l = 0; l <= L; ++l) s.tau_hints.push_back(std::pow(eps, (L + 1.0 - l) / mp1));
    s.dt_hint = s.tau_hints.front();
    s.balance_warning = static_cast<double>(k) < s.m / mp1 * L - 1.0;
    return s;
}

}  // namespace mgthmm
