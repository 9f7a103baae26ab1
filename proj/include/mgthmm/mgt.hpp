#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mgthmm/common.hpp"
#include "mgthmm/manifold.hpp"
#include "mgthmm/micro.hpp"
#include "mgthmm/system.hpp"

namespace mgthmm {

/// Nested time grids G_0 > G_1 > ... > G_L with steps tau_l = P^l * dt.
/// Fine node n (counted from the start of the run) lies on G_l iff P^l | n.
struct GridHierarchy {
    double dt = 0.0;
    int P = 2;
    int L = 0;

    double tau(int level) const;
    long long stride(int level) const;
    bool on_level(long long n, int level) const { return n % stride(level) == 0; }
    /// Largest l in [0, L] with node n on G_l.
    int highest_level(long long n) const;
};

enum class CorrectionStrategy {
    /// Extrapolate delta_{k+l} = F_{k+l} - F_{k+l-1} and add it to F_k.
    Field,
    /// Extrapolate Gamma_{k+1} - Gamma_k and add it to Gamma_k inside f (L = 1 only).
    Manifold,
};

std::string_view to_string(CorrectionStrategy s);
CorrectionStrategy parse_strategy(std::string_view name);

/// How the correction terms are realized. The two non-default modes are test
/// hooks: ExactEveryStage evaluates every delta exactly at each RK stage,
/// Zero drops all corrections.
enum class CorrectionMode { Extrapolate, ExactEveryStage, Zero };

/// Initial-layer handoff: integrate the full system until
/// |y - Gamma_{k+L}(x)| <= c_layer * eps^(k+L+1) or t >= c_time * eps * |log eps|.
struct LayerPolicy {
    bool enabled = true;
    double c_layer = 5.0;
    double c_time = 10.0;
};

struct MgtConfig {
    int k = 0;
    int L = 1;
    int P = 4;
    int m = 3;
    CorrectionStrategy strategy = CorrectionStrategy::Field;
    double dt = 1e-3;
    double dt_coupled = 1e-4;
    double T = 1.0;
    LayerPolicy layer;
    InverterSpec inverter;
    /// Finite-difference step; <= 0 selects sqrt(machine eps) * (1 + |x|).
    double eta = 1e-5;
    CorrectionMode mode = CorrectionMode::Extrapolate;

    GridHierarchy grid() const { return {dt, P, L}; }
    /// Throws ConfigError on violated invariants. `max_order` is the deepest
    /// manifold order the evaluator supports.
    void validate(int max_order) const;
};

struct LayerResult {
    double t_exit = 0.0;
    Vec x;
    Vec y;
    double residual = 0.0;
    double threshold = 0.0;
    /// Time cap reached with the residual still above 10x the threshold.
    bool warning = false;
    long long steps = 0;
    EvalCounters cost;
};

/// Trajectory samples and cost of one solver run.
struct RunRecord {
    std::string method;
    int k = 0;
    int L = 0;
    std::vector<double> times;
    std::vector<Vec> states;
    /// Fast-variable samples; filled by solve_reference only.
    std::vector<Vec> fast_states;
    /// Cost spent up to each sample (excluding the initial layer).
    std::vector<EvalCounters> cumulative;
    EvalCounters counters;
    double wall_ms = 0.0;
    LayerResult layer;
    std::string config_echo;

    const Vec& final_state() const { return states.back(); }
};

using TimeField = std::function<Vec(double t, const Vec& x)>;

/// Classic four-stage Runge-Kutta step; stage times t, t + dt/2, t + dt/2, t + dt.
Vec rk4_step(const TimeField& field, double t, const Vec& x, double dt);

/// RK4 on the full stiff system from t = 0 to T with step dt_ref; samples every
/// `sample_every` steps. Throws NumericalError if |state| exceeds 1e6.
RunRecord solve_reference(const FastSlowSystem& sys, const Vec& x0, const Vec& y0, double dt_ref, double T,
                          long long sample_every = 1);

/// Integrates the full system with cfg.dt_coupled until the fast state is
/// within the layer threshold of Gamma_{k+L}. Exit is tested at multiples of
/// cfg.dt, so the handoff time lies on the fine grid.
LayerResult solve_initial_layer(const FastSlowSystem& sys, const Vec& x0, const Vec& y0, const MgtConfig& cfg,
                                ManifoldEvaluator& ev);

/// RK4 on dX/dt = F_k(X) from t_start to T.
RunRecord solve_hmm(const FastSlowSystem& sys, int k, const Vec& x_start, double dt, double t_start, double T,
                    ManifoldEvaluator& ev);

/// Two-grid scheme; cfg.L must be 1.
RunRecord solve_two_grid(const FastSlowSystem& sys, const MgtConfig& cfg, const Vec& x_start, double t_start,
                         ManifoldEvaluator& ev);

/// Multigrid-in-time scheme
///     dX/dt = F_k(X) + sum_{l=1..L} E[delta_{k+l}; stencil_l](t).
///
/// Warm-up integrates the exact F_{k+L} until level L holds m+1 nodes. After
/// that, a fine step starting on a node of G_l (l the highest such level)
/// integrates F_{k+l} exactly and adds extrapolants of the levels above l;
/// the ladder at the node's first stage also feeds the stencils of levels
/// 1..l. All other steps integrate F_k plus the extrapolants of every level.
RunRecord solve_mgt(const FastSlowSystem& sys, const MgtConfig& cfg, const Vec& x_start, double t_start,
                    ManifoldEvaluator& ev);

struct ParameterSuggestion {
    int m = 0;
    int P = 2;
    double dt_hint = 0.0;
    /// Upper hints for tau_l, l = 0..L.
    std::vector<double> tau_hints;
    /// Set when k >= m/(m+1) * L - 1 fails.
    bool balance_warning = false;
};

/// Balances modeling, macro-discretization (order q) and extrapolation
/// errors for a target accuracy eps^(k+L+1).
ParameterSuggestion suggest_parameters(int k, int L, int q, double eps);

/// Number of steps of size dt covering [t0, t1]; throws ConfigError unless
/// the span is an integer multiple of dt.
long long step_count(double t0, double t1, double dt);

}  // namespace mgthmm
