#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgthmm/common.hpp"

namespace mgthmm {

enum class ProblemId { LinearDrift, LinearRotation, CubicChua, Lorenz96, Robertson, Enzyme };

std::string_view to_string(ProblemId id);
/// Case-insensitive; also accepts dashed forms such as "linear-drift".
ProblemId parse_problem_id(std::string_view name);
std::vector<ProblemId> all_problems();

/// Named scalar parameters of a benchmark problem.
using ParameterSet = std::map<std::string, double>;

/// Default parameter set of a problem. The key set is exactly the set of
/// parameters that may be overridden.
ParameterSet default_parameters(ProblemId id);

/// Axis-aligned sampling box for randomized checks.
struct OperatingBox {
    Vec x_lo, x_hi;
    Vec y_lo, y_hi;
};

/// Fast-slow system dx/dt = f(x, y), dy/dt = g(x, y) / eps.
///
/// Values are immutable once built by make_problem and can be shared between
/// threads. Evaluation counters are kept by the caller.
struct FastSlowSystem {
    using Field = std::function<Vec(const Vec& x, const Vec& y)>;

    ProblemId id{};
    int n_x = 0;
    int n_y = 0;
    double eps = 0.0;
    ParameterSet params;

    Field f;
    Field g;

    // Optional closed forms; empty when the problem has none.
    std::function<Vec(const Vec& x)> analytic_gamma;
    std::function<Vec(int order, const Vec& x)> analytic_force;
    int analytic_force_max_order = -1;
    /// Solves g(x, y) = r for y.
    Field exact_inverter;
    /// d g / d y, used by the Newton micro-solver when present.
    std::function<Mat(const Vec& x, const Vec& y)> g_jacobian_y;
    std::optional<double> beta_hint;

    Vec x0;
    Vec y0;
    OperatingBox box;

    bool has_analytic_gamma() const { return static_cast<bool>(analytic_gamma); }
    bool has_exact_inverter() const { return static_cast<bool>(exact_inverter); }
};

/// Builds a benchmark problem. Throws ConfigError for eps <= 0 or for an
/// override naming a parameter the problem does not have.
FastSlowSystem make_problem(ProblemId id, double eps, const ParameterSet& overrides = {});

/// Instrumented field evaluations; bump `counters.f_evals` / `g_evals`.
Vec eval_f(const FastSlowSystem& sys, const Vec& x, const Vec& y, EvalCounters& counters);
Vec eval_g(const FastSlowSystem& sys, const Vec& x, const Vec& y, EvalCounters& counters);

/// Closed-form effective slow force F_k(x). Throws ConfigError when the
/// problem has none for this order.
Vec analytic_slow_force(const FastSlowSystem& sys, int order, const Vec& x);

}  // namespace mgthmm
