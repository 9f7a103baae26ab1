#pragma once

#include <string_view>

#include "mgthmm/common.hpp"
#include "mgthmm/system.hpp"

namespace mgthmm {

enum class InverterMethod { Relaxation, Newton, Exact };

std::string_view to_string(InverterMethod m);
InverterMethod parse_inverter_method(std::string_view name);

/// Parameters of the micro-solver for g(x, y) = r.
///
/// Relaxation runs `relax_steps` forward-Euler steps of the shifted fast
/// dynamics with step relax_dt_factor * eps; convergence needs
/// exp(-beta * relax_dt_factor * relax_steps) below the wanted residual.
struct InverterSpec {
    InverterMethod method = InverterMethod::Relaxation;
    double relax_dt_factor = 0.1;
    int relax_steps = 10;
    double newton_tol = 1e-12;
    int newton_max_iter = 50;
    /// Column step of the finite-difference Jacobian is fd_jacobian_step * (1 + |y_i|).
    double fd_jacobian_step = 1e-7;

    static InverterSpec relaxation(double factor, int steps) {
        InverterSpec s;
        s.method = InverterMethod::Relaxation;
        s.relax_dt_factor = factor;
        s.relax_steps = steps;
        return s;
    }
    static InverterSpec newton() {
        InverterSpec s;
        s.method = InverterMethod::Newton;
        return s;
    }
    static InverterSpec exact() {
        InverterSpec s;
        s.method = InverterMethod::Exact;
        return s;
    }
};

/// Throws ConfigError on non-positive parameters or when Exact is requested
/// for a system without a closed-form inverter.
void validate(const InverterSpec& spec, const FastSlowSystem& sys);

/// Solves g(x, y) = r for y, starting from `y_guess` (ignored by Exact).
///
/// Counts one solve in `counters.micro_solves`; when `new_session` is set the
/// call also opens a micro-solver session at x (`counters.micro_calls`).
Vec invert_g(const FastSlowSystem& sys, const Vec& x, const Vec& r, const InverterSpec& spec,
             const Vec& y_guess, EvalCounters& counters, bool new_session = true);

}  // namespace mgthmm
