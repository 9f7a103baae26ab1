#include "mgthmm/micro.hpp"

#include <cctype>
#include <cmath>
#include <string>

namespace mgthmm {

std::string_view to_string(InverterMethod m) {
    switch (m) {
        case InverterMethod::Relaxation: return "relaxation";
        case InverterMethod::Newton: return "newton";
        case InverterMethod::Exact: return "exact";
    }
    return "unknown";
}

InverterMethod parse_inverter_method(std::string_view name) {
    std::string key;
    for (char c : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (key == "relaxation") return InverterMethod::Relaxation;
    if (key == "newton") return InverterMethod::Newton;
    if (key == "exact") return InverterMethod::Exact;
    throw ConfigError("unknown inverter method '" + std::string(name) + "'");
}

void validate(const InverterSpec& spec, const FastSlowSystem& sys) {
    switch (spec.method) {
        case InverterMethod::Relaxation:
            if (!(spec.relax_dt_factor > 0.0) || spec.relax_steps < 1) {
                throw ConfigError("relaxation inverter needs relax_dt_factor > 0 and relax_steps >= 1");
            }
            break;
        case InverterMethod::Newton:
            if (!(spec.newton_tol > 0.0) || spec.newton_max_iter < 1 || !(spec.fd_jacobian_step > 0.0)) {
                throw ConfigError("newton inverter needs positive tolerance, iteration cap and fd step");
            }
            break;
        case InverterMethod::Exact:
            if (!sys.has_exact_inverter()) {
                throw ConfigError("exact inverter requested but " + std::string(to_string(sys.id)) +
                                  " has none");
            }
            break;
    }
}

namespace {

Vec relax(const FastSlowSystem& sys, const Vec& x, const Vec& r, const InverterSpec& spec, Vec y,
          EvalCounters& counters) {
    // y <- y + (dt / eps) (g(x, y) - r) with dt = factor * eps
    for (int i = 0; i < spec.relax_steps; ++i) {
        y += spec.relax_dt_factor * (eval_g(sys, x, y, counters) - r);
    }
    return y;
}

Mat fd_jacobian(const FastSlowSystem& sys, const Vec& x, const Vec& y, const Vec& g0, const InverterSpec& spec,
                EvalCounters& counters) {
    const auto n = y.size();
    Mat jac(n, n);
    Vec yp = y;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = spec.fd_jacobian_step * (1.0 + std::abs(y(i)));
        yp(i) = y(i) + h;
        const double step = yp(i) - y(i);
        jac.col(i) = (eval_g(sys, x, yp, counters) - g0) / step;
        yp(i) = y(i);
    }
    return jac;
}

Vec newton(const FastSlowSystem& sys, const Vec& x, const Vec& r, const InverterSpec& spec, Vec y,
           EvalCounters& counters) {
    Vec res = eval_g(sys, x, y, counters) - r;
    double norm = res.norm();
    for (int it = 0; it < spec.newton_max_iter; ++it) {
        if (norm <= spec.newton_tol) return y;
        const Mat jac = sys.g_jacobian_y ? sys.g_jacobian_y(x, y) : fd_jacobian(sys, x, y, res + r, spec, counters);
        const Vec step = jac.partialPivLu().solve(-res);
        if (!step.allFinite()) throw NumericalError("newton inverter: singular Jacobian");
        // backtracking on the residual norm
        double lambda = 1.0;
        for (int k = 0; k < 30; ++k) {
            Vec trial = y + lambda * step;
            Vec trial_res = eval_g(sys, x, trial, counters) - r;
            const double trial_norm = trial_res.norm();
            if (trial_res.allFinite() && (trial_norm < norm || k == 29)) {
                y = std::move(trial);
                res = std::move(trial_res);
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
    }
    if (!(norm <= spec.newton_tol)) {
        throw NumericalError("newton inverter did not converge: residual " + std::to_string(norm) + " after " +
                             std::to_string(spec.newton_max_iter) + " iterations");
    }
    return y;
}

}  // namespace

Vec invert_g(const FastSlowSystem& sys, const Vec& x, const Vec& r, const InverterSpec& spec,
             const Vec& y_guess, EvalCounters& counters, bool new_session) {
    if (x.size() != sys.n_x || r.size() != sys.n_y) throw DimensionError("invert_g: dimension mismatch");
    if (spec.method != InverterMethod::Exact && y_guess.size() != sys.n_y) {
        throw DimensionError("invert_g: initial guess has wrong dimension");
    }
    if (!x.allFinite() || !r.allFinite()) throw NumericalError("invert_g: non-finite input");
    if (new_session) ++counters.micro_calls;
    ++counters.micro_solves;

    Vec y;
    switch (spec.method) {
        case InverterMethod::Relaxation: y = relax(sys, x, r, spec, y_guess, counters); break;
        case InverterMethod::Newton: y = newton(sys, x, r, spec, y_guess, counters); break;
        case InverterMethod::Exact:
            if (!sys.has_exact_inverter()) throw ConfigError("exact inverter unavailable");
            y = sys.exact_inverter(x, r);
            break;
    }
    if (!y.allFinite()) throw NumericalError("invert_g: non-finite result");
    return y;
}

}  // namespace mgthmm
