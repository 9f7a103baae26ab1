#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mgthmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition violation, detected before compute.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Vector sizes that do not match the system dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, failed convergence or detected instability.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Cost counters of one solver run.
///
/// `micro_calls` counts micro-solver sessions, i.e. distinct slow states at
/// which g(x, .) is inverted. A session may solve several right-hand sides at
/// the same x (one per manifold order); every individual solve is counted in
/// `micro_solves`, and the fast-field work behind them in `g_evals`.
struct EvalCounters {
    std::uint64_t micro_calls = 0;
    std::uint64_t micro_solves = 0;
    std::uint64_t f_evals = 0;
    std::uint64_t g_evals = 0;

    EvalCounters& operator+=(const EvalCounters& o) {
        micro_calls += o.micro_calls;
        micro_solves += o.micro_solves;
        f_evals += o.f_evals;
        g_evals += o.g_evals;
        return *this;
    }
};

inline EvalCounters operator-(EvalCounters a, const EvalCounters& b) {
    a.micro_calls -= b.micro_calls;
    a.micro_solves -= b.micro_solves;
    a.f_evals -= b.f_evals;
    a.g_evals -= b.g_evals;
    return a;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace mgthmm
