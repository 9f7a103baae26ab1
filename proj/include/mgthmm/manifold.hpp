#pragma once

#include <optional>
#include <vector>

#include "mgthmm/common.hpp"
#include "mgthmm/micro.hpp"
#include "mgthmm/system.hpp"

namespace mgthmm {

/// Recursive evaluator of the manifold approximations Gamma_k and the
/// effective slow forces F_k(x) = f(x, Gamma_k(x)).
///
/// Gamma_0 solves g(x, y) = 0. Gamma_{k+1} solves
///     g(x, y) = eps * (Gamma_k(x + eta * f(x, Gamma_k(x))) - Gamma_k(x)) / eta,
/// a one-sided difference of Gamma_k along the slow field.
///
/// One top-level evaluation at x computes the whole "spine" Gamma_0(x), ...,
/// Gamma_k(x); each difference quotient spawns a spine of one order less at
/// the shifted point. Order k therefore opens 2^k micro-solver sessions.
///
/// Warm starts: the evaluator keeps the last accepted value per order and uses
/// it as the initial guess of the micro-solver. The cache is read-only during
/// one evaluation, so both points of a difference quotient start from the same
/// guesses and the quotient differentiates a smooth map of x.
///
/// Mutable per-run state (warm cache, counters); do not share across threads.
class ManifoldEvaluator {
public:
    /// `eta <= 0` selects eta = sqrt(machine eps) * (1 + |x|) per evaluation.
    ManifoldEvaluator(const FastSlowSystem& sys, InverterSpec inverter, double eta, int max_order);

    const FastSlowSystem& system() const { return *sys_; }
    const InverterSpec& inverter() const { return inverter_; }
    double eta() const { return eta_; }
    int max_order() const { return max_order_; }

    EvalCounters& counters() { return counters_; }
    const EvalCounters& counters() const { return counters_; }

    /// Initial guess used for orders without a cached value yet.
    void seed_warm_start(const Vec& y);
    void set_warm_cache_enabled(bool enabled);
    bool warm_cache_enabled() const { return cache_enabled_; }
    void clear_warm_cache();

    Vec gamma(int k, const Vec& x);
    /// Gamma_0(x), ..., Gamma_k(x) from one recursive evaluation.
    std::vector<Vec> gamma_ladder(int k, const Vec& x);

    Vec force(int k, const Vec& x);
    /// F_0(x), ..., F_{k_hi}(x) at the micro cost of force(k_hi, x).
    std::vector<Vec> force_ladder(int k_hi, const Vec& x);

    /// Instrumented f(x, y) sharing this evaluator's counters.
    Vec eval_f(const Vec& x, const Vec& y);

private:
    std::vector<Vec> spine(int k, const Vec& x);
    const Vec& guess(int order, const std::vector<Vec>& partial) const;
    void accept(const std::vector<Vec>& values);
    void check_order(int k) const;
    double step_for(const Vec& x) const;

    const FastSlowSystem* sys_;
    InverterSpec inverter_;
    double eta_;
    int max_order_;
    bool cache_enabled_ = true;
    Vec seed_;
    std::vector<std::optional<Vec>> cache_;
    EvalCounters counters_;
};

/// delta_j = F_j - F_{j-1} from a force ladder. Throws ConfigError when the
/// ladder does not hold both orders.
Vec correction(int j, const std::vector<Vec>& ladder);

}  // namespace mgthmm
