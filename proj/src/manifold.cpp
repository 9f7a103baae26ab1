#include "mgthmm/manifold.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mgthmm {

ManifoldEvaluator::ManifoldEvaluator(const FastSlowSystem& sys, InverterSpec inverter, double eta, int max_order)
    : sys_(&sys), inverter_(inverter), eta_(eta), max_order_(max_order) {
    if (max_order < 0) throw ConfigError("max_order must be non-negative");
    if (!std::isfinite(eta)) throw ConfigError("eta must be finite");
    validate(inverter_, sys);
    seed_ = sys.y0.size() == sys.n_y ? sys.y0 : Vec::Zero(sys.n_y);
    cache_.resize(static_cast<std::size_t>(max_order) + 1);
}

void ManifoldEvaluator::seed_warm_start(const Vec& y) {
    if (y.size() != sys_->n_y) throw DimensionError("seed_warm_start: wrong dimension");
    seed_ = y;
}

void ManifoldEvaluator::set_warm_cache_enabled(bool enabled) {
    cache_enabled_ = enabled;
    if (!enabled) clear_warm_cache();
}

void ManifoldEvaluator::clear_warm_cache() {
    for (auto& c : cache_) c.reset();
}

void ManifoldEvaluator::check_order(int k) const {
    if (k < 0 || k > max_order_) {
        throw ConfigError("manifold order " + std::to_string(k) + " outside [0, " + std::to_string(max_order_) + "]");
    }
}

double ManifoldEvaluator::step_for(const Vec& x) const {
    if (eta_ > 0.0) return eta_;
    return std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + x.norm());
}

const Vec& ManifoldEvaluator::guess(int order, const std::vector<Vec>& partial) const {
    const auto& cached = cache_[static_cast<std::size_t>(order)];
    if (cache_enabled_ && cached) return *cached;
    if (order > 0) return partial[static_cast<std::size_t>(order) - 1];
    return seed_;
}

std::vector<Vec> ManifoldEvaluator::spine(int k, const Vec& x) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(k) + 1);
    const Vec zero = Vec::Zero(sys_->n_y);
    out.push_back(invert_g(*sys_, x, zero, inverter_, guess(0, out), counters_, /*new_session=*/true));
    const double eta = step_for(x);
    for (int j = 1; j <= k; ++j) {
        const Vec& lower = out.back();
        const Vec shifted = x + eta * mgthmm::eval_f(*sys_, x, lower, counters_);
        const std::vector<Vec> sub = spine(j - 1, shifted);
        const Vec rhs = sys_->eps * (sub.back() - lower) / eta;
        if (!rhs.allFinite()) throw NumericalError("manifold: non-finite difference quotient");
        out.push_back(invert_g(*sys_, x, rhs, inverter_, guess(j, out), counters_, /*new_session=*/false));
    }
    return out;
}

void ManifoldEvaluator::accept(const std::vector<Vec>& values) {
    if (!cache_enabled_) return;
    for (std::size_t j = 0; j < values.size(); ++j) cache_[j] = values[j];
}

std::vector<Vec> ManifoldEvaluator::gamma_ladder(int k, const Vec& x) {
    check_order(k);
    if (x.size() != sys_->n_x) throw DimensionError("manifold: wrong x dimension");
    auto values = spine(k, x);
    accept(values);
    return values;
}

Vec ManifoldEvaluator::gamma(int k, const Vec& x) { return gamma_ladder(k, x).back(); }

Vec ManifoldEvaluator::force(int k, const Vec& x) { return eval_f(x, gamma(k, x)); }

std::vector<Vec> ManifoldEvaluator::force_ladder(int k_hi, const Vec& x) {
    const auto gammas = gamma_ladder(k_hi, x);
    std::vector<Vec> forces;
    forces.reserve(gammas.size());
    for (const auto& y : gammas) forces.push_back(eval_f(x, y));
    return forces;
}

Vec ManifoldEvaluator::eval_f(const Vec& x, const Vec& y) {
    Vec out = mgthmm::eval_f(*sys_, x, y, counters_);
    if (!out.allFinite()) throw NumericalError("non-finite slow field value");
    return out;
}

Vec correction(int j, const std::vector<Vec>& ladder) {
    if (j < 1 || static_cast<std::size_t>(j) >= ladder.size()) {
        throw ConfigError("correction: ladder lacks orders " + std::to_string(j - 1) + " and " + std::to_string(j));
    }
    return ladder[static_cast<std::size_t>(j)] - ladder[static_cast<std::size_t>(j) - 1];
}

}  // namespace mgthmm
