#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mgthmm/common.hpp"

namespace mgthmm {

/// Nodes and nodal values of a Lagrange extrapolant.
struct Stencil {
    std::vector<double> nodes;
    std::vector<Vec> values;

    /// Throws ConfigError unless nodes are strictly increasing and there is one
    /// value of uniform size per node.
    void validate() const;
};

/// Barycentric weights w_i = 1 / prod_{j != i} (t_i - t_j) of a node set.
class LagrangeBasis {
public:
    explicit LagrangeBasis(std::span<const double> nodes);

    std::size_t size() const { return nodes_.size(); }
    /// Values of the Lagrange basis polynomials at t (exact 0/1 at nodes).
    std::vector<double> evaluate(double t) const;
    void evaluate(double t, std::span<double> out) const;

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Value at t of the degree |nodes|-1 polynomial through the stencil.
Vec extrapolate(const Stencil& st, double t);

/// sup over a 1000-point uniform grid of [lo, hi] of the Lebesgue function
/// sum_i |l_i(t)|. Throws ConfigError for an empty node set or lo > hi.
double lebesgue_constant(std::span<const double> nodes, double lo, double hi);

/// Fixed-capacity window of the most recent (time, value) samples.
class StencilHistory {
public:
    explicit StencilHistory(std::size_t capacity);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }
    bool full() const { return entries_.size() == capacity_; }
    bool empty() const { return entries_.empty(); }

    /// Appends (t, v), evicting the oldest entry at capacity. Throws
    /// ConfigError if t does not exceed the last stored time.
    void push(double t, Vec v);
    Stencil as_stencil() const;

    /// Extrapolated value at t over the current window.
    Vec evaluate(double t) const;

private:
    std::size_t capacity_;
    std::deque<std::pair<double, Vec>> entries_;
    std::optional<LagrangeBasis> basis_;
};

}  // namespace mgthmm
