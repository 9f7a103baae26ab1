#include "mgthmm/extrap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mgthmm {

void Stencil::validate() const {
    if (nodes.empty()) throw ConfigError("stencil needs at least one node");
    if (values.size() != nodes.size()) throw ConfigError("stencil needs one value per node");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (!(nodes[i] > nodes[i - 1])) throw ConfigError("stencil nodes must be strictly increasing");
    }
    for (const auto& v : values) {
        if (v.size() != values.front().size()) throw ConfigError("stencil values differ in size");
    }
}

LagrangeBasis::LagrangeBasis(std::span<const double> nodes) : nodes_(nodes.begin(), nodes.end()) {
    if (nodes_.empty()) throw ConfigError("Lagrange basis needs at least one node");
    weights_.assign(nodes_.size(), 1.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            if (i == j) continue;
            const double d = nodes_[i] - nodes_[j];
            if (d == 0.0) throw ConfigError("duplicate stencil node");
            weights_[i] /= d;
        }
    }
}

void LagrangeBasis::evaluate(double t, std::span<double> out) const {
    // first (modified Lagrange) form: l_i(t) = w_i * prod_{j != i} (t - t_j)
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (t == nodes_[i]) {
            for (std::size_t j = 0; j < n; ++j) out[j] = i == j ? 1.0 : 0.0;
            return;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double p = weights_[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) p *= t - nodes_[j];
        }
        out[i] = p;
    }
}

std::vector<double> LagrangeBasis::evaluate(double t) const {
    std::vector<double> out(nodes_.size());
    evaluate(t, out);
    return out;
}

Vec extrapolate(const Stencil& st, double t) {
    st.validate();
    const LagrangeBasis basis(st.nodes);
    const auto l = basis.evaluate(t);
    Vec out = Vec::Zero(st.values.front().size());
    for (std::size_t i = 0; i < l.size(); ++i) out += l[i] * st.values[i];
    return out;
}

double lebesgue_constant(std::span<const double> nodes, double lo, double hi) {
    if (nodes.empty()) throw ConfigError("lebesgue_constant: no nodes");
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ConfigError("lebesgue_constant: empty interval");
    }
    const LagrangeBasis basis(nodes);
    constexpr int kGrid = 1000;
    std::vector<double> l(nodes.size());
    double sup = 0.0;
    for (int i = 0; i < kGrid; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / (kGrid - 1);
        basis.evaluate(t, l);
        double s = 0.0;
        for (double v : l) s += std::abs(v);
        sup = std::max(sup, s);
    }
    return sup;
}

StencilHistory::StencilHistory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("stencil history capacity must be positive");
}

void StencilHistory::push(double t, Vec v) {
    if (!entries_.empty()) {
        if (!(t > entries_.back().first)) throw ConfigError("stencil history: non-increasing time");
        if (v.size() != entries_.back().second.size()) throw ConfigError("stencil history: value size changed");
    }
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.emplace_back(t, std::move(v));
    std::vector<double> nodes;
    nodes.reserve(entries_.size());
    for (const auto& e : entries_) nodes.push_back(e.first);
    basis_.emplace(nodes);
}

Stencil StencilHistory::as_stencil() const {
    Stencil st;
    for (const auto& [t, v] : entries_) {
        st.nodes.push_back(t);
        st.values.push_back(v);
    }
    return st;
}

Vec StencilHistory::evaluate(double t) const {
    if (entries_.empty()) throw ConfigError("stencil history is empty");
    double l[16];
    std::vector<double> heap;
    std::span<double> buf;
    if (entries_.size() <= 16) {
        buf = std::span<double>(l, entries_.size());
    } else {
        heap.resize(entries_.size());
        buf = heap;
    }
    basis_->evaluate(t, buf);
    Vec out = Vec::Zero(entries_.front().second.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) out += buf[i] * entries_[i].second;
    return out;
}

}  // namespace mgthmm
