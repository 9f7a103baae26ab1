#include "mgthmm/system.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace mgthmm {

namespace {

std::string normalize(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '-' || c == '_' || c == ' ') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// J = [[0, 1], [-1, 0]]
Vec apply_j(const Vec& v) {
    Vec out(2);
    out << v(1), -v(0);
    return out;
}

Vec constant(int n, double v) { return Vec::Constant(n, v); }

OperatingBox uniform_box(int n_x, int n_y, double x_lo, double x_hi, double y_lo, double y_hi) {
    return {constant(n_x, x_lo), constant(n_x, x_hi), constant(n_y, y_lo), constant(n_y, y_hi)};
}

void build_linear_drift(FastSlowSystem& s) {
    s.n_x = 2;
    s.n_y = 2;
    s.f = [](const Vec& x, const Vec& y) -> Vec { return x + y; };
    s.g = [](const Vec& x, const Vec& y) -> Vec { return -x + apply_j(x) - y; };
    s.analytic_gamma = [](const Vec& x) -> Vec { return apply_j(x) - x; };
    s.exact_inverter = [](const Vec& x, const Vec& r) -> Vec { return apply_j(x) - x - r; };
    s.g_jacobian_y = [](const Vec&, const Vec&) -> Mat { return -Mat::Identity(2, 2); };
    const double e = s.eps;
    s.analytic_force = [e](int k, const Vec& x) -> Vec {
        switch (k) {
            case 0: return apply_j(x);
            case 1: return e * x + (1.0 + e) * apply_j(x);
            case 2:
                return (e + 3.0 * e * e) * x + (1.0 + e - e * e - 2.0 * e * e * e) * apply_j(x);
            default: throw ConfigError("LinearDrift: no analytic force for order " + std::to_string(k));
        }
    };
    s.analytic_force_max_order = 2;
    s.beta_hint = 1.0;
    s.x0 = Vec(2);
    s.x0 << 1.0, 0.0;
    s.y0 = s.analytic_gamma(s.x0);
    s.box = uniform_box(2, 2, -2.0, 2.0, -2.0, 2.0);
}

void build_linear_rotation(FastSlowSystem& s) {
    s.n_x = 2;
    s.n_y = 2;
    s.f = [](const Vec&, const Vec& y) -> Vec { return -apply_j(y); };
    s.g = [](const Vec& x, const Vec& y) -> Vec { return x - y; };
    s.analytic_gamma = [](const Vec& x) -> Vec { return x; };
    s.exact_inverter = [](const Vec& x, const Vec& r) -> Vec { return x - r; };
    s.g_jacobian_y = [](const Vec&, const Vec&) -> Mat { return -Mat::Identity(2, 2); };
    s.beta_hint = 1.0;
    s.x0 = Vec(2);
    s.x0 << 1.0, 0.0;
    s.y0 = Vec(2);
    s.y0 << 0.9, 0.1;
    s.box = uniform_box(2, 2, -2.0, 2.0, -2.0, 2.0);
}

void build_chua(FastSlowSystem& s) {
    const double a = s.params.at("a");
    const double b = s.params.at("b");
    const double c1 = s.params.at("c1");
    const double c2 = s.params.at("c2");
    const double c3 = s.params.at("c3");
    s.n_x = 2;
    s.n_y = 1;
    s.f = [a, b](const Vec& x, const Vec& y) -> Vec {
        Vec out(2);
        out << -x(1), x(0) + a * x(1) - b * y(0);
        return out;
    };
    s.g = [c1, c2, c3](const Vec& x, const Vec& y) -> Vec {
        const double v = y(0);
        Vec out(1);
        out << x(1) - c3 * v * v * v - c2 * v * v - c1 * v;
        return out;
    };
    s.g_jacobian_y = [c1, c2, c3](const Vec&, const Vec& y) -> Mat {
        const double v = y(0);
        Mat out(1, 1);
        out(0, 0) = -(3.0 * c3 * v * v + 2.0 * c2 * v + c1);
        return out;
    };
    // min over y of 3 c3 y^2 + 2 c2 y + c1
    s.beta_hint = c1 - c2 * c2 / (3.0 * c3);
    s.x0 = Vec(2);
    s.x0 << 0.2, 0.0;
    s.y0 = Vec::Zero(1);
    s.box = uniform_box(2, 1, -1.0, 1.0, -1.0, 1.0);
}

int positive_int_param(const ParameterSet& p, const std::string& name) {
    const double v = p.at(name);
    if (v < 1.0 || std::floor(v) != v) {
        throw ConfigError("parameter '" + name + "' must be a positive integer");
    }
    return static_cast<int>(v);
}

void build_lorenz96(FastSlowSystem& s) {
    const int nj = positive_int_param(s.params, "J");
    const int nk = positive_int_param(s.params, "K");
    const double a = s.params.at("a");
    const double b = s.params.at("b");
    const double h = s.params.at("h");
    s.n_x = nk;
    s.n_y = nj * nk;
    // y is stored row-major by (k, j): y[k * J + j]
    s.f = [nj, nk, a, b, h](const Vec& x, const Vec& y) -> Vec {
        Vec out(nk);
        for (int k = 0; k < nk; ++k) {
            const double xm1 = x((k + nk - 1) % nk);
            const double xm2 = x((k + nk - 2) % nk);
            const double xp1 = x((k + 1) % nk);
            const double coupling = y.segment(k * nj, nj).sum();
            out(k) = -xm1 * (xm2 - xp1) - x(k) + a - h / b * coupling;
        }
        return out;
    };
    s.g = [nj, nk, b, h](const Vec& x, const Vec& y) -> Vec {
        Vec out(nj * nk);
        for (int k = 0; k < nk; ++k) {
            const int base = k * nj;
            for (int j = 0; j < nj; ++j) {
                const double yp1 = y(base + (j + 1) % nj);
                const double yp2 = y(base + (j + 2) % nj);
                const double ym1 = y(base + (j + nj - 1) % nj);
                out(base + j) = -b * yp1 * (yp2 - ym1) - y(base + j) + h / b * x(k);
            }
        }
        return out;
    };
    s.beta_hint = 1.0;
    s.x0 = Vec(nk);
    for (int k = 1; k <= nk; ++k) {
        const double z = (1.0 + 2.0 * k) / nk - 1.0;
        s.x0(k - 1) = z * (z - 1.0) * (z + 1.0);
    }
    s.y0 = Vec::Zero(nj * nk);
    // The fast variables stay within h |x| / b of the origin along trajectories.
    s.box = uniform_box(nk, nj * nk, -3.0, 3.0, -0.01, 0.01);
}

void build_robertson(FastSlowSystem& s) {
    const double ka = s.params.at("a");
    const double kb = s.params.at("b");
    const double e = s.eps;
    s.n_x = 1;
    s.n_y = 1;
    s.f = [e, ka](const Vec& x, const Vec& y) -> Vec {
        Vec out(1);
        out << -ka * x(0) + (1.0 - x(0) - e * y(0)) * y(0);
        return out;
    };
    s.g = [e, ka, kb](const Vec& x, const Vec& y) -> Vec {
        Vec out(1);
        out << ka * x(0) - (1.0 - x(0) - e * y(0)) * y(0) - kb * y(0) * y(0);
        return out;
    };
    s.g_jacobian_y = [e, kb](const Vec& x, const Vec& y) -> Mat {
        Mat out(1, 1);
        out(0, 0) = -(1.0 - x(0)) + 2.0 * e * y(0) - 2.0 * kb * y(0);
        return out;
    };
    // (kb - e) y^2 + (1 - x) y - (ka x - r) = 0, dissipative (larger) root.
    s.exact_inverter = [e, ka, kb](const Vec& x, const Vec& r) -> Vec {
        const double qa = kb - e;
        const double qb = 1.0 - x(0);
        const double c = ka * x(0) - r(0);
        const double disc = qb * qb + 4.0 * qa * c;
        if (!(qa > 0.0) || !(disc >= 0.0)) {
            throw NumericalError("Robertson exact inverter: no real dissipative root");
        }
        const double sq = std::sqrt(disc);
        Vec out(1);
        out(0) = qb >= 0.0 ? 2.0 * c / (qb + sq) : (-qb + sq) / (2.0 * qa);
        return out;
    };
    s.analytic_gamma = [inv = s.exact_inverter](const Vec& x) -> Vec { return inv(x, Vec::Zero(1)); };
    s.x0 = Vec::Ones(1);
    s.y0 = Vec::Zero(1);
    s.box = uniform_box(1, 1, 0.0, 1.0, 0.0, 0.2);
}

void build_enzyme(FastSlowSystem& s) {
    const double c = s.params.at("c");
    s.n_x = 1;
    s.n_y = 1;
    s.f = [c](const Vec& x, const Vec& y) -> Vec {
        Vec out(1);
        out << -x(0) + (x(0) + c) * y(0);
        return out;
    };
    s.g = [](const Vec& x, const Vec& y) -> Vec {
        Vec out(1);
        out << x(0) - (x(0) + 1.0) * y(0);
        return out;
    };
    s.g_jacobian_y = [](const Vec& x, const Vec&) -> Mat {
        Mat out(1, 1);
        out(0, 0) = -(x(0) + 1.0);
        return out;
    };
    s.exact_inverter = [](const Vec& x, const Vec& r) -> Vec {
        Vec out(1);
        out << (x(0) - r(0)) / (x(0) + 1.0);
        return out;
    };
    s.analytic_gamma = [](const Vec& x) -> Vec {
        Vec out(1);
        out << x(0) / (x(0) + 1.0);
        return out;
    };
    s.beta_hint = 1.0;
    s.x0 = Vec::Ones(1);
    s.y0 = Vec::Zero(1);
    s.box = uniform_box(1, 1, 0.0, 1.0, 0.0, 1.0);
}

}  // namespace

std::string_view to_string(ProblemId id) {
    switch (id) {
        case ProblemId::LinearDrift: return "LinearDrift";
        case ProblemId::LinearRotation: return "LinearRotation";
        case ProblemId::CubicChua: return "CubicChua";
        case ProblemId::Lorenz96: return "Lorenz96";
        case ProblemId::Robertson: return "Robertson";
        case ProblemId::Enzyme: return "Enzyme";
    }
    return "unknown";
}

std::vector<ProblemId> all_problems() {
    return {ProblemId::LinearDrift, ProblemId::LinearRotation, ProblemId::CubicChua,
            ProblemId::Lorenz96,    ProblemId::Robertson,      ProblemId::Enzyme};
}

ProblemId parse_problem_id(std::string_view name) {
    const std::string key = normalize(name);
    for (ProblemId id : all_problems()) {
        if (normalize(to_string(id)) == key) return id;
    }
    if (key == "chua") return ProblemId::CubicChua;
    if (key == "drift") return ProblemId::LinearDrift;
    if (key == "rotation") return ProblemId::LinearRotation;
    if (key == "lorenz") return ProblemId::Lorenz96;
    throw ConfigError("unknown problem id '" + std::string(name) + "'");
}

ParameterSet default_parameters(ProblemId id) {
    switch (id) {
        case ProblemId::LinearDrift:
        case ProblemId::LinearRotation: return {};
        case ProblemId::CubicChua:
            return {{"a", 0.1}, {"b", 0.7}, {"c1", 11.0}, {"c2", 41.0 / 2.0}, {"c3", 44.0 / 3.0}};
        case ProblemId::Lorenz96:
            return {{"J", 10.0}, {"K", 36.0}, {"a", 1.0}, {"b", 10.0}, {"h", 1.0 / 36.0}};
        case ProblemId::Robertson: return {{"a", 0.04}, {"b", 0.3}};
        case ProblemId::Enzyme: return {{"c", 0.5}};
    }
    return {};
}

FastSlowSystem make_problem(ProblemId id, double eps, const ParameterSet& overrides) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw ConfigError("eps must be positive and finite");
    }
    FastSlowSystem s;
    s.id = id;
    s.eps = eps;
    s.params = default_parameters(id);
    for (const auto& [name, value] : overrides) {
        auto it = s.params.find(name);
        if (it == s.params.end()) {
            throw ConfigError("problem " + std::string(to_string(id)) + " has no parameter '" + name + "'");
        }
        it->second = value;
    }
    // h follows K unless given explicitly
    if (id == ProblemId::Lorenz96 && overrides.count("K") && !overrides.count("h")) {
        s.params["h"] = 1.0 / s.params["K"];
    }
    switch (id) {
        case ProblemId::LinearDrift: build_linear_drift(s); break;
        case ProblemId::LinearRotation: build_linear_rotation(s); break;
        case ProblemId::CubicChua: build_chua(s); break;
        case ProblemId::Lorenz96: build_lorenz96(s); break;
        case ProblemId::Robertson: build_robertson(s); break;
        case ProblemId::Enzyme: build_enzyme(s); break;
    }
    return s;
}

Vec eval_f(const FastSlowSystem& sys, const Vec& x, const Vec& y, EvalCounters& counters) {
    if (x.size() != sys.n_x || y.size() != sys.n_y) {
        throw DimensionError("eval_f: expected (" + std::to_string(sys.n_x) + ", " + std::to_string(sys.n_y) +
                             "), got (" + std::to_string(x.size()) + ", " + std::to_string(y.size()) + ")");
    }
    ++counters.f_evals;
    return sys.f(x, y);
}

Vec eval_g(const FastSlowSystem& sys, const Vec& x, const Vec& y, EvalCounters& counters) {
    if (x.size() != sys.n_x || y.size() != sys.n_y) {
        throw DimensionError("eval_g: expected (" + std::to_string(sys.n_x) + ", " + std::to_string(sys.n_y) +
                             "), got (" + std::to_string(x.size()) + ", " + std::to_string(y.size()) + ")");
    }
    ++counters.g_evals;
    return sys.g(x, y);
}

Vec analytic_slow_force(const FastSlowSystem& sys, int order, const Vec& x) {
    if (!sys.analytic_force || order < 0 || order > sys.analytic_force_max_order) {
        throw ConfigError("no analytic slow force of order " + std::to_string(order) + " for " +
                          std::string(to_string(sys.id)));
    }
    if (x.size() != sys.n_x) throw DimensionError("analytic_slow_force: wrong x dimension");
    return sys.analytic_force(order, x);
}

}  // namespace mgthmm
