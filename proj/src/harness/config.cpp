#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mgthmm/harness.hpp"

namespace mgthmm {

namespace {

std::string lower(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

[[noreturn]] void fail(const Entry& e, const std::string& what) {
    throw ConfigError("config line " + std::to_string(e.line) + " (" + e.key + "): " + what);
}

// Accepts decimal numbers and powers of two written as 2^-5.
double parse_real(const Entry& e, std::string_view text) {
    text = trim(text);
    if (auto caret = text.find('^'); caret != std::string_view::npos) {
        const double base = parse_real(e, text.substr(0, caret));
        const double expo = parse_real(e, text.substr(caret + 1));
        return std::pow(base, expo);
    }
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) fail(e, "expected a number, got '" + std::string(text) + "'");
    return v;
}

long long parse_integer(const Entry& e) {
    const std::string_view text = trim(e.value);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) fail(e, "expected an integer, got '" + e.value + "'");
    return v;
}

int parse_int(const Entry& e) {
    const long long v = parse_integer(e);
    if (v < -1000000 || v > 1000000) fail(e, "integer out of range");
    return static_cast<int>(v);
}

bool parse_bool(const Entry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail(e, "expected true or false");
}

std::vector<double> parse_list(const Entry& e) {
    std::vector<double> out;
    std::string_view rest = e.value;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        if (item.empty()) fail(e, "empty list item");
        out.push_back(parse_real(e, item));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    if (out.empty()) fail(e, "empty list");
    return out;
}

struct Block {
    std::vector<Entry> entries;
};

void apply(ExperimentSpec& s, const Entry& e) {
    const std::string& k = e.key;
    try {
        if (k == "name") {
            s.name = e.value;
        } else if (k == "problem") {
            s.problem = parse_problem_id(e.value);
        } else if (k == "method") {
            s.method = parse_method(e.value);
        } else if (k == "k") {
            s.mgt.k = parse_int(e);
        } else if (k == "L") {
            s.mgt.L = parse_int(e);
        } else if (k == "P") {
            s.mgt.P = parse_int(e);
        } else if (k == "m") {
            s.mgt.m = parse_int(e);
        } else if (k == "strategy") {
            s.mgt.strategy = parse_strategy(e.value);
        } else if (k == "dt") {
            s.mgt.dt = parse_real(e, e.value);
        } else if (k == "dt_coupled") {
            s.mgt.dt_coupled = parse_real(e, e.value);
        } else if (k == "T") {
            s.mgt.T = parse_real(e, e.value);
        } else if (k == "T_scaling") {
            const auto v = lower(e.value);
            if (v == "fixed") {
                s.time_scaling = TimeScaling::Fixed;
            } else if (v == "inverse_eps") {
                s.time_scaling = TimeScaling::InverseEps;
            } else {
                fail(e, "expected fixed or inverse_eps");
            }
        } else if (k == "eps") {
            s.eps = parse_list(e);
        } else if (k == "inverter") {
            s.mgt.inverter.method = parse_inverter_method(e.value);
        } else if (k == "inverter.relax_dt_factor") {
            s.mgt.inverter.relax_dt_factor = parse_real(e, e.value);
        } else if (k == "inverter.relax_steps") {
            s.mgt.inverter.relax_steps = parse_int(e);
        } else if (k == "inverter.newton_tol") {
            s.mgt.inverter.newton_tol = parse_real(e, e.value);
        } else if (k == "inverter.newton_max_iter") {
            s.mgt.inverter.newton_max_iter = parse_int(e);
        } else if (k == "inverter.fd_jacobian_step") {
            s.mgt.inverter.fd_jacobian_step = parse_real(e, e.value);
        } else if (k == "eta") {
            s.mgt.eta = parse_real(e, e.value);
        } else if (k == "max_order") {
            s.max_order = parse_int(e);
        } else if (k == "layer") {
            s.mgt.layer.enabled = parse_bool(e);
        } else if (k == "c_layer") {
            s.mgt.layer.c_layer = parse_real(e, e.value);
        } else if (k == "c_time") {
            s.mgt.layer.c_time = parse_real(e, e.value);
        } else if (k == "checkpoints") {
            s.checkpoints = parse_list(e);
        } else if (k == "seed") {
            const long long v = parse_integer(e);
            if (v < 0) fail(e, "seed must be non-negative");
            s.seed = static_cast<std::uint64_t>(v);
        } else if (k == "output") {
            s.output = e.value;
        } else if (k.rfind("param.", 0) == 0) {
            s.overrides[k.substr(6)] = parse_real(e, e.value);
        } else {
            fail(e, "unknown key");
        }
    } catch (const ConfigError& err) {
        const std::string msg = err.what();
        if (msg.rfind("config line", 0) == 0) throw;
        fail(e, msg);
    }
}

// Inverter fields given without an explicit method refine the problem default.
ExperimentSpec build(const std::vector<Entry>& entries) {
    ExperimentSpec s;
    for (const auto& e : entries) {
        if (e.key == "problem") apply(s, e);
    }
    s.mgt.inverter = default_inverter(s.problem);
    s.mgt.eta = default_eta(s.problem);
    for (const auto& e : entries) {
        if (e.key == "inverter") apply(s, e);
    }
    for (const auto& e : entries) {
        if (e.key != "problem" && e.key != "inverter") apply(s, e);
    }
    if (s.name.empty()) s.name = std::string(to_string(s.problem)) + "-" + s.method_label();
    return s;
}

}  // namespace

std::string_view to_string(MethodKind m) {
    switch (m) {
        case MethodKind::Reference: return "reference";
        case MethodKind::Hmm: return "hmm";
        case MethodKind::TwoGrid: return "twogrid";
        case MethodKind::Mgt: return "mgt";
    }
    return "?";
}

MethodKind parse_method(std::string_view name) {
    const auto key = lower(trim(name));
    if (key == "reference") return MethodKind::Reference;
    if (key == "hmm") return MethodKind::Hmm;
    if (key == "twogrid" || key == "two-grid") return MethodKind::TwoGrid;
    if (key == "mgt") return MethodKind::Mgt;
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

int ExperimentSpec::levels() const {
    switch (method) {
        case MethodKind::Reference:
        case MethodKind::Hmm: return 0;
        case MethodKind::TwoGrid: return 1;
        case MethodKind::Mgt: return mgt.L;
    }
    return 0;
}

int ExperimentSpec::evaluator_order() const {
    return max_order ? *max_order : mgt.k + levels();
}

double ExperimentSpec::final_time(double eps) const {
    return time_scaling == TimeScaling::InverseEps ? 1.0 / eps : mgt.T;
}

std::string ExperimentSpec::method_label() const {
    std::string label(to_string(method));
    if ((method == MethodKind::TwoGrid || method == MethodKind::Mgt) && mgt.strategy == CorrectionStrategy::Manifold) {
        label += "-manifold";
    }
    return label;
}

void ExperimentSpec::validate(bool sweep) const {
    if (eps.empty()) throw ConfigError(name + ": eps list is empty");
    for (double e : eps) {
        if (!(e > 0.0)) throw ConfigError(name + ": eps must be positive");
    }
    if (sweep) {
        if (eps.size() < 3) throw ConfigError(name + ": a sweep needs at least 3 eps values");
        for (std::size_t i = 1; i < eps.size(); ++i) {
            if (!(eps[i] < eps[i - 1])) throw ConfigError(name + ": sweep eps values must be strictly decreasing");
        }
    }
    if (method == MethodKind::TwoGrid && mgt.L != 1) throw ConfigError(name + ": twogrid requires L = 1");
    if (method == MethodKind::Mgt && mgt.L < 1) throw ConfigError(name + ": mgt requires L >= 1");
    if (max_order && *max_order < mgt.k + levels()) {
        throw ConfigError(name + ": k + L = " + std::to_string(mgt.k + levels()) + " exceeds max_order " +
                          std::to_string(*max_order));
    }
    MgtConfig c = mgt;
    c.L = levels();
    if (c.L == 0) c.strategy = CorrectionStrategy::Field;
    for (double e : eps) {
        c.T = final_time(e);
        c.validate(evaluator_order());
        step_count(0.0, c.T, c.dt);
        step_count(0.0, c.dt, c.dt_coupled);
    }
    for (double t : checkpoints) {
        for (double e : eps) {
            if (!(t > 0.0) || t > final_time(e) * (1.0 + 1e-12)) {
                throw ConfigError(name + ": checkpoint " + std::to_string(t) + " outside (0, T]");
            }
        }
    }
    make_problem(problem, eps.front(), overrides);
}

InverterSpec default_inverter(ProblemId id) {
    switch (id) {
        case ProblemId::CubicChua: return InverterSpec::relaxation(0.1, 10);
        case ProblemId::LinearRotation:
        case ProblemId::LinearDrift: return InverterSpec::relaxation(1.0, 10);
        case ProblemId::Lorenz96: return InverterSpec::relaxation(0.5, 20);
        case ProblemId::Robertson:
        case ProblemId::Enzyme: return InverterSpec::exact();
    }
    return InverterSpec::newton();
}

double default_eta(ProblemId id) {
    switch (id) {
        case ProblemId::CubicChua: return 1e-4;
        case ProblemId::LinearRotation: return 5e-6;
        case ProblemId::Lorenz96: return 1e-6;
        case ProblemId::Robertson: return 1e-5;
        case ProblemId::Enzyme: return 5e-6;
        case ProblemId::LinearDrift: return 1e-5;
    }
    return 0.0;
}

std::vector<ExperimentSpec> parse_config(std::string_view text) {
    std::vector<Entry> defaults;
    std::vector<Block> blocks;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line != "[experiment]") {
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown section " + std::string(line));
            }
            blocks.emplace_back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        Entry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
        if (e.key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        auto& target = blocks.empty() ? defaults : blocks.back().entries;
        for (const auto& prev : target) {
            if (prev.key == e.key) fail(e, "duplicate key");
        }
        target.push_back(std::move(e));
    }
    if (blocks.empty()) throw ConfigError("config defines no [experiment] block");
    std::vector<ExperimentSpec> specs;
    for (const auto& b : blocks) {
        std::vector<Entry> merged;
        for (const auto& d : defaults) {
            const bool shadowed = std::any_of(b.entries.begin(), b.entries.end(),
                                              [&](const Entry& e) { return e.key == d.key; });
            if (!shadowed) merged.push_back(d);
        }
        merged.insert(merged.end(), b.entries.begin(), b.entries.end());
        specs.push_back(build(merged));
    }
    return specs;
}

std::vector<ExperimentSpec> load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace mgthmm
