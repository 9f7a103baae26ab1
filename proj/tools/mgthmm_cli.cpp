#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgthmm/harness.hpp"

namespace fs = std::filesystem;
using namespace mgthmm;

namespace {

struct Common {
    std::string config;
    std::string preset;
    std::string out = "out";
    int jobs = 1;
    bool no_cache = false;
};

std::vector<ExperimentSpec> load(const Common& c) {
    if (!c.preset.empty() && !c.config.empty()) throw ConfigError("give either a config file or --preset, not both");
    if (!c.preset.empty()) return parse_config(preset_text(c.preset));
    if (c.config.empty()) throw ConfigError("a config file or --preset is required");
    return load_config(c.config);
}

RunOptions options(const Common& c) {
    RunOptions o;
    o.jobs = c.jobs;
    if (!c.no_cache) o.cache = ReferenceCache(fs::path(c.out) / "ref_cache");
    return o;
}

std::string csv_name(const ExperimentSpec& s, const char* fallback) {
    return s.output.empty() ? std::string(fallback) : s.output;
}

// Rows are grouped per output file, preserving input order.
void write_grouped(const Common& c, const std::vector<std::pair<std::string, CsvRow>>& rows) {
    std::map<std::string, std::vector<CsvRow>> files;
    std::vector<std::string> order;
    for (const auto& [name, row] : rows) {
        if (!files.count(name)) order.push_back(name);
        files[name].push_back(row);
    }
    for (const auto& name : order) {
        const fs::path p = fs::path(c.out) / name;
        write_csv(p, files[name]);
        std::cout << "wrote " << p.string() << " (" << files[name].size() << " rows)\n";
    }
}

void report(const RunResult& r, const std::string& name) {
    if (r.ok) {
        std::printf("%-28s eps=%-10.4g T=%-8g error=%.3e micro_calls=%llu\n", name.c_str(), r.row.eps, r.row.T,
                    r.row.error_l2, static_cast<unsigned long long>(r.row.micro_calls));
        if (r.record.layer.warning) std::printf("  warning: initial layer hit the time cap\n");
    } else {
        std::printf("%-28s eps=%-10.4g FAILED (%s)\n", name.c_str(), r.row.eps, r.failure.c_str());
    }
}

int cmd_run(const Common& c) {
    const auto specs = load(c);
    const auto results = run_all(specs, options(c));
    std::vector<std::pair<std::string, CsvRow>> rows;
    bool ok = true;
    std::size_t i = 0;
    for (const auto& s : specs) {
        for (std::size_t e = 0; e < s.eps.size(); ++e, ++i) {
            report(results[i], s.name);
            ok = ok && results[i].ok;
            rows.emplace_back(csv_name(s, "run.csv"), results[i].row);
        }
    }
    write_grouped(c, rows);
    return ok ? 0 : 1;
}

int cmd_sweep(const Common& c) {
    const auto specs = load(c);
    for (const auto& s : specs) s.validate(true);
    const RunOptions opts = options(c);
    std::vector<std::pair<std::string, CsvRow>> rows;
    std::vector<std::string> fit_lines;
    bool ok = true;
    for (const auto& s : specs) {
        const SweepResult res = sweep(s, opts);
        for (const auto& r : res.runs) {
            report(r, s.name);
            rows.emplace_back(csv_name(s, "sweep.csv"), r.row);
        }
        ok = ok && res.all_ok();
        char buf[256];
        if (res.fit) {
            std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.17g,%.17g,%.17g,%zu", s.name.c_str(), s.method_label().c_str(),
                          s.mgt.k, s.levels(), res.fit->slope, res.fit->intercept, res.fit->r2, res.fit->points);
            std::printf("%-28s slope=%.3f intercept=%.3f R2=%.4f\n", s.name.c_str(), res.fit->slope,
                        res.fit->intercept, res.fit->r2);
        } else {
            std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,nan,nan,nan,0", s.name.c_str(), s.method_label().c_str(),
                          s.mgt.k, s.levels());
            std::printf("%-28s slope unavailable (fewer than 3 valid rows)\n", s.name.c_str());
        }
        fit_lines.emplace_back(buf);
    }
    write_grouped(c, rows);
    const fs::path fits = fs::path(c.out) / "fits.csv";
    std::ofstream f(fits);
    f << "name,method,k,L,slope,intercept,r2,points\n";
    for (const auto& l : fit_lines) f << l << '\n';
    std::cout << "wrote " << fits.string() << '\n';
    return ok ? 0 : 1;
}

int cmd_compare(const Common& c) {
    const auto specs = load(c);
    const auto rows = compare_cost(specs, options(c));
    bool ok = true;
    std::vector<std::pair<std::string, CsvRow>> named;
    for (const auto& r : rows) {
        ok = ok && std::isfinite(r.error_l2);
        std::printf("%-12s k=%d L=%d t=%-8g error=%.3e micro_calls=%llu\n", r.method.c_str(), r.k, r.L, r.T,
                    r.error_l2, static_cast<unsigned long long>(r.micro_calls));
        named.emplace_back(csv_name(specs.front(), "compare.csv"), r);
    }
    write_grouped(c, named);
    return ok ? 0 : 1;
}

int cmd_reference(const Common& c) {
    auto specs = load(c);
    for (auto& s : specs) s.method = MethodKind::Reference;
    const auto results = run_all(specs, options(c));
    std::vector<std::pair<std::string, CsvRow>> rows;
    bool ok = true;
    std::size_t i = 0;
    for (const auto& s : specs) {
        for (std::size_t e = 0; e < s.eps.size(); ++e, ++i) {
            report(results[i], s.name);
            ok = ok && results[i].ok;
            rows.emplace_back("reference.csv", results[i].row);
        }
    }
    write_grouped(c, rows);
    return ok ? 0 : 1;
}

int cmd_drift(const Common& c, double eps, double T, double dt, int every) {
    const DriftDemo demo = drift_demo(eps, T, dt, every, options(c));
    fs::create_directories(c.out);
    const fs::path traj = fs::path(c.out) / "drift_trajectory.csv";
    std::ofstream out(traj);
    out << "t,method,x1,x2\n";
    for (const auto& l : demo.trajectory_lines) out << l << '\n';
    std::cout << "wrote " << traj.string() << '\n';
    std::vector<std::pair<std::string, CsvRow>> rows;
    for (const auto& r : demo.summary) {
        std::printf("%-10s k=%d error=%.4e\n", r.method.c_str(), r.k, r.error_l2);
        rows.emplace_back("drift_summary.csv", r);
    }
    write_grouped(c, rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multigrid-in-time heterogeneous multiscale solver harness"};
    app.require_subcommand(1);
    app.fallthrough();
    Common c;
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--jobs", c.jobs, "Parallel runs")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--preset", c.preset, "Use a built-in config preset");
    app.add_flag("--no-cache", c.no_cache, "Do not read or write the reference cache");

    auto add_config = [&](CLI::App* sub) { sub->add_option("config", c.config, "Config file"); };
    auto* run = app.add_subcommand("run", "Run every experiment of a config");
    auto* swp = app.add_subcommand("sweep", "Eps sweeps with slope fits");
    auto* cmp = app.add_subcommand("compare", "Cost and error at system-time checkpoints");
    auto* ref = app.add_subcommand("reference", "Compute (and cache) reference trajectories");
    for (auto* s : {run, swp, cmp, ref}) add_config(s);

    double eps = 0.05, T = 25.0, dt = 1e-3;
    int every = 10;
    auto* drift = app.add_subcommand("drift-demo", "Linear drift trajectories of HMM_0, HMM_1, HMM_2");
    drift->add_option("--eps", eps)->capture_default_str();
    drift->add_option("--T", T)->capture_default_str();
    drift->add_option("--dt", dt)->capture_default_str();
    drift->add_option("--every", every, "Trajectory thinning")->capture_default_str();
    auto* presets = app.add_subcommand("presets", "List built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(c);
        if (*swp) return cmd_sweep(c);
        if (*cmp) return cmd_compare(c);
        if (*ref) return cmd_reference(c);
        if (*drift) return cmd_drift(c, eps, T, dt, every);
        if (*presets) {
            for (const auto& n : preset_names()) std::cout << n << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
