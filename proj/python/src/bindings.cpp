#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mgthmm/extrap.hpp"
#include "mgthmm/harness.hpp"
#include "mgthmm/manifold.hpp"
#include "mgthmm/mgt.hpp"

namespace py = pybind11;
using namespace mgthmm;

namespace {

RunOptions make_options(const std::optional<std::string>& cache_dir, int jobs) {
    RunOptions o;
    o.jobs = jobs;
    if (cache_dir) o.cache = ReferenceCache(*cache_dir);
    return o;
}

py::dict result_dict(const ExperimentSpec& spec, const RunResult& r) {
    py::dict d;
    d["name"] = spec.name;
    d["row"] = r.row;
    d["ok"] = r.ok;
    d["failure"] = r.failure;
    d["checkpoint_errors"] = r.checkpoint_errors;
    d["layer_warning"] = r.record.layer.warning;
    d["t_exit"] = r.record.layer.t_exit;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core of the mgthmm solvers";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::enum_<ProblemId>(m, "ProblemId")
        .value("LinearDrift", ProblemId::LinearDrift)
        .value("LinearRotation", ProblemId::LinearRotation)
        .value("CubicChua", ProblemId::CubicChua)
        .value("Lorenz96", ProblemId::Lorenz96)
        .value("Robertson", ProblemId::Robertson)
        .value("Enzyme", ProblemId::Enzyme);

    py::enum_<InverterMethod>(m, "InverterMethod")
        .value("Relaxation", InverterMethod::Relaxation)
        .value("Newton", InverterMethod::Newton)
        .value("Exact", InverterMethod::Exact);

    py::enum_<CorrectionStrategy>(m, "CorrectionStrategy")
        .value("Field", CorrectionStrategy::Field)
        .value("Manifold", CorrectionStrategy::Manifold);

    py::enum_<CorrectionMode>(m, "CorrectionMode")
        .value("Extrapolate", CorrectionMode::Extrapolate)
        .value("ExactEveryStage", CorrectionMode::ExactEveryStage)
        .value("Zero", CorrectionMode::Zero);

    py::class_<EvalCounters>(m, "EvalCounters")
        .def(py::init<>())
        .def_readonly("micro_calls", &EvalCounters::micro_calls)
        .def_readonly("micro_solves", &EvalCounters::micro_solves)
        .def_readonly("f_evals", &EvalCounters::f_evals)
        .def_readonly("g_evals", &EvalCounters::g_evals)
        .def("__repr__", [](const EvalCounters& c) {
            std::ostringstream os;
            os << "EvalCounters(micro_calls=" << c.micro_calls << ", micro_solves=" << c.micro_solves
               << ", f_evals=" << c.f_evals << ", g_evals=" << c.g_evals << ")";
            return os.str();
        });

    py::class_<InverterSpec>(m, "InverterSpec")
        .def(py::init<>())
        .def_readwrite("method", &InverterSpec::method)
        .def_readwrite("relax_dt_factor", &InverterSpec::relax_dt_factor)
        .def_readwrite("relax_steps", &InverterSpec::relax_steps)
        .def_readwrite("newton_tol", &InverterSpec::newton_tol)
        .def_readwrite("newton_max_iter", &InverterSpec::newton_max_iter)
        .def_readwrite("fd_jacobian_step", &InverterSpec::fd_jacobian_step)
        .def_static("relaxation", &InverterSpec::relaxation, py::arg("factor"), py::arg("steps"))
        .def_static("newton", &InverterSpec::newton)
        .def_static("exact", &InverterSpec::exact);

    py::class_<FastSlowSystem>(m, "System")
        .def_readonly("id", &FastSlowSystem::id)
        .def_readonly("n_x", &FastSlowSystem::n_x)
        .def_readonly("n_y", &FastSlowSystem::n_y)
        .def_readonly("eps", &FastSlowSystem::eps)
        .def_readonly("params", &FastSlowSystem::params)
        .def_readonly("x0", &FastSlowSystem::x0)
        .def_readonly("y0", &FastSlowSystem::y0)
        .def("f", [](const FastSlowSystem& s, const Vec& x, const Vec& y) {
            EvalCounters c;
            return eval_f(s, x, y, c);
        })
        .def("g", [](const FastSlowSystem& s, const Vec& x, const Vec& y) {
            EvalCounters c;
            return eval_g(s, x, y, c);
        });

    m.def("make_problem",
          [](const std::string& name, double eps, const ParameterSet& overrides) {
              return make_problem(parse_problem_id(name), eps, overrides);
          },
          py::arg("problem"), py::arg("eps"), py::arg("overrides") = ParameterSet{});

    py::class_<ManifoldEvaluator>(m, "ManifoldEvaluator")
        .def(py::init<const FastSlowSystem&, InverterSpec, double, int>(), py::arg("system"), py::arg("inverter"),
             py::arg("eta"), py::arg("max_order"), py::keep_alive<1, 2>())
        .def_property_readonly("counters", [](const ManifoldEvaluator& e) { return e.counters(); })
        .def_property("warm_cache", &ManifoldEvaluator::warm_cache_enabled,
                      &ManifoldEvaluator::set_warm_cache_enabled)
        .def("gamma", &ManifoldEvaluator::gamma, py::arg("k"), py::arg("x"))
        .def("gamma_ladder", &ManifoldEvaluator::gamma_ladder, py::arg("k"), py::arg("x"))
        .def("force", &ManifoldEvaluator::force, py::arg("k"), py::arg("x"))
        .def("force_ladder", &ManifoldEvaluator::force_ladder, py::arg("k_hi"), py::arg("x"));

    py::class_<MgtConfig>(m, "MgtConfig")
        .def(py::init<>())
        .def_readwrite("k", &MgtConfig::k)
        .def_readwrite("L", &MgtConfig::L)
        .def_readwrite("P", &MgtConfig::P)
        .def_readwrite("m", &MgtConfig::m)
        .def_readwrite("strategy", &MgtConfig::strategy)
        .def_readwrite("dt", &MgtConfig::dt)
        .def_readwrite("dt_coupled", &MgtConfig::dt_coupled)
        .def_readwrite("T", &MgtConfig::T)
        .def_readwrite("inverter", &MgtConfig::inverter)
        .def_readwrite("eta", &MgtConfig::eta)
        .def_readwrite("mode", &MgtConfig::mode)
        .def_property(
            "layer", [](const MgtConfig& c) { return c.layer.enabled; },
            [](MgtConfig& c, bool on) { c.layer.enabled = on; })
        .def("validate", &MgtConfig::validate, py::arg("max_order"));

    py::class_<LayerResult>(m, "LayerResult")
        .def_readonly("t_exit", &LayerResult::t_exit)
        .def_readonly("x", &LayerResult::x)
        .def_readonly("y", &LayerResult::y)
        .def_readonly("residual", &LayerResult::residual)
        .def_readonly("threshold", &LayerResult::threshold)
        .def_readonly("warning", &LayerResult::warning)
        .def_readonly("cost", &LayerResult::cost);

    py::class_<RunRecord>(m, "RunRecord")
        .def_readonly("method", &RunRecord::method)
        .def_readonly("k", &RunRecord::k)
        .def_readonly("L", &RunRecord::L)
        .def_readonly("times", &RunRecord::times)
        .def_readonly("states", &RunRecord::states)
        .def_readonly("fast_states", &RunRecord::fast_states)
        .def_readonly("counters", &RunRecord::counters)
        .def_readonly("wall_ms", &RunRecord::wall_ms)
        .def_property_readonly("final_state", &RunRecord::final_state);

    m.def("solve_reference", &solve_reference, py::arg("system"), py::arg("x0"), py::arg("y0"), py::arg("dt_ref"),
          py::arg("T"), py::arg("sample_every") = 1, py::call_guard<py::gil_scoped_release>());
    m.def("solve_initial_layer", &solve_initial_layer, py::arg("system"), py::arg("x0"), py::arg("y0"),
          py::arg("config"), py::arg("evaluator"));
    m.def("solve_hmm", &solve_hmm, py::arg("system"), py::arg("k"), py::arg("x_start"), py::arg("dt"),
          py::arg("t_start"), py::arg("T"), py::arg("evaluator"));
    m.def("solve_two_grid", &solve_two_grid, py::arg("system"), py::arg("config"), py::arg("x_start"),
          py::arg("t_start"), py::arg("evaluator"));
    m.def("solve_mgt", &solve_mgt, py::arg("system"), py::arg("config"), py::arg("x_start"), py::arg("t_start"),
          py::arg("evaluator"));

    m.def("extrapolate",
          [](const std::vector<double>& nodes, const std::vector<Vec>& values, double t) {
              return extrapolate(Stencil{nodes, values}, t);
          },
          py::arg("nodes"), py::arg("values"), py::arg("t"));
    m.def("lebesgue_constant",
          [](const std::vector<double>& nodes, double lo, double hi) { return lebesgue_constant(nodes, lo, hi); },
          py::arg("nodes"), py::arg("lo"), py::arg("hi"));

    py::class_<ParameterSuggestion>(m, "ParameterSuggestion")
        .def_readonly("m", &ParameterSuggestion::m)
        .def_readonly("P", &ParameterSuggestion::P)
        .def_readonly("dt_hint", &ParameterSuggestion::dt_hint)
        .def_readonly("tau_hints", &ParameterSuggestion::tau_hints)
        .def_readonly("balance_warning", &ParameterSuggestion::balance_warning);
    m.def("suggest_parameters", &suggest_parameters, py::arg("k"), py::arg("L"), py::arg("q"), py::arg("eps"));

    py::class_<CsvRow>(m, "CsvRow")
        .def(py::init<>())
        .def_readwrite("eps", &CsvRow::eps)
        .def_readwrite("method", &CsvRow::method)
        .def_readwrite("k", &CsvRow::k)
        .def_readwrite("L", &CsvRow::L)
        .def_readwrite("P", &CsvRow::P)
        .def_readwrite("m", &CsvRow::m)
        .def_readwrite("dt", &CsvRow::dt)
        .def_readwrite("T", &CsvRow::T)
        .def_readwrite("error_l2", &CsvRow::error_l2)
        .def_readwrite("micro_calls", &CsvRow::micro_calls)
        .def_readwrite("f_evals", &CsvRow::f_evals)
        .def_readwrite("g_evals", &CsvRow::g_evals)
        .def_readwrite("wall_ms", &CsvRow::wall_ms)
        .def("__repr__", [](const CsvRow& r) { return "CsvRow(" + format_row(r) + ")"; });

    m.attr("CSV_HEADER") = std::string(kCsvHeader);
    m.def("write_csv", py::overload_cast<const std::filesystem::path&, const std::vector<CsvRow>&>(&write_csv),
          py::arg("path"), py::arg("rows"));
    m.def("read_csv", &read_csv, py::arg("path"));

    py::class_<SlopeFit>(m, "SlopeFit")
        .def_readonly("slope", &SlopeFit::slope)
        .def_readonly("intercept", &SlopeFit::intercept)
        .def_readonly("r2", &SlopeFit::r2)
        .def_readonly("points", &SlopeFit::points);
    m.def("fit_slope", &fit_slope, py::arg("eps"), py::arg("errors"));

    m.def("preset_names", &preset_names);
    m.def("preset_text", [](const std::string& name) { return preset_text(name); }, py::arg("name"));

    m.def(
        "run_config",
        [](const std::string& text, std::optional<std::string> cache_dir, int jobs) {
            const auto specs = parse_config(text);
            std::vector<RunResult> results;
            {
                py::gil_scoped_release release;
                results = run_all(specs, make_options(cache_dir, jobs));
            }
            py::list out;
            std::size_t i = 0;
            for (const auto& s : specs) {
                for (std::size_t e = 0; e < s.eps.size(); ++e) out.append(result_dict(s, results[i++]));
            }
            return out;
        },
        py::arg("text"), py::arg("cache_dir") = py::none(), py::arg("jobs") = 1,
        "Runs every (experiment, eps) pair of a config text; one dict per run.");

    m.def(
        "sweep_config",
        [](const std::string& text, std::optional<std::string> cache_dir, int jobs) {
            const auto specs = parse_config(text);
            py::list out;
            for (const auto& s : specs) {
                SweepResult r;
                {
                    py::gil_scoped_release release;
                    r = sweep(s, make_options(cache_dir, jobs));
                }
                py::dict d;
                d["name"] = s.name;
                py::list rows;
                for (const auto& run : r.runs) rows.append(result_dict(s, run));
                d["runs"] = rows;
                d["fit"] = r.fit ? py::cast(*r.fit) : py::none();
                out.append(d);
            }
            return out;
        },
        py::arg("text"), py::arg("cache_dir") = py::none(), py::arg("jobs") = 1,
        "Eps sweep with a log-log slope fit for every experiment of a config text.");

    m.def(
        "drift_demo",
        [](double eps, double T, double dt, int every) {
            DriftDemo d;
            {
                py::gil_scoped_release release;
                d = drift_demo(eps, T, dt, every);
            }
            return py::make_tuple(d.trajectory_lines, d.summary);
        },
        py::arg("eps") = 0.05, py::arg("T") = 25.0, py::arg("dt") = 1e-3, py::arg("every") = 10,
        "Returns (trajectory lines 't,method,x1,x2', summary rows).");
}
