import csv
import math

import numpy as np
import pytest

import mgthmm


def test_problem_fields():
    s = mgthmm.make_problem("rotation", 0.1)
    x = np.array([1.0, 0.0])
    assert np.allclose(s.f(x, x), [0.0, 1.0])
    assert np.allclose(s.g(x, x), [0.0, 0.0])
    assert s.n_x == 2 and s.n_y == 2
    chua = mgthmm.make_problem("chua", 0.02)
    assert chua.params["a"] == pytest.approx(0.1)


def test_errors_map_to_python():
    with pytest.raises(mgthmm.ConfigError):
        mgthmm.make_problem("enzyme", 0.0)
    with pytest.raises(ValueError):
        mgthmm.make_problem("vanderpol", 0.1)
    s = mgthmm.make_problem("enzyme", 0.1)
    with pytest.raises(mgthmm.DimensionError):
        s.f(np.zeros(2), np.zeros(1))


def test_evaluator_cost_law():
    s = mgthmm.make_problem("chua", 0.02)
    ev = mgthmm.ManifoldEvaluator(s, mgthmm.InverterSpec.relaxation(0.1, 10), 1e-4, 2)
    ladder = ev.force_ladder(2, np.array([0.2, 0.0]))
    assert len(ladder) == 3
    assert ev.counters.micro_calls == 4


def test_evaluator_outlives_python_system():
    ev = mgthmm.ManifoldEvaluator(mgthmm.make_problem("enzyme", 0.05), mgthmm.InverterSpec.exact(), 1e-5, 1)
    assert np.isfinite(ev.gamma(1, np.array([0.5]))).all()


def test_solvers_agree_with_exact_correction():
    s = mgthmm.make_problem("enzyme", 0.05)
    cfg = mgthmm.MgtConfig()
    cfg.k, cfg.L, cfg.P, cfg.m = 0, 1, 4, 3
    cfg.dt, cfg.dt_coupled, cfg.T = 0.01, 0.001, 0.5
    cfg.inverter = mgthmm.InverterSpec.exact()
    cfg.mode = mgthmm.CorrectionMode.ExactEveryStage
    a = mgthmm.ManifoldEvaluator(s, cfg.inverter, cfg.eta, 1)
    b = mgthmm.ManifoldEvaluator(s, cfg.inverter, cfg.eta, 1)
    tg = mgthmm.solve_two_grid(s, cfg, s.x0, 0.0, a)
    hmm = mgthmm.solve_hmm(s, 1, s.x0, cfg.dt, 0.0, cfg.T, b)
    assert len(tg.times) == 51
    assert np.max(np.abs(np.array(tg.states) - np.array(hmm.states))) <= 1e-12


def test_reference_and_layer():
    s = mgthmm.make_problem("rotation", 0.05)
    ref = mgthmm.solve_reference(s, s.x0, s.y0, 1e-3, 0.5, 100)
    assert len(ref.times) == 6
    cfg = mgthmm.MgtConfig()
    cfg.k, cfg.L, cfg.dt, cfg.dt_coupled = 0, 1, 1e-3, 1e-4
    cfg.inverter = mgthmm.InverterSpec.exact()
    ev = mgthmm.ManifoldEvaluator(s, cfg.inverter, 1e-6, 1)
    layer = mgthmm.solve_initial_layer(s, s.x0, s.y0, cfg, ev)
    assert 0.0 < layer.t_exit < 1.0
    assert layer.residual <= layer.threshold


def test_extrapolation_helpers():
    assert mgthmm.extrapolate([0.0, 1.0], [np.array([0.0]), np.array([1.0])], 5.0)[0] == pytest.approx(5.0)
    assert mgthmm.lebesgue_constant([0.0, 1.0, 2.0], 2.0, 3.0) == pytest.approx(7.0)
    sug = mgthmm.suggest_parameters(0, 1, 4, 0.01)
    assert (sug.m, sug.P) == (3, 4)
    fit = mgthmm.fit_slope([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4])
    assert fit.slope == pytest.approx(2.0, abs=1e-10)


def test_run_and_sweep_config(tmp_path):
    text = (
        "problem = rotation\nmethod = twogrid\neps = 0.1, 0.05, 0.025\nT = 1\ndt = 1e-2\n"
        "dt_coupled = 1e-3\n[experiment]\nk = 0\n"
    )
    runs = mgthmm.run_config(text, cache_dir=str(tmp_path / "cache"), jobs=2)
    assert len(runs) == 3 and all(r["ok"] for r in runs)
    assert runs[0]["row"].method == "twogrid"
    sweeps = mgthmm.sweep_config(text, jobs=3)
    assert sweeps[0]["fit"].points == 3
    with pytest.raises(mgthmm.ConfigError):
        mgthmm.run_config("[experiment]\nproblem = rotation\nk = -1\neps = 0.1\n")


def test_presets_listed():
    names = mgthmm.preset_names()
    assert "desk-fig3" in names and "paper-fig5" in names
    assert "linear_rotation" in mgthmm.preset_text("desk-fig3")


def test_csv_schema_for_plots(tmp_path):
    lines, summary = mgthmm.drift_demo(eps=0.05, T=0.5, every=100)
    assert lines[0].startswith("0,reference,")
    path = tmp_path / "drift_summary.csv"
    mgthmm.write_csv(str(path), summary)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    assert ",".join(header) == mgthmm.CSV_HEADER
    assert header == "eps,method,k,L,P,m,dt,T,error_l2,micro_calls,f_evals,g_evals,wall_ms".split(",")
    assert [r[1] for r in rows] == ["reference", "hmm", "hmm", "hmm"]
    for r in rows:
        assert len(r) == 13
        assert math.isfinite(float(r[8]))
    back = mgthmm.read_csv(str(path))
    assert back[1].k == 0 and back[3].k == 2
