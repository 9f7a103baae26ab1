"""Heterogeneous multiscale and multigrid-in-time solvers for fast-slow ODEs."""

from ._core import (
    CSV_HEADER,
    ConfigError,
    CorrectionMode,
    CorrectionStrategy,
    CsvRow,
    DimensionError,
    EvalCounters,
    InverterSpec,
    LayerResult,
    ManifoldEvaluator,
    MgtConfig,
    NumericalError,
    ProblemId,
    RunRecord,
    SlopeFit,
    System,
    drift_demo,
    extrapolate,
    fit_slope,
    lebesgue_constant,
    make_problem,
    preset_names,
    preset_text,
    read_csv,
    run_config,
    solve_hmm,
    solve_initial_layer,
    solve_mgt,
    solve_reference,
    solve_two_grid,
    suggest_parameters,
    sweep_config,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
