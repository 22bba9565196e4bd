# Copyright (c) 2026 The slopemix Authors
# SPDX-License-Identifier: Apache-2.0
"""Constrained dynamic data-mixture controller."""

from ._slopemix import (
    ParseError,
    SlopemixError,
    TrainerError,
    ValidationError,
    baseline_sweep,
    best_of_k,
    cost,
    curve_value,
    fit_curve,
    generate_scenario,
    report,
    run,
    run_baseline,
    schedule,
    solve,
)

__all__ = [
    "ParseError",
    "SlopemixError",
    "TrainerError",
    "ValidationError",
    "baseline_sweep",
    "best_of_k",
    "cost",
    "curve_value",
    "fit_curve",
    "generate_scenario",
    "report",
    "run",
    "run_baseline",
    "schedule",
    "solve",
]
__version__ = "0.1.0"
