"""
SEIR demand simulation and sample-path banks
"""
from .simulator import PathDraw, SeirSystem, draw_path, peak_days, simulate_batch, simulate_path
from .case_study import CaseStudy
from .bank import (
    SamplePathBank,
    build_bank,
    build_bank_async,
    knn_conditional_mean,
    scenario_config,
)

__all__ = [
    "PathDraw",
    "SeirSystem",
    "draw_path",
    "peak_days",
    "simulate_batch",
    "simulate_path",
    "SamplePathBank",
    "build_bank",
    "build_bank_async",
    "knn_conditional_mean",
    "scenario_config",
    "CaseStudy",
]
