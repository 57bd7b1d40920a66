"""
Welfare and multi-resource extensions
"""
from .welfare import WpmWelfare, wpm_welfare
from .multi_resource import (
    endowment_objective,
    multi_resource_guarantee,
    multi_resource_ppa_value,
    optimize_endowment,
)

__all__ = [
    "WpmWelfare",
    "wpm_welfare",
    "endowment_objective",
    "multi_resource_guarantee",
    "multi_resource_ppa_value",
    "optimize_endowment",
]
