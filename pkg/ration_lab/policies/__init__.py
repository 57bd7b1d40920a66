"""
Sequential allocation policies
"""
from .ppa import PpaPolicy, ppa_decide
from .tfr import OptimalTfrPolicy, TfrPolicy, optimal_tfr, tfr_decide
from .fixed_allocation import (
    FixedAllocationPolicy,
    OptimalFixedAllocationPolicy,
    optimal_fixed_allocation,
)
from .offline import OfflineOracle, offline_min_fr
from .dynamic_programming import (
    DPTable,
    DiscretizedDpPolicy,
    ExactDpPolicy,
    exact_dp_build,
    fptas_dp,
)

__all__ = [
    "PpaPolicy",
    "ppa_decide",
    "TfrPolicy",
    "OptimalTfrPolicy",
    "optimal_tfr",
    "tfr_decide",
    "FixedAllocationPolicy",
    "OptimalFixedAllocationPolicy",
    "optimal_fixed_allocation",
    "OfflineOracle",
    "offline_min_fr",
    "DPTable",
    "ExactDpPolicy",
    "DiscretizedDpPolicy",
    "exact_dp_build",
    "fptas_dp",
]
