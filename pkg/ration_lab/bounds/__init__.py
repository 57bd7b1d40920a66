"""
Guarantee calculators and bound verification
"""
from .guarantees import (
    guarantee_table,
    kappa_a,
    kappa_fa,
    kappa_p,
    kappa_tfr,
    kappa_tfr_cv,
    offline_gap_bound,
    offline_gap_ratio,
    q_hat,
)
from .factor_lp import FactorRevealingLP, HighsSolver, LpSolver, lp_certificate, lp_verify, regime

__all__ = [
    "guarantee_table",
    "kappa_a",
    "kappa_fa",
    "kappa_p",
    "kappa_tfr",
    "kappa_tfr_cv",
    "offline_gap_bound",
    "offline_gap_ratio",
    "q_hat",
    "FactorRevealingLP",
    "HighsSolver",
    "LpSolver",
    "lp_certificate",
    "lp_verify",
    "regime",
]
