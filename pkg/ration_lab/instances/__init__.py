"""
Instance generators
"""
from .hard import (
    adaptivity_gap_instance,
    coupled_hard_instances,
    example1_instance,
    hard_instance,
    hard_instance_overdemanded,
    hard_instance_underdemanded,
)
from .random_instances import random_finite_support, random_independent
from .worst_case import (
    EafrCurve,
    WorstCaseTfrCdf,
    discretize_worst_case,
    eafr_max,
    worstcase_tfr_model,
)

__all__ = [
    "adaptivity_gap_instance",
    "coupled_hard_instances",
    "example1_instance",
    "hard_instance",
    "hard_instance_overdemanded",
    "hard_instance_underdemanded",
    "random_finite_support",
    "random_independent",
    "EafrCurve",
    "WorstCaseTfrCdf",
    "discretize_worst_case",
    "eafr_max",
    "worstcase_tfr_model",
]
