"""Effective magneto-transport of 3D periodic composite conductors.

Computes the effective conductivity, Hall matrix, and weak-field
magneto-resistance of a periodic medium by FFT-accelerated cell solves,
and verifies structural properties of the expansion (dissipation-gap
positivity, curl-defect equality criterion, fourth-order sign reversal)
against closed-form microstructure oracles.
"""

from .estimator import Homogenizer
from .exceptions import (
    ConditionRViolated,
    GridMismatch,
    HallhomError,
    HallNotZero,
    NoConvergence,
    NonPeriodicDirection,
    NotAntisymmetric,
    SingularCofactor,
    SingularZeroOrder,
)
from .microstructure import GridField, MaterialSpec, Profile1D, sample
from .solver import CorrectorSet, SolverConfig, solve_p0, solve_p1, solve_p2_zero_hall
from .tensor3 import PerturbSeries, cofactor, hall_from_s, hodge, hodge_inv, s_from_hall

__all__ = [
    "Homogenizer",
    "HallhomError",
    "NotAntisymmetric",
    "SingularZeroOrder",
    "SingularCofactor",
    "NoConvergence",
    "HallNotZero",
    "GridMismatch",
    "NonPeriodicDirection",
    "ConditionRViolated",
    "GridField",
    "MaterialSpec",
    "Profile1D",
    "sample",
    "CorrectorSet",
    "SolverConfig",
    "solve_p0",
    "solve_p1",
    "solve_p2_zero_hall",
    "PerturbSeries",
    "hodge",
    "hodge_inv",
    "cofactor",
    "hall_from_s",
    "s_from_hall",
]

__version__ = "0.1.0"
