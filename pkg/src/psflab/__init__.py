"""Certified numerical checks of lattice summation identities.

Both sides of each identity are summed over sup-norm shells with analytic
tail bounds; a check passes when the two sums agree within those bounds.
"""

from .diffeo import AffineMap, Diffeo1D, Multiplier, affine_comb_check, warped_comb_lhs, warped_comb_rhs
from .engine import (
    ENGINE_VERSION,
    DualEvaluation,
    classical_psf,
    coth_series_check,
    evaluate_identity,
    preferred_side,
    theta_transform_check,
)
from .kernels import DualKernelPair, bessel_pair, heat_pair, poisson_pair, symbol_pair
from .lattice import TruncationBudget, accumulate, enumerate_shell, shell_size
from .schwartz import TestFunction, battery, gaussian, shift_modulate
from .weak import csn_report, pair_dirac_comb, pair_exp_comb, periodic_coefficient, periodize

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "Diffeo1D",
    "Multiplier",
    "affine_comb_check",
    "warped_comb_lhs",
    "warped_comb_rhs",
    "ENGINE_VERSION",
    "DualEvaluation",
    "classical_psf",
    "coth_series_check",
    "evaluate_identity",
    "preferred_side",
    "theta_transform_check",
    "DualKernelPair",
    "bessel_pair",
    "heat_pair",
    "poisson_pair",
    "symbol_pair",
    "TruncationBudget",
    "accumulate",
    "enumerate_shell",
    "shell_size",
    "TestFunction",
    "battery",
    "gaussian",
    "shift_modulate",
    "csn_report",
    "pair_dirac_comb",
    "pair_exp_comb",
    "periodic_coefficient",
    "periodize",
]
