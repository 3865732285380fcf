"""Downlink precoder designs.

Every design takes a :class:`~prescient.network.CsiView` and a
:class:`~prescient.network.NetworkConfig` and returns a :class:`Precoder`
that satisfies the power and PR caps.
"""

from .base import (InfeasibleProblem, Precoder, SinrReport, evaluate_sinr, feasibility_slacks,
                   power, pr_interference, predicted_detection, scale_factor, scale_to_feasible)
from .bd import bd_bases, bd_residual, bd_sum_rate, conventional_bd, pbd_joint, pbd_separate
from .gradient import SumRateObjective, prescient_gp, prescient_gp_multistart, random_feasible
from .linear import linear_combination, multicast, multicast_objective, rci
from .sdp import default_eta, partial_sinr, sdp_maxmin

__all__ = [
    "InfeasibleProblem",
    "Precoder",
    "SinrReport",
    "SumRateObjective",
    "bd_bases",
    "bd_residual",
    "bd_sum_rate",
    "conventional_bd",
    "default_eta",
    "evaluate_sinr",
    "feasibility_slacks",
    "linear_combination",
    "multicast",
    "multicast_objective",
    "partial_sinr",
    "pbd_joint",
    "pbd_separate",
    "power",
    "pr_interference",
    "predicted_detection",
    "prescient_gp",
    "prescient_gp_multistart",
    "random_feasible",
    "rci",
    "scale_factor",
    "scale_to_feasible",
    "sdp_maxmin",
]
