"""Precoder container, feasibility scaling and SINR evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..network import CsiView, NetworkConfig
from ..optim import InfeasibleProblem
from ..sensing import SensingModel, detection_prob_avg, expected_icr_interference

__all__ = [
    "Precoder",
    "SinrReport",
    "InfeasibleProblem",
    "power",
    "pr_interference",
    "feasibility_slacks",
    "scale_factor",
    "scale_to_feasible",
    "sensing_channels",
    "predicted_detection",
    "evaluate_sinr",
]

REL_TOL = 1e-8


@dataclass
class Precoder:
    """Downlink beamforming matrix with per-user column blocks.

    ``W`` is ``t_u x sum(block_sizes)``; user ``k`` owns the columns of
    block ``k``.  Single-antenna users have blocks of width one.
    """

    W: np.ndarray
    scheme: str
    block_sizes: tuple = ()
    iterations: int = 0
    objective: float = float("nan")
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=complex)
        if not self.block_sizes:
            self.block_sizes = (1,) * self.W.shape[1]
        self.block_sizes = tuple(int(b) for b in self.block_sizes)
        if sum(self.block_sizes) != self.W.shape[1]:
            raise ValueError("block sizes do not add up to the column count of W")

    @property
    def n_users(self) -> int:
        return len(self.block_sizes)

    def blocks(self) -> list:
        edges = np.concatenate([[0], np.cumsum(self.block_sizes)])
        return [self.W[:, edges[k]:edges[k + 1]] for k in range(self.n_users)]

    def covariances(self) -> list:
        return [Wk @ Wk.conj().T for Wk in self.blocks()]


@dataclass(frozen=True)
class SinrReport:
    """Per-user SINR and rate figures.

    ``gamma`` includes ICR interference, ``beta`` omits it.  For multi-antenna
    users these are the scalar SINRs with the same log-det rate,
    ``2^rate - 1``.
    """

    gamma: np.ndarray
    beta: np.ndarray
    interference: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        return np.log2(1.0 + self.gamma)

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))

    @property
    def sum_rate_partial(self) -> float:
        return float(np.sum(np.log2(1.0 + self.beta)))


def power(W: np.ndarray) -> float:
    return float(np.vdot(W, W).real)


def pr_interference(W: np.ndarray, N: np.ndarray) -> float:
    if N.shape[0] == 0:
        return 0.0
    NW = N @ W
    return float(np.vdot(NW, NW).real)


def feasibility_slacks(W: np.ndarray, N: np.ndarray, cfg: NetworkConfig) -> tuple:
    """Relative slacks ``(1 - Tr/P, 1 - Tr_N/xi_p)``; negative means violated."""
    return 1.0 - power(W) / cfg.P, 1.0 - pr_interference(W, N) / cfg.xi_p


def scale_factor(W: np.ndarray, N: np.ndarray, P: float, xi_p: float,
                 boundary: bool = False) -> float:
    """Largest scaling keeping ``c W`` inside the power and PR caps.

    With ``boundary=False`` the factor is capped at one (the projection used
    by gradient ascent); with ``boundary=True`` the result lands on the edge
    of the feasible set, the smaller of the two constraint-preserving scalings.
    """
    tr = power(W)
    if tr == 0.0:
        return 1.0
    c = np.sqrt(P / tr)
    pr = pr_interference(W, N)
    if pr > 0.0:
        c = min(c, np.sqrt(xi_p / pr))
    return float(c) if boundary else float(min(1.0, c))


def scale_to_feasible(W: np.ndarray, N: np.ndarray, cfg: NetworkConfig,
                      boundary: bool = False) -> np.ndarray:
    return scale_factor(W, N, cfg.P, cfg.xi_p, boundary) * W


def sensing_channels(W: np.ndarray, view: CsiView, cfg: NetworkConfig) -> Optional[list]:
    """Instantaneous-F channels passed to the detection model, or ``None``."""
    return list(view.F) if view.has_instantaneous_F else None


def predicted_detection(W: np.ndarray, view: CsiView, cfg: NetworkConfig,
                        model: Optional[SensingModel] = None) -> np.ndarray:
    """Average detection probabilities the UCT predicts for ``W``.

    Uses the realized UCT-to-ICR channels when the view exposes them and
    the Rayleigh statistics otherwise.
    """
    if cfg.K == 0:
        return np.zeros(0)
    model = model or SensingModel.from_config(cfg)
    return detection_prob_avg(model, W, cfg, sensing_channels(W, view, cfg))


def _user_sinrs(prec: Precoder, view: CsiView, cfg: NetworkConfig, interf: Sequence[np.ndarray]):
    sk2 = cfg.per_ucr("sigma_k2")
    blocks = prec.blocks()
    gamma = np.empty(prec.n_users)
    beta = np.empty(prec.n_users)
    for k, Hk in enumerate(view.H_k):
        r = Hk.shape[0]
        R = sk2[k] * np.eye(r, dtype=complex)
        for j, Wj in enumerate(blocks):
            if j != k:
                HW = Hk @ Wj
                R += HW @ HW.conj().T
        HWk = Hk @ blocks[k]
        S = HWk @ HWk.conj().T
        if r == 1:
            beta[k] = S[0, 0].real / R[0, 0].real
            gamma[k] = S[0, 0].real / (R[0, 0].real + interf[k][0, 0].real)
        else:
            for out, Rk in ((beta, R), (gamma, R + interf[k])):
                rate = np.linalg.slogdet(np.eye(r) + np.linalg.solve(Rk, S))[1] / np.log(2.0)
                out[k] = 2.0 ** rate - 1.0
    return gamma, beta


def evaluate_sinr(prec: Precoder, view: CsiView, cfg: NetworkConfig,
                  interference_mode: str = "predicted",
                  detection_probs: Optional[np.ndarray] = None,
                  icr_covariances: Optional[Sequence[np.ndarray]] = None) -> SinrReport:
    """SINR of every UCR under predicted or realized ICR interference.

    ``predicted`` uses the expected interference ``sum (1 - P_D) P_i r_I
    sigma_v2`` per receive antenna, with ``detection_probs`` defaulting to
    the UCT's own prediction.  ``realized`` takes the per-UCR interference
    covariances of the ICRs that actually missed (see
    :func:`prescient.sensing.realized_icr_interference`).
    """
    r_u = view.H_k[0].shape[0]
    if interference_mode == "predicted":
        pd = predicted_detection(prec.W, view, cfg) if detection_probs is None else detection_probs
        ibar = expected_icr_interference(cfg, pd)
        interf = [ib * np.eye(r_u) for ib in ibar]
    elif interference_mode == "realized":
        if icr_covariances is None:
            raise ValueError("realized mode needs the ICR interference covariances")
        interf = list(icr_covariances)
    else:
        raise ValueError(f"unknown interference mode {interference_mode!r}")
    gamma, beta = _user_sinrs(prec, view, cfg, interf)
    level = np.array([np.trace(C).real / r_u for C in interf])
    return SinrReport(gamma=gamma, beta=beta, interference=level)
