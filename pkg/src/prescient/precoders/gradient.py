"""Prescient sum-rate maximization by gradient projection."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..network import CsiView, NetworkConfig, crandn
from ..optim import SolverOptions, projected_ascent
from ..sensing import SensingModel, detection_prob_avg_slope, sensing_variance
from ..mathcore import erlang_sf
from .base import InfeasibleProblem, Precoder, feasibility_slacks, scale_to_feasible
from .linear import rci

__all__ = ["SumRateObjective", "prescient_gp", "prescient_gp_multistart", "random_feasible"]

LN2 = math.log(2.0)


class SumRateObjective:
    """Predicted UCR sum rate ``sum_k log2(1 + gamma_k)`` as a function of ``W``.

    The ICR interference is ``sum_i (1 - Pbar_D,i(W)) P_i r_I sigma_v2``
    with the average detection probabilities driven by the UCT leakage.
    When the view exposes ``F`` the leakage at ICR ``i`` is
    ``||F_i W||_F^2 / r_I``; otherwise ``sigma_f2 ||W||_F^2``.

    Gradients follow the convention ``G = df/dRe(W) + 1j df/dIm(W)``.
    """

    def __init__(self, view: CsiView, cfg: NetworkConfig, model: Optional[SensingModel] = None):
        if any(Hk.shape[0] != 1 for Hk in view.H_k):
            raise ValueError("sum-rate objective assumes single-antenna UCRs")
        self.view, self.cfg = view, cfg
        self.H = view.H_u
        self.sk2 = cfg.per_ucr("sigma_k2")
        self.model = model or SensingModel.from_config(cfg)
        self.g = cfg.per_icr("P_i") * cfg.r_I * cfg.per_icr("sigma_v2")
        self.F = list(view.F) if view.has_instantaneous_F else None
        self._floor = sensing_variance(self.model, np.zeros((cfg.t_u, 1)), cfg)
        self._sf2 = cfg.per_icr("sigma_f2")
        if self.F is not None and cfg.K:
            self._Fs = np.stack(self.F)
            self._FhF = np.einsum("kji,kjl->kil", self._Fs.conj(), self._Fs)

    def _variance(self, W):
        if self.F is None:
            return self._sf2 * float(np.vdot(W, W).real) + self._floor
        FW = self._Fs @ W
        leak = (FW.real ** 2 + FW.imag ** 2).sum(axis=(1, 2)) / self.cfg.r_I
        return leak + self._floor

    def interference(self, W) -> float:
        if self.cfg.K == 0:
            return 0.0
        pd = erlang_sf(self.model.n, self.model.lam / self._variance(W))
        return float(np.sum(self.g * (1.0 - pd)))

    def _terms(self, W):
        P = np.abs(self.H @ W) ** 2
        ibar = self.interference(W)
        T = P.sum(axis=1) + ibar + self.sk2
        L = T - np.diag(P)
        return T, L, ibar

    def value(self, W) -> float:
        T, L, _ = self._terms(W)
        return float(np.sum(np.log2(T) - np.log2(L)))

    def __call__(self, W) -> float:
        return self.value(W)

    def interference_grad(self, W) -> np.ndarray:
        if self.cfg.K == 0:
            return np.zeros_like(W)
        s2 = self._variance(W)
        slope = detection_prob_avg_slope(self.model, s2)
        coef = -self.g * slope
        if self.F is None:
            return 2.0 * float(np.sum(coef * self._sf2)) * W
        M = np.tensordot(coef, self._FhF, axes=1)
        return (2.0 / self.cfg.r_I) * (M @ W)

    def value_and_grad(self, W):
        HW = self.H @ W
        P = np.abs(HW) ** 2
        ibar = self.interference(W)
        T = P.sum(axis=1) + ibar + self.sk2
        L = T - np.diag(P)
        A = (1.0 / T)[:, None] - (1.0 / L)[:, None] * (1.0 - np.eye(W.shape[1]))
        G = (2.0 / LN2) * (self.H.conj().T @ (A * HW))
        if self.cfg.K:
            G += (float(np.sum(1.0 / T - 1.0 / L)) / LN2) * self.interference_grad(W)
        return float(np.sum(np.log2(T) - np.log2(L))), G


def random_feasible(view: CsiView, cfg: NetworkConfig, rng) -> np.ndarray:
    """Gaussian direction scaled onto the boundary of the feasible set."""
    W = crandn(rng, (cfg.t_u, cfg.n_streams))
    return scale_to_feasible(W, view.N, cfg, boundary=True)


def prescient_gp(view: CsiView, cfg: NetworkConfig, init: Optional[Precoder] = None,
                 opts: SolverOptions = SolverOptions(),
                 objective: Optional[SumRateObjective] = None) -> Precoder:
    """Gradient projection ascent on the predicted sum rate.

    The projection scales an infeasible iterate back onto the power and PR
    caps.  ``init`` defaults to the RCI precoder.
    """
    obj = objective or SumRateObjective(view, cfg)
    W0 = (init.W if init is not None else rci(view, cfg).W).copy()
    slack = feasibility_slacks(W0, view.N, cfg)
    if min(slack) < -1e-8:
        raise InfeasibleProblem(f"initial precoder violates the caps (slacks {slack})")

    def project(W):
        return scale_to_feasible(W, view.N, cfg)

    def violation(W):
        return max(0.0, -min(feasibility_slacks(W, view.N, cfg)))

    W, trace = projected_ascent(obj.value, obj.value_and_grad, project, W0, opts, violation)
    return Precoder(
        W=W, scheme="prescient_gp", iterations=trace.iterations,
        objective=trace.objective[-1],
        info={"reason": trace.reason, "trace": trace.objective},
    )


def prescient_gp_multistart(view: CsiView, cfg: NetworkConfig, rng=None, n_random: int = 4,
                            opts: SolverOptions = SolverOptions()) -> Precoder:
    """Best of ``n_random`` random feasible starts plus the RCI start."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    obj = SumRateObjective(view, cfg)
    starts = [rci(view, cfg)]
    starts += [Precoder(random_feasible(view, cfg, rng), "random") for _ in range(n_random)]
    best = None
    for j, start in enumerate(starts):
        out = prescient_gp(view, cfg, init=start, opts=opts, objective=obj)
        out.info["start"] = "rci" if j == 0 else f"random{j}"
        if best is None or out.objective > best.objective:
            best = out
    best.info["starts"] = len(starts)
    return best
