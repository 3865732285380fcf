"""Closed-form designs: regularized channel inversion, ICR multicast and
their line-searched combination."""

from __future__ import annotations

import warnings
from typing import Optional

import numpy as np

from ..mathcore import hermitian_eig
from ..network import CsiView, NetworkConfig
from ..optim import golden_line_search
from .base import Precoder, scale_to_feasible

__all__ = ["rci", "multicast", "multicast_objective", "multicast_weights", "linear_combination"]


def rci(view: CsiView, cfg: NetworkConfig) -> Precoder:
    """Regularized channel inversion ``H^H (H H^H + (K_u/P) I)^-1``, scaled
    by the smaller of the power- and PR-preserving factors."""
    H = view.H_u
    m = H.shape[0]
    W = H.conj().T @ np.linalg.inv(H @ H.conj().T + (cfg.K_u / cfg.P) * np.eye(m))
    W = scale_to_feasible(W, view.N, cfg, boundary=True)
    sizes = tuple(Hk.shape[0] for Hk in view.H_k)
    return Precoder(W=W, scheme="rci", block_sizes=sizes)


def multicast_weights(cfg: NetworkConfig) -> np.ndarray:
    """Interference impact ``P_i r_I sigma_v2`` of every ICR."""
    return cfg.per_icr("P_i") * cfg.r_I * cfg.per_icr("sigma_v2")


def multicast_objective(W: np.ndarray, view: CsiView, cfg: NetworkConfig) -> float:
    """Weighted ICR signal power ``sum_i g_i ||F_i W||_F^2``."""
    g = multicast_weights(cfg)
    return float(sum(gi * np.vdot(Fi @ W, Fi @ W).real for gi, Fi in zip(g, view.F)))


def multicast(view: CsiView, cfg: NetworkConfig) -> Precoder:
    """Precoder maximizing the weighted ICR signal power for total power ``P``.

    The objective is ``Tr(W^H M W)`` with ``M = sum_i g_i F_i^H F_i``, so every
    column is put on the top eigenvector of ``M`` with power ``P / K_u``
    (the maximum ``P lambda_max(M)`` is reached by any such split).  The
    result is then scaled down if it breaks the PR cap.
    """
    if not view.has_instantaneous_F:
        raise ValueError("multicast needs instantaneous UCT-to-ICR channels")
    streams = cfg.n_streams
    g = multicast_weights(cfg)
    M = np.zeros((cfg.t_u, cfg.t_u), dtype=complex)
    for gi, Fi in zip(g, view.F):
        M += gi * (Fi.conj().T @ Fi)
    info = {}
    if cfg.K == 0 or not np.any(M):
        warnings.warn("multicast: all ICR channels are zero, returning a zero precoder")
        info["degenerate"] = True
        return Precoder(W=np.zeros((cfg.t_u, streams), dtype=complex), scheme="multicast",
                        objective=0.0, info=info)
    eig = hermitian_eig(M)
    u = eig.eigenvectors[:, 0]
    W = np.sqrt(cfg.P / streams) * np.outer(u, np.ones(streams))
    W = scale_to_feasible(W, view.N, cfg)
    info["eigenvalues"] = eig.eigenvalues
    return Precoder(W=W, scheme="multicast", objective=multicast_objective(W, view, cfg), info=info)


def _align_phases(W_mc: np.ndarray, W_ci: np.ndarray) -> np.ndarray:
    # rotate each multicast column toward the matching RCI column; this
    # leaves the multicast objective unchanged
    inner = np.sum(W_mc.conj() * W_ci, axis=0)
    phase = np.where(np.abs(inner) > 0, inner / np.maximum(np.abs(inner), 1e-300), 1.0)
    return W_mc * phase


def linear_combination(view: CsiView, cfg: NetworkConfig, objective=None,
                       grid: int = 21, width: float = 1e-4,
                       W_ci: Optional[np.ndarray] = None,
                       W_mc: Optional[np.ndarray] = None) -> Precoder:
    """Best ``alpha W_CI + (1 - alpha) W_MC`` for the predicted sum rate.

    Each candidate is rescaled onto the boundary of the feasible set before
    it is scored; ``alpha`` comes from a grid-seeded golden search.
    """
    from .gradient import SumRateObjective

    obj = objective or SumRateObjective(view, cfg)
    W_ci = rci(view, cfg).W if W_ci is None else W_ci
    W_mc = multicast(view, cfg).W if W_mc is None else W_mc
    W_mc = _align_phases(W_mc, W_ci)

    def build(alpha):
        W = alpha * W_ci + (1.0 - alpha) * W_mc
        return scale_to_feasible(W, view.N, cfg, boundary=True)

    def score(alpha):
        W = build(alpha)
        return obj.value(W) if np.any(W) else -np.inf

    alpha, val = golden_line_search(score, grid=grid, width=width)
    return Precoder(W=build(alpha), scheme="linear_combination", objective=val,
                    info={"alpha": alpha})
