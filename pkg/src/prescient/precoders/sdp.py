"""Max-min partial SINR with ICR leakage floors via semidefinite relaxation.

For fixed ``t`` the relaxed problem in ``J_k = w_k w_k^H`` is a linear
feasibility problem over PSD blocks; an outer bisection finds the largest
feasible ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..mathcore import TOLERANCES, hermitian_eig
from ..network import CsiView, NetworkConfig
from ..optim import (HermitianBlocks, InfeasibleProblem, SolverOptions, barrier_phase1,
                     bisect_feasibility)
from .base import Precoder, scale_to_feasible

__all__ = ["default_eta", "SdpConstraints", "sdp_maxmin", "partial_sinr"]


def default_eta(cfg: NetworkConfig, c: float = 0.1) -> np.ndarray:
    """Leakage floors ``eta_i = c sigma_f2 P``."""
    return c * cfg.per_icr("sigma_f2") * cfg.P


def partial_sinr(W: np.ndarray, H: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """Per-user SINR ignoring ICR interference (single-antenna users)."""
    G = np.abs(H @ W) ** 2
    sig = np.diag(G)
    return sig / (G.sum(axis=1) - sig + sigma2)


@dataclass
class SdpConstraints:
    """Linear constraints ``A(t) x <= b(t)`` on the stacked ``J_k`` blocks."""

    space: HermitianBlocks
    sinr_num: np.ndarray  # row k: Re tr(R_k J_k)
    sinr_den: np.ndarray  # row k: sum_{j != k} Re tr(R_k J_j)
    sigma2: np.ndarray
    A_fixed: np.ndarray
    b_fixed: np.ndarray

    def system(self, t: float):
        A = np.vstack([t * self.sinr_den - self.sinr_num, self.A_fixed])
        b = np.concatenate([-t * self.sigma2, self.b_fixed])
        return A, b


def _build(view: CsiView, cfg: NetworkConfig, eta: Sequence[float], sigma_s2: float) -> SdpConstraints:
    K_u, t_u = len(view.H_k), cfg.t_u
    space = HermitianBlocks([t_u] * K_u)
    R = [h.conj().T @ h for h in view.H_k]
    num = np.array([space.linear([R[k] if j == k else None for j in range(K_u)])
                    for k in range(K_u)])
    den = np.array([space.linear([R[k] if j != k else None for j in range(K_u)])
                    for k in range(K_u)])
    rows, rhs = [], []
    eye = np.eye(t_u)
    rows.append(space.linear([eye] * K_u))
    rhs.append(cfg.P)
    if view.N.shape[0]:
        NhN = view.N.conj().T @ view.N
        rows.append(space.linear([NhN] * K_u))
        rhs.append(cfg.xi_p)
    eta = np.asarray(eta, dtype=float)
    if cfg.K and np.any(eta > 0):
        if not view.has_instantaneous_F:
            raise ValueError("leakage floors need instantaneous UCT-to-ICR channels")
        for Fi, e in zip(view.F, eta):
            if e > 0:
                FhF = sigma_s2 * (Fi.conj().T @ Fi)
                rows.append(-space.linear([FhF] * K_u))
                rhs.append(-e)
    return SdpConstraints(space, num, den, cfg.per_ucr("sigma_k2"), np.array(rows), np.array(rhs))


def _extract(blocks, ratio_tol: float):
    cols, ratios = [], []
    for J in blocks:
        J = 0.5 * (J + J.conj().T)
        eig = hermitian_eig(J)
        lam = np.maximum(eig.eigenvalues, 0.0)
        cols.append(np.sqrt(lam[0]) * eig.eigenvectors[:, 0])
        ratios.append(lam[1] / lam[0] if lam.size > 1 and lam[0] > 0 else 0.0)
    return np.column_stack(cols), np.array(ratios)


def sdp_maxmin(view: CsiView, cfg: NetworkConfig, eta: Optional[Sequence[float]] = None,
               opts: SolverOptions = SolverOptions(), sigma_s2: float = 1.0,
               tol: float = TOLERANCES.sdp_violation) -> Precoder:
    """Maximize the smallest partial SINR subject to ``Tr(F_i Q F_i^H) >= eta_i``.

    Bisection brackets ``t`` in ``[0, min_k P ||h_k||^2 / sigma_k^2]`` (a
    single-user bound that no multi-user design can beat) and stops once the
    width falls below ``opts.bisection_rtol * t_hi``.  Each beamformer is
    the principal eigenvector of ``J_k`` scaled by the root of its eigenvalue;
    ``info["rank_violation"]`` flags blocks whose second eigenvalue exceeds
    ``1e-6`` of the first.

    Raises :class:`InfeasibleProblem` when even ``t = 0`` is infeasible.
    """
    if any(h.shape[0] != 1 for h in view.H_k):
        raise ValueError("sdp_maxmin assumes single-antenna UCRs")
    eta = default_eta(cfg) if eta is None else np.broadcast_to(np.asarray(eta, float), (cfg.K,))
    cons = _build(view, cfg, eta, sigma_s2)
    sizes = cons.space.sizes
    calls = []

    def oracle(t):
        A, b = cons.system(t)
        res = barrier_phase1(sizes, A, b, opts=opts, tol=tol)
        calls.append((t, res.feasible))
        return res.feasible, res

    gains = np.array([float(np.vdot(h, h).real) for h in view.H_k])
    t_ub = float(np.min(cfg.P * gains / cons.sigma2))
    ok0, res0 = oracle(0.0)
    if not ok0:
        raise InfeasibleProblem(
            f"leakage floors incompatible with the power and PR caps (slack bound {res0.upper:.3g})")
    t_hi = t_ub * (1.0 + 1e-3) + 1e-9
    # relative width test; the tiny absolute term only guards t* = 0
    bis = bisect_feasibility(oracle, 0.0, t_hi, tol=1e-12, rtol=opts.bisection_rtol,
                             check_lo=False)
    witness = bis.witness if bis.witness is not None else res0
    blocks = cons.space.unpack(witness.x[: cons.space.dim])
    W, ratios = _extract(blocks, TOLERANCES.rank_one_ratio)
    W = scale_to_feasible(W, view.N, cfg)
    beta = partial_sinr(W, view.H_u, cons.sigma2)
    # monotone feasibility: no feasible point above an infeasible one
    infeasible = [t for t, ok in calls if not ok]
    monotone = all(t < min(infeasible) for t, ok in calls if ok) if infeasible else True
    info = {
        "t_lo": bis.lo, "t_hi": bis.hi, "t_ub": t_ub, "bisection_iterations": bis.iterations,
        "rank_ratio": ratios, "rank_violation": bool(np.any(ratios > TOLERANCES.rank_one_ratio)),
        "min_partial_sinr": float(np.min(beta)), "monotone": monotone, "eta": np.asarray(eta),
        "history": calls,
    }
    return Precoder(W=W, scheme="sdp_maxmin", iterations=bis.iterations, objective=bis.lo, info=info)
