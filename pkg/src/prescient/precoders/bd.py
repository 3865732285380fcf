"""Block-diagonalization designs for multi-antenna UCRs.

User ``k`` transmits inside the null space ``B_k`` of the stacked channels
of every other user, so inter-user interference vanishes structurally.
The prescient variants add ICR leakage floors ``Tr(F_i Q F_i^H) >= eta_i``.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..mathcore import hermitian_eig, nullspace_basis
from ..network import CsiView, NetworkConfig
from ..optim import (HermitianBlocks, InfeasibleProblem, SolverOptions, barrier_concave_max,
                     waterfill)
from .base import Precoder
from .sdp import default_eta

__all__ = [
    "bd_bases",
    "bd_residual",
    "bd_sum_rate",
    "pbd_joint",
    "pbd_separate",
    "conventional_bd",
]

LN2 = math.log(2.0)


def bd_bases(view: CsiView) -> list:
    """Orthonormal null-space bases ``B_k`` of ``H_{-k}``."""
    out = []
    for k in range(len(view.H_k)):
        others = [H for j, H in enumerate(view.H_k) if j != k]
        H_mk = np.vstack(others) if others else np.zeros((0, view.H_k[k].shape[1]))
        B = nullspace_basis(H_mk)
        if B.shape[1] == 0:
            raise InfeasibleProblem(f"user {k} has an empty null space; BD split infeasible")
        out.append(B)
    return out


def bd_residual(prec: Precoder, view: CsiView) -> float:
    """``max_{k != j} ||H_k Q_j H_k^H||_F / (||H_k||_F^2 Tr(Q_j))``."""
    worst = 0.0
    Q = prec.covariances()
    for k, Hk in enumerate(view.H_k):
        for j, Qj in enumerate(Q):
            if j == k:
                continue
            scale = float(np.vdot(Hk, Hk).real) * max(float(np.trace(Qj).real), 1e-300)
            worst = max(worst, float(np.linalg.norm(Hk @ Qj @ Hk.conj().T)) / scale)
    return worst


def bd_sum_rate(prec: Precoder, view: CsiView, noise: Optional[Sequence[float]] = None) -> float:
    """Interference-free objective ``sum_k log2 det(I + H_k Q_k H_k^H / sigma_k^2)``."""
    total = 0.0
    for k, (Hk, Qk) in enumerate(zip(view.H_k, prec.covariances())):
        s2 = 1.0 if noise is None else noise[k]
        M = np.eye(Hk.shape[0]) + Hk @ Qk @ Hk.conj().T / s2
        total += np.linalg.slogdet(M)[1] / LN2
    return float(total)


def _leakage_grams(view: CsiView, cfg: NetworkConfig) -> list:
    if view.has_instantaneous_F:
        return [Fi.conj().T @ Fi for Fi in view.F]
    # statistical fallback: E[F^H F] = r_I sigma_f2 I
    return [cfg.r_I * s * np.eye(cfg.t_u) for s in cfg.per_icr("sigma_f2")]


def _constraints(space: HermitianBlocks, Bs, view, cfg, eta, to_block):
    """Power, PR and leakage rows expressed in the reduced variables."""
    rows, rhs = [], []
    rows.append(space.linear([to_block(k, np.eye(cfg.t_u)) for k in range(len(Bs))]))
    rhs.append(cfg.P)
    if view.N.shape[0]:
        NhN = view.N.conj().T @ view.N
        rows.append(space.linear([to_block(k, NhN) for k in range(len(Bs))]))
        rhs.append(cfg.xi_p)
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (cfg.K,))
    for G, e in zip(_leakage_grams(view, cfg), eta):
        if e > 0:
            rows.append(-space.linear([to_block(k, G) for k in range(len(Bs))]))
            rhs.append(-e)
    return np.array(rows), np.array(rhs)


def _sqrt_psd(S: np.ndarray) -> np.ndarray:
    eig = hermitian_eig(0.5 * (S + S.conj().T))
    lam = np.maximum(eig.eigenvalues, 0.0)
    return eig.eigenvectors * np.sqrt(lam)


def _with_backoff(solve, eta, backoff: int) -> Precoder:
    """Call ``solve(eta)``, halving the leakage floors while infeasible.

    After ``backoff`` halvings the floors are dropped altogether, which
    leaves only the power and PR caps (always feasible).  ``backoff = 0``
    raises on the first failure.  The floors actually used are stored in
    ``info["eta"]``.
    """
    eta = np.asarray(eta, dtype=float)
    if backoff <= 0:
        prec = solve(eta)
        prec.info["eta"], prec.info["eta_scale"] = eta.copy(), 1.0
        return prec
    scale = 1.0
    for attempt in range(backoff + 2):
        try:
            prec = solve(eta * scale)
        except InfeasibleProblem:
            if attempt >= backoff + 1:
                raise
            scale = 0.5 ** (attempt + 1) if attempt < backoff else 0.0
            continue
        prec.info["eta"] = np.broadcast_to(eta * scale, np.shape(eta)).copy()
        prec.info["eta_scale"] = scale
        return prec
    raise InfeasibleProblem("leakage floors could not be met")  # pragma: no cover


def pbd_joint(view: CsiView, cfg: NetworkConfig, eta: Optional[Sequence[float]] = None,
              opts: SolverOptions = SolverOptions(), backoff: int = 0) -> Precoder:
    """Joint prescient BD: optimize every ``Q_k = B_k S_k B_k^H`` at once.

    Maximizes ``sum_k log2 det(I + G_k S_k G_k^H / sigma_k^2)`` with
    ``G_k = H_k B_k`` by the barrier method, subject to the power, PR and
    leakage constraints.  ``W_k = B_k S_k^{1/2}``.

    With ``backoff > 0`` infeasible leakage floors are halved up to
    ``backoff`` times and then dropped instead of raising.
    """
    eta = default_eta(cfg) if eta is None else eta
    return _with_backoff(lambda e: _pbd_joint(view, cfg, e, opts), eta, backoff)


def _pbd_joint(view, cfg, eta, opts) -> Precoder:
    Bs = bd_bases(view)
    sk2 = cfg.per_ucr("sigma_k2")
    Gs = [Hk @ B / math.sqrt(sk2[k]) for k, (Hk, B) in enumerate(zip(view.H_k, Bs))]
    sizes = [B.shape[1] for B in Bs]
    space = HermitianBlocks(sizes)
    A, b = _constraints(space, Bs, view, cfg, eta,
                        lambda k, C: Bs[k].conj().T @ C @ Bs[k])

    def value(x):
        total = 0.0
        for G, S in zip(Gs, space.unpack(x)):
            total += np.linalg.slogdet(np.eye(G.shape[0]) + G @ S @ G.conj().T)[1]
        return total / LN2

    def objective(x):
        f = 0.0
        grad = np.zeros(space.dim)
        hess = np.zeros((space.dim, space.dim))
        for bi, (G, S) in enumerate(zip(Gs, space.unpack(x))):
            M = np.eye(G.shape[0]) + G @ S @ G.conj().T
            f += np.linalg.slogdet(M)[1]
            K = G.conj().T @ np.linalg.solve(M, G)
            K = 0.5 * (K + K.conj().T)
            sl = space.block_slice(bi)
            grad[sl] = space.linear([K if j == bi else None for j in range(len(Gs))])[sl]
            hess[sl, sl] = -space.quad(bi, K)
        return f / LN2, grad / LN2, hess / LN2

    x0 = space.pack([(0.5 * cfg.P / sum(sizes)) * np.eye(n) for n in sizes])
    res = barrier_concave_max(objective, sizes, A, b, x0=x0, opts=opts, value=value)
    Ws = [B @ _sqrt_psd(S) for B, S in zip(Bs, res.blocks)]
    prec = Precoder(W=np.hstack(Ws), scheme="pbd_joint", block_sizes=tuple(sizes),
                    iterations=res.trace.iterations, objective=res.value,
                    info={"gap": res.gap, "newton_decrement": res.newton_decrement})
    return prec


def _separate_directions(view: CsiView, cfg: NetworkConfig):
    """Per-user unit-norm columns ``B_k V_k`` and their gains ``eps_{k,m}^2``."""
    Bs = bd_bases(view)
    sk2 = cfg.per_ucr("sigma_k2")
    cols, gains, sizes = [], [], []
    for k, (Hk, B) in enumerate(zip(view.H_k, Bs)):
        _, s, Vh = np.linalg.svd(Hk @ B, full_matrices=False)
        r = int(np.sum(s > 1e-10 * max(s[0], 1e-300)))
        cols.append(B @ Vh[:r].conj().T)
        gains.append(s[:r] ** 2 / sk2[k])
        sizes.append(r)
    return np.hstack(cols), np.concatenate(gains), tuple(sizes)


def _allocation_rows(Wd: np.ndarray, view: CsiView, cfg: NetworkConfig, eta):
    rows, rhs = [np.sum(np.abs(Wd) ** 2, axis=0)], [cfg.P]
    if view.N.shape[0]:
        rows.append(np.sum(np.abs(view.N @ Wd) ** 2, axis=0))
        rhs.append(cfg.xi_p)
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (cfg.K,))
    for G, e in zip(_leakage_grams(view, cfg), eta):
        if e > 0:
            rows.append(-np.einsum("tm,ts,sm->m", Wd.conj(), G, Wd).real)
            rhs.append(-e)
    return np.array(rows), np.array(rhs)


def _solve_allocation(gains, A, b, opts):
    L = gains.size

    def value(x):
        return float(np.sum(np.log1p(gains * x))) / LN2

    def objective(x):
        d = 1.0 + gains * x
        return (float(np.sum(np.log(d))) / LN2, gains / d / LN2,
                np.diag(-(gains / d) ** 2 / LN2))

    x0 = np.full(L, 1e-3)
    return barrier_concave_max(objective, [1] * L, A, b, x0=x0, opts=opts, value=value)


def pbd_separate(view: CsiView, cfg: NetworkConfig, eta: Optional[Sequence[float]] = None,
                 opts: SolverOptions = SolverOptions(), scheme: str = "pbd_separate",
                 backoff: int = 0) -> Precoder:
    """Separate prescient BD: fixed null-space directions, optimized powers.

    Directions come from the SVD of each effective channel ``H_k B_k``; the
    powers ``lambda_{k,m}`` maximize ``sum log2(1 + eps_{k,m}^2 lambda_{k,m})``
    under the power, PR (``<= xi_p``) and leakage constraints.  ``backoff``
    behaves as in :func:`pbd_joint`.
    """
    eta = default_eta(cfg) if eta is None else eta
    Wd, gains, sizes = _separate_directions(view, cfg)

    def solve(e):
        A, b = _allocation_rows(Wd, view, cfg, e)
        res = _solve_allocation(gains, A, b, opts)
        lam = np.maximum(res.x, 0.0)
        return Precoder(W=Wd * np.sqrt(lam), scheme=scheme, block_sizes=sizes,
                        iterations=res.trace.iterations, objective=res.value,
                        info={"powers": lam, "gains": gains, "gap": res.gap})

    return _with_backoff(solve, eta, backoff)


def conventional_bd(view: CsiView, cfg: NetworkConfig,
                    opts: SolverOptions = SolverOptions()) -> Precoder:
    """BD with waterfilling over the null-space modes, ignoring the ICRs.

    If the waterfilling powers break the PR cap the allocation is re-solved
    with the power and PR caps only.
    """
    Wd, gains, sizes = _separate_directions(view, cfg)
    lam = waterfill(gains, cfg.P)
    W = Wd * np.sqrt(lam)
    pr = float(np.sum(np.abs(view.N @ W) ** 2)) if view.N.shape[0] else 0.0
    info = {"powers": lam, "gains": gains, "pr_bound": pr > cfg.xi_p}
    if pr > cfg.xi_p:
        A, b = _allocation_rows(Wd, view, cfg, np.zeros(cfg.K))
        lam = np.maximum(_solve_allocation(gains, A, b, opts).x, 0.0)
        W = Wd * np.sqrt(lam)
        info["powers"] = lam
    obj = float(np.sum(np.log1p(gains * lam))) / LN2
    return Precoder(W=W, scheme="conventional_bd", block_sizes=sizes, objective=obj, info=info)
