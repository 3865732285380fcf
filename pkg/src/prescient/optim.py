"""Optimization engines used by the precoder designs.

* :func:`projected_ascent` -- gradient projection with Armijo step rules.
* :func:`bisect_feasibility` -- bisection on a monotone feasibility oracle.
* :func:`golden_line_search` -- grid-seeded golden-section search on [0, 1].
* :func:`barrier_concave_max` -- log-barrier Newton method for smooth concave
  objectives over Hermitian PSD blocks with linear (trace) constraints.
* :func:`waterfill` -- closed-form waterfilling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .mathcore import TOLERANCES

__all__ = [
    "SolverOptions",
    "SolveTrace",
    "BisectionResult",
    "BarrierResult",
    "FeasibilityResult",
    "HermitianBlocks",
    "projected_ascent",
    "bisect_feasibility",
    "golden_line_search",
    "barrier_concave_max",
    "barrier_phase1",
    "waterfill",
    "InfeasibleProblem",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 500
    eps: float = 1e-6
    armijo_sigma: float = 1e-4
    armijo_beta: float = 0.5
    step_init: float = 1.0
    max_backtracks: int = 50
    barrier_t0: float = 1.0
    barrier_factor: float = 20.0
    barrier_gap: float = 1e-9
    newton_tol: float = 1e-12
    newton_max: int = 100
    bisection_tol: float = 1e-4
    bisection_rtol: float = 1e-4

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if val <= 0:
                raise ValueError(f"SolverOptions.{name} must be positive, got {val}")
        if not 0.0 < self.armijo_beta < 1.0 or not 0.0 < self.armijo_sigma < 1.0:
            raise ValueError("Armijo constants must lie in (0, 1)")


@dataclass
class SolveTrace:
    objective: List[float] = field(default_factory=list)
    violation: List[float] = field(default_factory=list)
    reason: str = ""

    @property
    def iterations(self) -> int:
        return max(0, len(self.objective) - 1)


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b).real)


def projected_ascent(
    fun: Callable[[np.ndarray], float],
    fun_grad: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    project: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    opts: SolverOptions = SolverOptions(),
    violation: Optional[Callable[[np.ndarray], float]] = None,
) -> Tuple[np.ndarray, SolveTrace]:
    """Maximize ``fun`` over a convex set given by ``project``.

    Each iteration takes a gradient step of size ``s``, maps the result
    into the set with ``project``, and moves a fraction ``alpha`` of the way
    toward it.  ``s`` is halved until the projected direction is an ascent
    direction; ``alpha`` follows Armijo backtracking on the segment.  Stops
    when ``||x_{k+1} - x_k|| < opts.eps`` or after ``opts.max_iters``.

    Works for real or complex arrays; the gradient of a real function of a
    complex array is ``df/dRe + 1j df/dIm``.
    """
    x = np.array(x0, copy=True)
    f, g = fun_grad(x)
    trace = SolveTrace()
    trace.objective.append(f)
    trace.violation.append(violation(x) if violation else 0.0)
    s = opts.step_init
    for _ in range(opts.max_iters):
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            err = FloatingPointError("non-finite objective or gradient")
            err.iterate = x
            raise err
        # step 2-3: gradient step then map back into the set
        for _ in range(opts.max_backtracks):
            d = project(x + s * g) - x
            slope = _inner(g, d)
            if slope > 0.0:
                break
            s *= opts.armijo_beta
        else:
            trace.reason = "stationary"
            break
        # step 4: Armijo on the segment toward the projected point
        alpha = 1.0
        accepted = False
        for _ in range(opts.max_backtracks):
            x_new = x + alpha * d
            f_new = fun(x_new)
            if f_new >= f + opts.armijo_sigma * alpha * slope:
                accepted = True
                break
            alpha *= opts.armijo_beta
        if not accepted:
            trace.reason = "line search failed"
            break
        dx = float(np.linalg.norm(x_new - x))
        x = x_new
        f, g = fun_grad(x)
        trace.objective.append(f)
        trace.violation.append(violation(x) if violation else 0.0)
        if alpha == 1.0:
            s /= opts.armijo_beta
        if dx < opts.eps:
            trace.reason = "converged"
            break
    else:
        trace.reason = "max_iters"
    return x, trace


@dataclass
class BisectionResult:
    t: float
    lo: float
    hi: float
    iterations: int
    history: List[Tuple[float, bool]]
    witness: object = None


def bisect_feasibility(
    oracle: Callable[[float], Tuple[bool, object]],
    t_lo: float,
    t_hi: float,
    tol: float = 1e-4,
    rtol: float = 0.0,
    check_lo: bool = True,
) -> BisectionResult:
    """Largest feasible ``t`` in ``[t_lo, t_hi]`` for a monotone oracle.

    ``oracle(t)`` returns ``(feasible, witness)``.  Terminates when
    ``hi - lo <= tol + rtol * hi`` and returns the final ``lo`` together
    with the witness from the last feasible call.
    """
    history: List[Tuple[float, bool]] = []
    witness = None
    if check_lo:
        ok, witness = oracle(t_lo)
        history.append((t_lo, ok))
        if not ok:
            raise ValueError(f"oracle infeasible at the lower end t={t_lo}")
    lo, hi = float(t_lo), float(t_hi)
    it = 0
    while hi - lo > tol + rtol * hi:
        mid = 0.5 * (lo + hi)
        ok, w = oracle(mid)
        history.append((mid, ok))
        if ok:
            lo, witness = mid, w
        else:
            hi = mid
        it += 1
    return BisectionResult(t=lo, lo=lo, hi=hi, iterations=it, history=history, witness=witness)


def golden_line_search(
    f: Callable[[float], float], grid: int = 21, width: float = 1e-4
) -> Tuple[float, float]:
    """Maximize a scalar function on ``[0, 1]``.

    A uniform grid (endpoints included) picks the best cell, then
    golden-section refinement runs on the bracket around it until it is
    narrower than ``width``.  Returns the best ``(alpha, value)`` seen.
    """
    if grid < 2:
        raise ValueError("grid must have at least two points")
    alphas = np.linspace(0.0, 1.0, grid)
    vals = [f(float(a)) for a in alphas]
    best_i = int(np.argmax(vals))
    best = (float(alphas[best_i]), float(vals[best_i]))
    a = float(alphas[max(best_i - 1, 0)])
    b = float(alphas[min(best_i + 1, grid - 1)])
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        for cand, val in ((c, fc), (d, fd)):
            if val > best[1]:
                best = (float(cand), float(val))
    return best


def waterfill(gains: Sequence[float], P: float) -> np.ndarray:
    """Powers maximizing ``sum log(1 + g_m p_m)`` with ``sum p_m <= P``."""
    g = np.asarray(gains, dtype=float)
    p = np.zeros_like(g)
    pos = np.flatnonzero(g > 0)
    if pos.size == 0 or P <= 0:
        return p
    order = pos[np.argsort(-g[pos])]
    inv = 1.0 / g[order]
    # largest active set whose water level stays above every 1/g inside it
    csum = np.cumsum(inv)
    counts = np.arange(1, order.size + 1)
    levels = (P + csum) / counts
    active = int(np.flatnonzero(levels > inv)[-1]) + 1
    mu = levels[active - 1]
    p[order[:active]] = mu - inv[:active]
    return p


class HermitianBlocks:
    """Real coordinates for a list of Hermitian blocks.

    A block of size ``n`` uses ``n*n`` coordinates against a basis that is
    orthonormal under ``<A, B> = Re tr(A^H B)``, so ``x_p = Re tr(E_p X)``
    and the gradient of a linear map ``X -> Re tr(C X)`` is ``Re tr(C E_p)``.
    """

    def __init__(self, sizes: Sequence[int]):
        self.sizes = [int(n) for n in sizes]
        self.bases = [self._basis(n) for n in self.sizes]
        self._flat = [E.reshape(E.shape[0], -1) for E in self.bases]
        self._flat_t = [E.transpose(0, 2, 1).reshape(E.shape[0], -1) for E in self.bases]
        self.offsets = np.concatenate([[0], np.cumsum([n * n for n in self.sizes])]).astype(int)
        self.dim = int(self.offsets[-1])

    @staticmethod
    def _basis(n: int) -> np.ndarray:
        E = []
        for i in range(n):
            M = np.zeros((n, n), dtype=complex)
            M[i, i] = 1.0
            E.append(M)
        r = 1.0 / math.sqrt(2.0)
        for i in range(n):
            for j in range(i + 1, n):
                M = np.zeros((n, n), dtype=complex)
                M[i, j] = M[j, i] = r
                E.append(M)
                M = np.zeros((n, n), dtype=complex)
                M[i, j] = 1j * r
                M[j, i] = -1j * r
                E.append(M)
        return np.array(E).reshape(n * n, n, n)

    def unpack(self, x: np.ndarray) -> List[np.ndarray]:
        out = []
        for b, n in enumerate(self.sizes):
            seg = x[self.offsets[b]:self.offsets[b + 1]]
            out.append((seg @ self._flat[b]).reshape(n, n))
        return out

    def pack(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        return self.linear(mats)

    def linear(self, mats: Sequence[Optional[np.ndarray]]) -> np.ndarray:
        """Row ``a`` with ``a . x = sum_b Re tr(C_b X_b)`` for Hermitian ``C_b``."""
        row = np.zeros(self.dim)
        for b, C in enumerate(mats):
            if C is None:
                continue
            row[self.offsets[b]:self.offsets[b + 1]] = (self._flat_t[b] @ np.ravel(C)).real
        return row

    def quad(self, b: int, Y: np.ndarray, Z: Optional[np.ndarray] = None) -> np.ndarray:
        """Block matrix ``H_pq = Re tr(Y E_p Z E_q)`` (``Z`` defaults to ``Y``)."""
        E = self.bases[b]
        m = E.shape[0]
        YE = (Y @ E).reshape(m, -1)
        ZE = YE if Z is None else (Z @ E).reshape(m, -1)
        ZEt = ZE.reshape(m, *E.shape[1:]).transpose(0, 2, 1).reshape(m, -1)
        return (YE @ ZEt.T).real

    def block_slice(self, b: int) -> slice:
        return slice(self.offsets[b], self.offsets[b + 1])


@dataclass
class BarrierResult:
    x: np.ndarray
    blocks: List[np.ndarray]
    value: float
    gap: float
    newton_decrement: float
    trace: SolveTrace


@dataclass
class FeasibilityResult:
    feasible: bool
    x: np.ndarray
    margin: float
    upper: float


def _blocks_pd(blocks: Sequence[np.ndarray], floor: float) -> bool:
    for X in blocks:
        if X.shape[0] == 1:
            if X[0, 0].real <= floor:
                return False
            continue
        try:
            L = np.linalg.cholesky(X)
        except np.linalg.LinAlgError:
            return False
        if np.min(np.abs(np.diag(L))) ** 2 <= floor:
            return False
    return True


def _normalize_rows(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scale = np.maximum(np.maximum(np.abs(A).max(axis=1, initial=0.0), np.abs(b)), 1e-300)
    return A / scale[:, None], b / scale


class _Barrier:
    """Log-barrier function ``tau f + sum logdet X_b + sum log(b - A x)``."""

    def __init__(self, space: HermitianBlocks, n_free: int, objective, A, b, value_fn=None):
        self.space, self.n_free, self.objective = space, n_free, objective
        self.value_fn = value_fn or (lambda x: objective(x)[0])
        self.A, self.b = A, b
        self.n = space.dim + n_free
        self.nu = sum(space.sizes) + A.shape[0]

    def interior(self, x) -> bool:
        if np.any(self.b - self.A @ x <= 0.0):
            return False
        return _blocks_pd(self.space.unpack(x[: self.space.dim]), TOLERANCES.psd_floor)

    def value(self, x, tau) -> float:
        blocks = self.space.unpack(x[: self.space.dim])
        slack = self.b - self.A @ x
        val = tau * self.value_fn(x) + float(np.sum(np.log(slack)))
        for X in blocks:
            val += float(np.linalg.slogdet(X)[1])
        return val

    def derivatives(self, x, tau):
        f, g, H = self.objective(x)
        sp = self.space
        blocks = sp.unpack(x[: sp.dim])
        slack = self.b - self.A @ x
        grad = tau * g - self.A.T @ (1.0 / slack)
        hess = tau * H - (self.A.T * (1.0 / slack ** 2)) @ self.A
        for bi, X in enumerate(blocks):
            Y = np.linalg.inv(X)
            Y = 0.5 * (Y + Y.conj().T)
            sl = sp.block_slice(bi)
            grad[sl] += (sp._flat_t[bi] @ Y.ravel()).real
            hess[sl, sl] -= sp.quad(bi, Y)
        return f, grad, hess


def _center(bar: _Barrier, x, tau, opts: SolverOptions):
    lam2 = np.inf
    for _ in range(opts.newton_max):
        _, grad, hess = bar.derivatives(x, tau)
        try:
            L = np.linalg.cholesky(-hess)
            dx = np.linalg.solve(L.T, np.linalg.solve(L, grad))
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(-hess, grad, rcond=None)[0]
        lam2 = float(grad @ dx)
        if lam2 / 2.0 <= opts.newton_tol:
            break
        step = 1.0
        while not bar.interior(x + step * dx):
            step *= 0.5
            if step < 1e-12:
                return x, lam2
        # inside the quadratic-convergence region take the (interior) step as is
        if lam2 > 1e-2:
            phi0 = bar.value(x, tau)
            while bar.value(x + step * dx, tau) < phi0 + 0.25 * step * lam2:
                step *= 0.5
                if step < 1e-12:
                    return x, lam2
        x = x + step * dx
    return x, lam2


def barrier_phase1(
    sizes: Sequence[int],
    A: np.ndarray,
    b: np.ndarray,
    n_free: int = 0,
    opts: SolverOptions = SolverOptions(),
    tol: float = TOLERANCES.sdp_violation,
    stop_when_feasible: bool = True,
) -> FeasibilityResult:
    """Search for a point with ``A x < b`` and every block positive definite.

    Maximizes a common slack ``s`` in ``A x + s <= b`` (rows normalized,
    ``s <= 1``).  Declares infeasibility once a barrier duality bound
    proves ``s* < -tol``; declares feasibility once ``s > 0`` at a centered
    point, or when the converged optimum satisfies ``s* >= -tol``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    A, b = _normalize_rows(A, b)
    space = HermitianBlocks(sizes)
    n = space.dim + n_free
    A1 = np.hstack([A, np.ones((A.shape[0], 1))])
    cap = np.zeros((1, n + 1))
    cap[0, -1] = 1.0
    A1 = np.vstack([A1, cap])
    b1 = np.concatenate([b, [1.0]])

    x0 = np.zeros(n)
    x0[: space.dim] = space.pack([1e-3 * np.eye(k) for k in space.sizes])
    s0 = min(float(np.min(b - A @ x0)) - 1.0, 0.0) if A.shape[0] else 0.0
    z = np.concatenate([x0, [s0]])

    def objective(v):
        g = np.zeros(n + 1)
        g[-1] = 1.0
        return v[-1], g, np.zeros((n + 1, n + 1))

    bar = _Barrier(space, n_free + 1, objective, A1, b1)
    tau = opts.barrier_t0
    upper = np.inf
    while True:
        z, _ = _center(bar, z, tau, opts)
        s = float(z[-1])
        upper = s + bar.nu / tau
        if stop_when_feasible and s > 0.0:
            return FeasibilityResult(True, z[:n], s, upper)
        if upper < -tol:
            return FeasibilityResult(False, z[:n], s, upper)
        if bar.nu / tau < 0.1 * tol:
            return FeasibilityResult(s >= -tol, z[:n], s, upper)
        tau *= opts.barrier_factor


def barrier_concave_max(
    objective: Callable[[np.ndarray], Tuple[float, np.ndarray, np.ndarray]],
    sizes: Sequence[int],
    A: np.ndarray,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    n_free: int = 0,
    opts: SolverOptions = SolverOptions(),
    value: Optional[Callable[[np.ndarray], float]] = None,
) -> BarrierResult:
    """Maximize a smooth concave ``objective`` subject to ``A x <= b`` and PSD blocks.

    ``objective(x)`` returns ``(f, grad, hess)`` in the real coordinates of
    :class:`HermitianBlocks` (``x`` holds the blocks followed by ``n_free``
    unconstrained scalars).  ``value`` is an optional cheap evaluation of
    ``f`` alone, used in line searches.  A strictly feasible start is taken from ``x0``
    when it is interior, otherwise from :func:`barrier_phase1`.  Stops when
    the barrier duality gap ``nu / tau`` drops below ``opts.barrier_gap``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    An, bn = _normalize_rows(A, b)
    space = HermitianBlocks(sizes)
    bar = _Barrier(space, n_free, objective, An, bn, value_fn=value)
    if x0 is None or not bar.interior(np.asarray(x0, dtype=float)):
        ph1 = barrier_phase1(sizes, A, b, n_free=n_free, opts=opts, tol=0.0)
        if not ph1.feasible or ph1.margin <= 0.0:
            raise _infeasible(f"no strictly feasible point (best margin {ph1.margin:.3g})")
        x = ph1.x
    else:
        x = np.array(x0, dtype=float)

    trace = SolveTrace()
    tau = opts.barrier_t0
    lam2 = np.inf
    while True:
        x, lam2 = _center(bar, x, tau, opts)
        trace.objective.append(objective(x)[0])
        trace.violation.append(float(max(0.0, np.max(An @ x - bn, initial=0.0))))
        if bar.nu / tau < opts.barrier_gap:
            trace.reason = "converged"
            break
        tau *= opts.barrier_factor
    return BarrierResult(
        x=x,
        blocks=space.unpack(x[: space.dim]),
        value=float(objective(x)[0]),
        gap=bar.nu / tau,
        newton_decrement=lam2,
        trace=trace,
    )


class InfeasibleProblem(ValueError):
    """Raised when a design problem has no feasible point."""


def _infeasible(msg: str) -> InfeasibleProblem:
    return InfeasibleProblem(msg)
