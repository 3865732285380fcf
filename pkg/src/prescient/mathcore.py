"""Special functions and small dense complex-matrix helpers.

Everything in here is a pure function of its arguments.  The chi-square
routines only support even degrees of freedom, which is all the energy
detector needs (``2 * M_tilde * r_I`` real components), and lets us use the
closed Erlang/Poisson form instead of incomplete-gamma machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaincc, gammaln, pdtr, pdtrc

__all__ = [
    "TOLERANCES",
    "Tolerances",
    "SpectralDecomposition",
    "gaussian_q",
    "erlang_sf",
    "erlang_pdf",
    "chisq_survival",
    "chisq_survival_inverse",
    "marcum_q",
    "hermitian_eig",
    "nullspace_basis",
    "is_hermitian",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared across the package."""

    hermitian: float = 1e-10
    nullspace_rank: float = 1e-10
    marcum_tail: float = 1e-12
    inverse_rtol: float = 1e-10
    feasibility: float = 1e-8
    sdp_violation: float = 1e-7
    rank_one_ratio: float = 1e-6
    psd_floor: float = 1e-12


TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


def gaussian_q(x):
    """Gaussian tail probability ``Q(x) = 1 - Phi(x)``."""
    val = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(val) if np.ndim(val) == 0 else val


def _log_erlang_terms(n: int, y: np.ndarray) -> np.ndarray:
    # log of y^r e^{-y} / r!, r = 0..n-1, along a trailing axis
    r = np.arange(n)
    with np.errstate(divide="ignore"):
        logy = np.log(y)
    with np.errstate(invalid="ignore"):
        terms = r * logy[..., None] - gammaln(r + 1.0) - y[..., None]
    terms[..., 0] = -y
    return terms


def erlang_sf(n: int, y):
    """Survival of a unit-rate Erlang(n) variable: ``e^-y sum_{r<n} y^r/r!``.

    This is the series appearing in the energy-detector false-alarm and
    average detection expressions.  It equals the regularized upper
    incomplete gamma function ``Q(n, y)``, which scipy evaluates without
    cancellation for large ``y`` or ``n``.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0):
        raise ValueError("y must be nonnegative")
    out = gammaincc(float(int(n)), y_arr)
    return float(out) if y_arr.ndim == 0 else out


def erlang_pdf(n: int, y):
    """Density of a unit-rate Erlang(n) variable, ``-d/dy erlang_sf(n, y)``."""
    y_arr = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        logy = np.log(y_arr)
    if n == 1:
        val = np.exp(-y_arr)
    else:
        val = np.exp((n - 1) * logy - y_arr - gammaln(n))
    return float(val) if np.ndim(val) == 0 else val


def _check_dof(dof: int) -> int:
    if int(dof) != dof or dof < 2 or int(dof) % 2:
        raise ValueError(f"dof must be an even positive integer, got {dof}")
    return int(dof)


def chisq_survival(dof: int, x):
    """Complementary cdf of a central chi-square with even ``dof``."""
    dof = _check_dof(dof)
    return erlang_sf(dof // 2, np.asarray(x, dtype=float) / 2.0)


def chisq_survival_inverse(dof: int, p: float, rtol: float = TOLERANCES.inverse_rtol) -> float:
    """Solve ``chisq_survival(dof, x) = p`` for ``x``.

    Brackets the root by doubling, then runs Newton on ``log S`` with a
    bisection fallback whenever a step leaves the bracket.
    """
    dof = _check_dof(dof)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    n = dof // 2
    target = math.log(p)

    def g(y):
        return math.log(erlang_sf(n, y)) - target

    lo, hi = 0.0, max(1.0, float(n))
    while g(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
    y = 0.5 * (lo + hi)
    for _ in range(200):
        gy = g(y)
        if abs(gy) < 1e-14:
            break
        if gy > 0.0:
            lo = y
        else:
            hi = y
        # d/dy log S = -pdf / S
        s = erlang_sf(n, y)
        deriv = -erlang_pdf(n, y) / s if s > 0 else -1.0
        y_new = y - gy / deriv
        if not lo < y_new < hi:
            y_new = 0.5 * (lo + hi)
        if abs(y_new - y) <= 1e-15 * max(1.0, y):
            y = y_new
            break
        y = y_new
    x = 2.0 * y
    resid = abs(chisq_survival(dof, x) - p) / p
    if resid > rtol:
        raise ArithmeticError(f"inverse did not converge: relative residual {resid:.3g}")
    return x


def marcum_q(order: int, a: float, b: float, tail: float = TOLERANCES.marcum_tail) -> float:
    """Generalized Marcum Q-function ``Q_order(a, b)``.

    Equal to ``P(X > b^2)`` for ``X`` noncentral chi-square with ``2 * order``
    degrees of freedom and noncentrality ``a^2``.  Evaluated as a
    Poisson(a^2/2)-weighted mixture of central chi-square survivals; the
    Poisson window is widened until the discarded mass on both sides is below
    ``tail``.
    """
    if order < 1 or int(order) != order:
        raise ValueError(f"order must be a positive integer, got {order}")
    order = int(order)
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("arguments must be finite")
    if b <= 0.0:
        return 1.0
    y = 0.5 * b * b
    mu = 0.5 * a * a
    if mu == 0.0:
        return erlang_sf(order, y)

    sd = math.sqrt(mu)
    j_lo = max(0, int(math.floor(mu - 8.0 * sd - 8.0)))
    j_hi = int(math.ceil(mu + 8.0 * sd + 16.0))
    while pdtrc(j_hi, mu) > 0.5 * tail:
        j_hi += int(math.ceil(2.0 * sd)) + 8
    while j_lo > 0 and pdtr(j_lo - 1, mu) > 0.5 * tail:
        j_lo = max(0, j_lo - int(math.ceil(2.0 * sd)) - 8)

    j = np.arange(j_lo, j_hi + 1)
    log_w = j * math.log(mu) - mu - gammaln(j + 1.0)
    # cumulative log-sums of the Erlang terms give every central survival
    terms = _log_erlang_terms(order + j_hi, np.array([y]))[0]
    log_sf = np.logaddexp.accumulate(terms)[order + j - 1]
    total = float(np.exp(log_w + log_sf).sum())
    return min(1.0, total)


def is_hermitian(M: np.ndarray, tol: float = TOLERANCES.hermitian) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(M)))
    return float(np.linalg.norm(M - M.conj().T)) <= tol * scale


def hermitian_eig(M: np.ndarray) -> SpectralDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending."""
    M = np.asarray(M)
    if not is_hermitian(M):
        raise ValueError("hermitian_eig requires a square Hermitian matrix")
    # symmetrize to kill round-off asymmetry before LAPACK
    vals, vecs = np.linalg.eigh(0.5 * (M + M.conj().T))
    return SpectralDecomposition(vals[::-1].copy(), vecs[:, ::-1].copy())


def nullspace_basis(M: np.ndarray, tol: float = TOLERANCES.nullspace_rank) -> np.ndarray:
    """Orthonormal basis of the right null space of ``M``.

    Singular values at or below ``tol * s_max`` count as zero.  A trivial
    null space comes back as an ``(n, 0)`` array, which callers treat as an
    infeasible block-diagonalization split.
    """
    M = np.atleast_2d(np.asarray(M))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > tol * s[0]))
    return Vh[rank:].conj().T.copy()
