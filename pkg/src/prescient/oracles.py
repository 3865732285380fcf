"""Independent reference computations.

These deliberately avoid the library's own code paths: high-precision
series via mpmath, plain bisection, brute-force grids and Monte Carlo.
They back the frozen values in the test suite and the ``oracle`` CLI
command.  mpmath is imported lazily (it is an optional dependency).
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Sequence

import numpy as np

__all__ = [
    "SUITES",
    "mp_erlang_sf",
    "mp_series_root",
    "mp_normal_quantile",
    "mc_energy_exceed",
    "bisect_waterfill",
    "grid_simplex_max",
    "dense_grid_argmax",
    "run_suite",
]


def _mp(dps: int):
    import mpmath

    mpmath.mp.dps = dps
    return mpmath


def mp_erlang_sf(n: int, y, dps: int = 50):
    """``e^-y sum_{r<n} y^r / r!`` summed term by term at ``dps`` digits."""
    mp = _mp(dps)
    y = mp.mpf(y)
    term, total = mp.mpf(1), mp.mpf(1)
    for r in range(1, n):
        term *= y / r
        total += term
    return total * mp.exp(-y)


def mp_series_root(n: int, p: float, dps: int = 50, iters: int = 200):
    """Root ``x`` of ``mp_erlang_sf(n, x) = p`` by bisection."""
    mp = _mp(dps)
    p = mp.mpf(p)
    lo, hi = mp.mpf(0), mp.mpf(max(1, n))
    while mp_erlang_sf(n, hi, dps) > p:
        hi *= 2
    for _ in range(iters):
        mid = (lo + hi) / 2
        if mp_erlang_sf(n, mid, dps) > p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def mp_normal_quantile(p: float, dps: int = 50, iters: int = 200):
    """``x`` with ``Phi(x) = p`` by bisection on the mpmath normal cdf."""
    mp = _mp(dps)
    lo, hi = mp.mpf(-40), mp.mpf(40)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if mp.ncdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def mc_energy_exceed(mean: np.ndarray, noise_var: float, threshold: float, n_draws: int,
                     rng: np.random.Generator, chunk: int = 500_000):
    """Monte Carlo ``P(sum |mean + CN(0, noise_var)|^2 > threshold)``.

    Returns ``(estimate, standard_error)``.
    """
    mean = np.asarray(mean, dtype=complex).ravel()
    hits, done = 0, 0
    s = math.sqrt(noise_var / 2.0)
    while done < n_draws:
        m = min(chunk, n_draws - done)
        z = mean + s * (rng.standard_normal((m, mean.size)) + 1j * rng.standard_normal((m, mean.size)))
        hits += int(np.count_nonzero((np.abs(z) ** 2).sum(axis=1) > threshold))
        done += m
    p = hits / n_draws
    return p, math.sqrt(max(p * (1 - p), 1.0 / n_draws) / n_draws)


def bisect_waterfill(gains: Sequence[float], P: float, iters: int = 200) -> np.ndarray:
    """Waterfilling by bisection on the water level."""
    g = np.asarray(gains, dtype=float)
    lo, hi = 0.0, P + float(np.sum(1.0 / g[g > 0]))
    for _ in range(iters):
        mu = 0.5 * (lo + hi)
        used = np.sum(np.maximum(mu - 1.0 / np.where(g > 0, g, np.inf), 0.0))
        if used > P:
            hi = mu
        else:
            lo = mu
    return np.maximum(lo - 1.0 / np.where(g > 0, g, np.inf), 0.0)


def grid_simplex_max(f: Callable[[np.ndarray], float], dim: int, P: float,
                     steps: int = 40, refine: int = 4) -> float:
    """Maximize ``f(p)`` over ``{p >= 0, sum p = P}`` by grid then local refinement."""
    best_val, best_p = -np.inf, None
    for c in _compositions(steps, dim):
        p = P * np.array(c, dtype=float) / steps
        v = f(p)
        if v > best_val:
            best_val, best_p = v, p
    width = P / steps
    for _ in range(refine):
        for c in _compositions(8, dim):
            q = best_p + width * (np.array(c, dtype=float) / 8.0 - 1.0 / dim)
            q = np.maximum(q, 0.0)
            if q.sum() == 0:
                continue
            q *= P / q.sum()
            v = f(q)
            if v > best_val:
                best_val, best_p = v, q
        width /= 4.0
    return float(best_val)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def dense_grid_argmax(f: Callable[[float], float], n: int = 10001) -> float:
    a = np.linspace(0.0, 1.0, n)
    return float(a[int(np.argmax([f(float(x)) for x in a]))])


def _suite_mathcore() -> Dict[str, float]:
    rng = np.random.default_rng(20240601)
    # Q_1(a, b): one complex sample with |mean|^2 = a^2 and unit-variance real parts
    p, se = mc_energy_exceed(np.array([2.0]), 2.0, 4.0, 10_000_000, rng)
    return {
        "normal_quantile(0.9)": float(mp_normal_quantile(0.9)),
        "chisq_survival(16, 32)": float(mp_erlang_sf(8, 16)),
        "chisq_survival_inverse(16, 1e-3)": float(2 * mp_series_root(8, 1e-3)),
        "marcum_q(1, 2, 2) monte carlo": p,
        "marcum_q(1, 2, 2) standard error": se,
    }


def _suite_sensing() -> Dict[str, float]:
    rng = np.random.default_rng(20240602)
    x4 = float(mp_series_root(4, 1e-3))
    x8 = float(mp_series_root(8, 1e-3))
    # rho = 10 spread evenly over 4 samples, unit noise
    mean = np.full(4, math.sqrt(10.0 / 4.0), dtype=complex)
    pd, se = mc_energy_exceed(mean, 1.0, x4, 1_000_000, rng)
    pf, se_f = mc_energy_exceed(np.zeros(8), 1.0, x8, 1_000_000, rng)
    return {
        "threshold x* (n=8, P_f=1e-3)": x8,
        "threshold x* (n=4, P_f=1e-3)": x4,
        "detection rate (n=4, rho=10) monte carlo": pd,
        "detection rate standard error": se,
        "false alarm rate (n=8) monte carlo": pf,
        "false alarm standard error": se_f,
    }


def _suite_precoders() -> Dict[str, float]:
    rng = np.random.default_rng(20240603)
    g = rng.exponential(size=4)
    p = bisect_waterfill(g, 5.0)
    return {
        "waterfill rate (4 modes, P=5)": float(np.sum(np.log2(1 + g * p))),
        "golden search oracle argmax of -(a-0.3)^2": dense_grid_argmax(lambda a: -(a - 0.3) ** 2),
    }


SUITES: Dict[str, Callable[[], Dict[str, float]]] = {
    "mathcore": _suite_mathcore,
    "sensing": _suite_sensing,
    "precoders": _suite_precoders,
}


def run_suite(name: str) -> Dict[str, float]:
    if name == "all":
        out: Dict[str, float] = {}
        for k, fn in SUITES.items():
            out.update({f"{k}: {kk}": v for kk, v in fn().items()})
        return out
    if name not in SUITES:
        raise KeyError(f"unknown oracle suite {name!r}; available: {sorted(SUITES)} or 'all'")
    return SUITES[name]()
