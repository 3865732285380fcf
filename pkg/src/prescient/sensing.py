"""Energy detection at the interweave radios.

Each ICR collects ``n = M_tilde * r_I`` complex samples and declares the
band occupied when the energy ``T`` exceeds its threshold ``lam``.  With
``z ~ CN(mu, eps2)`` the scaled statistic ``2 T / eps2`` is chi-square with
``2 n`` degrees of freedom and noncentrality ``2 rho``, where
``rho = sum |mu|^2 / eps2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mathcore import chisq_survival_inverse, erlang_pdf, erlang_sf, gaussian_q, marcum_q
from .network import ChannelSet, NetworkConfig, crandn

__all__ = [
    "SensingModel",
    "DetectionOutcome",
    "calibrate_threshold",
    "false_alarm_prob",
    "detection_prob_exact",
    "detection_prob_clt",
    "sensing_variance",
    "detection_prob_avg",
    "detection_prob_avg_slope",
    "received_means",
    "noncentrality",
    "energy_statistics",
    "simulate_sensing",
    "simulate_h0",
    "average_detection_monte_carlo",
    "expected_icr_interference",
    "realized_icr_interference",
]


def calibrate_threshold(eps2, M_tilde: int, r_I: int, P_f: float):
    """Threshold giving false-alarm probability ``P_f``.

    Returns ``eps2 * x`` where ``e^-x sum_{r < M_tilde r_I} x^r / r! = P_f``.
    """
    n = int(M_tilde) * int(r_I)
    x = 0.5 * chisq_survival_inverse(2 * n, P_f)
    return np.asarray(eps2, dtype=float) * x if np.ndim(eps2) else float(eps2) * x


@dataclass(frozen=True)
class SensingModel:
    """Detector parameters for every ICR in a scenario."""

    eps2: np.ndarray
    lam: np.ndarray
    M_tilde: int
    r_I: int
    P_f: float

    @classmethod
    def from_config(cls, cfg: NetworkConfig) -> "SensingModel":
        eps2 = cfg.per_icr("eps2")
        lam = calibrate_threshold(eps2, cfg.M_tilde, cfg.r_I, cfg.P_f)
        return cls(eps2=eps2, lam=np.atleast_1d(lam), M_tilde=cfg.M_tilde, r_I=cfg.r_I, P_f=cfg.P_f)

    @property
    def n(self) -> int:
        return self.M_tilde * self.r_I

    @property
    def K(self) -> int:
        return self.eps2.size


@dataclass(frozen=True)
class DetectionOutcome:
    statistic: np.ndarray
    decision: np.ndarray
    rho: np.ndarray

    @property
    def missed(self) -> np.ndarray:
        """Missed-detection indicators, valid when the band is occupied."""
        return (~self.decision).astype(int)


def false_alarm_prob(model: SensingModel) -> np.ndarray:
    return erlang_sf(model.n, model.lam / model.eps2)


def detection_prob_exact(model: SensingModel, rho) -> np.ndarray:
    """Exact detection probability per ICR for known noncentralities."""
    rho = np.broadcast_to(np.asarray(rho, dtype=float), model.eps2.shape)
    b = np.sqrt(2.0 * model.lam / model.eps2)
    return np.array([marcum_q(model.n, np.sqrt(2.0 * r), bi) for r, bi in zip(rho, b)])


def detection_prob_clt(model: SensingModel, rho) -> np.ndarray:
    """Gaussian approximation: ``T ~ N(eps2 (n + rho), eps2^2 (n + 2 rho))``."""
    rho = np.asarray(rho, dtype=float)
    n = model.n
    arg = (model.lam - model.eps2 * (n + rho)) / (model.eps2 * np.sqrt(n + 2.0 * rho))
    return np.atleast_1d(gaussian_q(arg))


def sensing_variance(model: SensingModel, W: np.ndarray, cfg: NetworkConfig,
                     F: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Per-sample received variance at each ICR as predicted by the UCT.

    Without ``F`` the UCT-to-ICR links are Rayleigh with variance
    ``sigma_f2`` and the UCT term is ``sigma_f2 * ||W||_F^2``.  With known
    ``F`` the UCT term is the per-antenna leakage ``||F_i W||_F^2 / r_I``.
    The PT term is ``P_t * sigma_d2`` (total PT power ``P_t``).
    """
    floor = cfg.P_t * cfg.per_icr("sigma_d2") + model.eps2
    if F is None:
        leak = cfg.per_icr("sigma_f2") * float(np.vdot(W, W).real)
    else:
        leak = np.array([np.vdot(Fi @ W, Fi @ W).real for Fi in F]) / model.r_I
    return leak + floor


def detection_prob_avg(model: SensingModel, W: np.ndarray, cfg: NetworkConfig,
                       F: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Average detection probability with Gaussian-modelled samples."""
    s2 = sensing_variance(model, W, cfg, F)
    return erlang_sf(model.n, model.lam / s2)


def detection_prob_avg_slope(model: SensingModel, s2: np.ndarray) -> np.ndarray:
    """Derivative of the average detection probability w.r.t. the variance."""
    x = model.lam / s2
    return (model.lam / s2 ** 2) * erlang_pdf(model.n, x)


def received_means(W: np.ndarray, channels: ChannelSet, s_u: np.ndarray,
                   s_p: np.ndarray) -> list:
    """Noise-free ICR samples ``F_i W s_u[n] + D_i s_p[n]`` (``r_I x M``)."""
    x = W @ s_u
    return [Fi @ x + Di @ s_p for Fi, Di in zip(channels.F, channels.D)]


def noncentrality(model: SensingModel, W, channels, s_u, s_p) -> np.ndarray:
    mus = received_means(W, channels, s_u, s_p)
    return np.array([np.vdot(m, m).real for m in mus]) / model.eps2


def energy_statistics(mu: np.ndarray, eps2: float, n_trials: int,
                      rng: np.random.Generator, chunk: int = 200_000) -> np.ndarray:
    """Monte Carlo draws of ``T = sum |mu + noise|^2`` for a fixed mean block."""
    mu = np.asarray(mu, dtype=complex).ravel()
    out = np.empty(n_trials)
    done = 0
    while done < n_trials:
        m = min(chunk, n_trials - done)
        z = mu + crandn(rng, (m, mu.size), eps2)
        out[done:done + m] = (z.real ** 2 + z.imag ** 2).sum(axis=1)
        done += m
    return out


def _per_icr_rngs(rng, count: int) -> list:
    if isinstance(rng, (list, tuple)):
        if len(rng) < count:
            raise ValueError(f"need {count} generators, got {len(rng)}")
        return list(rng)
    g = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return [g] * count


def simulate_sensing(model: SensingModel, W: np.ndarray, channels: ChannelSet,
                     s_u: np.ndarray, s_p: np.ndarray, rng) -> DetectionOutcome:
    """One sensing window at every ICR with the band occupied.

    ``s_u`` is the underlay symbol block (streams x M_tilde) and ``s_p`` the
    PT block (t_p x M_tilde).  ``rng`` is a seed, a generator, or one
    generator per ICR.
    """
    mus = received_means(W, channels, s_u, s_p)
    rngs = _per_icr_rngs(rng, len(mus))
    T = np.empty(len(mus))
    for i, mu in enumerate(mus):
        z = mu + crandn(rngs[i], mu.shape, model.eps2[i])
        T[i] = float((z.real ** 2 + z.imag ** 2).sum())
    rho = np.array([np.vdot(m, m).real for m in mus]) / model.eps2
    return DetectionOutcome(statistic=T, decision=T > model.lam, rho=rho)


def simulate_h0(model: SensingModel, rng) -> DetectionOutcome:
    """One noise-only sensing window at every ICR."""
    rngs = _per_icr_rngs(rng, model.K)
    T = np.array([
        float(np.sum(np.abs(crandn(rngs[i], model.n, e)) ** 2)) for i, e in enumerate(model.eps2)
    ])
    return DetectionOutcome(statistic=T, decision=T > model.lam, rho=np.zeros(model.K))


def average_detection_monte_carlo(model: SensingModel, W: np.ndarray, cfg: NetworkConfig,
                                  n_trials: int, rng: np.random.Generator,
                                  fading: str = "fast", icr: int = 0,
                                  chunk: int = 20_000) -> float:
    """Empirical detection rate with Rayleigh ``F``, ``D`` and PSK symbols.

    ``fading="fast"`` redraws the UCT/PT-to-ICR channels for every sample
    (the independent-sample model behind the average detection formula);
    ``fading="block"`` holds them over the sensing window.
    """
    if fading not in ("fast", "block"):
        raise ValueError("fading must be 'fast' or 'block'")
    M, r = model.M_tilde, model.r_I
    sf2, sd2 = cfg.per_icr("sigma_f2")[icr], cfg.per_icr("sigma_d2")[icr]
    eps2, lam = model.eps2[icr], model.lam[icr]
    streams = W.shape[1]
    hits = 0
    done = 0
    while done < n_trials:
        m = min(chunk, n_trials - done)
        nf = (m, M, r) if fading == "fast" else (m, 1, r)
        f = crandn(rng, nf + (cfg.t_u,), sf2)
        d = crandn(rng, nf + (cfg.t_p,), sd2)
        s = np.exp(2j * np.pi * rng.integers(0, cfg.psk_order, (m, M, streams)) / cfg.psk_order)
        sp = np.sqrt(cfg.P_t / cfg.t_p) * np.exp(
            2j * np.pi * rng.integers(0, cfg.psk_order, (m, M, cfg.t_p)) / cfg.psk_order)
        x = s @ W.T  # (m, M, t_u)
        mu = np.einsum("mnjt,mnt->mnj", np.broadcast_to(f, (m, M, r, cfg.t_u)), x)
        mu += np.einsum("mnjt,mnt->mnj", np.broadcast_to(d, (m, M, r, cfg.t_p)), sp)
        z = mu + crandn(rng, (m, M, r), eps2)
        T = (z.real ** 2 + z.imag ** 2).sum(axis=(1, 2))
        hits += int(np.count_nonzero(T > lam))
        done += m
    return hits / n_trials


def expected_icr_interference(cfg: NetworkConfig, detection_probs) -> np.ndarray:
    """Expected ICR interference power at each UCR (identical across UCRs)."""
    pd = np.asarray(detection_probs, dtype=float)
    if cfg.K == 0:
        return np.zeros(cfg.K_u)
    total = float(np.sum((1.0 - pd) * cfg.per_icr("P_i") * cfg.r_I * cfg.per_icr("sigma_v2")))
    return np.full(cfg.K_u, total)


def realized_icr_interference(cfg: NetworkConfig, channels: ChannelSet, missed) -> list:
    """Interference covariance ``sum_i F_i P_i V_ki V_ki^H`` at each UCR."""
    missed = np.asarray(missed)
    P_i = cfg.per_icr("P_i")
    out = []
    for k in range(cfg.K_u):
        C = np.zeros((cfg.r_u, cfg.r_u), dtype=complex)
        for i in range(cfg.K):
            if missed[i]:
                Vki = channels.V[k][i]
                C += P_i[i] * (Vki @ Vki.conj().T)
        out.append(C)
    return out
