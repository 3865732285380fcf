"""Scenario configuration, channel realizations and CSI views.

Complex Gaussian convention: ``CN(0, s2)`` has total variance ``s2`` split
evenly between real and imaginary parts.  Multiple primary receivers are
folded into one virtual PR by stacking rows of ``N``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

__all__ = [
    "NetworkConfig",
    "ChannelSet",
    "CsiView",
    "CSI_MODES",
    "db_to_linear",
    "draw_channels",
    "draw_symbols",
    "draw_pt_symbols",
    "trial_rng",
    "trial_seed_sequence",
    "crandn",
    "child_rng",
]

PerLink = Union[float, Sequence[float]]

CSI_MODES = ("full", "partial-instantaneous-F", "statistical-F")
_PER_ICR = ("P_i", "eps2", "sigma_f2", "sigma_d2", "sigma_v2")
_PER_UCR = ("sigma_k2",)


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


@dataclass(frozen=True)
class NetworkConfig:
    """One heterogeneous-DSA scenario.

    Per-ICR quantities (``P_i``, ``eps2``, ``sigma_f2``, ``sigma_d2``,
    ``sigma_v2``) and the per-UCR noise ``sigma_k2`` accept either a scalar
    shared by every terminal or one value per terminal.  Powers are linear.
    """

    t_u: int = 3
    K_u: int = 3
    r_u: int = 1
    K: int = 2
    r_I: int = 2
    t_p: int = 4
    r_p: int = 4
    P: float = db_to_linear(15.0)
    P_t: float = 10.0
    P_i: PerLink = 100.0
    xi_p: float = 10.0
    sigma_k2: PerLink = 1.0
    eps2: PerLink = 1.0
    sigma_f2: PerLink = 1.0
    sigma_d2: PerLink = 1.0
    sigma_v2: PerLink = 1.0
    M_tilde: int = 4
    P_f: float = 1e-3
    psk_order: int = 4

    def __post_init__(self):
        for name in _PER_ICR + _PER_UCR:
            val = getattr(self, name)
            if not np.isscalar(val):
                object.__setattr__(self, name, tuple(float(v) for v in val))
        self.validate()

    def validate(self) -> None:
        for name in ("t_u", "K_u", "r_u", "r_I", "t_p", "M_tilde"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive count")
        if self.K < 0 or self.r_p < 0:
            raise ValueError("K and r_p must be nonnegative")
        if self.K_u * self.r_u > self.t_u:
            raise ValueError(
                f"K_u * r_u = {self.K_u * self.r_u} exceeds t_u = {self.t_u}"
            )
        if self.P <= 0 or self.xi_p <= 0 or self.P_t < 0:
            raise ValueError("P and xi_p must be positive, P_t nonnegative")
        if not 0.0 < self.P_f < 1.0:
            raise ValueError(f"P_f must lie in (0, 1), got {self.P_f}")
        if self.psk_order < 2:
            raise ValueError("psk_order must be at least 2")
        for name in _PER_ICR:
            arr = self._broadcast(name, self.K)
            if name == "P_i" or name.startswith("sigma"):
                if np.any(arr < 0):
                    raise ValueError(f"{name} must be nonnegative")
            elif np.any(arr <= 0):
                raise ValueError(f"{name} must be positive")
        if np.any(self._broadcast("sigma_k2", self.K_u) <= 0):
            raise ValueError("sigma_k2 must be positive")

    def _broadcast(self, name: str, count: int) -> np.ndarray:
        val = getattr(self, name)
        if np.isscalar(val):
            return np.full(count, float(val))
        arr = np.asarray(val, dtype=float)
        if arr.shape != (count,):
            raise ValueError(f"{name} has {arr.size} entries, expected {count}")
        return arr

    def per_icr(self, name: str) -> np.ndarray:
        return self._broadcast(name, self.K)

    def per_ucr(self, name: str) -> np.ndarray:
        return self._broadcast(name, self.K_u)

    @property
    def n_samples(self) -> int:
        """Complex samples per ICR sensing window, ``M_tilde * r_I``."""
        return self.M_tilde * self.r_I

    @property
    def n_streams(self) -> int:
        return self.K_u * self.r_u

    def replace(self, **changes: Any) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = list(val) if isinstance(val, tuple) else val
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetworkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"P_dB"}
        if unknown:
            raise ValueError(f"unknown NetworkConfig keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k in known}
        if "P_dB" in data:
            kwargs["P"] = db_to_linear(float(data["P_dB"]))
        for name in ("t_u", "K_u", "r_u", "K", "r_I", "t_p", "r_p", "M_tilde", "psk_order"):
            if name in kwargs:
                kwargs[name] = int(kwargs[name])
        return cls(**kwargs)


def crandn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Draw ``CN(0, var)`` entries."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChannelSet:
    """One realization of every link.

    ``H_k[k]`` is ``r_u x t_u``, ``F[i]`` is ``r_I x t_u``, ``N`` is
    ``r_p x t_u``, ``D[i]`` is ``r_I x t_p`` and ``V[k][i]`` is ``r_u x r_I``.
    """

    H_k: tuple
    F: tuple
    N: np.ndarray
    D: tuple
    V: tuple

    @property
    def H_u(self) -> np.ndarray:
        return np.vstack(self.H_k)


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2 ** 63)))
    return np.random.SeedSequence(seed)


def child_rng(seed, *key: int) -> np.random.Generator:
    """Generator for the stream ``key`` below ``seed`` (counter-based split)."""
    ss = _as_seed_sequence(seed)
    return np.random.default_rng(np.random.SeedSequence(
        ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in key)))


def draw_channels(cfg: NetworkConfig, seed) -> ChannelSet:
    """Draw an i.i.d. Rayleigh realization of every link in ``cfg``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.  Every
    link class (and every ICR within a class) has its own child stream, so a
    given link keeps its realization when ``K`` or ``K_u`` changes.
    """
    ss = _as_seed_sequence(seed)
    sf2, sd2, sv2 = cfg.per_icr("sigma_f2"), cfg.per_icr("sigma_d2"), cfg.per_icr("sigma_v2")
    H_k = tuple(_freeze(crandn(child_rng(ss, 0, k), (cfg.r_u, cfg.t_u))) for k in range(cfg.K_u))
    N = _freeze(crandn(child_rng(ss, 1), (cfg.r_p, cfg.t_u)))
    F = tuple(_freeze(crandn(child_rng(ss, 2, i), (cfg.r_I, cfg.t_u), sf2[i])) for i in range(cfg.K))
    D = tuple(_freeze(crandn(child_rng(ss, 3, i), (cfg.r_I, cfg.t_p), sd2[i])) for i in range(cfg.K))
    V = tuple(
        tuple(_freeze(crandn(child_rng(ss, 4, k, i), (cfg.r_u, cfg.r_I), sv2[i]))
              for i in range(cfg.K))
        for k in range(cfg.K_u)
    )
    return ChannelSet(H_k=H_k, F=F, N=N, D=D, V=V)


def _psk(rng: np.random.Generator, order: int, shape) -> np.ndarray:
    idx = rng.integers(0, order, size=shape)
    return np.exp(2j * np.pi * idx / order)


def draw_symbols(cfg: NetworkConfig, n: int, seed, streams: Optional[int] = None) -> np.ndarray:
    """Unit-modulus M-PSK symbol block of shape ``(streams, n)``.

    ``streams`` defaults to ``K_u * r_u``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rows = cfg.n_streams if streams is None else streams
    return _psk(rng, cfg.psk_order, (rows, n))


def draw_pt_symbols(cfg: NetworkConfig, n: int, seed) -> np.ndarray:
    """Primary-transmitter block ``(t_p, n)`` with total power ``P_t``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.sqrt(cfg.P_t / cfg.t_p) * _psk(rng, cfg.psk_order, (cfg.t_p, n))


def trial_seed_sequence(master_seed: int, *counters: int) -> np.random.SeedSequence:
    """Counter-based child seed, independent of execution order."""
    return np.random.SeedSequence([int(master_seed), *(int(c) for c in counters)])


def trial_rng(master_seed: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed_sequence(master_seed, *counters))


@dataclass(frozen=True)
class CsiView:
    """What a precoder is allowed to see of a :class:`ChannelSet`.

    ``full`` exposes every link; ``partial-instantaneous-F`` exposes the
    downlink, PR and UCT-to-ICR realizations; ``statistical-F`` hides the
    UCT-to-ICR realizations and leaves only their variances.
    """

    mode: str
    H_k: tuple
    N: np.ndarray
    sigma_f2: np.ndarray
    F: Optional[tuple] = None
    D: Optional[tuple] = None
    V: Optional[tuple] = None

    @classmethod
    def from_channels(cls, channels: ChannelSet, cfg: NetworkConfig, mode: str) -> "CsiView":
        if mode not in CSI_MODES:
            raise ValueError(f"unknown CSI mode {mode!r}; expected one of {CSI_MODES}")
        kwargs = dict(mode=mode, H_k=channels.H_k, N=channels.N, sigma_f2=cfg.per_icr("sigma_f2"))
        if mode != "statistical-F":
            kwargs["F"] = channels.F
        if mode == "full":
            kwargs["D"] = channels.D
            kwargs["V"] = channels.V
        return cls(**kwargs)

    @property
    def H_u(self) -> np.ndarray:
        return np.vstack(self.H_k)

    @property
    def has_instantaneous_F(self) -> bool:
        return self.F is not None
