"""Monte Carlo experiment runner.

A run walks ``trials x sweep points x schemes``.  Every trial draws one
channel realization (shared by all sweep points and schemes), designs each
precoder from its CSI view, runs one sensing window per ICR under the
occupied and idle hypotheses, and scores predicted and realized rates.
Random streams are keyed by ``(seed, trial, purpose, ...)`` so results do
not depend on execution order or on which other schemes are run.
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..network import CSI_MODES, CsiView, NetworkConfig, child_rng, draw_channels
from ..optim import InfeasibleProblem
from ..precoders import (Precoder, conventional_bd, evaluate_sinr, feasibility_slacks,
                         linear_combination, multicast, pbd_joint, pbd_separate,
                         predicted_detection, prescient_gp_multistart, rci, sdp_maxmin)
from ..precoders.sdp import default_eta
from ..sensing import (SensingModel, detection_prob_exact, noncentrality,
                       realized_icr_interference, simulate_h0, simulate_sensing)

__all__ = [
    "METRICS",
    "SCHEMES",
    "ExperimentSpec",
    "TrialRecord",
    "AggregateResult",
    "run_trial",
    "run_experiment",
    "aggregate",
]

METRICS = (
    "sum_rate_predicted",
    "sum_rate_realized",
    "sum_rate_partial",
    "detection_prob",
    "detection_prob_predicted",
    "detection_rate",
    "false_alarm_rate",
    "min_slack",
)

# sweep variables that only change how sensing is scored, not the design
EVAL_ONLY = ("P_fa",)

_RECOVERABLE = (InfeasibleProblem, ArithmeticError, np.linalg.LinAlgError)


def _scheme_rci(view, cfg, rng, spec):
    return rci(view, cfg)


def _scheme_multicast(view, cfg, rng, spec):
    return multicast(view, cfg)


def _scheme_lc(view, cfg, rng, spec):
    return linear_combination(view, cfg)


def _scheme_gp(view, cfg, rng, spec):
    return prescient_gp_multistart(view, cfg, rng, n_random=spec.gp_restarts)


# leakage floors are halved up to this many times (then dropped) when infeasible
ETA_BACKOFF = 6


def _eta(cfg, spec):
    return default_eta(cfg, spec.eta_c)


def _scheme_sdp(view, cfg, rng, spec):
    return sdp_maxmin(view, cfg, _eta(cfg, spec))


def _scheme_pbd_joint(view, cfg, rng, spec):
    return pbd_joint(view, cfg, _eta(cfg, spec), backoff=ETA_BACKOFF)


def _scheme_pbd_separate(view, cfg, rng, spec):
    return pbd_separate(view, cfg, _eta(cfg, spec), backoff=ETA_BACKOFF)


def _scheme_bd(view, cfg, rng, spec):
    return conventional_bd(view, cfg)


SCHEMES: Dict[str, Callable] = {
    "rci": _scheme_rci,
    "multicast": _scheme_multicast,
    "linear_combination": _scheme_lc,
    "prescient_gp": _scheme_gp,
    "sdp_maxmin": _scheme_sdp,
    "pbd_joint": _scheme_pbd_joint,
    "pbd_separate": _scheme_pbd_separate,
    "conventional_bd": _scheme_bd,
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a run."""

    preset: str = "custom"
    name: str = "custom"
    config: Mapping[str, Any] = field(default_factory=dict)
    schemes: Tuple[str, ...] = ("rci",)
    trials: int = 1000
    sweep_var: str = "P_dB"
    sweep_values: Tuple[float, ...] = (15.0,)
    seed: int = 0
    csi_mode: str = "partial-instantaneous-F"
    eta_c: float = 0.1
    gp_restarts: int = 4
    output: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "config", dict(self.config))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        self.validate()

    def validate(self) -> None:
        if int(self.trials) < 1:
            raise ValueError("trials must be at least 1")
        if not self.sweep_values:
            raise ValueError("sweep grid is empty")
        if not self.schemes:
            raise ValueError("no schemes selected")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}; available: {sorted(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("duplicate scheme names")
        if self.csi_mode not in CSI_MODES:
            raise ValueError(f"csi_mode must be one of {CSI_MODES}")
        names = {f.name for f in dataclasses.fields(NetworkConfig)} | {"P_dB"} | set(EVAL_ONLY)
        if self.sweep_var not in names:
            raise ValueError(f"cannot sweep {self.sweep_var!r}")
        if self.eta_c < 0 or self.gp_restarts < 0:
            raise ValueError("eta_c and gp_restarts must be nonnegative")
        # every sweep point must give a valid configuration
        for v in self.sweep_values:
            self.point_config(v)

    def base_config(self) -> NetworkConfig:
        return NetworkConfig.from_dict(self.config)

    def point_config(self, value: float) -> NetworkConfig:
        """Design-time configuration at one sweep point."""
        data = dict(self.config)
        if self.sweep_var not in EVAL_ONLY:
            data[self.sweep_var] = value
            if self.sweep_var == "P":
                data.pop("P_dB", None)
        return NetworkConfig.from_dict(data)

    def eval_config(self, value: float) -> NetworkConfig:
        cfg = self.point_config(value)
        return cfg.replace(P_f=float(value)) if self.sweep_var == "P_fa" else cfg

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset, "name": self.name, "config": dict(self.config),
            "schemes": list(self.schemes), "trials": int(self.trials),
            "sweep": {"var": self.sweep_var, "values": list(self.sweep_values)},
            "seed": int(self.seed), "csi_mode": self.csi_mode, "eta_c": float(self.eta_c),
            "gp_restarts": int(self.gp_restarts), "output": self.output,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentSpec":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)} | {"sweep"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown experiment keys: {sorted(extra)}")
        sweep = data.pop("sweep", None)
        if sweep is not None:
            data["sweep_var"] = sweep["var"]
            data["sweep_values"] = _grid_from(sweep)
        for key in ("trials", "seed", "gp_restarts"):
            if key in data:
                data[key] = int(data[key])
        return cls(**data)


def _grid_from(sweep: Mapping[str, Any]) -> list:
    if "values" in sweep:
        return [float(v) for v in sweep["values"]]
    lo, step, hi = float(sweep["lo"]), float(sweep["step"]), float(sweep["hi"])
    return linear_grid(lo, step, hi)


def linear_grid(lo: float, step: float, hi: float) -> list:
    if step <= 0 or hi < lo:
        raise ValueError("sweep needs lo <= hi and a positive step")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


@dataclass
class TrialRecord:
    trial: int
    point: int
    scheme: str
    metrics: Dict[str, float]
    iterations: int = 0
    objective: float = float("nan")
    failure: Optional[str] = None


@dataclass
class AggregateResult:
    spec: ExperimentSpec
    rows: List[Tuple[float, str, str, float, float, int]]
    failures: Dict[str, Dict[str, int]]
    records: List[TrialRecord] = field(default_factory=list)

    def table(self, metric: str) -> Dict[str, np.ndarray]:
        """``{scheme: means over the sweep}`` for one metric."""
        out: Dict[str, list] = {}
        for _, scheme, m, mean, _, _ in self.rows:
            if m == metric:
                out.setdefault(scheme, []).append(mean)
        return {k: np.array(v) for k, v in out.items()}

    def ci(self, metric: str) -> Dict[str, np.ndarray]:
        out: Dict[str, list] = {}
        for _, scheme, m, _, half, _ in self.rows:
            if m == metric:
                out.setdefault(scheme, []).append(half)
        return {k: np.array(v) for k, v in out.items()}


def _scheme_key(name: str) -> int:
    return zlib.crc32(name.encode())


def _score(prec: Precoder, channels, view: CsiView, cfg: NetworkConfig, model: SensingModel,
           s_u, s_p, h1_rngs, h0_rngs) -> Dict[str, float]:
    W = prec.W
    su = s_u[: W.shape[1]]
    slack = min(feasibility_slacks(W, view.N, cfg))
    if cfg.K:
        pd_pred = predicted_detection(W, view, cfg, model)
        rho = noncentrality(model, W, channels, su, s_p)
        pd = detection_prob_exact(model, rho)
        h1 = simulate_sensing(model, W, channels, su, s_p, h1_rngs)
        h0 = simulate_h0(model, h0_rngs)
        missed = h1.missed
        det = dict(detection_prob=float(np.mean(pd)),
                   detection_prob_predicted=float(np.mean(pd_pred)),
                   detection_rate=float(np.mean(h1.decision)),
                   false_alarm_rate=float(np.mean(h0.decision)))
    else:
        pd_pred = np.zeros(0)
        missed = np.zeros(0, dtype=int)
        det = dict.fromkeys(("detection_prob", "detection_prob_predicted", "detection_rate",
                             "false_alarm_rate"), float("nan"))
    pred = evaluate_sinr(prec, view, cfg, "predicted", detection_probs=pd_pred)
    covs = realized_icr_interference(cfg, channels, missed)
    real = evaluate_sinr(prec, view, cfg, "realized", icr_covariances=covs)
    out = dict(sum_rate_predicted=pred.sum_rate, sum_rate_realized=real.sum_rate,
               sum_rate_partial=pred.sum_rate_partial, min_slack=float(slack))
    out.update(det)
    return out


def run_trial(spec: ExperimentSpec, trial: int) -> List[TrialRecord]:
    """All sweep points and schemes for one channel realization."""
    ss = np.random.SeedSequence([int(spec.seed), int(trial)])
    base = spec.base_config()
    # one realization at the largest dimensions any point needs
    points = [(spec.point_config(v), spec.eval_config(v)) for v in spec.sweep_values]
    t_u = max(c.t_u for c, _ in points)
    M = max(c.M_tilde for c, _ in points)
    s_u = np.exp(2j * np.pi * child_rng(ss, 10).integers(0, base.psk_order, (t_u, M)) / base.psk_order)
    s_p_raw = np.exp(2j * np.pi * child_rng(ss, 11).integers(0, base.psk_order, (base.t_p, M)) / base.psk_order)

    records: List[TrialRecord] = []
    designs: Dict[Tuple, Any] = {}
    for p, (cfg, cfg_eval) in enumerate(points):
        channels = draw_channels(cfg, ss)
        view = CsiView.from_channels(channels, cfg, spec.csi_mode)
        model = SensingModel.from_config(cfg_eval)
        s_p = np.sqrt(cfg.P_t / cfg.t_p) * s_p_raw[:, : cfg.M_tilde]
        su = s_u[:, : cfg.M_tilde]
        for name in spec.schemes:
            key = (name, repr(sorted(cfg.to_dict().items())))
            if key not in designs:
                try:
                    rng = child_rng(ss, 20, _scheme_key(name))
                    designs[key] = SCHEMES[name](view, cfg, rng, spec)
                except _RECOVERABLE as exc:
                    designs[key] = exc
            prec = designs[key]
            if isinstance(prec, Exception):
                records.append(TrialRecord(trial, p, name, {}, failure=f"{type(prec).__name__}: {prec}"))
                continue
            # fresh generators per scheme so every scheme sees identical noise
            n1 = [child_rng(ss, 12, i) for i in range(cfg.K)]
            n0 = [child_rng(ss, 13, i) for i in range(cfg.K)]
            metrics = _score(prec, channels, view, cfg_eval, model, su, s_p, n1, n0)
            records.append(TrialRecord(trial, p, name, metrics, prec.iterations, float(prec.objective)))
    return records


def _ci_half(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(1.959963984540054 * np.std(x, ddof=1) / math.sqrt(x.size))


def aggregate(spec: ExperimentSpec, records: Sequence[TrialRecord]) -> AggregateResult:
    """Deterministic reduction ordered by trial index.

    Failed trials are dropped per scheme (not across schemes) and counted.
    """
    records = sorted(records, key=lambda r: (r.point, spec.schemes.index(r.scheme), r.trial))
    rows = []
    failures: Dict[str, Dict[str, int]] = {}
    for p, value in enumerate(spec.sweep_values):
        for name in spec.schemes:
            mine = [r for r in records if r.point == p and r.scheme == name]
            ok = [r for r in mine if r.failure is None]
            n_fail = len(mine) - len(ok)
            if n_fail:
                failures.setdefault(f"{value:.12g}", {})[name] = n_fail
            for metric in METRICS:
                x = np.array([r.metrics[metric] for r in ok], dtype=float)
                if x.size == 0 or np.all(np.isnan(x)):
                    rows.append((value, name, metric, float("nan"), float("nan"), int(x.size)))
                    continue
                if metric == "min_slack":
                    rows.append((value, name, metric, float(np.min(x)), 0.0, int(x.size)))
                    continue
                rows.append((value, name, metric, float(np.mean(x)), _ci_half(x), int(x.size)))
    return AggregateResult(spec=spec, rows=rows, failures=failures, records=list(records))


def _run_chunk(args):
    spec, trials = args
    out = []
    for t in trials:
        out.extend(run_trial(spec, t))
    return out


def run_experiment(spec: ExperimentSpec, workers: int = 1,
                   progress: Optional[Callable[[int, int], None]] = None) -> AggregateResult:
    """Run every trial of ``spec`` and aggregate.

    ``workers > 1`` farms trial chunks out to processes; the output is the
    same as a sequential run because reduction is ordered by trial index.
    """
    trials = list(range(int(spec.trials)))
    records: List[TrialRecord] = []
    if workers <= 1:
        for t in trials:
            records.extend(run_trial(spec, t))
            if progress:
                progress(t + 1, len(trials))
    else:
        chunks = [trials[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, [(spec, c) for c in chunks if c]):
                records.extend(part)
    return aggregate(spec, records)
