"""Experiment presets for the four reference scenarios.

Common settings: ``t_p = r_p = 4``, ``P_t = 10``, ``xi_p = 10``, ICR power
20 dB, ``P_f = 1e-3``, ``M_tilde = 4`` and unit noise.  The PT-to-ICR link
variance is set to 0.1 so the primary signal alone does not make detection
trivial (with unit variance every ICR detects with probability ~0.9998).
"""

from __future__ import annotations

from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np

from .experiment import ExperimentSpec, linear_grid

__all__ = ["PRESETS", "preset", "preset_roc", "preset_sumrate_vs_power", "preset_pbd"]

COMMON: Dict[str, Any] = dict(t_p=4, r_p=4, P_t=10.0, xi_p=10.0, P_i=100.0, P_f=1e-3,
                              M_tilde=4, sigma_d2=0.1)

ROC_GRID = tuple(float(v) for v in np.logspace(-4, -1, 7))
POWER_GRID = tuple(linear_grid(0.0, 5.0, 25.0))
K_GRID = tuple(float(k) for k in range(1, 9))


def _merge(base: Mapping[str, Any], overrides: Optional[Mapping[str, Any]]) -> dict:
    cfg = dict(COMMON)
    cfg.update(base)
    cfg.update(overrides or {})
    return cfg


def preset_roc(overrides: Optional[Mapping[str, Any]] = None, **spec_kw) -> ExperimentSpec:
    """Detection probability across the false-alarm grid, GP versus RCI."""
    cfg = _merge(dict(t_u=3, K_u=3, r_u=1, K=2, r_I=2, P_dB=15.0), overrides)
    kw = dict(preset="roc", name="roc", config=cfg, schemes=("rci", "prescient_gp"),
              sweep_var="P_fa", sweep_values=ROC_GRID)
    kw.update(spec_kw)
    return ExperimentSpec(**kw)


def preset_sumrate_vs_power(overrides: Optional[Mapping[str, Any]] = None,
                            **spec_kw) -> ExperimentSpec:
    """Sum rate of the single-antenna designs across UCT power 0..25 dB."""
    cfg = _merge(dict(t_u=3, K_u=3, r_u=1, K=3, r_I=2), overrides)
    kw = dict(preset="sumrate_vs_power", name="sumrate_vs_power", config=cfg,
              schemes=("rci", "prescient_gp", "linear_combination", "sdp_maxmin"),
              sweep_var="P_dB", sweep_values=POWER_GRID)
    kw.update(spec_kw)
    return ExperimentSpec(**kw)


def preset_pbd(variant: str = "power", overrides: Optional[Mapping[str, Any]] = None,
               **spec_kw) -> ExperimentSpec:
    """Block-diagonalization designs versus power (``"power"``) or ICR count (``"K"``)."""
    schemes = ("conventional_bd", "pbd_joint", "pbd_separate")
    if variant == "power":
        cfg = _merge(dict(t_u=8, K_u=4, r_u=2, K=2, r_I=2), overrides)
        kw = dict(preset="pbd_vs_power", name="pbd_vs_power", config=cfg, schemes=schemes,
                  sweep_var="P_dB", sweep_values=POWER_GRID)
    elif variant == "K":
        cfg = _merge(dict(t_u=6, K_u=3, r_u=2, r_I=2, K=1, P_dB=15.0), overrides)
        kw = dict(preset="pbd_vs_K", name="pbd_vs_K", config=cfg, schemes=schemes,
                  sweep_var="K", sweep_values=K_GRID)
    else:
        raise ValueError(f"unknown pbd variant {variant!r}; use 'power' or 'K'")
    kw.update(spec_kw)
    return ExperimentSpec(**kw)


PRESETS: Dict[str, Callable[..., ExperimentSpec]] = {
    "roc": preset_roc,
    "sumrate_vs_power": preset_sumrate_vs_power,
    "pbd_vs_power": lambda overrides=None, **kw: preset_pbd("power", overrides, **kw),
    "pbd_vs_K": lambda overrides=None, **kw: preset_pbd("K", overrides, **kw),
}


def preset(name: str, overrides: Optional[Mapping[str, Any]] = None, **spec_kw) -> ExperimentSpec:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return PRESETS[name](overrides, **spec_kw)
