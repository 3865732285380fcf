"""Result files and experiment spec files.

Each run writes ``<name>.csv`` (columns ``sweep_value, scheme, metric,
mean, ci_half``) and ``<name>_manifest.json`` holding the full spec, the
seed, per-scheme failure counts and the library version.  Spec files are
YAML; a manifest is also accepted wherever a spec file is.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Tuple, Union

import yaml

from .. import __version__
from .experiment import AggregateResult, ExperimentSpec

__all__ = ["CSV_COLUMNS", "emit", "csv_text", "manifest_dict", "load_spec", "load_manifest"]

CSV_COLUMNS = ("sweep_value", "scheme", "metric", "mean", "ci_half")

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_text(result: AggregateResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for value, scheme, metric, mean, half, _ in result.rows:
        w.writerow([_fmt(value), scheme, metric, _fmt(mean), _fmt(half)])
    return buf.getvalue()


def manifest_dict(result: AggregateResult) -> dict:
    spec = result.spec
    return {
        "spec": spec.to_dict(),
        "seed": int(spec.seed),
        "failures": result.failures,
        "trial_counts": {
            f"{v:.12g}": {s: n for (val, s, m, _, _, n) in result.rows
                          if val == v and m == "sum_rate_predicted"}
            for v in spec.sweep_values
        },
        "version": __version__,
        "csv": f"{spec.name}.csv",
    }


def emit(result: AggregateResult, out_dir: PathLike) -> Tuple[Path, Path]:
    """Write the CSV and manifest for ``result`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{result.spec.name}.csv"
        man_path = out / f"{result.spec.name}_manifest.json"
        csv_path.write_text(csv_text(result))
        man_path.write_text(json.dumps(manifest_dict(result), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"could not write results to {out}: {exc}") from exc
    return csv_path, man_path


def load_manifest(path: PathLike) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"could not read manifest {path}: {exc}") from exc


def load_spec(path: PathLike) -> ExperimentSpec:
    """Read an :class:`ExperimentSpec` from a YAML spec file or a manifest.

    A spec file may name a ``preset`` and override parts of it; keys under
    ``config`` are merged into the preset's scenario.
    """
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"could not read spec file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    if "spec" in data and "version" in data:
        return ExperimentSpec.from_dict(data["spec"])
    from .presets import PRESETS, preset

    name = data.get("preset", "custom")
    if name in PRESETS:
        overrides = data.pop("config", None)
        base = preset(name, overrides).to_dict()
        data.pop("preset")
        sweep = data.pop("sweep", None)
        base.update(data)
        if sweep is not None:
            base["sweep"] = sweep
        return ExperimentSpec.from_dict(base)
    return ExperimentSpec.from_dict(data)
