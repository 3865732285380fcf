"""Command line interface.

    prescient run <preset|specfile|manifest> [--trials N] [--seed S] [--out DIR]
                  [--schemes a,b,c] [--sweep var=lo:step:hi] [--workers W]
    prescient validate <specfile>
    prescient oracle <suite>
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from .experiment import SCHEMES, ExperimentSpec, linear_grid, run_experiment
from .io import emit, load_spec
from .presets import PRESETS, preset

log = logging.getLogger("prescient")


def _parse_sweep(text: str):
    try:
        var, rng = text.split("=", 1)
        lo, step, hi = (float(v) for v in rng.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected var=lo:step:hi, got {text!r}") from None
    return var.strip(), linear_grid(lo, step, hi)


def _resolve(target: str) -> ExperimentSpec:
    if target in PRESETS:
        return preset(target)
    if Path(target).exists():
        return load_spec(target)
    raise SystemExit(f"error: {target!r} is neither a preset ({', '.join(PRESETS)}) nor a file")


def _cmd_run(args) -> int:
    spec = _resolve(args.target)
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output"] = args.out
    if args.schemes:
        changes["schemes"] = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    if args.sweep:
        changes["sweep_var"], changes["sweep_values"] = args.sweep
    try:
        spec = spec.replace(**changes)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}") from None
    log.info("running %s: %d trials x %d points x %d schemes", spec.name, spec.trials,
             len(spec.sweep_values), len(spec.schemes))
    t0 = time.perf_counter()

    def progress(done, total):
        if done == total or done % max(1, total // 10) == 0:
            log.info("  %d/%d trials (%.1fs)", done, total, time.perf_counter() - t0)

    result = run_experiment(spec, workers=args.workers, progress=progress)
    csv_path, man_path = emit(result, spec.output)
    for point, counts in result.failures.items():
        log.warning("solver failures at %s=%s: %s", spec.sweep_var, point, counts)
    print(csv_path)
    print(man_path)
    return 0


def _cmd_validate(args) -> int:
    try:
        spec = load_spec(args.specfile)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"invalid: {exc}")
        return 1
    print(f"ok: {spec.name} ({spec.preset}), {len(spec.schemes)} schemes, "
          f"{len(spec.sweep_values)} sweep points over {spec.sweep_var}, {spec.trials} trials")
    return 0


def _cmd_oracle(args) -> int:
    from ..oracles import run_suite

    try:
        values = run_suite(args.suite)
    except KeyError as exc:
        print(exc.args[0])
        return 1
    width = max(len(k) for k in values)
    for k, v in values.items():
        print(f"{k:<{width}}  {v!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prescient", description="Prescient precoding experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset, spec file or manifest")
    r.add_argument("target", help=f"preset ({', '.join(PRESETS)}) or path")
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory")
    r.add_argument("--schemes", help=f"comma-separated subset of {', '.join(SCHEMES)}")
    r.add_argument("--sweep", type=_parse_sweep, help="var=lo:step:hi")
    r.add_argument("--workers", type=int, default=1, help="worker processes")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="check a spec file")
    v.add_argument("specfile")
    v.set_defaults(func=_cmd_validate)

    o = sub.add_parser("oracle", help="print reference values from the independent oracles")
    o.add_argument("suite", help="mathcore, sensing, precoders or all")
    o.set_defaults(func=_cmd_oracle)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
