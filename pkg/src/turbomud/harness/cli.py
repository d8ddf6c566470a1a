"""Command line entry point.

Examples
--------
::

    turbomud --preset fig7 --out results/
    turbomud --preset custom --detector rs --kappa 0.1 --ebno 2,4 --iters 4 --scale 0.05
    turbomud --config run.json --workers 4

A config file is a JSON object whose keys are :class:`ExperimentPreset` field
names (``K``, ``N``, ``M``, ``L``, ``lam`` and the grid fields), plus an
optional ``preset`` naming the base preset and ``seed``/``scale``/``workers``.
Command line flags override the file.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

from .montecarlo import DETECTORS
from .presets import PRESETS, ExperimentPreset, run_preset

_PRESET_FIELDS = {f.name for f in fields(ExperimentPreset)}
_RUN_KEYS = {"preset", "seed", "scale", "workers", "out"}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="turbomud",
                                description="Turbo equalization and multiuser detection experiments.")
    p.add_argument("--preset", choices=sorted(PRESETS), help="experiment preset (default custom)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (default 1)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--workers", type=int, help="worker processes for Monte Carlo")
    p.add_argument("--detector", choices=DETECTORS, help="detector for simulated points")
    p.add_argument("--iters", type=int, help="turbo iterations")
    p.add_argument("--kappa", type=_floats, help="search width(s), comma separated")
    p.add_argument("--beta", type=_floats, help="load(s); simulated points use K = round(beta * N)")
    p.add_argument("--ebno", type=_floats, help="Eb/N0 value(s) in dB, comma separated")
    p.add_argument("--scale", type=float, help="multiplier on the Monte Carlo bit budget")
    return p


def _settings(args) -> tuple[str, dict, dict]:
    cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(cfg) - _PRESET_FIELDS - _RUN_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    name = args.preset or cfg.get("preset", "custom")
    run = {"seed": 1, "scale": 1.0, "workers": 1, "out": "."}
    run.update({k: cfg[k] for k in _RUN_KEYS - {"preset"} if k in cfg})
    for k in ("seed", "scale", "workers", "out"):
        if getattr(args, k) is not None:
            run[k] = getattr(args, k)
    over = {k: tuple(v) if isinstance(v, list) else v
            for k, v in cfg.items() if k in _PRESET_FIELDS and k != "name"}
    if "pairs" in over:
        over["pairs"] = tuple(tuple(x) for x in over["pairs"])
    if args.detector:
        over["detector"] = args.detector
    if args.iters is not None:
        over["n_iters"] = args.iters
    if args.kappa:
        over["kappas"] = args.kappa
    if args.ebno:
        over["ebno_db"] = args.ebno
        over["pairs"] = ()
    if args.beta:
        N = over.get("N", PRESETS[name].N)
        over["betas"] = args.beta
        over["K_values"] = tuple(max(1, round(b * N)) for b in args.beta)
        over["pairs"] = ()
    return name, run, over


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        name, run, over = _settings(args)
        paths = run_preset(name, run["scale"], run["out"], seed=run["seed"],
                           workers=run["workers"], **over)
    except (ValueError, TypeError, FloatingPointError, OSError) as exc:
        print(f"turbomud: error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":   # pragma: no cover
    sys.exit(main())
