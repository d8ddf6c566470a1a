"""Experiment presets for the five result figures, sized for a desk machine."""
from __future__ import annotations

import platform
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .. import __version__, sysmodel
from ..lsa.evolution import LsaConfig, channel_energy_samples, evolve_iterations
from ..lsa.transfer import DecoderTransfer, default_transfer
from .io import curve_rows, emit_results, trace_rows, write_manifest
from .montecarlo import CODE_RATE, ebno_to_sigma2, run_monte_carlo

__all__ = ["ExperimentPreset", "PRESETS", "get_preset", "run_preset", "EBNO_CONVENTION"]

EBNO_CONVENTION = ("Eb/N0 = Es / (R * N0) with Es = 1, R = 1/3 and N0 = 2 * sigma_n2 "
                   "(sigma_n2 is the noise variance per real dimension)")


@dataclass(frozen=True)
class ExperimentPreset:
    """Parameter grid of one experiment.

    ``kind`` is ``sim`` (Monte Carlo), ``lsa`` (analysis) or ``both``.  The
    simulated load grid is given by ``K_values`` at spreading gain ``N``; the
    analysed load grid by ``betas``.
    """

    name: str
    kind: str
    ebno_db: tuple[float, ...]
    kappas: tuple[float, ...]
    n_iters: int
    N: int = 16
    K_values: tuple[int, ...] = (16,)
    betas: tuple[float, ...] = ()
    detector: str = "rs"
    lam: float = 4.0
    L: int = 2
    M: int = 258
    min_errors: int = 100
    min_bits: int = 0
    max_bits: int = 10**6
    batch_size: int = 8
    pairs: tuple[tuple[float, float], ...] = ()    # explicit (beta, ebno) points for lsa

    def lsa_points(self):
        if self.pairs:
            return list(self.pairs)
        betas = self.betas or tuple(k / self.N for k in self.K_values)
        return [(b, e) for e in self.ebno_db for b in betas]


PRESETS = {
    "fig4": ExperimentPreset("fig4", "sim", ebno_db=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0),
                             kappas=(0.1,), n_iters=4, N=16, K_values=(16,),
                             min_bits=10**6, max_bits=10**6),
    "fig5": ExperimentPreset("fig5", "both", ebno_db=(4.0,), kappas=(0.1,), n_iters=4, N=20,
                             K_values=(16, 18, 20), min_errors=100, min_bits=2 * 10**5,
                             max_bits=10**6),
    "fig6": ExperimentPreset("fig6", "lsa", ebno_db=(4.0,), kappas=(0.0, 0.2, 1.0), n_iters=40,
                             betas=tuple(np.round(np.arange(0.8, 1.2001, 0.05), 3))),
    "fig7": ExperimentPreset("fig7", "lsa", ebno_db=(), kappas=tuple(np.round(np.arange(0, 1.0001, 0.05), 3)),
                             n_iters=40, pairs=((1.1, 4.0), (1.2, 5.0))),
    "fig8": ExperimentPreset("fig8", "lsa", ebno_db=(4.0,), kappas=(0.3, 0.5, 0.6, 0.7, 0.8, 1.0),
                             n_iters=15, betas=(1.1,)),
    "custom": ExperimentPreset("custom", "sim", ebno_db=(4.0,), kappas=(0.1,), n_iters=4),
}


def get_preset(name: str, **overrides) -> ExperimentPreset:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(PRESETS[name], **clean)


def _sim_rows(p: ExperimentPreset, seed: int, workers: int, scale: float):
    rows = []
    group = 0
    for ebno in p.ebno_db:
        for K in p.K_values:
            for kappa in p.kappas:
                cfg = sysmodel.SystemConfig(K=K, N=p.N, M=p.M, L=p.L, lam=p.lam,
                                            sigma_n2=ebno_to_sigma2(ebno), seed=seed)
                curve = run_monte_carlo(cfg, p.detector, p.n_iters, p.min_errors,
                                        max(1, int(p.max_bits * scale)), kappa=kappa,
                                        min_bits=int(p.min_bits * scale), group=group,
                                        workers=workers, batch_size=p.batch_size)
                curve.params["ebno_db"] = ebno
                rows.extend(curve_rows(p.name, curve))
                group += 1
    return rows


def _lsa_rows(p: ExperimentPreset, transfer: DecoderTransfer, seed: int):
    rows = []
    energy = channel_energy_samples(p.lam, p.N, 20000, np.random.default_rng(seed), p.L)
    for beta, ebno in p.lsa_points():
        for kappa in p.kappas:
            cfg = LsaConfig(p.lam, float(beta), float(kappa), ebno_to_sigma2(ebno))
            tr = evolve_iterations(cfg, transfer, p.n_iters, energy_samples=energy)
            rows.extend(trace_rows(p.name, tr, beta=float(beta), kappa=float(kappa), ebno_db=ebno))
    return rows


def run_preset(name: str, scale: float = 1.0, out_path=".", *, seed: int = 1, workers: int = 1,
               transfer: DecoderTransfer | None = None, **overrides) -> list[Path]:
    """Run a preset and write ``<name>.csv`` plus ``<name>.manifest.json`` to ``out_path``.

    ``scale`` multiplies the Monte Carlo bit budget.
    """
    p = get_preset(name, **overrides)
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    if p.kind in ("sim", "both"):
        rows += _sim_rows(p, seed, workers, scale)
    if p.kind in ("lsa", "both"):
        rows += _lsa_rows(p, transfer or default_transfer(), seed)
    csv_path = out / f"{p.name}.csv"
    emit_results(rows, "csv", csv_path)
    man_path = out / f"{p.name}.manifest.json"
    write_manifest(man_path, {
        "preset": asdict(p),
        "seed": seed,
        "scale": scale,
        "workers": workers,
        "block_length_M": p.M,
        "min_errors": p.min_errors,
        "code_rate": CODE_RATE,
        "ebno_convention": EBNO_CONVENTION,
        "versions": {"turbomud": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": _version("scipy"),
                     "numba": _version("numba")},
        "argv": sys.argv,
    })
    return [csv_path, man_path]


def _version(mod):
    try:
        return __import__(mod).__version__
    except Exception:   # pragma: no cover
        return "unknown"
