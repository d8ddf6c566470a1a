"""Monte Carlo harness, experiment presets and result emission."""
from .montecarlo import (CODE_RATE, DETECTORS, BerCurve, ebno_to_sigma2, generate_block,
                         run_monte_carlo, sigma2_to_ebno, with_noise)
from .io import COLUMNS, curve_rows, emit_results, parse_results, trace_rows, write_manifest
from .presets import PRESETS, ExperimentPreset, get_preset, run_preset

__all__ = [
    "CODE_RATE", "DETECTORS", "BerCurve", "ebno_to_sigma2", "generate_block",
    "run_monte_carlo", "sigma2_to_ebno", "with_noise", "COLUMNS", "curve_rows",
    "emit_results", "parse_results", "trace_rows", "write_manifest", "PRESETS",
    "ExperimentPreset", "get_preset", "run_preset",
]
