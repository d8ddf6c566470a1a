"""Seeded, schedule-independent Monte Carlo BER campaigns."""
from __future__ import annotations

import math
import multiprocessing as mp
from dataclasses import dataclass, field, replace

import numpy as np

from .. import fec, sysmodel
from ..mud import ReceivedBlock, turbo_iterate

__all__ = [
    "CODE_RATE",
    "ebno_to_sigma2",
    "sigma2_to_ebno",
    "generate_block",
    "BerCurve",
    "run_monte_carlo",
    "with_noise",
    "DETECTORS",
]

CODE_RATE = 1.0 / fec.RATE_INV
DETECTORS = ("map", "rs", "pic")


def ebno_to_sigma2(ebno_db: float, rate: float = CODE_RATE, es: float = 1.0) -> float:
    """Noise variance per real dimension for a given ``Eb/N0`` in dB.

    ``N0 = 2 * sigma_n2`` and ``Eb = Es / rate``, hence
    ``sigma_n2 = Es / (2 * rate * Eb/N0)``.
    """
    return es / (2.0 * rate * 10.0 ** (ebno_db / 10.0))


def sigma2_to_ebno(sigma_n2: float, rate: float = CODE_RATE, es: float = 1.0) -> float:
    return 10.0 * math.log10(es / (2.0 * rate * sigma_n2))


def generate_block(config: sysmodel.SystemConfig, block: int, group: int = 0) -> ReceivedBlock:
    """Transmit one block of ``M`` coded symbols per user through the channel."""
    st = sysmodel.block_streams(config.seed, block, group)
    K, M = config.K, config.M
    m_info = fec.info_length(M)
    info = st["info"].integers(0, 2, size=(K, m_info), dtype=np.int8)
    coded = fec.conv_encode(info)
    ils = [fec.Interleaver(M, st["interleaver"]) for _ in range(K)]
    symbols = fec.bits_to_symbols(np.stack([ils[k].interleave(coded[k]) for k in range(K)]))
    codes = sysmodel.gen_spreading_codes(config, st["codes"])
    taps = sysmodel.gen_channels(config, st["channels"])
    h = sysmodel.equivalent_codes(codes, taps)
    y = sysmodel.synthesize_received(symbols, h, config.sigma_n2, st["noise"])
    return ReceivedBlock(y, h, max(config.sigma_n2, 1e-12), ils, info, symbols)


@dataclass
class BerCurve:
    """Per-iteration error counters of one grid point."""

    params: dict
    errors: list[int]                  # per iteration
    bits: int
    blocks: int
    extra: dict = field(default_factory=dict)

    @property
    def ber(self) -> list[float]:
        return [e / self.bits if self.bits else float("nan") for e in self.errors]


def _run_batch(args):
    config, detector, n_iters, kappa, L1, group, start, stop, partition_mode = args
    errs = np.zeros(n_iters, dtype=np.int64)
    bits = 0
    for b in range(start, stop):
        blk = generate_block(config, b, group)
        res = turbo_iterate(config, blk, n_iters, detector=detector, kappa=kappa, L1=L1,
                            partition_mode=partition_mode)
        errs += [r.errors for r in res]
        bits += res[0].bits
    return errs, bits


def run_monte_carlo(config: sysmodel.SystemConfig, detector_kind: str = "rs", n_iters: int = 5,
                    min_errors: int = 100, max_bits: int = 10**6, *, kappa: float = 0.1,
                    L1: int | None = None, min_bits: int = 0, group: int = 0,
                    workers: int = 1, batch_size: int = 8,
                    partition_mode: str = "confidence") -> BerCurve:
    """Simulate batches of blocks until the final iteration has ``min_errors``
    errors over at least ``min_bits`` info bits, or ``max_bits`` is reached.

    The stopping rule is checked after each batch in batch order, so the
    result does not depend on ``workers``.
    """
    if detector_kind not in DETECTORS:
        raise ValueError(f"detector must be one of {DETECTORS}")
    if n_iters < 1 or batch_size < 1 or workers < 1:
        raise ValueError("n_iters, batch_size and workers must be >= 1")
    errs = np.zeros(n_iters, dtype=np.int64)
    bits = 0
    blocks = 0

    def tasks():
        i = 0
        while True:
            yield (config, detector_kind, n_iters, kappa, L1, group,
                   i * batch_size, (i + 1) * batch_size, partition_mode)
            i += 1

    def done():
        return (bits >= min_bits and errs[-1] >= min_errors) or bits >= max_bits

    if workers == 1:
        it = map(_run_batch, tasks())
        pool = None
    else:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        pool = ctx.Pool(workers)
        it = pool.imap(_run_batch, tasks())
    try:
        for e, nb in it:
            errs += e
            bits += nb
            blocks += batch_size
            if done():
                break
    finally:
        if pool is not None:
            pool.terminate()
            pool.join()
    params = {"K": config.K, "N": config.N, "M": config.M, "L": config.L,
              "beta": config.beta, "sigma_n2": config.sigma_n2,
              "ebno_db": sigma2_to_ebno(config.sigma_n2) if config.sigma_n2 > 0 else float("inf"),
              "detector": detector_kind, "kappa": kappa if detector_kind == "rs" else
              (0.0 if detector_kind == "pic" else 1.0)}
    return BerCurve(params, [int(x) for x in errs], int(bits), blocks)


def with_noise(config: sysmodel.SystemConfig, ebno_db: float) -> sysmodel.SystemConfig:
    return replace(config, sigma_n2=ebno_to_sigma2(ebno_db))
