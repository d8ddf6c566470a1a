"""
Decoder transfer characteristic: statistics of the decoder's soft feedback
as a function of the SNR of an equivalent single-user AWGN channel.

The table is built offline by simulating coded BPSK over a real AWGN channel
``y = sqrt(snr) * b + n`` (unit noise variance), feeding LLRs ``2 sqrt(snr) y``
to the decoder and recording, per SNR grid point, the data-bit error count,
``E{(b - bhat)^2}`` and a 64-bin histogram of ``x = b * bhat`` where ``bhat``
is the soft feedback built from the decoder's coded extrinsic LLRs.

File layout (text, UTF-8)::

    # turbomud-decoder-transfer
    # version: 1
    # code: (23,33,37)_8 rate 1/3, 4 tail bits, m_info=<int>
    # snr_db: <start> <step> <count>
    # bin_edges: <65 floats>
    # columns: snr_db errors bits sum_d2 n w[64] sx[64] sx2[64] sd2[64]
    <one whitespace-separated row per grid point>

``n`` counts feedback samples; ``w``, ``sx``, ``sx2``, ``sd2`` are per-bin
sample counts and sums of ``x``, ``x^2`` and ``(1 - x)^2``.  All sums are
stored with 17 significant digits so the file round-trips exactly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .. import fec
from .efficiency import FeedbackDistribution

__all__ = [
    "N_BINS",
    "BIN_EDGES",
    "FeedbackSummary",
    "DecoderTransfer",
    "simulate_transfer_point",
    "build_transfer_table",
    "default_transfer",
]

FORMAT_TAG = "turbomud-decoder-transfer"
VERSION = 1
N_BINS = 64
BIN_EDGES = np.linspace(-1.0, 1.0, N_BINS + 1)
_ORDER = np.argsort(np.abs(0.5 * (BIN_EDGES[:-1] + BIN_EDGES[1:])), kind="stable")
DEFAULT_TABLE = "decoder_transfer_v1.txt"


def simulate_transfer_point(snr_db: float, n_blocks: int, rng: np.random.Generator,
                            m_info: int = 82, batch: int = 256) -> np.ndarray:
    """One table row (without the SNR column) from ``n_blocks`` coded blocks."""
    a = math.sqrt(10.0 ** (snr_db / 10.0))
    errors = bits = 0
    sum_d2 = 0.0
    n = 0
    w = np.zeros(N_BINS)
    sx = np.zeros(N_BINS)
    sx2 = np.zeros(N_BINS)
    sd2 = np.zeros(N_BINS)
    left = n_blocks
    while left > 0:
        nb = min(batch, left)
        left -= nb
        u = rng.integers(0, 2, size=(nb, m_info), dtype=np.int8)
        b = fec.bits_to_symbols(fec.conv_encode(u))
        y = a * b + rng.standard_normal(b.shape)
        res = fec.bcjr_decode(2.0 * a * y)
        errors += int(np.count_nonzero((res.info_llr < 0) != (u == 1)))
        bits += u.size
        ext = np.clip(res.extrinsic_llr, -50.0, 50.0)
        x = (b * np.tanh(0.5 * ext)).ravel()
        d2 = (1.0 - x) ** 2
        sum_d2 += float(d2.sum())
        n += x.size
        idx = np.clip(np.searchsorted(BIN_EDGES, x, side="right") - 1, 0, N_BINS - 1)
        w += np.bincount(idx, minlength=N_BINS)
        sx += np.bincount(idx, x, minlength=N_BINS)
        sx2 += np.bincount(idx, x * x, minlength=N_BINS)
        sd2 += np.bincount(idx, d2, minlength=N_BINS)
    return np.concatenate([[errors, bits, sum_d2, n], w, sx, sx2, sd2])


@dataclass(frozen=True)
class FeedbackSummary:
    """Soft-feedback statistics at one operating SNR."""

    snr_db: float
    ber: float
    e_db2: float
    weights: np.ndarray        # per-bin probability mass of x = b * bhat
    mean_x2: np.ndarray        # per-bin E{x^2}
    mean_d2: np.ndarray        # per-bin E{(1 - x)^2}

    def _split(self, kappa: float):
        """Mass of each bin inside the unreliable (lowest |bhat|) fraction."""
        if not 0.0 <= kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        take = np.zeros(N_BINS)
        left = kappa
        for j in _ORDER:
            if left <= 0:
                break
            t = min(self.weights[j], left)
            take[j] = t
            left -= t
        return take, self.weights - take

    def unreliable_distribution(self, kappa: float) -> FeedbackDistribution:
        """Distribution of ``bhat`` restricted to the unreliable set."""
        take, _ = self._split(kappa)
        live = take > 0
        if not live.any():
            return FeedbackDistribution.point(0.0)
        return FeedbackDistribution(np.sqrt(np.clip(self.mean_x2[live], 0.0, 1.0)), take[live])

    def reliable_e_db2(self, kappa: float) -> float:
        """``E{(b - bhat)^2}`` within the reliable set."""
        _, rest = self._split(kappa)
        tot = rest.sum()
        if tot <= 1e-15:
            return 0.0
        return float(np.dot(rest, self.mean_d2) / tot)

    def distribution(self) -> FeedbackDistribution:
        live = self.weights > 0
        return FeedbackDistribution(np.sqrt(np.clip(self.mean_x2[live], 0.0, 1.0)),
                                    self.weights[live])


class DecoderTransfer:
    """Tabulated decoder transfer characteristic with interpolated lookup."""

    def __init__(self, snr_db: np.ndarray, rows: np.ndarray, m_info: int = 82):
        self.snr_db = np.asarray(snr_db, dtype=float)
        self.rows = np.asarray(rows, dtype=float)
        if self.rows.shape != (self.snr_db.size, 4 + 4 * N_BINS):
            raise ValueError("table rows do not match the column layout")
        if np.any(np.diff(self.snr_db) <= 0):
            raise ValueError("SNR grid must be increasing")
        self.m_info = int(m_info)

    # --- derived columns
    @property
    def errors(self):
        return self.rows[:, 0]

    @property
    def bits(self):
        return self.rows[:, 1]

    @property
    def ber(self):
        return self.rows[:, 0] / self.rows[:, 1]

    @property
    def e_db2(self):
        return self.rows[:, 2] / self.rows[:, 3]

    def _interp_ber(self, s):
        ber = self.ber
        i = int(np.clip(np.searchsorted(self.snr_db, s) - 1, 0, self.snr_db.size - 2))
        s0, s1 = self.snr_db[i], self.snr_db[i + 1]
        f = (s - s0) / (s1 - s0)
        b0, b1 = ber[i], ber[i + 1]
        if b0 > 0 and b1 > 0:
            return float(math.exp((1 - f) * math.log(b0) + f * math.log(b1)))
        return float((1 - f) * b0 + f * b1)

    def lookup(self, snr_db: float) -> FeedbackSummary:
        """Summary at ``snr_db``, clamped to the table range with a warning."""
        s = float(snr_db)
        lo, hi = self.snr_db[0], self.snr_db[-1]
        if not lo <= s <= hi:
            warnings.warn(f"SNR {s:.2f} dB outside the transfer table [{lo}, {hi}] dB; clamped",
                          RuntimeWarning, stacklevel=2)
            s = min(max(s, lo), hi)
        # per-row densities (rows may hold different sample counts)
        dens = self.rows[:, 4:] / self.rows[:, 3:4]
        row = np.array([np.interp(s, self.snr_db, dens[:, c]) for c in range(dens.shape[1])])
        w, sx, sx2, sd2 = (row[q * N_BINS:(q + 1) * N_BINS] for q in range(4))
        with np.errstate(invalid="ignore", divide="ignore"):
            mx2 = np.where(w > 0, sx2 / w, 0.0)
            md2 = np.where(w > 0, sd2 / w, 0.0)
        weights = w / w.sum()
        e_db2 = float(np.interp(s, self.snr_db, self.e_db2))
        return FeedbackSummary(s, self._interp_ber(s), e_db2, weights, mx2, md2)

    def ber_at(self, snr_db: float) -> float:
        return self.lookup(snr_db).ber

    # --- persistence
    def save(self, path) -> None:
        step = float(np.round(self.snr_db[1] - self.snr_db[0], 12)) if self.snr_db.size > 1 else 0.0
        header = [
            FORMAT_TAG,
            f"version: {VERSION}",
            f"code: (23,33,37)_8 rate 1/3, 4 tail bits, m_info={self.m_info}",
            f"snr_db: {self.snr_db[0]!r} {step!r} {self.snr_db.size}",
            "bin_edges: " + " ".join(repr(float(x)) for x in BIN_EDGES),
            "columns: snr_db errors bits sum_d2 n w[64] sx[64] sx2[64] sd2[64]",
        ]
        body = np.column_stack([self.snr_db, self.rows])
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            for r in body:
                fh.write(" ".join(repr(float(v)) for v in r) + "\n")

    @classmethod
    def load(cls, path) -> "DecoderTransfer":
        meta = {}
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        head = [ln[2:] for ln in lines if ln.startswith("# ")]
        if not head or head[0] != FORMAT_TAG:
            raise ValueError(f"{path} is not a decoder transfer table")
        for ln in head[1:]:
            key, _, val = ln.partition(": ")
            meta[key] = val
        if int(meta.get("version", -1)) != VERSION:
            raise ValueError(f"unsupported table version {meta.get('version')}")
        edges = np.array(meta["bin_edges"].split(), dtype=float)
        if not np.array_equal(edges, BIN_EDGES):
            raise ValueError("table bin edges differ from this build")
        m_info = int(meta["code"].rsplit("m_info=", 1)[1])
        data = np.array([ln.split() for ln in lines if ln and not ln.startswith("#")], dtype=float)
        return cls(data[:, 0], data[:, 1:], m_info)


def build_transfer_table(snr_db, seed: int = 0, min_blocks: int = 2000, min_errors: int = 200,
                         max_blocks: int = 200_000, m_info: int = 82) -> DecoderTransfer:
    """Simulate every grid point.  Blocks are added until ``min_errors`` data-bit
    errors are seen or ``max_blocks`` is reached; once a point finishes with no
    errors at all, higher SNRs are run with ``min_blocks`` only."""
    snr_db = np.asarray(snr_db, dtype=float)
    rows = []
    quiet = False
    for g, s in enumerate(snr_db):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(g,))))
        row = simulate_transfer_point(s, min_blocks, rng, m_info)
        done = min_blocks
        while not quiet and row[0] < min_errors and done < max_blocks:
            nb = min(done, max_blocks - done)
            row += simulate_transfer_point(s, nb, rng, m_info)
            done += nb
        if row[0] == 0 and done >= max_blocks:
            quiet = True
        rows.append(row)
    return DecoderTransfer(snr_db, np.array(rows), m_info)


def default_transfer() -> DecoderTransfer:
    """The table shipped with the package."""
    ref = resources.files("turbomud") / "data" / DEFAULT_TABLE
    with resources.as_file(ref) as p:
        return DecoderTransfer.load(Path(p))
