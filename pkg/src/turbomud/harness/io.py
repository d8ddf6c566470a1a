"""
Result emission.

CSV schema (RFC 4180, CRLF line ends, header row always present), one row per
(grid point, iteration):

=========  =====================================================
column     meaning
=========  =====================================================
figure     preset name
source     ``sim`` (Monte Carlo) or ``lsa`` (large-system analysis)
detector   map, rs, pic, or the kappa-labelled lsa detector
K, N       users and spreading gain (empty for lsa rows)
beta       system load
kappa      search width
ebno_db    Eb/N0 in dB
iteration  1-based turbo iteration
errors     data-bit errors (sim rows)
bits       data bits counted (sim rows)
ber        errors / bits, or the predicted BER
eta        multiuser efficiency (lsa rows)
ber_finite lsa BER averaged over finite-N channel energy (optional)
=========  =====================================================

Floats are written with ``repr`` so that rerunning a preset reproduces the
file byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

__all__ = ["COLUMNS", "curve_rows", "trace_rows", "emit_results", "parse_results",
           "write_manifest"]

COLUMNS = ["figure", "source", "detector", "K", "N", "beta", "kappa", "ebno_db", "iteration",
           "errors", "bits", "ber", "eta", "ber_finite"]
_INT = {"K", "N", "iteration", "errors", "bits"}
_FLOAT = {"beta", "kappa", "ebno_db", "ber", "eta", "ber_finite"}


def _fmt(key, value):
    if value is None or value == "":
        return ""
    if key in _INT:
        return str(int(value))
    if key in _FLOAT:
        return repr(float(value))
    return str(value)


def curve_rows(figure: str, curve) -> list[dict]:
    """Rows of a Monte Carlo :class:`BerCurve`."""
    p = curve.params
    return [{"figure": figure, "source": "sim", "detector": p["detector"], "K": p["K"], "N": p["N"],
             "beta": p["beta"], "kappa": p["kappa"], "ebno_db": p["ebno_db"], "iteration": i + 1,
             "errors": e, "bits": curve.bits, "ber": e / curve.bits if curve.bits else math.nan,
             "eta": None, "ber_finite": None}
            for i, e in enumerate(curve.errors)]


def trace_rows(figure: str, trace, *, beta: float, kappa: float, ebno_db: float) -> list[dict]:
    """Rows of an analysis :class:`EvolutionTrace`."""
    rows = []
    for i, (eta, ber) in enumerate(zip(trace.eta, trace.ber)):
        rows.append({"figure": figure, "source": "lsa", "detector": "rs", "K": None, "N": None,
                     "beta": beta, "kappa": kappa, "ebno_db": ebno_db, "iteration": i + 1,
                     "errors": None, "bits": None, "ber": ber, "eta": eta,
                     "ber_finite": trace.ber_finite[i] if trace.ber_finite else None})
    return rows


def emit_results(rows: list[dict], fmt: str = "csv", path=None) -> str:
    """Serialise rows as CSV or JSON; writes to ``path`` when given and returns the text."""
    if fmt == "csv":
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(c, r.get(c)) for c in COLUMNS])
        text = buf.getvalue()
    elif fmt == "json":
        clean = [{c: r.get(c) for c in COLUMNS} for r in rows]
        text = json.dumps({"columns": COLUMNS, "rows": clean}, indent=1, sort_keys=False) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def parse_results(path) -> list[dict]:
    """Read a CSV written by :func:`emit_results` back into typed rows."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ValueError("unexpected CSV header")
        out = []
        for r in reader:
            row = {}
            for c in COLUMNS:
                v = r[c]
                if v == "":
                    row[c] = None
                elif c in _INT:
                    row[c] = int(v)
                elif c in _FLOAT:
                    row[c] = float(v)
                else:
                    row[c] = v
            out.append(row)
        return out


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
                          encoding="utf-8")
