"""
Reliable/unreliable partition of decoder feedback and the order statistics
describing the unreliable set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ReliabilityPartition",
    "EmpiricalDistribution",
    "unreliable_count",
    "build_partition",
    "kth_order_pdf",
    "unreliable_error_pdf",
    "reliable_error_pdf",
]


@dataclass(frozen=True)
class ReliabilityPartition:
    unreliable: np.ndarray      # bool mask, shape (K, M)
    kappa: float
    threshold: float            # largest confidence metric placed in the unreliable set

    @property
    def size(self) -> int:
        return int(self.unreliable.sum())

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [tuple(map(int, p)) for p in np.argwhere(self.unreliable)]


def unreliable_count(kappa: float, n: int) -> int:
    """``round(kappa * n)`` with ties to even."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    return int(round(kappa * n))


def build_partition(soft_feedbacks: np.ndarray, kappa: float, *, mode: str = "confidence",
                    symbols: np.ndarray | None = None) -> ReliabilityPartition:
    """Select the ``round(kappa*K*M)`` least reliable feedback symbols.

    ``mode="confidence"`` ranks by ``|bhat|`` (smallest first).  ``mode="oracle"``
    ranks by the true feedback error ``|b - bhat|`` (largest first) and needs
    the transmitted ``symbols``.  Ties go to the lower (user, symbol) index.
    """
    bhat = np.asarray(soft_feedbacks, dtype=float)
    n = bhat.size
    count = unreliable_count(kappa, n)
    if mode == "confidence":
        key = np.abs(bhat).ravel()
    elif mode == "oracle":
        if symbols is None:
            raise ValueError("oracle partition needs the transmitted symbols")
        key = -np.abs(np.asarray(symbols, dtype=float) - bhat).ravel()
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    order = np.argsort(key, kind="stable")[:count]
    mask = np.zeros(n, dtype=bool)
    mask[order] = True
    thr = float(np.abs(bhat.ravel()[order]).max()) if count else 0.0
    return ReliabilityPartition(mask.reshape(bhat.shape), kappa, thr)


class EmpiricalDistribution:
    """Sorted sample of a scalar statistic with cdf and left-continuous quantile."""

    def __init__(self, sample):
        self.sample = np.sort(np.asarray(sample, dtype=float).ravel())
        if self.sample.size == 0:
            raise ValueError("empty sample")

    def __len__(self):
        return self.sample.size

    def cdf(self, x):
        return np.searchsorted(self.sample, x, side="right") / self.sample.size

    def quantile(self, q):
        """``inf{x : F(x) >= q}``."""
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("q must lie in [0, 1]")
        idx = np.clip(np.ceil(q * self.sample.size).astype(int) - 1, 0, self.sample.size - 1)
        return self.sample[idx]


def kth_order_pdf(k: int, n: int, f, F):
    """Density of the k-th smallest of n i.i.d. draws with density f and cdf F."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    logc = gammaln(n + 1) - gammaln(k) - gammaln(n - k + 1)

    def pdf(x):
        Fx = np.asarray(F(x), dtype=float)
        fx = np.asarray(f(x), dtype=float)
        with np.errstate(divide="ignore"):
            logv = (logc + (k - 1) * np.log(Fx) + (n - k) * np.log1p(-Fx))
        out = np.where(fx > 0, np.exp(logv) * fx, 0.0)
        return out if out.ndim else float(out)

    return pdf


def _check_band(kappa, kappa_tilde):
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    if not 0.0 <= kappa_tilde <= 1.0:
        raise ValueError("kappa_tilde must lie in [0, 1]")


def unreliable_error_pdf(f_abs_db, kappa: float, kappa_tilde: float):
    """Density of ``|db|`` within the unreliable set: ``f/kappa`` on the band
    ``[1 - kappa_tilde, 1 + kappa_tilde]``, zero elsewhere."""
    _check_band(kappa, kappa_tilde)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 1 - kappa_tilde) & (x <= 1 + kappa_tilde)
        out = np.where(inside, np.asarray(f_abs_db(x), dtype=float) / kappa, 0.0)
        return out if out.ndim else float(out)

    return pdf


def reliable_error_pdf(f_abs_db, kappa: float, kappa_tilde: float):
    """Density of ``|db|`` within the reliable set: ``f/(1-kappa)`` outside the band."""
    _check_band(kappa, kappa_tilde)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        outside = (x < 1 - kappa_tilde) | (x > 1 + kappa_tilde)
        out = np.where(outside, np.asarray(f_abs_db(x), dtype=float) / (1 - kappa), 0.0)
        return out if out.ndim else float(out)

    return pdf
