"""
Equalizing multiuser detectors and the turbo loop.

* :func:`map_eq_mud_block` runs BCJR over the joint trellis of all users'
  last ``L - 1`` symbol periods.
* :func:`rs_eq_mud_block` runs one sub-trellis per user over unreliable
  symbols only and cancels reliable symbols with their soft feedback.
* :func:`pic_block` is the parallel interference canceller (no unreliable
  symbols).

Detectors take the received block ``y`` of shape (M, N), equivalent codes
``h`` of shape (K, M, L, N), a priori LLRs of the coded symbols in channel
order (``log P(+1)/P(-1)``) and the noise variance per real dimension.  They
return extrinsic LLRs of shape (K, M).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fec
from .reliability import ReliabilityPartition, build_partition
from .sysmodel import noiseless_received

__all__ = [
    "MAX_JOINT_STATE_BITS",
    "LLR_CLAMP",
    "PRIOR_FLOOR",
    "joint_state_count",
    "joint_successors",
    "mean_substate_count",
    "map_eq_mud_block",
    "pic_block",
    "rs_eq_mud_block",
    "ReceivedBlock",
    "IterationResult",
    "turbo_iterate",
]

MAX_JOINT_STATE_BITS = 16
MAX_ENUM_BITS = 16
LLR_CLAMP = 50.0
PRIOR_FLOOR = 1e-12


def _check_inputs(y, h, sigma_n2):
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if h.ndim != 4:
        raise ValueError("equivalent codes must have shape (K, M, L, N)")
    K, M, L, N = h.shape
    if y.shape != (M, N):
        raise ValueError(f"received block has shape {y.shape}, expected {(M, N)}")
    if not sigma_n2 > 0:
        raise ValueError("sigma_n2 must be positive")
    return y, h


def _log_priors(prior_llr, shape):
    """(K, M, 2) log probabilities of (+1, -1), floored."""
    if prior_llr is None:
        la = np.zeros(shape)
    else:
        la = np.asarray(prior_llr, dtype=float)
        if la.shape != shape:
            raise ValueError(f"priors have shape {la.shape}, expected {shape}")
        if not np.all(np.isfinite(la)):
            raise ValueError("prior LLRs must be finite")
    logp = np.stack([-np.logaddexp(0.0, -la), -np.logaddexp(0.0, la)], axis=-1)
    return np.maximum(logp, np.log(PRIOR_FLOOR))


def _finite(ext, what):
    if not np.all(np.isfinite(ext)):
        raise FloatingPointError(f"non-finite metric in the {what} detector")
    return ext


# --------------------------------------------------------------------------
# joint trellis

def joint_state_count(K: int, L: int) -> int:
    return 1 << ((L - 1) * K)


def joint_successors(state: int, K: int, L: int) -> np.ndarray:
    """States reachable from ``state``; bit ``p*K + k`` of a label is user k's
    symbol ``p`` periods after the oldest one kept (set bit means -1)."""
    if L < 2:
        return np.zeros(1 << K, dtype=np.int64)
    u = np.arange(1 << K, dtype=np.int64)
    return (state >> K) | (u << ((L - 2) * K))


def _signs(n_bits: int) -> np.ndarray:
    labels = np.arange(1 << n_bits)[:, None]
    return 1.0 - 2.0 * ((labels >> np.arange(n_bits)) & 1)


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    """Log-sum-exp along one axis (entries are finite)."""
    m = a.max(axis=axis, keepdims=True)
    return np.squeeze(m, axis) + np.log(np.exp(a - m).sum(axis=axis))


def map_eq_mud_block(y, h, prior_llr=None, sigma_n2: float = 1.0) -> np.ndarray:
    """Symbol-wise MAP detection over the joint ``2^((L-1)K)``-state trellis.

    The forward recursion starts uniform (symbols before the block are
    absent) and the backward recursion ends uniform.
    """
    y, h = _check_inputs(y, h, sigma_n2)
    K, M, L, N = h.shape
    if K * (L - 1) > MAX_JOINT_STATE_BITS:
        raise ValueError(f"joint trellis needs 2^{K * (L - 1)} states; limit is "
                         f"2^{MAX_JOINT_STATE_BITS}")
    logp = _log_priors(prior_llr, (K, M))
    U = 1 << K
    sb = (L - 1) * K
    S = 1 << sb
    M_low = S >> K if L >= 2 else 1
    sgn_u = _signs(K)                    # (U, K)
    sgn_m = _signs(sb) if sb else np.ones((1, 0))
    inv2s2 = 0.5 / sigma_n2

    # gamma[t] has shape (S, U): transition metric from state m' with new symbols u
    gam = np.empty((M, S, U))
    # past contributions: A[t] = sum_p sgn_m[:, pK:(p+1)K] @ h[:, t-L+1+p, L-1-p]
    hpad = np.concatenate([np.zeros((K, L - 1, L, N), h.dtype), h], axis=1)
    bits_u = (np.arange(U)[:, None] >> np.arange(K)) & 1                # (U, K)
    prior = logp[np.arange(K)[None, None, :], np.arange(M)[:, None, None], bits_u[None]].sum(-1)
    step = max(1, int(2e6 // (S * U * N)))
    for t0 in range(0, M, step):
        ts = np.arange(t0, min(M, t0 + step))
        B = np.einsum("uk,ktn->tun", sgn_u, h[:, ts, 0, :])             # (T, U, N)
        A = np.zeros((ts.size, S, N), complex)
        for p in range(L - 1):
            A += np.einsum("sk,ktn->tsn", sgn_m[:, p * K:(p + 1) * K], hpad[:, ts + p, L - 1 - p, :])
        d = y[ts][:, None, None, :] - A[:, :, None, :] - B[:, None, :, :]
        dist = (d.real ** 2 + d.imag ** 2).sum(-1)
        gam[ts] = prior[ts][:, None, :] - dist * inv2s2

    if L == 1:
        sig = gam[:, 0, :]                                # (M, U)
    else:
        alpha = np.zeros((M + 1, S))                      # alpha[t+1] after period t
        for t in range(M):
            tmp = alpha[t].reshape(M_low, U)[:, :, None] + gam[t].reshape(M_low, U, U)
            nxt = _lse(tmp, axis=1).T.reshape(S)     # index u * M_low + m_low
            alpha[t + 1] = nxt - nxt.max()
        beta = np.zeros((M + 1, S))                       # beta[t+1] after period t
        for t in range(M - 1, 0, -1):
            bt = beta[t + 1].reshape(U, M_low).T[:, None, :]      # (M_low, 1, U)
            cur = _lse(gam[t].reshape(M_low, U, U) + bt, axis=2).reshape(S)
            beta[t] = cur - cur.max()
        full = (alpha[:M].reshape(M, M_low, U)[:, :, :, None] + gam.reshape(M, M_low, U, U)
                + beta[1:].reshape(M, U, M_low).transpose(0, 2, 1)[:, :, None, :])
        sig = _lse(full.reshape(M, S, U), axis=1)

    ext = np.empty((K, M))
    bits = (np.arange(U)[:, None] >> np.arange(K)) & 1
    for k in range(K):
        neg = bits[:, k] == 1
        ext[k] = _lse(sig[:, ~neg], axis=1) - _lse(sig[:, neg], axis=1)
    ext -= logp[:, :, 0] - logp[:, :, 1]
    return _finite(ext, "MAP")


# --------------------------------------------------------------------------
# interference cancellation

def pic_block(y, h, soft_feedbacks, sigma_n2: float = 1.0) -> np.ndarray:
    """Soft parallel interference cancellation with matched-filter combining
    over the ``L`` periods that carry each symbol."""
    y, h = _check_inputs(y, h, sigma_n2)
    K, M, L, N = h.shape
    bhat = np.asarray(soft_feedbacks, dtype=float)
    if bhat.shape != (K, M):
        raise ValueError(f"soft feedback has shape {bhat.shape}, expected {(K, M)}")
    resid = y - noiseless_received(bhat, h)
    out = np.zeros((K, M))
    for j in range(L):
        hj = h[:, :M - j, j, :]
        mf = np.einsum("kmn,mn->km", hj.conj(), resid[j:]).real
        out[:, :M - j] += 2.0 * (mf + bhat[:, :M - j] * np.sum(np.abs(hj) ** 2, axis=-1))
    return _finite(out / sigma_n2, "PIC")


def mean_substate_count(K: int, L1: int, kappa: float) -> float:
    """Expected number of sub-trellis states per period across users."""
    from math import comb
    m = np.arange(L1)
    return K * float(np.sum([comb(L1 - 1, int(i)) * kappa ** i * (1 - kappa) ** (L1 - 1 - i)
                             * 2 ** (i + 1) for i in m]))


def rs_eq_mud_block(y, h, prior_llr, partition, L1: int, sigma_n2: float = 1.0, *,
                    max_enum_bits: int = MAX_ENUM_BITS) -> np.ndarray:
    """Reduced-state detection over per-user sub-trellises.

    ``partition`` is a :class:`ReliabilityPartition` or a boolean (K, M) mask
    of unreliable symbols.  Soft feedback is ``tanh(prior_llr / 2)``.  With no
    unreliable symbols the detector is :func:`pic_block`.
    """
    y, h = _check_inputs(y, h, sigma_n2)
    K, M, L, N = h.shape
    if not 1 <= L1 <= L:
        raise ValueError("need 1 <= L1 <= L")
    unrel = partition.unreliable if isinstance(partition, ReliabilityPartition) else partition
    unrel = np.asarray(unrel, dtype=bool)
    if unrel.shape != (K, M):
        raise ValueError("partition must cover every (user, symbol) pair")
    logp = _log_priors(prior_llr, (K, M))
    bhat = np.tanh(0.5 * np.asarray(prior_llr, dtype=float)) if prior_llr is not None else np.zeros((K, M))
    if not unrel.any():
        return pic_block(y, h, bhat, sigma_n2)
    return _rs_generic(y, h, bhat, logp, unrel, L1, sigma_n2, max_enum_bits)


def _rs_generic(y, h, bhat, logp, unrel, L1, sigma_n2, max_enum_bits=MAX_ENUM_BITS):
    from ._rs_kernel import rs_detect
    soft = noiseless_received(bhat, h)
    ext = rs_detect(np.ascontiguousarray(y), np.ascontiguousarray(soft), np.ascontiguousarray(h),
                    np.ascontiguousarray(bhat), np.ascontiguousarray(logp),
                    np.ascontiguousarray(unrel), int(L1), 0.5 / sigma_n2, int(max_enum_bits))
    return _finite(ext, "reduced-state")


# --------------------------------------------------------------------------
# turbo loop

@dataclass
class ReceivedBlock:
    """One transmitted block as seen by the receiver, plus the truth for counting."""

    y: np.ndarray                  # (M, N)
    h: np.ndarray                  # (K, M, L, N)
    sigma_n2: float
    interleavers: list             # per-user fec.Interleaver
    info_bits: np.ndarray          # (K, M_info)
    symbols: np.ndarray | None = None   # (K, M) transmitted, channel order


@dataclass
class IterationResult:
    iteration: int
    errors: int
    bits: int
    detector_llr: np.ndarray       # extrinsic, channel order
    soft_feedback: np.ndarray      # b-hat used by the detector in this iteration
    unreliable: int                # size of the unreliable set
    decoder_llr: np.ndarray = field(repr=False, default=None)   # coded extrinsic, channel order

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")


def _detect(kind, block, la, kappa, L1, partition_mode):
    K, M = la.shape
    bhat = np.tanh(0.5 * la)
    if kind == "map":
        return map_eq_mud_block(block.y, block.h, la, block.sigma_n2), bhat, 0
    if kind == "pic":
        return pic_block(block.y, block.h, bhat, block.sigma_n2), bhat, 0
    if kind == "rs":
        part = build_partition(bhat, kappa, mode=partition_mode, symbols=block.symbols)
        ext = rs_eq_mud_block(block.y, block.h, la, part, L1, block.sigma_n2)
        return ext, bhat, part.size
    raise ValueError(f"unknown detector {kind!r}")


def turbo_iterate(config, received: ReceivedBlock, n_iters: int, *, detector: str = "rs",
                  kappa: float = 0.1, L1: int | None = None,
                  partition_mode: str = "confidence") -> list[IterationResult]:
    """Iterate detector and per-user decoders, exchanging extrinsic LLRs only.

    The first iteration uses uniform priors.  BER counts data bits only.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    K, M = config.K, config.M
    L1 = config.L if L1 is None else L1
    la = np.zeros((K, M))
    out = []
    for it in range(1, n_iters + 1):
        ext, bhat, n_unrel = _detect(detector, received, la, kappa, L1, partition_mode)
        ext = np.clip(ext, -LLR_CLAMP, LLR_CLAMP)
        lc = np.stack([received.interleavers[k].deinterleave(ext[k]) for k in range(K)])
        res = fec.bcjr_decode(lc)
        dec = (res.info_llr < 0).astype(np.int8)
        errors = int(np.count_nonzero(dec != received.info_bits))
        ext_dec = np.clip(res.extrinsic_llr, -LLR_CLAMP, LLR_CLAMP)
        la = np.stack([received.interleavers[k].interleave(ext_dec[k]) for k in range(K)])
        out.append(IterationResult(it, errors, int(received.info_bits.size), ext, bhat,
                                   n_unrel, la))
    return out
