"""
Rate-1/3 convolutional code (23, 33, 37)_8, interleaving and BCJR decoding.

LLR convention: ``llr = log P(bit = 0) / P(bit = 1) = log P(+1) / P(-1)``
with the fixed bit-to-symbol map 0 -> +1, 1 -> -1.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "GENERATORS",
    "MEMORY",
    "N_STATES",
    "RATE_INV",
    "coded_length",
    "info_length",
    "conv_encode",
    "bits_to_symbols",
    "Interleaver",
    "BcjrResult",
    "bcjr_decode",
    "bcjr_decode_numpy",
    "soft_feedback",
    "llr_to_soft",
]

GENERATORS = (0o23, 0o33, 0o37)
MEMORY = 4
N_STATES = 1 << MEMORY
RATE_INV = len(GENERATORS)


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _build_trellis():
    # register = (u_t << MEMORY) | state, state holds u_{t-1} .. u_{t-4} msb first;
    # generator msb taps the current input
    next_state = np.zeros((N_STATES, 2), dtype=np.intp)
    out_bits = np.zeros((N_STATES, 2, RATE_INV), dtype=np.int8)
    for s in range(N_STATES):
        for u in range(2):
            reg = (u << MEMORY) | s
            next_state[s, u] = reg >> 1
            for j, g in enumerate(GENERATORS):
                out_bits[s, u, j] = _parity(reg & g)
    # every state has two predecessors, both reached with input u = ns >> (MEMORY-1)
    prev_state = np.zeros((N_STATES, 2), dtype=np.intp)
    for ns in range(N_STATES):
        low = (ns & ((1 << (MEMORY - 1)) - 1)) << 1
        prev_state[ns] = (low, low | 1)
    prev_input = np.arange(N_STATES) >> (MEMORY - 1)
    return next_state, out_bits, prev_state, prev_input


NEXT_STATE, OUT_BITS, PREV_STATE, PREV_INPUT = _build_trellis()
_OUT_SIGN = 1.0 - 2.0 * OUT_BITS          # (S, 2, 3)
_IN_SIGN = np.array([1.0, -1.0])


def coded_length(m_info: int) -> int:
    """Coded bits of a terminated codeword carrying ``m_info`` info bits."""
    return RATE_INV * (m_info + MEMORY)


def info_length(m_coded: int) -> int:
    if m_coded % RATE_INV or m_coded // RATE_INV <= MEMORY:
        raise ValueError(f"{m_coded} coded bits is not a valid terminated block length")
    return m_coded // RATE_INV - MEMORY


def conv_encode(info_bits: np.ndarray) -> np.ndarray:
    """Terminated feedforward encoding along the last axis.

    Output triples are interleaved per time step, ``(c1, c2, c3)`` at each
    trellis step, tail steps included.
    """
    u = np.asarray(info_bits, dtype=np.int8)
    if u.size and ((u != 0) & (u != 1)).any():
        raise ValueError("info bits must be 0 or 1")
    lead, T0 = u.shape[:-1], u.shape[-1]
    u = np.concatenate([u, np.zeros(lead + (MEMORY,), dtype=np.int8)], axis=-1)
    T = T0 + MEMORY
    padded = np.concatenate([np.zeros(lead + (MEMORY,), dtype=np.int8), u], axis=-1)
    out = np.zeros(lead + (T, RATE_INV), dtype=np.int8)
    for j, g in enumerate(GENERATORS):
        acc = np.zeros(lead + (T,), dtype=np.int8)
        for d in range(MEMORY + 1):
            if (g >> (MEMORY - d)) & 1:
                acc ^= padded[..., MEMORY - d: MEMORY - d + T]
        out[..., j] = acc
    return out.reshape(lead + (T * RATE_INV,))


def bits_to_symbols(bits: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


class Interleaver:
    """Seeded uniform permutation; ``identity=True`` gives a pass-through."""

    def __init__(self, length: int, rng: np.random.Generator | int | None = None,
                 identity: bool = False):
        self.length = int(length)
        if identity:
            self.perm = np.arange(self.length)
        else:
            rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
            self.perm = rng.permutation(self.length)
        self.inv = np.empty_like(self.perm)
        self.inv[self.perm] = np.arange(self.length)

    def _check(self, seq):
        if np.shape(seq)[-1] != self.length:
            raise ValueError(f"expected length {self.length}, got {np.shape(seq)[-1]}")

    def interleave(self, seq: np.ndarray) -> np.ndarray:
        self._check(seq)
        return np.asarray(seq)[..., self.perm]

    def deinterleave(self, seq: np.ndarray) -> np.ndarray:
        self._check(seq)
        return np.asarray(seq)[..., self.inv]


class BcjrResult(NamedTuple):
    info_llr: np.ndarray        # a posteriori, data bits only (tail excluded)
    coded_llr: np.ndarray       # a posteriori, every coded bit
    extrinsic_llr: np.ndarray   # coded_llr minus each bit's own channel LLR


def _lse2(a, b):
    return np.logaddexp(a, b)


def _prepare(channel_llrs, a_priori_llrs):
    lc = np.asarray(channel_llrs, dtype=float)
    if not np.all(np.isfinite(lc)):
        raise ValueError("channel LLRs must be finite")
    lead = lc.shape[:-1]
    m_info = info_length(lc.shape[-1])
    T = m_info + MEMORY
    lc = lc.reshape((-1, T, RATE_INV))
    la = np.zeros((lc.shape[0], T))
    if a_priori_llrs is not None:
        la_in = np.asarray(a_priori_llrs, dtype=float)
        if not np.all(np.isfinite(la_in)):
            raise ValueError("a priori LLRs must be finite")
        la[:, :m_info] = la_in.reshape((lc.shape[0], m_info))
    return lc, la, lead, m_info, T


def bcjr_decode(channel_llrs: np.ndarray, a_priori_llrs: np.ndarray | None = None) -> BcjrResult:
    """Exact log-domain forward-backward decoding of terminated codewords.

    ``channel_llrs`` has shape (..., 3 * (m_info + 4)); ``a_priori_llrs``
    (optional) has shape (..., m_info) and applies to the data bits.
    """
    from ._bcjr_kernel import bcjr_batch
    lc, la, lead, m_info, T = _prepare(channel_llrs, a_priori_llrs)
    info, coded = bcjr_batch(np.ascontiguousarray(lc), la, m_info, NEXT_STATE, _OUT_SIGN)
    coded = coded.reshape(lc.shape[0], T * RATE_INV)
    extrinsic = coded - lc.reshape(lc.shape[0], T * RATE_INV)
    return BcjrResult(
        info[:, :m_info].reshape(lead + (m_info,)),
        coded.reshape(lead + (T * RATE_INV,)),
        extrinsic.reshape(lead + (T * RATE_INV,)),
    )


def bcjr_decode_numpy(channel_llrs: np.ndarray, a_priori_llrs: np.ndarray | None = None) -> BcjrResult:
    """Vectorised numpy formulation of :func:`bcjr_decode` (independent route)."""
    lc = np.asarray(channel_llrs, dtype=float)
    if not np.all(np.isfinite(lc)):
        raise ValueError("channel LLRs must be finite")
    lead = lc.shape[:-1]
    m_info = info_length(lc.shape[-1])
    T = m_info + MEMORY
    lc = lc.reshape((-1, T, RATE_INV))
    B = lc.shape[0]
    la = np.zeros((B, T))
    if a_priori_llrs is not None:
        la_in = np.asarray(a_priori_llrs, dtype=float)
        if not np.all(np.isfinite(la_in)):
            raise ValueError("a priori LLRs must be finite")
        la[:, :m_info] = la_in.reshape((B, m_info))

    # branch metrics, (B, T, S, 2)
    gam = 0.5 * np.einsum("btj,suj->btsu", lc, _OUT_SIGN)
    gam += 0.5 * la[:, :, None, None] * _IN_SIGN
    gam[:, m_info:, :, 1] = -np.inf          # tail forces zero inputs

    alpha = np.full((B, T + 1, N_STATES), -np.inf)
    alpha[:, 0, 0] = 0.0
    p0, p1 = PREV_STATE[:, 0], PREV_STATE[:, 1]
    for t in range(T):
        a = alpha[:, t]
        g = gam[:, t]
        nxt = _lse2(a[:, p0] + g[:, p0, PREV_INPUT], a[:, p1] + g[:, p1, PREV_INPUT])
        alpha[:, t + 1] = nxt - nxt.max(axis=1, keepdims=True)

    beta = np.full((B, T + 1, N_STATES), -np.inf)
    beta[:, T, 0] = 0.0
    n0, n1 = NEXT_STATE[:, 0], NEXT_STATE[:, 1]
    for t in range(T - 1, -1, -1):
        b = beta[:, t + 1]
        g = gam[:, t]
        cur = _lse2(g[:, :, 0] + b[:, n0], g[:, :, 1] + b[:, n1])
        beta[:, t] = cur - cur.max(axis=1, keepdims=True)

    # joint transition log-probabilities, (B, T, S, 2)
    lam = alpha[:, :T, :, None] + gam + beta[:, 1:, :][:, :, NEXT_STATE]
    info = np.logaddexp.reduce(lam[:, :, :, 0], axis=2) - np.logaddexp.reduce(lam[:, :, :, 1], axis=2)

    flat = lam.reshape(B, T, 2 * N_STATES)
    coded = np.empty((B, T, RATE_INV))
    for j in range(RATE_INV):
        zero = (OUT_BITS[:, :, j] == 0).reshape(-1)
        coded[:, :, j] = (np.logaddexp.reduce(flat[:, :, zero], axis=2)
                          - np.logaddexp.reduce(flat[:, :, ~zero], axis=2))
    coded = coded.reshape(B, T * RATE_INV)
    extrinsic = coded - lc.reshape(B, T * RATE_INV)
    return BcjrResult(
        info[:, :m_info].reshape(lead + (m_info,)),
        coded.reshape(lead + (T * RATE_INV,)),
        extrinsic.reshape(lead + (T * RATE_INV,)),
    )


def soft_feedback(zeta_plus: np.ndarray) -> np.ndarray:
    """Soft symbol ``2 * zeta(+1) - 1`` from extrinsic probabilities."""
    z = np.asarray(zeta_plus, dtype=float)
    if np.any((z < 0) | (z > 1)) or np.any(np.isnan(z)):
        raise ValueError("extrinsic probabilities must lie in [0, 1]")
    return 2.0 * z - 1.0


def llr_to_soft(llr: np.ndarray) -> np.ndarray:
    """Soft symbol from an extrinsic LLR, ``tanh(llr / 2)``."""
    return np.tanh(0.5 * np.asarray(llr, dtype=float))
