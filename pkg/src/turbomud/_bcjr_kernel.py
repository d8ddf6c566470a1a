"""Compiled log-domain BCJR over a batch of terminated codewords."""
import math

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def _lae(a, b):
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def bcjr_batch(lc, la, m_info, next_state, out_sign):
    """``lc``: (B, T, R) channel LLRs, ``la``: (B, T) input priors.

    Returns info posteriors (B, T) and coded posteriors (B, T, R).
    """
    B, T, R = lc.shape
    S = next_state.shape[0]
    info = np.empty((B, T))
    coded = np.empty((B, T, R))
    gam = np.empty((T, S, 2))
    alpha = np.empty((T + 1, S))
    beta = np.empty((T + 1, S))
    acc0 = np.empty(R)
    acc1 = np.empty(R)
    for b in range(B):
        for t in range(T):
            for s in range(S):
                for u in range(2):
                    if t >= m_info and u == 1:
                        gam[t, s, u] = NEG_INF
                        continue
                    g = 0.5 * la[b, t] * (1.0 - 2.0 * u)
                    for j in range(R):
                        g += 0.5 * lc[b, t, j] * out_sign[s, u, j]
                    gam[t, s, u] = g
        alpha[0, :] = NEG_INF
        alpha[0, 0] = 0.0
        for t in range(T):
            alpha[t + 1, :] = NEG_INF
            for s in range(S):
                a = alpha[t, s]
                if a == NEG_INF:
                    continue
                for u in range(2):
                    ns = next_state[s, u]
                    alpha[t + 1, ns] = _lae(alpha[t + 1, ns], a + gam[t, s, u])
            mx = alpha[t + 1, 0]
            for s in range(1, S):
                mx = max(mx, alpha[t + 1, s])
            for s in range(S):
                alpha[t + 1, s] -= mx
        beta[T, :] = NEG_INF
        beta[T, 0] = 0.0
        for t in range(T - 1, -1, -1):
            mx = NEG_INF
            for s in range(S):
                v = _lae(gam[t, s, 0] + beta[t + 1, next_state[s, 0]],
                         gam[t, s, 1] + beta[t + 1, next_state[s, 1]])
                beta[t, s] = v
                mx = max(mx, v)
            for s in range(S):
                beta[t, s] -= mx
        for t in range(T):
            p0 = NEG_INF
            p1 = NEG_INF
            for j in range(R):
                acc0[j] = NEG_INF
                acc1[j] = NEG_INF
            for s in range(S):
                for u in range(2):
                    v = alpha[t, s] + gam[t, s, u] + beta[t + 1, next_state[s, u]]
                    if v == NEG_INF:
                        continue
                    if u == 0:
                        p0 = _lae(p0, v)
                    else:
                        p1 = _lae(p1, v)
                    for j in range(R):
                        if out_sign[s, u, j] > 0:
                            acc0[j] = _lae(acc0[j], v)
                        else:
                            acc1[j] = _lae(acc1[j], v)
            info[b, t] = p0 - p1
            for j in range(R):
                coded[b, t, j] = acc0[j] - acc1[j]
    return info, coded
