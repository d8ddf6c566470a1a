"""
Compiled forward-backward recursions of the reduced-state detector.

Each user k keeps a sub-trellis whose state at period t holds its own
unreliable symbols in ``[t-L1+1, t-1]`` plus ``b_k(t)`` (labels: bit j is the
j-th symbol in increasing time, bit set means -1).  At every period the
unreliable symbols of all users inside the window are enumerated jointly;
every other symbol in the channel memory is cancelled with its soft feedback,
except the user's own hypothesised symbols, which enter the metric through a
rank-one correction of the shared residual.

All tables are log-domain and normalised per (user, period).
"""
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
def _normalize(tab, n):
    acc = NEG_INF
    for s in range(n):
        acc = _lae(acc, tab[s])
    for s in range(n):
        tab[s] -= acc


@njit(cache=True)
def _accumulate(tab, n, vals, labs, nv, lin):
    """``tab[l] = log sum exp(vals[labs == l])``, shifted per label."""
    for l in range(n):
        tab[l] = NEG_INF
        lin[l] = 0.0
    for q in range(nv):
        if vals[q] > tab[labs[q]]:
            tab[labs[q]] = vals[q]
    for q in range(nv):
        lin[labs[q]] += math.exp(vals[q] - tab[labs[q]])
    for l in range(n):
        if lin[l] > 0.0:
            tab[l] += math.log(lin[l])


@njit(cache=True)
def _re_inner(a, b):
    # Re(a^H b)
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i].real * b[i].real + a[i].imag * b[i].imag
    return acc


@njit(cache=True)
def _window(unrel, t, L1, Rn, Ri, offR, cntR, curU):
    """Unreliable symbols in [t-L1+1, t], grouped by user, increasing time."""
    K = unrel.shape[0]
    r = 0
    lo = max(0, t - L1 + 1)
    for n in range(K):
        offR[n] = r
        for i in range(lo, t + 1):
            if unrel[n, i]:
                Rn[r] = n
                Ri[r] = i
                r += 1
        cntR[n] = r - offR[n]
        curU[n] = unrel[n, t]
    return r


@njit(cache=True)
def _configurations(y, soft, h, bhat, tau, Rn, Ri, r, rcs, e):
    """Residual of period ``tau`` for every sign configuration of the window.

    The base residual cancels everything with soft feedback and adds back the
    window's unreliable symbols; configuration bit j set means -1 for the
    j-th window symbol.
    """
    N = y.shape[1]
    nc = 1 << r
    for q in range(N):
        v = y[tau, q] - soft[tau, q]
        for j in range(r):
            v += bhat[Rn[j], Ri[j]] * h[Rn[j], Ri[j], tau - Ri[j], q]
        rcs[0, q] = v
        for j in range(r):
            rcs[0, q] -= h[Rn[j], Ri[j], tau - Ri[j], q]
    # flip one symbol at a time: configuration c differs from c - lowbit(c)
    for c in range(1, nc):
        j = 0
        while not (c >> j) & 1:
            j += 1
        base = c ^ (1 << j)
        n, i = Rn[j], Ri[j]
        for q in range(N):
            rcs[c, q] = rcs[base, q] + 2.0 * h[n, i, tau - i, q]
    for c in range(nc):
        acc = 0.0
        for q in range(N):
            acc += rcs[c, q].real * rcs[c, q].real + rcs[c, q].imag * rcs[c, q].imag
        e[c] = acc


@njit(cache=True)
def rs_detect(y, soft, h, bhat, logp, unrel, L1, inv2s2, max_enum):
    K, M, L, N = h.shape
    S = 1 << L1
    alpha = np.full((K, M, S), NEG_INF)
    beta = np.full((K, M, S), NEG_INF)
    sub_len = np.zeros((K, M), np.int64)
    sub_times = np.zeros((K, M, L1), np.int64)

    cap = K * L1
    Rn = np.zeros(cap, np.int64)
    Ri = np.zeros(cap, np.int64)
    offR = np.zeros(K, np.int64)
    cntR = np.zeros(K, np.int64)
    curU = np.zeros(K, np.bool_)
    marg = np.full((K, S), NEG_INF)
    pos = np.zeros(L1, np.int64)
    lin = np.zeros(S)

    # ---------------- forward ----------------
    for t in range(M):
        r = _window(unrel, t, L1, Rn, Ri, offR, cntR, curU)
        if r > max_enum:
            raise ValueError("unreliable window exceeds the enumeration guard")
        nc = 1 << r
        marg[:, :] = NEG_INF
        for n in range(K):
            cC = cntR[n] - (1 if curU[n] else 0)
            if t == 0:
                marg[n, 0] = 0.0
                continue
            ls = sub_len[n, t - 1]
            # carried symbols sit inside the previous sub-state
            for j in range(cC):
                tm = Ri[offR[n] + j]
                for q in range(ls):
                    if sub_times[n, t - 1, q] == tm:
                        pos[j] = q
            for s in range(1 << ls):
                lab = 0
                for j in range(cC):
                    lab |= ((s >> pos[j]) & 1) << j
                marg[n, lab] = _lae(marg[n, lab], alpha[n, t - 1, s])

        e = np.empty(nc)
        logw = np.empty(nc)
        g = np.zeros((nc, K))
        rcs = np.empty((nc, N), np.complex128)
        _configurations(y, soft, h, bhat, t, Rn, Ri, r, rcs, e)
        for c in range(nc):
            rc = rcs[c]
            w = 0.0
            for n in range(K):
                blk = (c >> offR[n]) & ((1 << cntR[n]) - 1)
                if curU[n]:
                    cC = cntR[n] - 1
                    w += marg[n, blk & ((1 << cC) - 1)] + logp[n, t, (blk >> cC) & 1]
                else:
                    w += marg[n, blk]
                    g[c, n] = _re_inner(h[n, t, 0], rc)
            logw[c] = w

        fv = np.empty(nc)
        for c in range(nc):
            fv[c] = logw[c] - e[c] * inv2s2
        vals = np.empty(2 * nc)
        labs = np.empty(2 * nc, np.int64)
        for k in range(K):
            tab = alpha[k, t]
            nv = 0
            if curU[k]:
                cC = cntR[k] - 1
                mask = (1 << cntR[k]) - 1
                for c in range(nc):
                    labs[nv] = (c >> offR[k]) & mask
                    vals[nv] = fv[c]
                    nv += 1
            else:
                cC = cntR[k]
                mask = (1 << cC) - 1
                hk = h[k, t, 0]
                h2 = _re_inner(hk, hk)
                bh = bhat[k, t]
                for c in range(nc):
                    labC = (c >> offR[k]) & mask
                    for bit in range(2):
                        d = (1.0 - 2.0 * bit) - bh
                        labs[nv] = labC | (bit << cC)
                        vals[nv] = fv[c] + logp[k, t, bit] + (2.0 * d * g[c, k] - d * d * h2) * inv2s2
                        nv += 1
            _accumulate(tab, 1 << (cC + 1), vals, labs, nv, lin)
            sub_len[k, t] = cC + 1
            for j in range(cC):
                sub_times[k, t, j] = Ri[offR[k] + j]
            sub_times[k, t, cC] = t
            _normalize(tab, 1 << (cC + 1))

    # ---------------- backward ----------------
    for k in range(K):
        ls = sub_len[k, M - 1]
        for s in range(1 << ls):
            acc = 0.0
            for j in range(ls):
                acc += logp[k, sub_times[k, M - 1, j], (s >> j) & 1]
            beta[k, M - 1, s] = acc
        _normalize(beta[k, M - 1], 1 << ls)

    ext_h = np.zeros((L1, N), np.complex128)
    ext_bh = np.zeros(L1)
    carried_pos = np.zeros(L1, np.int64)    # sub-state position -> carried index, -1 if not
    ext_pos = np.zeros(L1, np.int64)
    G = np.zeros((L1, L1))
    delta = np.zeros(L1)
    for t in range(M - 2, -1, -1):
        tp = t + 1
        r = _window(unrel, tp, L1, Rn, Ri, offR, cntR, curU)
        if r > max_enum:
            raise ValueError("unreliable window exceeds the enumeration guard")
        nc = 1 << r
        marg[:, :] = NEG_INF
        for n in range(K):
            if curU[n]:
                for s in range(1 << cntR[n]):
                    marg[n, s] = beta[n, tp, s]
            else:
                cC = cntR[n]
                for s in range(1 << cC):
                    marg[n, s] = _lae(beta[n, tp, s], beta[n, tp, s | (1 << cC)])

        e = np.empty(nc)
        tot = np.empty(nc)
        rcs = np.empty((nc, N), np.complex128)
        _configurations(y, soft, h, bhat, tp, Rn, Ri, r, rcs, e)
        gd = np.empty((L1, nc))
        bvals = np.empty(nc)
        for c in range(nc):
            w = 0.0
            for n in range(K):
                w += marg[n, (c >> offR[n]) & ((1 << cntR[n]) - 1)]
            tot[c] = w

        for k in range(K):
            ls = sub_len[k, t]
            cCk = cntR[k] - (1 if curU[k] else 0)
            maskC = (1 << cCk) - 1
            # classify own sub-state symbols against period tp
            nd = 0
            for q in range(ls):
                tm = sub_times[k, t, q]
                carried_pos[q] = -1
                if tm >= tp - L1 + 1 and unrel[k, tm]:
                    # carried symbols appear in increasing time inside user k's block
                    idx = 0
                    for j in range(cCk):
                        if Ri[offR[k] + j] == tm:
                            idx = j
                    carried_pos[q] = idx
                elif tm >= tp - L + 1:
                    ext_pos[nd] = q
                    ext_h[nd] = h[k, tm, tp - tm]
                    ext_bh[nd] = bhat[k, tm]
                    nd += 1
            for a in range(nd):
                for c in range(nc):
                    gd[a, c] = _re_inner(ext_h[a], rcs[c])
                for b in range(nd):
                    G[a, b] = _re_inner(ext_h[a], ext_h[b])
            tab = beta[k, t]
            for s in range(1 << ls):
                cC = 0
                dropped = 0.0
                for q in range(ls):
                    bit = (s >> q) & 1
                    if carried_pos[q] >= 0:
                        cC |= bit << carried_pos[q]
                    else:
                        dropped += logp[k, sub_times[k, t, q], bit]
                for a in range(nd):
                    bit = (s >> ext_pos[a]) & 1
                    delta[a] = (1.0 - 2.0 * bit) - ext_bh[a]
                quad = 0.0
                for a in range(nd):
                    for b in range(nd):
                        quad += delta[a] * delta[b] * G[a, b]
                nv = 0
                mx = NEG_INF
                for c in range(nc):
                    if ((c >> offR[k]) & maskC) != cC:
                        continue
                    met = e[c] + quad
                    for a in range(nd):
                        met -= 2.0 * delta[a] * gd[a, c]
                    v = tot[c] - met * inv2s2
                    bvals[nv] = v
                    nv += 1
                    if v > mx:
                        mx = v
                acc = 0.0
                for q in range(nv):
                    acc += math.exp(bvals[q] - mx)
                tab[s] = dropped + mx + math.log(acc)
            _normalize(tab, 1 << ls)

    # ---------------- extrinsic output ----------------
    ext = np.zeros((K, M))
    for k in range(K):
        for t in range(M):
            ls = sub_len[k, t]
            p0 = NEG_INF
            p1 = NEG_INF
            for s in range(1 << ls):
                v = alpha[k, t, s] + beta[k, t, s]
                for q in range(ls):
                    v -= logp[k, sub_times[k, t, q], (s >> q) & 1]
                if (s >> (ls - 1)) & 1:
                    p1 = _lae(p1, v)
                else:
                    p0 = _lae(p0, v)
            ext[k, t] = (p0 - p1) - (logp[k, t, 0] - logp[k, t, 1])
    return ext
