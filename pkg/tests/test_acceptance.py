"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the terminal
summary lists every criterion outcome.
"""
import itertools
import math
import time
import warnings

import numpy as np
import pytest
from scipy.special import logsumexp

from turbomud import fec, mud, reliability, sysmodel
from turbomud.harness import parse_results, run_preset
from turbomud.lsa import (FeedbackDistribution, VirtualChannelParams, closed_form_moments,
                          combine_efficiency, pic_efficiency, solve_efficiency)


# --------------------------------------------------------------------------
# 1. exact detection against exhaustive enumeration

def _enumerated_extrinsic(y, h, prior, sigma_n2):
    K, M = prior.shape
    seqs = np.array(list(itertools.product((1.0, -1.0), repeat=K * M))).reshape(-1, K, M)
    score = np.empty(len(seqs))
    for n, b in enumerate(seqs):
        r = y - sysmodel.noiseless_received(b, h)
        score[n] = -np.sum(np.abs(r) ** 2) / (2 * sigma_n2) + 0.5 * np.sum(b * prior)
    post = np.empty((K, M))
    for k in range(K):
        for t in range(M):
            plus = seqs[:, k, t] > 0
            post[k, t] = logsumexp(score[plus]) - logsumexp(score[~plus])
    return post - prior


def test_criterion_1_map_matches_enumeration(criterion):
    cfg = sysmodel.SystemConfig(K=2, N=4, M=4, L=2, lam=1.0)
    rng = np.random.default_rng(101)
    worst, spent = 0.0, 0.0
    for _ in range(20):
        s2 = rng.uniform(0.1, 1.0)
        h = sysmodel.equivalent_codes(sysmodel.gen_spreading_codes(cfg, rng),
                                      sysmodel.gen_channels(cfg, rng))
        b = 1.0 - 2.0 * rng.integers(0, 2, (2, 4))
        y = sysmodel.synthesize_received(b, h, s2, rng)
        prior = rng.normal(0, 1.5, (2, 4))
        t0 = time.perf_counter()
        got = mud.map_eq_mud_block(y, h, prior, s2)
        spent += time.perf_counter() - t0
        worst = max(worst, float(np.max(np.abs(got - _enumerated_extrinsic(y, h, prior, s2)))))
    criterion(1, worst < 1e-6 and spent < 5.0,
              f"max |LLR diff| = {worst:.2e} (< 1e-6), MAP time {spent:.2f} s (< 5 s)")


# --------------------------------------------------------------------------
# 2. BCJR against codeword enumeration

def _codeword_marginals(lc, la):
    m = fec.info_length(lc.size)
    infos = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.int8)
    words = fec.conv_encode(infos)
    score = 0.5 * (1 - 2.0 * words) @ lc + 0.5 * (1 - 2.0 * infos) @ la
    info = [logsumexp(score[infos[:, j] == 0]) - logsumexp(score[infos[:, j] == 1]) for j in range(m)]
    coded = [logsumexp(score[words[:, j] == 0]) - logsumexp(score[words[:, j] == 1])
             for j in range(lc.size)]
    return np.array(info), np.array(coded)


def test_criterion_2_bcjr_matches_codeword_enumeration(criterion):
    rng = np.random.default_rng(202)
    worst = 0.0
    for d in range(50):
        m = 1 + d % 8
        u = rng.integers(0, 2, m)
        snr = rng.uniform(0.2, 3.0)
        a = math.sqrt(snr)
        y = a * fec.bits_to_symbols(fec.conv_encode(u)) + rng.standard_normal(fec.coded_length(m))
        lc = 2 * a * y
        la = rng.normal(0, 1.0, m) if d % 2 else np.zeros(m)
        res = fec.bcjr_decode(lc, la)
        info, coded = _codeword_marginals(lc, la)
        worst = max(worst, float(np.max(np.abs(res.info_llr - info))),
                    float(np.max(np.abs(res.coded_llr - coded))))
    criterion(2, worst < 1e-9, f"max |LLR diff| = {worst:.2e} over 50 draws (< 1e-9)")


# --------------------------------------------------------------------------
# 3. degeneracy identities

def test_criterion_3_degeneracies(criterion):
    rng = np.random.default_rng(303)
    exact = True
    for _ in range(10):
        cfg = sysmodel.SystemConfig(K=4, N=8, M=12, L=2)
        h = sysmodel.equivalent_codes(sysmodel.gen_spreading_codes(cfg, rng),
                                      sysmodel.gen_channels(cfg, rng))
        y = sysmodel.synthesize_received(1.0 - 2.0 * rng.integers(0, 2, (4, 12)), h, 0.4, rng)
        prior = rng.normal(0, 2, (4, 12))
        rs = mud.rs_eq_mud_block(y, h, prior, np.zeros((4, 12), bool), 2, 0.4)
        pic = mud.pic_block(y, h, np.tanh(0.5 * prior), 0.4)
        exact &= bool(np.array_equal(rs, pic))
    worst_map = 0.0
    for L in (1, 2, 3):
        for _ in range(4):
            cfg = sysmodel.SystemConfig(K=1, N=8, M=10, L=L, lam=2.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                h = sysmodel.equivalent_codes(sysmodel.gen_spreading_codes(cfg, rng),
                                              sysmodel.gen_channels(cfg, rng))
            y = sysmodel.synthesize_received(1.0 - 2.0 * rng.integers(0, 2, (1, 10)), h, 0.3, rng)
            prior = rng.normal(0, 1.5, (1, 10))
            rs = mud.rs_eq_mud_block(y, h, prior, np.ones((1, 10), bool), L, 0.3)
            worst_map = max(worst_map, float(np.max(np.abs(rs - mud.map_eq_mud_block(y, h, prior, 0.3)))))
    worst_eta = 0.0
    for lam, beta, s2, e in [(1.0, 1.0, 0.1, 1.0), (4.0, 1.1, 0.6, 0.2), (0.5, 0.4, 1.3, 0.05)]:
        p = VirtualChannelParams(lam, beta, 0.0, s2, e)
        worst_eta = max(worst_eta, abs(combine_efficiency(solve_efficiency(p, 0.4), p) - pic_efficiency(p)))
    ok = exact and worst_map < 1e-9 and worst_eta < 1e-12
    criterion(3, ok, f"RS(kappa=0) == PIC bit-exact: {exact}; RS(K=1,kappa=1) vs MAP "
                     f"{worst_map:.1e} (< 1e-9); combined kappa=0 efficiency vs PIC {worst_eta:.1e} (< 1e-12)")


# --------------------------------------------------------------------------
# 4. moment bridge

def test_criterion_4_moment_bridge(criterion):
    N, n, batch = 64, 100_000, 500
    rng = np.random.default_rng(404)
    worst_z = 0.0
    for lam in (0.5, 1.0, 2.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            cfg = sysmodel.SystemConfig(K=2 * batch, N=N, M=2, L=2, lam=lam)
        sums = {key: [0.0, 0.0] for key in [(0, 0), (0, 1), (1, 1)]}
        for _ in range(n // batch):
            codes = sysmodel.gen_spreading_codes(cfg, rng)[:, 0]
            h = sysmodel.equivalent_code(codes, sysmodel.gen_channels(cfg, rng))   # (2B, L, N)
            a, b = h[0::2], h[1::2]
            for (i, j) in sums:
                v = N * np.abs(np.einsum("bn,bn->b", a[:, i].conj(), b[:, j])) ** 2
                sums[(i, j)][0] += v.sum()
                sums[(i, j)][1] += (v ** 2).sum()
        _, C = closed_form_moments(lam)
        for key, (s1, s2) in sums.items():
            mean = s1 / n
            se = math.sqrt((s2 / n - mean ** 2) / (n - 1))
            z = abs(mean - C[key]) / se
            worst_z = max(worst_z, z)
    worst_q = max(abs(sum(closed_form_moments(l)[0].values())
                      - (1 - (1 - math.exp(-l)) * math.exp(-l) / l)) for l in (0.5, 1.0, 2.0, 4.0))
    criterion(4, worst_z < 3 and worst_q < 1e-12,
              f"worst deviation {worst_z:.2f} standard errors (< 3); Q identity {worst_q:.1e}")


# --------------------------------------------------------------------------
# 5. order statistics of the unreliable set

def test_criterion_5_order_statistics(criterion):
    n, kappa = 100_000, 0.3
    # |bhat| ~ U(0, 1) with random signs
    x = np.random.default_rng(505).uniform(-1, 1, n)
    part = reliability.build_partition(x[None, :], kappa)
    thr = part.threshold
    mags = np.abs(x)[part.unreliable[0]]
    violate = float(np.mean(mags >= kappa))
    ok = abs(thr - kappa) < 0.01 and violate <= 0.01 and part.size == round(kappa * n)
    criterion(5, ok, f"threshold {thr:.4f} vs F^-1(kappa)=0.3 (within 0.01); "
                     f"{100 * violate:.2f}% beyond the bound (<= 1%)")


# --------------------------------------------------------------------------
# 6. fixed-point limits

def test_criterion_6_fixed_point_limits(criterion):
    cases = [
        (VirtualChannelParams(4.0, 0.0, 0.5, 0.4, 0.5), 0.3),
        (VirtualChannelParams(4.0, 1.2, 0.0, 0.4, 0.5), 0.3),
        (VirtualChannelParams(4.0, 1.2, 0.8, 0.4, 0.5),
         FeedbackDistribution(np.array([1.0, -1.0]), np.array([0.3, 0.7]))),
    ]
    worst_lim = max(float(np.max(np.abs(solve_efficiency(p, d).eta_i - 1.0))) for p, d in cases)
    worst_ref = 0.0
    for p, d in [(VirtualChannelParams(4.0, 1.1, 0.5, 0.6, 0.2), 0.4),
                 (VirtualChannelParams(1.0, 1.5, 1.0, 0.3, 1.0), 0.0),
                 (VirtualChannelParams(2.0, 0.9, 0.3, 0.05, 0.1), 0.9)]:
        base = solve_efficiency(p, d, n_nodes=64).eta_i
        for nn in (96, 128, 200):
            worst_ref = max(worst_ref, float(np.max(np.abs(solve_efficiency(p, d, n_nodes=nn).eta_i - base))))
    criterion(6, worst_lim < 1e-10 and worst_ref < 1e-6,
              f"limits |eta_i - 1| = {worst_lim:.1e} (< 1e-10); refinement change {worst_ref:.1e} (< 1e-6)")


# --------------------------------------------------------------------------
# 7. BER versus Eb/N0 across iterations, K = N = 16

@pytest.mark.slow
def test_criterion_7_iteration_trend(criterion, tmp_path):
    t0 = time.time()
    csv_path, _ = run_preset("fig4", 1.0, tmp_path, seed=1)
    rows = parse_results(csv_path)
    grid = sorted({r["ebno_db"] for r in rows})
    curves = {e: sorted((r for r in rows if r["ebno_db"] == e), key=lambda r: r["iteration"])
              for e in grid}
    bits_ok = all(c[0]["bits"] >= 10**6 for c in curves.values())
    monotone = True
    for e, c in curves.items():
        if e >= 4.0:
            errs = [r["errors"] for r in c]
            monotone &= all(b <= a + 2 * math.sqrt(a) + 1 for a, b in zip(errs, errs[1:]))
    diverging = [e for e, c in curves.items() if c[-1]["errors"] >= 0.5 * c[0]["errors"]]
    if diverging and max(diverging) < grid[-1]:
        top = max(diverging)
        threshold = 0.5 * (top + grid[grid.index(top) + 1])
    else:
        threshold = math.nan
    summary = ", ".join(f"{e:g} dB {c[0]['ber']:.1e}->{c[-1]['ber']:.1e}" for e, c in curves.items())
    ok = bits_ok and monotone and 1.0 <= threshold <= 4.0
    criterion(7, ok, f"threshold {threshold:.2f} dB (in [1, 4]); monotone >= 4 dB: {monotone}; "
                     f">= 1e6 bits: {bits_ok}; {time.time() - t0:.0f} s; {summary}")


# --------------------------------------------------------------------------
# 8. analysis against finite-system simulation at 4 dB

@pytest.mark.slow
def test_criterion_8_analysis_matches_simulation(criterion, tmp_path):
    csv_path, _ = run_preset("fig5", 1.0, tmp_path, seed=1)
    rows = parse_results(csv_path)
    last = max(r["iteration"] for r in rows)
    sim = {r["K"] / r["N"]: r["ber"] for r in rows if r["source"] == "sim" and r["iteration"] == last}
    ana = {round(r["beta"], 6): (r["ber_finite"], r["ber"]) for r in rows
           if r["source"] == "lsa" and r["iteration"] == last}
    ratios, parts = [], []
    for beta in (0.8, 0.9, 1.0):
        fin, pure = ana[beta]
        ratio = max(fin, sim[beta]) / min(fin, sim[beta])
        ratios.append(ratio)
        parts.append(f"beta {beta}: sim {sim[beta]:.2e} lsa {fin:.2e} (asymptotic {pure:.2e})")
    ok = max(ratios) <= 2.0
    criterion(8, ok, f"worst ratio {max(ratios):.2f} (<= 2); " + "; ".join(parts))


# --------------------------------------------------------------------------
# 9. search-width waterfall at beta = 1.1, 4 dB

@pytest.mark.slow
def test_criterion_9_kappa_waterfall(criterion, tmp_path):
    csv_path, _ = run_preset("fig7", 1.0, tmp_path, pairs=((1.1, 4.0),))
    rows = parse_results(csv_path)
    last = max(r["iteration"] for r in rows)
    fin = sorted((r for r in rows if r["iteration"] == last), key=lambda r: r["kappa"])
    kap = np.array([r["kappa"] for r in fin])
    ber = np.array([max(r["ber"], 1e-300) for r in fin])
    eta = np.array([r["eta"] for r in fin])
    at = lambda k: ber[np.argmin(np.abs(kap - k))]
    drop = at(0.35) / at(0.65)
    steps = -np.diff(np.log10(ber))
    where = 0.5 * (kap[np.argmax(steps)] + kap[np.argmax(steps) + 1])
    post = eta[kap > where]
    ok = drop >= 100 and 0.35 <= where <= 0.65 and post.size > 0 and bool(np.all(post > 0.9))
    criterion(9, ok, f"BER(0.35)/BER(0.65) = {drop:.3g} (>= 100); steepest drop at kappa={where:.3f} "
                     f"(0.5 +- 0.15); eta after it {post.min() if post.size else float('nan'):.3f} (> 0.9); "
                     f"BER range {ber.min():.2e}..{ber.max():.2e}")


# --------------------------------------------------------------------------
# 10. determinism across worker counts

def test_criterion_10_determinism(criterion, tmp_path):
    kw = dict(seed=12, n_iters=3, K_values=(6,), N=8, ebno_db=(1.0, 3.0), kappas=(0.2,),
              min_errors=40, batch_size=2)
    a = run_preset("custom", 0.01, tmp_path / "w1", workers=1, **kw)[0].read_bytes()
    b = run_preset("custom", 0.01, tmp_path / "w3", workers=3, **kw)[0].read_bytes()
    c = run_preset("custom", 0.01, tmp_path / "again", workers=1, **kw)[0].read_bytes()
    criterion(10, a == b == c and len(a) > 200,
              f"CSV bodies identical for 1 vs 3 workers and on rerun ({len(a)} bytes)")
