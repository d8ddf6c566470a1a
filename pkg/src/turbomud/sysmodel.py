"""
Chip-sampled signal model for coded DS-CDMA over dispersive fading.

Array conventions used throughout the package (0-based indices):

* symbols ``b``:           shape (K, M), entries +1 / -1
* spreading codes ``s``:   shape (K, M, N), long codes, fresh per symbol
* channel taps ``g``:      shape (K, L*N), complex, causal
* equivalent codes ``h``:  shape (K, M, L, N); ``h[k, i, j]`` is the part of
  symbol ``i`` of user ``k`` that lands in symbol period ``i + j``
* received block ``y``:    shape (M, N), complex

Noise is circularly-symmetric complex Gaussian with variance ``sigma_n2`` per
real dimension, so ``exp(-||y - yhat||^2 / (2 sigma_n2))`` is the exact
likelihood used by every detector and N0 = 2 sigma_n2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemConfig",
    "STREAMS",
    "block_streams",
    "tap_variances",
    "tap_variance",
    "gen_spreading_codes",
    "gen_channel",
    "gen_channels",
    "equivalent_code",
    "equivalent_codes",
    "synthesize_received",
    "noiseless_received",
    "cross_correlation",
    "expected_chip_power",
    "expected_moments",
]

TAP_PROFILES = ("cell", "literal")


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and channel parameters of one simulated system.

    ``lam`` is either a scalar decay factor shared by all users or one value
    per user.  ``tap_profile`` selects how the exponential power-delay profile
    is sampled at chip rate (see :func:`tap_variances`).
    """

    K: int
    N: int
    M: int
    L: int
    lam: float | tuple[float, ...] = 4.0
    sigma_n2: float = 1.0
    seed: int = 0
    tap_profile: str = "cell"
    lambdas: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.K < 1 or self.N < 1:
            raise ValueError("K and N must be >= 1")
        if self.L < 1 or self.M < self.L:
            raise ValueError("need M >= L >= 1")
        if self.sigma_n2 < 0:
            raise ValueError("sigma_n2 must be non-negative")
        if self.tap_profile not in TAP_PROFILES:
            raise ValueError(f"tap_profile must be one of {TAP_PROFILES}")
        lam = self.lam
        if np.ndim(lam) == 0:
            lams = (float(lam),) * self.K
        else:
            lams = tuple(float(x) for x in lam)
            if len(lams) != self.K:
                raise ValueError("need one decay factor per user")
        if min(lams) <= 0:
            raise ValueError("decay factors must be positive")
        object.__setattr__(self, "lambdas", lams)
        worst = max(math.exp(-x * self.L) for x in lams)
        if worst > 1e-3:
            warnings.warn(
                f"exp(-lambda*L) = {worst:.3g} > 1e-3: channel energy beyond "
                "the dispersion length is not negligible",
                stacklevel=3,
            )

    @property
    def beta(self) -> float:
        return self.K / self.N


# Stream ids for the named per-block RNG streams.  A block's stream is keyed by
# (master seed, block index, stream id) through SeedSequence spawn keys and
# drives a counter-based Philox generator, so every block can be regenerated
# independently of how blocks are scheduled.
STREAMS = {"info": 0, "codes": 1, "channels": 2, "noise": 3, "interleaver": 4}


def block_streams(seed: int, block: int, group: int = 0) -> dict[str, np.random.Generator]:
    """Independent generators for one simulation block.

    ``group`` separates grid points of a sweep that share a master seed.
    """
    out = {}
    for name, sid in STREAMS.items():
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(group, block, sid))
        out[name] = np.random.Generator(np.random.Philox(ss))
    return out


def tap_variances(lam: float, N: int, L: int, profile: str = "cell") -> np.ndarray:
    """Per-tap variances of the chip-spaced channel, length ``L*N``.

    ``literal`` samples the exponential power-delay profile directly,
    ``lam * exp(-lam * l / N) / N``.  ``cell`` integrates the profile over the
    chip-centred cell ``[(l - 1/2)/N, (l + 1/2)/N]`` (clipped at zero), which
    agrees with ``literal`` to O(lam^2/N^2) for ``l >= 1``, halves the first
    tap, and makes finite-N correlation moments match their large-N limits to
    O(1/N^2) instead of O(1/N).
    """
    l = np.arange(L * N, dtype=float)
    if profile == "literal":
        return lam * np.exp(-lam * l / N) / N
    if profile == "cell":
        var = np.exp(-lam * l / N) * (2.0 * math.sinh(lam / (2 * N)))
        var[0] = -math.expm1(-lam / (2 * N))
        return var
    raise ValueError(f"unknown tap profile {profile!r}")


def tap_variance(l: int, lam: float, N: int, profile: str = "cell") -> float:
    """Variance of tap ``l``; zero for ``l < 0`` (causal channel)."""
    if l < 0:
        return 0.0
    if profile == "literal":
        return lam * math.exp(-lam * l / N) / N
    if l == 0:
        return -math.expm1(-lam / (2 * N))
    return math.exp(-lam * l / N) * 2.0 * math.sinh(lam / (2 * N))


def gen_spreading_codes(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. equiprobable +-1/sqrt(N) chips, shape (K, M, N)."""
    K, M, N = config.K, config.M, config.N
    bits = rng.integers(0, 2, size=(K, M, N), dtype=np.int8)
    return (1.0 - 2.0 * bits) / math.sqrt(N)


def gen_channel(config: SystemConfig, user: int, rng: np.random.Generator) -> np.ndarray:
    """Independent CN(0, var_l) taps for one user, length ``L*N``."""
    var = tap_variances(config.lambdas[user], config.N, config.L, config.tap_profile)
    z = rng.standard_normal((2, var.size))
    return np.sqrt(var / 2.0) * (z[0] + 1j * z[1])


def gen_channels(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Taps for all users, shape (K, L*N); same draws as calling :func:`gen_channel` per user."""
    lams = np.asarray(config.lambdas, dtype=float)
    uniq = {lam: tap_variances(lam, config.N, config.L, config.tap_profile) for lam in set(lams.tolist())}
    var = np.stack([uniq[lam] for lam in lams.tolist()])
    z = rng.standard_normal((config.K, 2, var.shape[1]))
    return np.sqrt(var / 2.0) * (z[:, 0] + 1j * z[:, 1])


def equivalent_code(code: np.ndarray, channel: np.ndarray) -> np.ndarray:
    """Convolve a code with channel taps and split into symbol-period segments.

    ``code`` has shape (..., N) and ``channel`` either (L*N,) or a shape that
    broadcasts against ``code``'s leading axes with a trailing L*N axis.  The
    linear convolution is truncated to its first ``L*N`` chips and returned
    with shape (..., L, N).
    """
    code = np.asarray(code)
    channel = np.asarray(channel)
    N = code.shape[-1]
    LN = channel.shape[-1]
    if LN % N:
        raise ValueError(f"channel length {LN} is not a multiple of the code length {N}")
    lead = np.broadcast_shapes(code.shape[:-1], channel.shape[:-1])
    out = np.zeros(lead + (LN,), dtype=np.result_type(code, channel, np.complex128))
    for n in range(N):
        out[..., n:] += code[..., n, None] * channel[..., : LN - n]
    return out.reshape(lead + (LN // N, N))


def equivalent_codes(codes: np.ndarray, channels: np.ndarray) -> np.ndarray:
    """Equivalent codes of a whole block, shape (K, M, L, N).

    Each user's convolution is a product with the (N, L*N) Toeplitz matrix of
    its taps; :func:`equivalent_code` computes the same thing chip by chip.
    """
    codes = np.asarray(codes)
    channels = np.asarray(channels)
    if codes.shape[0] != channels.shape[0]:
        raise ValueError("codes and channels disagree on the user count")
    K, M, N = codes.shape
    LN = channels.shape[-1]
    if LN % N:
        raise ValueError(f"channel length {LN} is not a multiple of the code length {N}")
    lag = np.arange(LN)[None, :] - np.arange(N)[:, None]          # (N, LN)
    toep = np.where(lag >= 0, channels[:, np.clip(lag, 0, None)], 0)   # (K, N, LN)
    return np.matmul(codes.astype(toep.dtype), toep).reshape(K, M, LN // N, N)


def noiseless_received(symbols: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Sum of every symbol's contribution to each period, shape (M, N).

    ``symbols`` may be soft (any real values); symbols before the block start
    are absent.
    """
    symbols = np.asarray(symbols)
    K, M, L, N = h.shape
    if symbols.shape != (K, M):
        raise ValueError(f"symbols shape {symbols.shape} does not match codes {(K, M)}")
    y = np.zeros((M, N), dtype=np.complex128)
    for j in range(L):
        # symbol i lands in period i + j through segment j
        y[j:] += np.einsum("km,kmn->mn", symbols[:, : M - j], h[:, : M - j, j])
    return y


def synthesize_received(symbols: np.ndarray, h: np.ndarray, sigma_n2: float,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Received block: noiseless sum plus complex AWGN (sigma_n2 per real dim)."""
    y = noiseless_received(symbols, h)
    if sigma_n2 > 0:
        if rng is None:
            raise ValueError("an rng is required when sigma_n2 > 0")
        z = rng.standard_normal((2,) + y.shape)
        y = y + math.sqrt(sigma_n2) * (z[0] + 1j * z[1])
    return y


def cross_correlation(h_a: np.ndarray, h_b: np.ndarray, i: int, j: int) -> complex:
    """Inner product ``h_a(i)^H h_b(j)`` between two equivalent-code segments."""
    L = h_a.shape[0]
    if not (0 <= i < L and 0 <= j < h_b.shape[0]):
        raise IndexError(f"segment indices ({i}, {j}) out of range 0..{L - 1}")
    return complex(np.vdot(h_a[i], h_b[j]))


def expected_chip_power(lam: float, N: int, L: int, profile: str = "cell") -> np.ndarray:
    """Exact ``E|h(l)|^2`` for l in 0..L*N-1, averaged over codes and taps."""
    var = tap_variances(lam, N, L, profile)
    csum = np.concatenate([[0.0], np.cumsum(var)])
    l = np.arange(L * N)
    lo = np.maximum(l - N + 1, 0)
    return (csum[l + 1] - csum[lo]) / N


def expected_moments(lam: float, N: int, L: int = 2, profile: str = "cell") -> tuple[dict, dict]:
    """Exact finite-N counterparts of the large-system channel moments.

    Returns ``(Q, C)`` with ``Q[i] = E{rho_kk(i, i)}`` (mean desired power in
    period offset i) and ``C[(i, j)] = N E{|rho_kn(i, j)|^2}`` for two distinct
    users.  Both converge to the closed forms in :mod:`turbomud.lsa` as N grows.
    """
    if L < 2:
        raise ValueError("need L >= 2 for offsets 0 and 1")
    p = expected_chip_power(lam, N, L, profile).reshape(L, N)
    Q = {i: float(p[i].sum()) for i in range(2)}
    C = {(i, j): float(N * np.dot(p[i], p[j])) for i in range(2) for j in range(2)}
    return Q, C
