"""Evolution of multiuser efficiency and BER across turbo iterations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import sysmodel
from .efficiency import EfficiencySolution, FeedbackDistribution, solve_efficiency
from .moments import VirtualChannelParams
from .transfer import DecoderTransfer

__all__ = ["LsaConfig", "EvolutionTrace", "evolve_iterations", "channel_energy_samples",
           "predict_ber"]


@dataclass(frozen=True)
class LsaConfig:
    """Operating point of the large-system analysis (``L = L1 = 2`` only)."""

    lam: float
    beta: float
    kappa: float
    sigma_n2: float
    L: int = 2
    L1: int = 2

    def __post_init__(self):
        if self.L != 2 or self.L1 != 2:
            raise ValueError("the large-system analysis covers L = L1 = 2 only")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if self.beta < 0 or self.sigma_n2 <= 0 or self.lam <= 0:
            raise ValueError("need beta >= 0, sigma_n2 > 0 and lambda > 0")

    def params(self, e_db2: float) -> VirtualChannelParams:
        return VirtualChannelParams(self.lam, self.beta, self.kappa, self.sigma_n2, e_db2)


@dataclass
class EvolutionTrace:
    eta: list[float] = field(default_factory=list)
    snr_db: list[float] = field(default_factory=list)
    ber: list[float] = field(default_factory=list)
    ber_finite: list[float] = field(default_factory=list)     # empty unless energy samples given
    e_db2: list[float] = field(default_factory=list)          # reliable-set feedback error power used
    solutions: list[EfficiencySolution] = field(default_factory=list)

    def iterations_to_converge(self, tol: float = 1e-3) -> int:
        """First iteration after which the BER changes by less than ``tol`` relative."""
        b = self.ber
        for i in range(1, len(b)):
            if abs(b[i] - b[i - 1]) <= tol * max(b[i - 1], 1e-300):
                return i
        return len(b)


def channel_energy_samples(lam: float, N: int, n: int, rng, L: int = 2,
                           profile: str = "cell") -> np.ndarray:
    """Draws of a user's total channel energy ``sum_l |g_l|^2`` at spreading gain N,
    normalised to unit mean."""
    var = sysmodel.tap_variances(lam, N, L, profile)
    e = rng.exponential(1.0, size=(n, var.size)) @ var
    return e / var.sum()


def predict_ber(eta: float, sigma_n2: float, transfer: DecoderTransfer,
                energy_samples: np.ndarray | None = None) -> float:
    """Data-bit BER of the equivalent single-user channel with SNR ``eta / sigma_n2``.

    With ``energy_samples`` the BER is averaged over the user's own channel
    energy fluctuation (a finite-N correction the asymptotic analysis ignores).
    """
    snr = eta / sigma_n2
    if energy_samples is None:
        return transfer.ber_at(10.0 * math.log10(snr))
    lo, hi = transfer.snr_db[0], transfer.snr_db[-1]
    s_db = np.clip(10.0 * np.log10(snr * np.asarray(energy_samples)), lo, hi)
    ber = transfer.ber
    with np.errstate(divide="ignore"):
        logb = np.where(ber > 0, np.log(np.where(ber > 0, ber, 1.0)), -np.inf)
    vals = np.exp(np.interp(s_db, transfer.snr_db, logb))
    return float(np.mean(vals))


def evolve_iterations(config: LsaConfig, decoder_transfer: DecoderTransfer, n_iters: int, *,
                      perfect_feedback: bool = False, energy_samples: np.ndarray | None = None,
                      n_nodes: int = 64) -> EvolutionTrace:
    """Alternate the efficiency fixed point and the decoder transfer lookup.

    The first iteration has no feedback (``bhat = 0``, ``E{db^2} = 1``).  With
    ``perfect_feedback`` every iteration sees ``bhat = b``.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    trace = EvolutionTrace()
    if perfect_feedback:
        dist, e_db2 = FeedbackDistribution.point(1.0), 0.0
    else:
        dist, e_db2 = FeedbackDistribution.point(0.0), 1.0
    for _ in range(n_iters):
        sol = solve_efficiency(config.params(e_db2), dist, n_nodes=n_nodes)
        snr_db = 10.0 * math.log10(sol.eta / config.sigma_n2)
        summary = decoder_transfer.lookup(snr_db)
        trace.eta.append(sol.eta)
        trace.snr_db.append(snr_db)
        trace.ber.append(summary.ber)
        trace.e_db2.append(e_db2)
        trace.solutions.append(sol)
        if energy_samples is not None:
            trace.ber_finite.append(predict_ber(sol.eta, config.sigma_n2, decoder_transfer,
                                                energy_samples))
        if not perfect_feedback:
            dist = summary.unreliable_distribution(config.kappa)
            e_db2 = summary.reliable_e_db2(config.kappa)
    return trace
