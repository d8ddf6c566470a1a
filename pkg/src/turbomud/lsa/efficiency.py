"""Fixed-point multiuser efficiency of the reduced-state detector."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import expit

from .moments import VirtualChannelParams

__all__ = [
    "FeedbackDistribution",
    "EfficiencySolution",
    "gauss_normal_rule",
    "efficiency_rhs",
    "solve_efficiency",
    "combine_efficiency",
    "pic_efficiency",
]


@dataclass(frozen=True)
class FeedbackDistribution:
    """Discrete distribution of soft feedback values (only ``bhat^2`` matters)."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("values and weights must be 1-D and the same length")
        if np.any(np.abs(v) > 1) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("need |values| <= 1 and non-negative weights with positive mass")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w / w.sum())

    @classmethod
    def point(cls, value: float) -> "FeedbackDistribution":
        return cls(np.array([value]), np.array([1.0]))

    @classmethod
    def from_samples(cls, samples, bins: int = 256) -> "FeedbackDistribution":
        """Compress a sample of feedback values into ``bins`` groups of ``bhat^2``."""
        sq = np.sort(np.asarray(samples, dtype=float) ** 2)
        if sq.size <= bins:
            return cls(np.sqrt(sq), np.ones(sq.size))
        groups = np.array_split(sq, bins)
        return cls(np.sqrt([g.mean() for g in groups]), np.array([g.size for g in groups], float))

    @classmethod
    def coerce(cls, obj) -> "FeedbackDistribution":
        if isinstance(obj, cls):
            return obj
        if np.ndim(obj) == 0:
            return cls.point(float(obj))
        if isinstance(obj, tuple) and len(obj) == 2:
            return cls(*obj)
        if hasattr(obj, "sample"):
            return cls.from_samples(obj.sample)
        return cls.from_samples(obj)


@dataclass
class EfficiencySolution:
    eta_i: np.ndarray                   # per virtual channel, operating branch
    eta: float                          # combined over both channels
    residual: float                     # max |1/eta_i - rhs| at eta_i
    iterations: int
    multiple: bool                      # more than one fixed point found
    converged: bool = True
    branches: list = field(default_factory=list)   # all fixed points, per channel


def gauss_normal_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with ``sum(w * f(z)) ~= E f(Z)``, Z standard normal."""
    z, w = hermegauss(n)
    return z, w / w.sum()


def _mmse_term(gamma_eta: float, b2: np.ndarray, z: np.ndarray, wz: np.ndarray) -> np.ndarray:
    """Inner Gaussian integral for each squared feedback value in ``b2``."""
    u = z * np.sqrt(gamma_eta) + gamma_eta           # (nz,)
    one_minus_t = 2.0 * expit(-2.0 * u)              # 1 - tanh(u), stable for large u
    t = 1.0 - one_minus_t
    b = np.sqrt(b2)[:, None]
    den = ((1.0 - b) + b * one_minus_t) * (1.0 + b * t)   # 1 - b^2 tanh^2
    return (one_minus_t / den) @ wz


def efficiency_rhs(eta: float, i: int, params: VirtualChannelParams,
                   dist: FeedbackDistribution, rule) -> float:
    """Right-hand side ``1 + sum_j kappa beta E{...}`` of the fixed point for channel i."""
    z, wz = rule
    weight = params.kappa * params.beta
    if weight == 0:
        return 1.0
    b2 = dist.values ** 2
    live = b2 < 1.0
    if not live.any():
        return 1.0
    b2, wb = b2[live], dist.weights[live]
    total = 0.0
    for j in (0, 1):
        g = params.gamma(i, j)
        if g == 0:
            continue
        inner = _mmse_term(g * eta, b2, z, wz)
        total += g * np.dot(wb, (1.0 - b2) * inner)
    return 1.0 + weight * total


def _iterate(eta0, i, params, dist, rule, damping, max_iter, tol):
    eta = eta0
    for it in range(1, max_iter + 1):
        rhs = efficiency_rhs(eta, i, params, dist, rule)
        res = abs(1.0 / eta - rhs)
        if res < tol:
            return eta, res, it, True
        eta = (1.0 - damping) * eta + damping / rhs
    rhs = efficiency_rhs(eta, i, params, dist, rule)
    return eta, abs(1.0 / eta - rhs), max_iter, False


def solve_efficiency(params: VirtualChannelParams, feedback_dist=0.0, n_nodes: int = 64,
                     damping: float = 0.5, max_iter: int = 500, tol: float = 1e-12,
                     starts=(1.0, 0.1, 0.01)) -> EfficiencySolution:
    """Solve the replica fixed point for both virtual channels.

    The Gaussian integral uses an ``n_nodes``-point Gauss-Hermite rule; the
    expectation over the unreliable-set feedback uses ``feedback_dist``.  Every
    start point is iterated; distinct fixed points are all reported and the
    largest is the operating point.
    """
    dist = FeedbackDistribution.coerce(feedback_dist)
    rule = gauss_normal_rule(n_nodes)
    etas, residuals, iters, branches = [], [], 0, []
    ok = True
    for i in (0, 1):
        found = []
        for e0 in starts:
            eta, res, it, conv = _iterate(e0, i, params, dist, rule, damping, max_iter, tol)
            iters = max(iters, it)
            if not conv:
                ok = False
                warnings.warn(f"fixed point for channel {i} did not converge from eta={e0} "
                              f"(residual {res:.2e})", RuntimeWarning, stacklevel=2)
                continue
            if all(abs(eta - f[0]) > 1e-6 for f in found):
                found.append((eta, res))
        if not found:
            eta, res, _, _ = _iterate(starts[0], i, params, dist, rule, damping, max_iter, tol)
            found.append((eta, res))
        found.sort(key=lambda x: -x[0])
        branches.append([f[0] for f in found])
        etas.append(found[0][0])
        residuals.append(found[0][1])
    eta_i = np.array(etas)
    sol = EfficiencySolution(eta_i=eta_i, eta=0.0, residual=max(residuals), iterations=iters,
                             multiple=any(len(b) > 1 for b in branches), converged=ok,
                             branches=branches)
    sol.eta = combine_efficiency(sol, params)
    return sol


def combine_efficiency(solution, params: VirtualChannelParams) -> float:
    """Multiuser efficiency after combining both virtual channels."""
    eta_i = solution.eta_i if isinstance(solution, EfficiencySolution) else np.asarray(solution)
    Q, Nf = params.Q, params.Nf
    return params.sigma_n2 * sum(eta_i[i] * Q[i] / Nf[i] for i in (0, 1))


def pic_efficiency(params: VirtualChannelParams) -> float:
    """Efficiency of parallel interference cancellation (unit per-channel efficiency)."""
    Q, Nf = params.Q, params.Nf
    return params.sigma_n2 * sum(Q[i] / Nf[i] for i in (0, 1))
