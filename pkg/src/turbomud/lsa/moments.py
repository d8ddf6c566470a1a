"""Large-system channel moments and the virtual-channel parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "desired_power",
    "interference_moment",
    "closed_form_moments",
    "VirtualChannelParams",
    "effective_noise",
]


def desired_power(i: int, lam: float) -> float:
    """Mean desired-signal power landing ``i`` symbol periods after the symbol."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if i < 0:
        raise ValueError("offset must be non-negative")
    if i == 0:
        return 1.0 - (-math.expm1(-lam)) / lam
    return math.exp(-lam * (i - 1)) * math.expm1(-lam) ** 2 / lam


def interference_moment(i: int, j: int, lam: float) -> float:
    """Normalized second moment of the cross correlation between segments.

    Symmetric in ``(i, j)``; the case ``i > 0, j = 0`` is taken from its
    mirror image.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if i < 0 or j < 0:
        raise ValueError("offsets must be non-negative")
    if i > j:
        i, j = j, i
    a = -math.expm1(-lam)           # 1 - e^-lam
    a2 = -math.expm1(-2 * lam)      # 1 - e^-2lam
    if i == 0 and j == 0:
        return 1.0 - 2.0 * a / lam + a2 / (2 * lam)
    if i == 0:
        return math.exp(-lam * j) * math.expm1(lam) * (a / lam - a2 / (2 * lam))
    return math.exp(-lam * (i + j)) * a2 * math.expm1(lam) ** 2 / (2 * lam)


def closed_form_moments(lam: float) -> tuple[dict[int, float], dict[tuple[int, int], float]]:
    """``(Q, C)`` for offsets 0 and 1."""
    Q = {i: desired_power(i, lam) for i in (0, 1)}
    C = {(i, j): interference_moment(i, j, lam) for i in (0, 1) for j in (0, 1)}
    return Q, C


@dataclass(frozen=True)
class VirtualChannelParams:
    """Operating point of the two virtual channels seen by one symbol.

    ``e_db2`` is the residual power of the cancelled (reliable) feedback,
    ``E{db^2}``.
    """

    lam: float
    beta: float
    kappa: float
    sigma_n2: float
    e_db2: float = 1.0

    def __post_init__(self):
        if not 0 <= self.kappa <= 1:
            raise ValueError("kappa must lie in [0, 1]")
        if self.beta < 0 or self.e_db2 < 0 or self.sigma_n2 <= 0:
            raise ValueError("beta, E{db^2} must be >= 0 and sigma_n2 > 0")

    @property
    def Q(self) -> dict[int, float]:
        return closed_form_moments(self.lam)[0]

    @property
    def C(self) -> dict[tuple[int, int], float]:
        return closed_form_moments(self.lam)[1]

    @property
    def Nf(self) -> dict[int, float]:
        return effective_noise(self)

    def gamma(self, i: int, j: int) -> float:
        return self.C[(i, j)] / self.Nf[i]


def effective_noise(params: VirtualChannelParams) -> dict[int, float]:
    """Noise plus residual interference power in each virtual channel.

    The second correlation term is ``C(0, 1)`` for both channels.
    """
    C = params.C
    scale = (1.0 - params.kappa) * params.beta * params.e_db2
    return {i: params.sigma_n2 + scale * (C[(i, i)] + C[(0, 1)]) for i in (0, 1)}
