"""
Hanbury Brown-Twiss click statistics with two threshold detectors.

Forward Monte-Carlo of single/double clicks, inversion to ``(p0, p1, p2+)``,
correction for loss in front of the beam splitter, and heralding-efficiency
bookkeeping.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, EstimationError, ValidationError
from .fock_core import PhotonNumberDistribution, _require_valid, seed_sequence

__all__ = [
    "HbtConfig",
    "ClickStatistics",
    "HbtEstimate",
    "simulate_clicks",
    "subtract_accidentals",
    "infer_probabilities",
    "correct_loss",
    "heralding_efficiency",
]

SIM_BLOCK = 1 << 18
HARD_FAIL_SIGMA = 5.0
P2_WARN = 0.2


@dataclass(frozen=True)
class HbtConfig:
    """Beam splitter transmittance ``T`` and detector efficiencies ``pA``, ``pB``.

    Detector A sits on the transmitted port.
    """

    T: float
    pA: float = 1.0
    pB: float = 1.0

    def __post_init__(self):
        if not 0 < self.T < 1:
            raise DomainError(f"T must lie in (0, 1), got {self.T}")
        for name in ("pA", "pB"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")

    @property
    def R(self) -> float:
        return 1.0 - self.T

    @property
    def qA(self) -> float:
        return 1.0 - self.pA

    @property
    def qB(self) -> float:
        return 1.0 - self.pB


@dataclass(frozen=True)
class ClickStatistics:
    """Per-pulse probabilities of exactly one click (``Q1``) and of a double click (``Q2``).

    ``n_pulses`` is ``None`` when only the rates are known, in which case no
    statistical errors can be attached to the inference.
    ``side_q2`` holds the double-click rate between neighbouring pulses
    (accidentals), when measured.
    """

    Q1: float
    Q2: float
    n_pulses: Optional[int] = None
    n_none: Optional[int] = None
    n_single: Optional[int] = None
    n_double: Optional[int] = None
    side_q2: Optional[float] = None

    def __post_init__(self):
        if not (0 <= self.Q1 <= 1 and 0 <= self.Q2 <= 1 and self.Q1 + self.Q2 <= 1 + 1e-12):
            raise ValidationError(f"inconsistent click statistics Q1={self.Q1}, Q2={self.Q2}")

    @classmethod
    def from_counts(cls, n_none: int, n_single: int, n_double: int, side_q2=None) -> "ClickStatistics":
        n = n_none + n_single + n_double
        if n <= 0:
            raise EstimationError("no pulses recorded")
        return cls(n_single / n, n_double / n, n, n_none, n_single, n_double, side_q2)


def _route(n: np.ndarray, cfg: HbtConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per pulse, whether A and B click given ``n`` incoming photons."""
    # each photon ends up detected at A, detected at B, or lost
    pvals = [cfg.T * cfg.pA, cfg.R * cfg.pB, 1.0 - cfg.T * cfg.pA - cfg.R * cfg.pB]
    hits = rng.multinomial(n, pvals)
    return hits[:, 0] > 0, hits[:, 1] > 0


def simulate_clicks(
    dist: PhotonNumberDistribution,
    cfg: HbtConfig,
    n_pulses: int,
    seed=0,
    overlap: float = 0.0,
) -> ClickStatistics:
    """Monte-Carlo of the two-detector click pattern.

    Every photon independently takes the transmitted port with probability
    ``T`` and is then detected with ``pA`` or ``pB``; detectors do not
    resolve photon number. With ``overlap > 0`` a pulse additionally carries,
    with that probability, the photons of an independent neighbouring pulse;
    the resulting accidental double-click rate is estimated from clicks in
    adjacent pulses and stored in ``side_q2`` (see :func:`subtract_accidentals`).
    """
    _require_valid(dist)
    if n_pulses < 1:
        raise DomainError("n_pulses must be >= 1")
    if not 0 <= overlap < 1:
        raise DomainError(f"overlap must lie in [0, 1), got {overlap}")
    probs = dist.probs / dist.probs.sum()
    n_blocks = -(-n_pulses // SIM_BLOCK)
    counts = np.zeros(3, dtype=np.int64)
    side_hits = 0
    side_pairs = 0
    for b, ss in enumerate(seed_sequence(seed).spawn(n_blocks)):
        rng = np.random.default_rng(ss)
        size = min(SIM_BLOCK, n_pulses - b * SIM_BLOCK)
        n = rng.choice(probs.size, size=size, p=probs)
        if overlap > 0:
            extra = rng.choice(probs.size, size=size, p=probs)
            n = n + np.where(rng.random(size) < overlap, extra, 0)
        a, bb = _route(n, cfg, rng)
        k = a.astype(int) + bb.astype(int)
        counts += np.bincount(k, minlength=3)
        if overlap > 0 and size > 1:
            # A in pulse i with B in pulse i+1 (and the reverse) samples
            # uncorrelated coincidences; a merged pulse can pair either way
            side_hits += int(np.count_nonzero(a[:-1] & bb[1:]) + np.count_nonzero(bb[:-1] & a[1:]))
            side_pairs += size - 1
    side_q2 = None
    if overlap > 0 and side_pairs:
        # accidentals arise only in the overlap fraction of pulses
        side_q2 = overlap * side_hits / side_pairs
    return ClickStatistics.from_counts(int(counts[0]), int(counts[1]), int(counts[2]), side_q2)


def subtract_accidentals(stats: ClickStatistics) -> ClickStatistics:
    """Remove the side-peak estimate from the double-click rate.

    Removed double clicks are counted as single clicks, so counts stay
    consistent.
    """
    if stats.side_q2 is None:
        return stats
    q2 = max(stats.Q2 - stats.side_q2, 0.0)
    q1 = stats.Q1 + (stats.Q2 - q2)
    return replace(stats, Q1=q1, Q2=q2, n_none=None, n_single=None, n_double=None, side_q2=None)


@dataclass(frozen=True)
class HbtEstimate:
    p0: float
    p1: float
    p2plus: float
    sigma_p0: Optional[float]
    sigma_p1: Optional[float]
    sigma_p2plus: Optional[float]
    physical: bool
    cov_p1_p2: Optional[float] = None

    def as_tuple(self) -> tuple[float, float, float]:
        return self.p0, self.p1, self.p2plus

    def to_dict(self) -> dict:
        return {
            "p0": self.p0,
            "p1": self.p1,
            "p2plus": self.p2plus,
            "sigma_p0": self.sigma_p0,
            "sigma_p1": self.sigma_p1,
            "sigma_p2plus": self.sigma_p2plus,
            "physical": self.physical,
            "cov_p1_p2": self.cov_p1_p2,
        }

    def loss_corrected(self, T_prime: float) -> "HbtEstimate":
        """Apply :func:`correct_loss`, propagating the errors linearly."""
        p0, p1, p2 = correct_loss(self.p0, self.p1, self.p2plus, T_prime)
        s0 = s1 = s2 = c12 = None
        if self.sigma_p1 is not None:
            # (p1', p2') = A (p1, p2) with A = [[1/T, -2(1-T)/T^2], [0, 1/T^2]]
            a, b, d = 1 / T_prime, -2 * (1 - T_prime) / T_prime**2, 1 / T_prime**2
            v11, v22, v12 = self.sigma_p1**2, self.sigma_p2plus**2, self.cov_p1_p2
            var1 = a * a * v11 + 2 * a * b * v12 + b * b * v22
            var2 = d * d * v22
            c12 = a * d * v12 + b * d * v22
            s1, s2 = math.sqrt(max(var1, 0.0)), math.sqrt(var2)
            s0 = math.sqrt(max(var1 + var2 + 2 * c12, 0.0))
        physical = all(0.0 <= v <= 1.0 for v in (p0, p1, p2))
        return HbtEstimate(p0, p1, p2, s0, s1, s2, physical, c12)


def _coefficients(cfg: HbtConfig) -> tuple[float, float, float]:
    """Return ``(c2, b, d)`` with ``Q2 = c2 p2``, ``Q1 = d p1 + b p2`` (n <= 2)."""
    T, R, pA, pB, qA, qB = cfg.T, cfg.R, cfg.pA, cfg.pB, cfg.qA, cfg.qB
    c2 = 2 * pA * pB * T * R
    b = 2 * T * R * (qB * pA + qA * pB) + T**2 * (1 - qA**2) + R**2 * (1 - qB**2)
    d = T * pA + R * pB
    return c2, b, d


def infer_probabilities(stats: ClickStatistics, cfg: HbtConfig) -> HbtEstimate:
    """Invert click rates to ``(p0, p1, p2+)``, neglecting three or more photons.

    p2+ = Q2 / (2 pA pB T R)
    p1  = (Q1 - p2+ [2TR(qB pA + qA pB) + T^2 (1 - qA^2) + R^2 (1 - qB^2)]) / (T pA + R pB)
    p0  = 1 - p1 - p2+

    Results are not clamped. ``physical`` is False when any value leaves
    ``[0, 1]``; a departure of more than 5 standard errors (only checkable
    when ``stats.n_pulses`` is known) raises :class:`EstimationError`.
    """
    c2, b, d = _coefficients(cfg)
    if c2 == 0 or d == 0:
        raise DomainError("degenerate HBT configuration (T R = 0 or pA pB = 0)")
    p2 = stats.Q2 / c2
    p1 = (stats.Q1 - p2 * b) / d
    p0 = 1.0 - p1 - p2

    s0 = s1 = s2 = c12 = None
    if stats.n_pulses:
        n = stats.n_pulses
        # multinomial covariance of (Q1, Q2)
        v11 = stats.Q1 * (1 - stats.Q1) / n
        v22 = stats.Q2 * (1 - stats.Q2) / n
        v12 = -stats.Q1 * stats.Q2 / n
        # p2 = Q2/c2 ; p1 = Q1/d - (b/(c2 d)) Q2 ; p0 = 1 - p1 - p2
        g1 = (1 / d, -b / (c2 * d))
        g2 = (0.0, 1 / c2)
        g0 = (-g1[0] - g2[0], -g1[1] - g2[1])

        def _sd(g):
            return math.sqrt(max(g[0] ** 2 * v11 + 2 * g[0] * g[1] * v12 + g[1] ** 2 * v22, 0.0))

        s0, s1, s2 = _sd(g0), _sd(g1), _sd(g2)
        c12 = g1[0] * g2[0] * v11 + (g1[0] * g2[1] + g1[1] * g2[0]) * v12 + g1[1] * g2[1] * v22

    physical = all(0.0 <= v <= 1.0 for v in (p0, p1, p2))
    if not physical and s0 is not None:
        for v, s, name in ((p0, s0, "p0"), (p1, s1, "p1"), (p2, s2, "p2plus")):
            dist = max(-v, v - 1.0, 0.0)
            if dist > HARD_FAIL_SIGMA * max(s, 1e-15):
                raise EstimationError(
                    f"inferred {name} = {v:.6g} is more than {HARD_FAIL_SIGMA:g} sigma outside [0, 1]"
                )
    if p2 > P2_WARN:
        warnings.warn(
            f"inferred p2+ = {p2:.3f}; the inversion neglects three or more photons",
            RuntimeWarning,
            stacklevel=2,
        )
    return HbtEstimate(p0, p1, p2, s0, s1, s2, physical, c12)


def correct_loss(p0: float, p1: float, p2plus: float, T_prime: float) -> tuple[float, float, float]:
    """Undo binomial loss ``T_prime`` suffered before the beam splitter.

    Exact inverse of the loss channel for states supported on ``{0, 1, 2}``.
    ``p0`` is recomputed from normalization, so the input value is unused.
    """
    if not 0 < T_prime <= 1:
        raise DomainError(f"T' must lie in (0, 1], got {T_prime}")
    p2c = p2plus / T_prime**2
    p1c = p1 / T_prime - p2c * 2 * (1 - T_prime)
    return 1.0 - p1c - p2c, p1c, p2c


def heralding_efficiency(coinc_per_pulse: float, herald_rate_per_pulse: float, corrections: Sequence[float]) -> float:
    """Coincidence-to-herald ratio corrected for known transmissions.

    ``coinc / (herald_rate * prod(corrections))``.
    """
    corrections = list(corrections)
    if herald_rate_per_pulse <= 0:
        raise DomainError("herald rate must be > 0")
    if not corrections:
        raise ValidationError("at least one correction factor is required")
    if any(not 0 < c <= 1 for c in corrections):
        raise DomainError(f"correction factors must lie in (0, 1], got {corrections}")
    if coinc_per_pulse < 0:
        raise DomainError("coincidence rate must be >= 0")
    return coinc_per_pulse / (herald_rate_per_pulse * math.prod(corrections))
