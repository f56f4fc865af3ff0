"""
Phase-sensitive parametric amplifier acting on Fock-diagonal inputs.

Quadrature convention: vacuum variance 1/2. At high gain the amplified
quadrature is ``e**G x`` and the detected photon number is
``N = e**(2G) x**2 / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, ValidationError
from .fock_core import (
    IntensityDistribution,
    MomentSummary,
    PhotonNumberDistribution,
    PulseRecordSet,
    _require_valid,
    seed_label,
    seed_sequence,
)
from .states import apply_loss

__all__ = [
    "ASYMPTOTIC_GAIN",
    "MAX_HERMITE",
    "GainSetting",
    "AmplifiedMoments",
    "amplified_mean",
    "asymptotic_moments",
    "hermite_functions",
    "quadrature_grid",
    "intensity_distribution",
    "sample_pulses",
    "mode_mismatch",
]

ASYMPTOTIC_GAIN = 3.0
MAX_GAIN = 30.0
MAX_HERMITE = 150
MIN_COVERAGE = 0.9999
SAMPLE_BLOCK = 1 << 16


@dataclass(frozen=True)
class GainSetting:
    G: float

    def __post_init__(self):
        if not 0 < self.G <= MAX_GAIN:
            raise DomainError(f"gain must lie in (0, {MAX_GAIN}], got {self.G}")

    @property
    def asymptotic_ok(self) -> bool:
        return self.G >= ASYMPTOTIC_GAIN

    @property
    def sinh2(self) -> float:
        return math.sinh(self.G) ** 2

    @property
    def quadrature_scale(self) -> float:
        """``N / x**2`` in the high-gain model, ``e**(2G) / 2``."""
        return math.exp(2 * self.G) / 2


def _gain(gain) -> GainSetting:
    return gain if isinstance(gain, GainSetting) else GainSetting(float(gain))


def amplified_mean(m: float, gain) -> float:
    """Exact mean photon number after amplification of a Fock-diagonal state.

    ``(2m + 1) sinh(G)**2 + m``.
    """
    if m < 0:
        raise DomainError(f"mean photon number must be >= 0, got {m}")
    g = _gain(gain)
    return (2 * m + 1) * g.sinh2 + m


class AmplifiedMoments(NamedTuple):
    mu_rel: float
    sigma2_rel: float
    g2_post: float


def asymptotic_moments(ms, s2: Optional[float] = None) -> AmplifiedMoments:
    """High-gain map from input (mean, variance) to relative output moments.

    Accepts a :class:`MomentSummary` or the pair ``(m, s2)``. Output mean and
    variance are in units of ``sinh(G)**2`` and ``sinh(G)**4``.
    """
    if isinstance(ms, MomentSummary):
        m, s2 = ms.m, ms.s2
    else:
        m = ms
        if s2 is None:
            raise TypeError("asymptotic_moments needs a MomentSummary or (m, s2)")
    mu_rel = 2 * m + 1
    sigma2_rel = 2 * (1 + m + m * m + 3 * s2)
    return AmplifiedMoments(mu_rel, sigma2_rel, 1 + sigma2_rel / mu_rel**2)


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``psi_0 .. psi_n_max`` at ``x``.

    Three-term recurrence
    ``psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}``;
    returns shape ``(n_max + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _weighted_density_x(probs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_n p_n psi_n(x)**2`` without storing every ``psi_n``."""
    prev = np.pi**-0.25 * np.exp(-0.5 * x * x)
    acc = probs[0] * prev * prev
    if probs.size == 1:
        return acc
    cur = math.sqrt(2.0) * x * prev
    acc = acc + probs[1] * cur * cur
    for n in range(1, probs.size - 1):
        prev, cur = cur, math.sqrt(2.0 / (n + 1)) * x * cur - math.sqrt(n / (n + 1)) * prev
        if probs[n + 1]:
            acc = acc + probs[n + 1] * cur * cur
    return acc


def _support(dist: PhotonNumberDistribution) -> np.ndarray:
    probs = dist.trimmed(atol=1e-15).probs
    if probs.size - 1 > MAX_HERMITE:
        raise DomainError(
            f"photon numbers up to {probs.size - 1} exceed the wavefunction limit {MAX_HERMITE}"
        )
    return probs


def quadrature_grid(n_max: int, step: float = 5e-4, x_min: float = 1e-10, x_switch: float = 1.0) -> np.ndarray:
    """Positive quadrature grid: geometric up to ``x_switch``, then uniform.

    The geometric part keeps the trapezoidal error of the ``1/sqrt(N)``
    vacuum singularity at the ``step**2`` level.
    """
    x_hi = math.sqrt(2 * n_max + 1) + 10.0
    n_geo = int(math.ceil(math.log(x_switch / x_min) / math.log1p(step))) + 1
    geo = np.geomspace(x_min, x_switch, n_geo)
    lin = np.arange(x_switch, x_hi + step, x_switch * step)
    return np.unique(np.concatenate([geo, lin[1:]]))


def intensity_distribution(
    dist: PhotonNumberDistribution,
    gain,
    grid: Optional[np.ndarray] = None,
    step: float = 5e-4,
) -> IntensityDistribution:
    """Density of the amplified photon number ``N`` for a Fock-diagonal input.

    ``P(N) = sum_n p_n P_n(N)`` with ``P_n(N) = 2 psi_n(x)**2 dx/dN`` at
    ``x = e**-G sqrt(2N)``. Valid in the high-gain regime only.

    Parameters
    ----------
    dist : PhotonNumberDistribution
    gain : GainSetting or float
    grid : array_like, optional
        Strictly positive, increasing ``N`` values. Defaults to the image of
        :func:`quadrature_grid`.
    step : float
        Resolution of the default grid.

    Raises
    ------
    DomainError
        Gain below the asymptotic threshold, or a grid capturing less than
        99.99 % of the probability mass.
    """
    _require_valid(dist)
    g = _gain(gain)
    if not g.asymptotic_ok:
        raise DomainError(f"intensity distribution needs G >= {ASYMPTOTIC_GAIN}, got {g.G}")
    probs = _support(dist)
    scale = g.quadrature_scale
    if grid is None:
        x = quadrature_grid(probs.size - 1, step)
        N = scale * x * x
    else:
        N = np.asarray(grid, dtype=float)
        if N.ndim != 1 or N.size < 2 or N[0] <= 0 or np.any(np.diff(N) <= 0):
            raise DomainError("grid must be strictly increasing and start above N = 0")
        x = np.sqrt(N / scale)
    dx_dN = 1.0 / (2.0 * np.sqrt(scale * N))
    density = 2.0 * _weighted_density_x(probs, x) * dx_dN
    out = IntensityDistribution(N, density, g.G)
    mass = out.total()
    if mass < MIN_COVERAGE:
        raise DomainError(
            f"grid [{N[0]:.3g}, {N[-1]:.3g}] captures only {mass:.6f} of the probability mass"
        )
    return out


class _QuadratureSampler:
    """Inverse-CDF sampler of ``|x|`` under ``2 psi_n(x)**2`` on ``x >= 0``."""

    def __init__(self, n: int, points: int = 1 << 15):
        x = np.linspace(0.0, math.sqrt(2 * n + 1) + 10.0, points)
        pdf = 2.0 * hermite_functions(n, x)[n] ** 2
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(x))])
        self.cdf = cdf / cdf[-1]
        self.x = x

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, self.cdf, self.x)


def sample_pulses(
    dist: PhotonNumberDistribution,
    gain,
    n_pulses: int,
    detection_scale: float = 1.0,
    seed=0,
    herald: Optional[np.ndarray] = None,
) -> PulseRecordSet:
    """Monte-Carlo detected intensities of amplified pulses.

    Per pulse: draw ``n`` from ``dist``, draw ``x`` from ``psi_n(x)**2``, record
    ``detection_scale * e**(2G) x**2 / 2``. Pulses are generated in blocks of
    65536 with one seed stream per block, so output depends only on
    ``(seed, n_pulses)``.

    ``detection_scale`` is a deterministic efficiency factor, not binomial
    thinning; g2 and relative means are insensitive to it at high gain.
    """
    _require_valid(dist)
    if n_pulses < 1:
        raise DomainError(f"n_pulses must be >= 1, got {n_pulses}")
    if not 0 < detection_scale <= 1:
        raise DomainError(f"detection_scale must lie in (0, 1], got {detection_scale}")
    g = _gain(gain)
    probs = _support(dist)
    probs = probs / probs.sum()
    samplers: dict[int, _QuadratureSampler] = {}
    n_blocks = -(-n_pulses // SAMPLE_BLOCK)
    streams = seed_sequence(seed).spawn(n_blocks)
    counts = np.empty(n_pulses)
    for b, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        lo = b * SAMPLE_BLOCK
        hi = min(lo + SAMPLE_BLOCK, n_pulses)
        ns = rng.choice(probs.size, size=hi - lo, p=probs)
        u = rng.random(hi - lo)
        x = np.empty(hi - lo)
        for n in np.unique(ns):
            sel = ns == n
            if n not in samplers:
                samplers[n] = _QuadratureSampler(int(n))
            x[sel] = samplers[n](u[sel])
        counts[lo:hi] = x * x
    counts *= detection_scale * g.quadrature_scale
    meta = {"gain": g.G, "n_pulses": n_pulses, "seed": seed_label(seed), "detection_scale": detection_scale}
    return PulseRecordSet(counts, herald, meta)


def mode_mismatch(dist: PhotonNumberDistribution, overlap: float) -> PhotonNumberDistribution:
    """Imperfect input/amplifier mode overlap as extra loss before the gain.

    Uses the norm-preserving beam-splitter form
    ``a' = sqrt(overlap) a0 + sqrt(1 - overlap) a_vac``, i.e. binomial loss
    with transmittance ``overlap``.
    """
    if not 0 <= overlap <= 1:
        raise ValidationError(f"mode overlap must lie in [0, 1], got {overlap}")
    return apply_loss(dist, overlap)

