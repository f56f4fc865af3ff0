"""
Constructors for Fock-diagonal input states.

Vacuum, number, thermal and coherent states, convex mixtures, the binomial
loss channel, and the heralded output of a weakly pumped pair source.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom, poisson

from .errors import DomainError, ValidationError
from .fock_core import (
    NORMALIZATION_TOL,
    TAIL_TOL,
    PhotonNumberDistribution,
    _require_valid,
)

__all__ = [
    "MAX_FOCK",
    "make_vacuum",
    "make_fock",
    "make_thermal",
    "make_coherent",
    "mix",
    "apply_loss",
    "HeraldedSourceConfig",
    "heralded_spdc",
    "DEFAULT_ETA_IDLER",
]

MAX_FOCK = 50
# fiber coupling x heralding detector efficiency; a modelling default only
DEFAULT_ETA_IDLER = 0.8 * 0.34


def make_vacuum() -> PhotonNumberDistribution:
    return PhotonNumberDistribution([1.0])


def make_fock(n: int) -> PhotonNumberDistribution:
    """Number state ``|n>`` for ``0 <= n <= 50``."""
    if int(n) != n or not 0 <= n <= MAX_FOCK:
        raise DomainError(f"Fock index must be an integer in [0, {MAX_FOCK}], got {n}")
    probs = np.zeros(int(n) + 1)
    probs[-1] = 1.0
    return PhotonNumberDistribution(probs)


def _truncate(probs: np.ndarray, n_max: int | None, tail_tol: float) -> np.ndarray:
    if n_max is None:
        # keep one entry past the point where the remaining tail drops below
        # tail_tol, so that probs[n_max] itself is below tail_tol
        tail = 1.0 - np.cumsum(probs)
        idx = np.nonzero(tail < tail_tol)[0]
        n_max = min(int(idx[0]) + 1, probs.size - 1) if idx.size else probs.size - 1
    out = probs[: n_max + 1].copy()
    return out / out.sum()


def make_thermal(mean: float, n_max: int | None = None, tail_tol: float = TAIL_TOL) -> PhotonNumberDistribution:
    """Bose-Einstein law ``p_n = mean**n / (1 + mean)**(n + 1)``.

    The vector is cut where the dropped tail falls below ``tail_tol`` and
    renormalized; pass ``n_max`` to force a length.
    """
    if not mean >= 0:
        raise DomainError(f"thermal mean must be >= 0, got {mean}")
    if mean == 0:
        return make_vacuum()
    ratio = mean / (1.0 + mean)
    if n_max is None:
        # tail beyond n is ratio**(n+1)
        n_hi = int(math.ceil(math.log(tail_tol) / math.log(ratio))) + 2
    else:
        n_hi = n_max
    n = np.arange(n_hi + 1)
    probs = np.exp(n * math.log(ratio)) / (1.0 + mean)
    return PhotonNumberDistribution(_truncate(probs, n_max, tail_tol))


def make_coherent(mean: float, n_max: int | None = None, tail_tol: float = TAIL_TOL) -> PhotonNumberDistribution:
    """Poisson law with the given mean."""
    if not mean >= 0:
        raise DomainError(f"coherent mean must be >= 0, got {mean}")
    if mean == 0:
        return make_vacuum()
    n_hi = n_max if n_max is not None else int(poisson.isf(tail_tol, mean)) + 5
    n = np.arange(n_hi + 1)
    probs = np.exp(n * math.log(mean) - mean - gammaln(n + 1))
    return PhotonNumberDistribution(_truncate(probs, n_max, tail_tol))


def mix(weights: Sequence[float], dists: Sequence[PhotonNumberDistribution]) -> PhotonNumberDistribution:
    """Convex combination, zero-padding every component to the longest one."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != len(dists) or w.size == 0:
        raise ValidationError(f"got {w.size} weights for {len(dists)} distributions")
    if np.any(w < 0) or abs(w.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"weights must be >= 0 and sum to 1, got sum {w.sum():.12g}")
    n_max = max(d.n_max for d in dists)
    probs = sum(wi * d.padded(n_max) for wi, d in zip(w, dists))
    return PhotonNumberDistribution(probs)


def _loss_matrix(n_max: int, eta: float) -> np.ndarray:
    """``M[k, n] = C(n, k) eta**k (1 - eta)**(n - k)``."""
    n = np.arange(n_max + 1)
    return binom.pmf(n[:, None], n[None, :], eta)


def apply_loss(dist: PhotonNumberDistribution, eta: float) -> PhotonNumberDistribution:
    """Binomial loss channel with transmittance ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {eta}")
    _require_valid(dist)
    if eta == 1.0:
        return dist
    out = _loss_matrix(dist.n_max, eta) @ dist.probs
    return PhotonNumberDistribution(out)


@dataclass(frozen=True)
class HeraldedSourceConfig:
    """Pair source with a threshold heralding detector on the idler arm.

    ``mean_pairs`` is the source brightness in photons (pairs) per pulse,
    ``eta_signal`` the signal-arm transmittance and ``eta_idler`` the idler
    detection efficiency. ``dark_prob`` is the per-pulse dark click
    probability of the herald detector.
    """

    mean_pairs: float
    eta_signal: float
    eta_idler: float = DEFAULT_ETA_IDLER
    dark_prob: float = 0.0

    def __post_init__(self):
        if not 0 <= self.mean_pairs < 10:
            raise DomainError(f"mean_pairs must lie in [0, 10), got {self.mean_pairs}")
        for name in ("eta_signal", "eta_idler"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")
        if not 0 <= self.dark_prob < 1:
            raise DomainError(f"dark_prob must lie in [0, 1), got {self.dark_prob}")

    @classmethod
    def from_json(cls, text: str) -> "HeraldedSourceConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad source config: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("source config must be a JSON object")
        known = {"mean_pairs", "eta_signal", "eta_idler", "dark_prob"}
        try:
            return cls(**{k: float(v) for k, v in data.items() if k in known})
        except TypeError as exc:
            raise ValidationError(f"bad source config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "mean_pairs": self.mean_pairs,
            "eta_signal": self.eta_signal,
            "eta_idler": self.eta_idler,
            "dark_prob": self.dark_prob,
        }


def heralded_spdc(cfg: HeraldedSourceConfig) -> tuple[PhotonNumberDistribution, float]:
    """Signal state conditioned on a herald click, and the click probability.

    Pair numbers follow a single-mode thermal law. A herald detector with
    efficiency ``eta_idler`` clicks on ``n`` pairs with probability
    ``1 - (1 - dark_prob) (1 - eta_idler)**n``; the conditioned pair
    distribution then passes through binomial loss ``eta_signal``.
    """
    pairs = make_thermal(cfg.mean_pairs).probs
    n = np.arange(pairs.size)
    click = 1.0 - (1.0 - cfg.dark_prob) * (1.0 - cfg.eta_idler) ** n
    joint = pairs * click
    p_herald = float(joint.sum())
    if p_herald == 0.0:
        raise DomainError("herald probability is zero (mean_pairs = 0 without dark clicks)")
    conditioned = PhotonNumberDistribution(joint / p_herald)
    return apply_loss(conditioned, cfg.eta_signal), p_herald
