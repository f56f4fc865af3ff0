"""
Non-classicality (NC) and non-Gaussianity (NG) boundaries and classification.

Two families of witnesses:

* probability based, in the ``(p0, p1)`` plane of the input state;
* moment based, in the ``(mu_rel, g2)`` plane after high-gain amplification,
  valid for phase-independent inputs. The same boundaries are also exposed
  in the input ``(m, s2)`` plane.

All post-amplification boundaries are the ``G -> infinity`` ones, which are
the conservative choice at finite gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError, ValidationError
from .fock_core import VerdictCategory, WitnessVerdict
from .opa import asymptotic_moments

__all__ = [
    "CURVE_TABLE_POINTS",
    "CURVE_R_MAX",
    "BOUNDARY_ATOL",
    "CURVE_KINDS",
    "BoundaryCurve",
    "ng_curve_pre",
    "ng_curve_table",
    "ng_p1_threshold",
    "nc_bound_pre",
    "mu_tilde",
    "g2_tilde",
    "invert_mu_tilde",
    "bisect_increasing",
    "ng_bound_post",
    "nc_bound_post",
    "floor_post",
    "ng_bound_moments",
    "nc_bound_moments",
    "boundary_curve",
    "classify_probabilities",
    "classify_moments",
]

CURVE_TABLE_POINTS = 10_000
CURVE_R_MAX = 5.0
BISECT_TOL = 1e-13
# a point exactly on a boundary is not counted as crossing it
BOUNDARY_ATOL = 1e-12

CURVE_KINDS = (
    "NG_pre_p0p1",
    "NC_pre_p0p1",
    "NG_post_mu_g2",
    "NC_post_mu_g2",
    "Floor_post_mu_g2",
    "NG_pre_moments",
    "NC_pre_moments",
)


# ----------------------------------------------------------------------------
# Root finding
# ----------------------------------------------------------------------------
def bisect_increasing(f, target, lo: float, hi: float, tol: float = BISECT_TOL, max_iter: int = 200):
    """Solve ``f(r) = target`` for increasing ``f`` on ``[lo, hi]`` by bisection.

    Vectorized over ``target``. Bracketing is the caller's job; targets
    outside ``[f(lo), f(hi)]`` converge to the nearest endpoint.
    """
    target = np.asarray(target, dtype=float)
    a = np.full(target.shape, float(lo))
    b = np.full(target.shape, float(hi))
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        below = f(mid) < target
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
        if np.all(b - a <= tol):
            break
    return 0.5 * (a + b)


# ----------------------------------------------------------------------------
# Probability-based boundaries
# ----------------------------------------------------------------------------
def ng_curve_pre(r):
    """Gaussian-mixture boundary ``(p0(r), p1(r))`` for ``r >= 0``.

    p0 = exp(-(e^{4r} - 1)(1 - tanh r) / 4) / cosh r
    p1 = (e^{4r} - 1) exp(-(e^{4r} - 1)(1 - tanh r) / 4) / (4 cosh^3 r)
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("curve parameter r must be >= 0")
    q = np.expm1(4 * r)
    core = np.exp(-0.25 * q * (1 - np.tanh(r)))
    c = np.cosh(r)
    p0 = core / c
    p1 = q * core / (4 * c**3)
    if p0.ndim == 0:
        return float(p0), float(p1)
    return p0, p1


@lru_cache(maxsize=4)
def ng_curve_table(points: int = CURVE_TABLE_POINTS, r_max: float = CURVE_R_MAX):
    """Dense read-only tabulation ``(r, p0, p1)`` of :func:`ng_curve_pre`."""
    r = np.linspace(0.0, r_max, points)
    p0, p1 = ng_curve_pre(r)
    for a in (r, p0, p1):
        a.setflags(write=False)
    return r, p0, p1


def _neg_p0(r):
    return -ng_curve_pre(r)[0]


def ng_p1_threshold(p0):
    """Largest ``p1`` reachable by Gaussian mixtures at the given ``p0``.

    ``p0(r)`` is strictly decreasing, so the curve is inverted by bisection
    in ``r`` and the threshold is exact to the bisection tolerance.
    """
    p0 = np.asarray(p0, dtype=float)
    if np.any((p0 < 0) | (p0 > 1)):
        raise DomainError("p0 must lie in [0, 1]")
    r = bisect_increasing(_neg_p0, -p0, 0.0, CURVE_R_MAX)
    p1 = ng_curve_pre(r)[1]
    return float(p1) if np.ndim(p1) == 0 else p1


def nc_bound_pre(p0):
    """Largest ``p1`` of a classical state at the given ``p0``: ``-p0 ln p0``."""
    p0 = np.asarray(p0, dtype=float)
    if np.any((p0 < 0) | (p0 > 1)):
        raise DomainError("p0 must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p0 > 0, -p0 * np.log(np.where(p0 > 0, p0, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# Post-amplification boundaries
# ----------------------------------------------------------------------------
def mu_tilde(r):
    """Relative mean along the NG boundary, ``e^r cosh 2r``."""
    return np.exp(r) * np.cosh(2 * np.asarray(r, dtype=float))


def g2_tilde(r):
    """g2 along the NG boundary, ``3 - 3 sinh^2 r (sinh 2r + 1) / cosh^2 2r``."""
    r = np.asarray(r, dtype=float)
    return 3.0 - 3.0 * np.sinh(r) ** 2 * (np.sinh(2 * r) + 1) / np.cosh(2 * r) ** 2


def invert_mu_tilde(mu_rel):
    """``r`` with ``e^r cosh 2r = mu_rel``; ``mu_rel >= 1``."""
    mu = np.asarray(mu_rel, dtype=float)
    if np.any(~(mu >= 1)):
        raise DomainError("mu_rel must be >= 1; unreachable for any state since mu_rel = 2m + 1")
    # e^r cosh 2r > e^{3r}/2, so r < ln(2 mu)/3
    hi = max(20.0, float(np.max(np.log(2 * mu))) / 3 + 1.0)
    r = bisect_increasing(mu_tilde, mu, 0.0, hi)
    return float(r) if r.ndim == 0 else r


def ng_bound_post(mu_rel):
    """NG threshold on g2 at the given relative mean; NG when ``g2 <`` it."""
    out = g2_tilde(invert_mu_tilde(mu_rel))
    return float(out) if np.ndim(out) == 0 else out


def nc_bound_post(mu_rel):
    """NC threshold ``3/2 + 3/mu - 3/(2 mu^2)``; non-classical when ``g2 <`` it."""
    mu = np.asarray(mu_rel, dtype=float)
    if np.any(~(mu >= 1)):
        raise DomainError("mu_rel must be >= 1")
    out = 1.5 + 3.0 / mu - 1.5 / mu**2
    return float(out) if out.ndim == 0 else out


def floor_post(mu_rel):
    """Lowest g2 reachable by phase-independent inputs, for ``1 <= mu_rel < 5``.

    Vacuum/|1> mixtures on ``[1, 3)``, |1>/|2> mixtures on ``[3, 5)``.
    """
    mu = np.asarray(mu_rel, dtype=float)
    if np.any(~((mu >= 1) & (mu < 5))):
        raise DomainError("phase-independent floor is only defined for 1 <= mu_rel < 5")
    low = mu < 3
    w = np.where(low, (mu - 1) / 2, (mu - 3) / 2)
    m = np.where(low, w, 1 + w)
    s2 = w - w * w
    out = asymptotic_moments(m, s2).g2_post
    return float(out) if np.ndim(out) == 0 else out


def ng_bound_moments(m):
    """NG threshold on the input variance ``s2`` at mean ``m``.

    Obtained by pulling the post-amplification NG boundary back through the
    high-gain moment map; NG when ``s2 <`` the threshold.
    """
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise DomainError("m must be >= 0")
    mu = 2 * m + 1
    g2 = g2_tilde(invert_mu_tilde(mu))
    s2 = ((g2 - 1) * mu**2 / 2 - 1 - m - m * m) / 3
    s2 = np.where(np.abs(s2) < 1e-14, 0.0, s2)
    return float(s2) if s2.ndim == 0 else s2


def nc_bound_moments(m):
    """Anti-bunching boundary ``s2 = m`` (``g2 = 1`` before amplification)."""
    m = np.asarray(m, dtype=float)
    return float(m) if m.ndim == 0 else m.copy()


# ----------------------------------------------------------------------------
# Curves for plotting / export
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class BoundaryCurve:
    """Sampled boundary. ``parameter`` is ``r`` for the parametric kinds,
    ``p0`` for NC_pre_p0p1 and the mixture weight (0..2) for the floor."""

    kind: str
    parameter: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def to_csv_text(self, header: bool = True) -> str:
        """``kind,param,x,y`` rows, floats written with full precision."""
        lines = ["kind,param,x,y"] if header else []
        lines += [
            f"{self.kind},{p!r},{x!r},{y!r}"
            for p, x, y in zip(map(float, self.parameter), map(float, self.x), map(float, self.y))
        ]
        return "\n".join(lines) + "\n"


def resolve_kind(kind: str) -> str:
    if kind in CURVE_KINDS:
        return kind
    matches = [k for k in CURVE_KINDS if k.startswith(kind + "_")]
    if len(matches) != 1:
        raise ValidationError(f"unknown curve kind {kind!r}; choose from {', '.join(CURVE_KINDS)}")
    return matches[0]


def boundary_curve(kind: str, r_max: float = CURVE_R_MAX, points: int = 1000) -> BoundaryCurve:
    kind = resolve_kind(kind)
    if points < 2:
        raise ValidationError("need at least 2 points")
    if r_max <= 0:
        raise DomainError("r_max must be > 0")
    r = np.linspace(0.0, r_max, points)
    if kind == "NG_pre_p0p1":
        p0, p1 = ng_curve_pre(r)
        return BoundaryCurve(kind, r, p0, p1)
    if kind == "NC_pre_p0p1":
        p0 = np.linspace(1.0, 0.0, points)
        return BoundaryCurve(kind, p0, p0, nc_bound_pre(p0))
    if kind == "NG_post_mu_g2":
        return BoundaryCurve(kind, r, mu_tilde(r), g2_tilde(r))
    if kind == "NC_post_mu_g2":
        mu = mu_tilde(r)
        return BoundaryCurve(kind, r, mu, nc_bound_post(mu))
    if kind == "Floor_post_mu_g2":
        w = np.linspace(0.0, 2.0, points, endpoint=False)
        mu = 1 + 2 * w
        return BoundaryCurve(kind, w, mu, floor_post(mu))
    if kind == "NG_pre_moments":
        m = (mu_tilde(r) - 1) / 2
        return BoundaryCurve(kind, r, m, ng_bound_moments(m))
    m = (mu_tilde(r) - 1) / 2
    return BoundaryCurve(kind, r, m, nc_bound_moments(m))


# ----------------------------------------------------------------------------
# Classification
# ----------------------------------------------------------------------------
def _note(category: str, margins: dict, sigma: Optional[float], extra: str = "") -> str:
    defined = [abs(v) for v in margins.values() if v is not None]
    if sigma is None or sigma <= 0:
        note = f"{category}: point estimate, no uncertainty supplied"
    elif defined and min(defined) <= sigma:
        note = f"{category}: inconclusive, nearest boundary within 1 sigma ({min(defined):.3g} <= {sigma:.3g})"
    else:
        note = f"{category}: every margin exceeds 1 sigma ({sigma:.3g})"
    return f"{note}; {extra}" if extra else note


def classify_probabilities(p0: float, p1: float, sigma_p0: float = 0.0, sigma_p1: float = 0.0) -> WitnessVerdict:
    """Classify an input state from its vacuum and single-photon probabilities.

    Margins are distances in ``p1``: ``ng = p1 - curve(p0)``,
    ``nc = p1 + p0 ln p0`` and ``physical = 1 - p0 - p1``; positive means
    the point passes that test.
    """
    for name, v in (("p0", p0), ("p1", p1)):
        if not 0 <= v <= 1:
            raise DomainError(f"{name} must lie in [0, 1], got {v}")
    sigma = math.hypot(sigma_p0, sigma_p1)
    ng_thr = ng_p1_threshold(p0)
    nc_thr = nc_bound_pre(p0)
    margins = {"ng": p1 - ng_thr, "nc": p1 - nc_thr, "physical": 1.0 - p0 - p1}
    thresholds = {"ng": ng_thr, "nc": nc_thr, "physical": 1.0 - p0}

    extra = ""
    if margins["physical"] < -(sigma + BOUNDARY_ATOL):
        category = VerdictCategory.NON_PHYSICAL
    elif margins["ng"] > BOUNDARY_ATOL:
        category = VerdictCategory.NON_GAUSSIAN
    elif margins["nc"] > BOUNDARY_ATOL:
        category = VerdictCategory.NON_CLASSICAL_ONLY
    else:
        category = VerdictCategory.CLASSICAL
    if category != VerdictCategory.NON_PHYSICAL and abs(margins["physical"]) <= max(sigma, 1e-9):
        extra = f"at the boundary between {category} and NonPhysical"
    return WitnessVerdict(category, margins, _note(category, margins, sigma or None, extra), thresholds)


def classify_moments(mu_rel: float, g2: float, sigma_mu: float = 0.0, sigma_g2: float = 0.0) -> WitnessVerdict:
    """Classify a post-amplification ``(mu_rel, g2)`` point.

    Margins are ``threshold - g2`` for the ``ng``, ``nc`` and ``floor``
    boundaries (positive: below that boundary). The floor is only defined
    for ``mu_rel < 5``; beyond it the floor margin is ``None``. The
    uncertainty used in the note combines ``sigma_g2`` with ``sigma_mu``
    propagated through the slope of the NG threshold.
    """
    if not mu_rel >= 1:
        raise DomainError(f"mu_rel must be >= 1, got {mu_rel}")
    ng = ng_bound_post(mu_rel)
    nc = nc_bound_post(mu_rel)
    floor = floor_post(mu_rel) if mu_rel < 5 else None
    margins = {"ng": ng - g2, "nc": nc - g2, "floor": None if floor is None else floor - g2}
    thresholds = {"ng": ng, "nc": nc, "floor": floor}

    if floor is not None and margins["floor"] > BOUNDARY_ATOL:
        category = VerdictCategory.BELOW_FLOOR
    elif margins["ng"] > BOUNDARY_ATOL:
        category = VerdictCategory.NON_GAUSSIAN
    elif margins["nc"] > BOUNDARY_ATOL:
        category = VerdictCategory.NON_CLASSICAL_ONLY
    else:
        category = VerdictCategory.CLASSICAL

    sigma = None
    if sigma_mu or sigma_g2:
        h = 1e-6
        slope = (ng_bound_post(mu_rel + h) - ng) / h
        sigma = math.hypot(sigma_g2, slope * sigma_mu)
    return WitnessVerdict(category, margins, _note(category, margins, sigma), thresholds)
