"""
Photon-number statistics: core data types, exact moments and sample estimators.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be shared freely between threads.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .errors import EstimationError, PulseFormatError, ValidationError

__all__ = [
    "NORMALIZATION_TOL",
    "TAIL_TOL",
    "PhotonNumberDistribution",
    "MomentSummary",
    "SampleMoments",
    "IntensityDistribution",
    "PulseRecordSet",
    "WitnessVerdict",
    "VerdictCategory",
    "ValidationResult",
    "validate",
    "moments",
    "g2_from_moments",
    "estimate_moments",
    "bootstrap_streams",
    "seed_sequence",
    "seed_label",
]

NORMALIZATION_TOL = 1e-9
TAIL_TOL = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ----------------------------------------------------------------------------
# Photon-number distribution
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Fock-diagonal state as a truncated probability vector ``probs[n]``."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen_array(np.atleast_1d(self.probs)))

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    @property
    def p0(self) -> float:
        return float(self.probs[0])

    @property
    def p1(self) -> float:
        return float(self.probs[1]) if self.n_max >= 1 else 0.0

    @property
    def p2plus(self) -> float:
        return float(self.probs[2:].sum())

    def padded(self, n_max: int) -> np.ndarray:
        """Copy of ``probs`` zero-padded (never truncated) to length ``n_max + 1``."""
        if n_max < self.n_max:
            raise ValueError(f"cannot pad to n_max={n_max} < {self.n_max}")
        out = np.zeros(n_max + 1)
        out[: len(self.probs)] = self.probs
        return out

    def trimmed(self, atol: float = 0.0) -> "PhotonNumberDistribution":
        """Drop trailing entries that are <= ``atol`` (keeps at least ``p0``)."""
        nz = np.nonzero(self.probs > atol)[0]
        last = int(nz[-1]) if nz.size else 0
        return PhotonNumberDistribution(self.probs[: last + 1])

    def to_json(self) -> str:
        return json.dumps({"probs": [float(p) for p in self.probs]})

    @classmethod
    def from_json(cls, text: str) -> "PhotonNumberDistribution":
        try:
            data = json.loads(text)
            probs = data["probs"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"expected a JSON object with key 'probs': {exc}") from exc
        if not isinstance(probs, list) or not probs:
            raise ValidationError("'probs' must be a non-empty JSON array")
        return cls(np.asarray(probs, dtype=float))


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate(dist: PhotonNumberDistribution, tol: float = NORMALIZATION_TOL) -> ValidationResult:
    """Check non-negativity and normalization; report the first violation.

    Never raises.
    """
    p = np.asarray(dist.probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        return ValidationResult(False, "probs must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(p)):
        return ValidationResult(False, "probs contain non-finite entries")
    neg = np.nonzero(p < 0)[0]
    if neg.size:
        return ValidationResult(False, f"probs[{neg[0]}] = {p[neg[0]]:g} < 0")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        return ValidationResult(False, f"sum = {total:.12g}")
    return ValidationResult(True)


def _require_valid(dist: PhotonNumberDistribution) -> None:
    res = validate(dist)
    if not res:
        raise ValidationError(f"invalid photon-number distribution: {res.message}")


# ----------------------------------------------------------------------------
# Moments
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class MomentSummary:
    """Mean ``m``, variance ``s2`` and g2 of a photon-number distribution.

    ``g2_pre`` is ``None`` when ``m == 0``; check :attr:`g2_defined` before
    using it.
    """

    m: float
    s2: float
    g2_pre: Optional[float]

    def __post_init__(self):
        if self.m < 0 or self.s2 < 0:
            raise ValidationError(f"moments must be non-negative (m={self.m}, s2={self.s2})")

    @property
    def g2_defined(self) -> bool:
        return self.g2_pre is not None

    @classmethod
    def from_mean_variance(cls, m: float, s2: float) -> "MomentSummary":
        return cls(float(m), float(s2), g2_from_moments(m, s2))


def g2_from_moments(mean: float, var: float) -> Optional[float]:
    """``1 + (var - mean) / mean**2``, or ``None`` for zero mean."""
    # a mean so small that its square underflows is as undefined as zero
    if mean * mean == 0:
        return None
    return 1.0 + (var - mean) / mean**2


def moments(dist: PhotonNumberDistribution) -> MomentSummary:
    """Exact mean, variance and g2 by direct summation over ``n``."""
    _require_valid(dist)
    p = dist.probs
    n = np.arange(p.size, dtype=float)
    m = float(np.dot(n, p))
    s2 = float(np.dot((n - m) ** 2, p))
    # factorial moment avoids the cancellation in (s2 - m) at small m
    g2 = float(np.dot(n * (n - 1), p)) / (m * m) if m * m > 0 else None
    return MomentSummary(m, s2, g2)


# ----------------------------------------------------------------------------
# Pulse records and sample moments
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class PulseRecordSet:
    """Per-pulse detected intensity with optional herald flags."""

    counts: np.ndarray
    herald: Optional[np.ndarray] = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        counts = _frozen_array(np.atleast_1d(self.counts))
        if counts.ndim != 1:
            raise ValidationError("counts must be one-dimensional")
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        if self.herald is not None:
            herald = _frozen_array(np.atleast_1d(self.herald), dtype=bool)
            if herald.shape != counts.shape:
                raise ValidationError(
                    f"herald length {herald.size} does not match counts length {counts.size}"
                )
            object.__setattr__(self, "herald", herald)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return self.counts.size

    def heralded(self) -> "PulseRecordSet":
        """Subset with herald == 1. Without a herald column the set is returned as is."""
        if self.herald is None:
            return self
        keep = self.herald
        return PulseRecordSet(self.counts[keep], np.ones(int(keep.sum()), dtype=bool), self.meta)

    def scaled(self, factor: float) -> "PulseRecordSet":
        return PulseRecordSet(self.counts * factor, self.herald, self.meta)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if self.herald is None:
                writer.writerow(["pulse_index", "counts"])
                for i, c in enumerate(self.counts):
                    writer.writerow([i, repr(float(c))])
            else:
                writer.writerow(["pulse_index", "counts", "herald"])
                for i, (c, h) in enumerate(zip(self.counts, self.herald)):
                    writer.writerow([i, repr(float(c)), int(h)])

    @classmethod
    def from_csv(cls, path, meta: Optional[Mapping[str, Any]] = None) -> "PulseRecordSet":
        counts: list[float] = []
        herald: list[bool] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise PulseFormatError("file is empty", line=1) from None
            header = [h.strip() for h in header]
            if header not in (["pulse_index", "counts"], ["pulse_index", "counts", "herald"]):
                raise PulseFormatError(
                    f"expected header 'pulse_index,counts[,herald]', got {','.join(header)!r}",
                    line=1,
                )
            has_herald = len(header) == 3
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise PulseFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
                try:
                    int(row[0])
                    c = float(row[1])
                except ValueError as exc:
                    raise PulseFormatError(str(exc), lineno) from None
                if not np.isfinite(c) or c < 0:
                    raise PulseFormatError(f"counts must be finite and >= 0, got {row[1]!r}", lineno)
                counts.append(c)
                if has_herald:
                    flag = row[2].strip()
                    if flag not in ("0", "1"):
                        raise PulseFormatError(f"herald must be 0 or 1, got {flag!r}", lineno)
                    herald.append(flag == "1")
        if not counts:
            raise PulseFormatError("no data rows")
        return cls(np.asarray(counts), np.asarray(herald) if has_herald else None, meta or {})


@dataclass(frozen=True)
class SampleMoments:
    """Sample mean, unbiased variance and g2 with bootstrap intervals.

    Intervals are central percentile intervals at level ``ci_level``; the
    ``*_se`` fields are the bootstrap standard deviations.
    """

    mean: float
    var: float
    g2: float
    mean_ci: tuple[float, float]
    var_ci: tuple[float, float]
    g2_ci: tuple[float, float]
    mean_se: float
    g2_se: float
    n: int
    n_boot: int
    ci_level: float

    @property
    def summary(self) -> MomentSummary:
        return MomentSummary(self.mean, self.var, self.g2)


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, ``None`` or an existing :class:`numpy.random.SeedSequence`."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def seed_label(seed):
    """JSON-friendly description of a seed for provenance blocks."""
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": int(seed.entropy), "spawn_key": [int(k) for k in seed.spawn_key]}
    return seed


def bootstrap_streams(seed, n_boot: int) -> list[np.random.Generator]:
    """One independent generator per resample index, derived from ``seed``.

    Resample ``i`` only depends on ``(seed, i)``, so blocks of resamples can
    be computed in any order or in parallel with identical results.
    """
    return [np.random.default_rng(s) for s in seed_sequence(seed).spawn(n_boot)]


def _g2_of(x: np.ndarray, axis=-1) -> np.ndarray:
    mean = x.mean(axis=axis)
    var = x.var(axis=axis, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 + (var - mean) / mean**2


def _percentile_ci(samples: np.ndarray, level: float) -> tuple[float, float]:
    lo, hi = np.percentile(samples, [50 * (1 - level), 50 * (1 + level)])
    return float(lo), float(hi)


def estimate_moments(
    records: PulseRecordSet | np.ndarray,
    n_boot: int = 1000,
    ci_level: float = 0.68,
    seed=0,
) -> SampleMoments:
    """Estimate mean, variance and g2 of pulse intensities.

    Parameters
    ----------
    records : PulseRecordSet or array_like
        Detected intensity per pulse.
    n_boot : int
        Number of bootstrap resamples (0 disables the bootstrap; intervals
        then collapse to the point estimate).
    ci_level : float
        Coverage of the central percentile interval.
    seed : int
        Root seed of the per-resample streams.
    """
    x = np.asarray(records.counts if isinstance(records, PulseRecordSet) else records, dtype=float)
    if x.size < 2:
        raise EstimationError(f"need at least 2 pulses, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise EstimationError("counts contain non-finite values")
    mean = float(x.mean())
    if mean == 0:
        raise EstimationError("all counts are zero; g2 undefined")
    var = float(x.var(ddof=1))
    g2 = 1.0 + (var - mean) / mean**2

    if n_boot <= 0:
        point = lambda v: (v, v)  # noqa: E731
        return SampleMoments(mean, var, g2, point(mean), point(var), point(g2), 0.0, 0.0, x.size, 0, ci_level)

    means = np.empty(n_boot)
    vars_ = np.empty(n_boot)
    for i, rng in enumerate(bootstrap_streams(seed, n_boot)):
        xs = x[rng.integers(0, x.size, x.size)]
        means[i] = xs.mean()
        vars_[i] = xs.var(ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        g2s = 1.0 + (vars_ - means) / means**2
    g2s = g2s[np.isfinite(g2s)]
    return SampleMoments(
        mean,
        var,
        g2,
        _percentile_ci(means, ci_level),
        _percentile_ci(vars_, ci_level),
        _percentile_ci(g2s, ci_level),
        float(means.std(ddof=1)),
        float(g2s.std(ddof=1)),
        x.size,
        n_boot,
        ci_level,
    )


# ----------------------------------------------------------------------------
# Intensity distribution after amplification
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class IntensityDistribution:
    """Probability density over the post-amplification photon number ``N``."""

    grid: np.ndarray
    density: np.ndarray
    gain: float

    def __post_init__(self):
        grid = _frozen_array(self.grid)
        density = _frozen_array(self.density)
        if grid.shape != density.shape or grid.ndim != 1:
            raise ValidationError("grid and density must be 1-D arrays of equal length")
        if np.any(np.diff(grid) <= 0) or grid[0] < 0:
            raise ValidationError("grid must be strictly increasing and non-negative")
        if not np.all(np.isfinite(density)) or np.any(density < 0):
            raise ValidationError("density must be finite and non-negative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)

    def total(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.density, self.grid))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["N", "density"])
            for n, d in zip(self.grid, self.density):
                writer.writerow([repr(float(n)), repr(float(d))])


# ----------------------------------------------------------------------------
# Witness verdicts
# ----------------------------------------------------------------------------
class VerdictCategory:
    NON_GAUSSIAN = "NonGaussian"
    NON_CLASSICAL_ONLY = "NonClassicalOnly"
    CLASSICAL = "Classical"
    BELOW_FLOOR = "BelowPhaseIndependentFloor"
    NON_PHYSICAL = "NonPhysical"

    ALL = (NON_GAUSSIAN, NON_CLASSICAL_ONLY, CLASSICAL, BELOW_FLOOR, NON_PHYSICAL)


@dataclass(frozen=True)
class WitnessVerdict:
    """Classification of one measured point.

    ``margins`` maps a boundary name to ``threshold - value`` expressed so
    that a positive margin means the point is on the non-classical side of
    that boundary.
    """

    category: str
    margins: Mapping[str, Optional[float]]
    confidence_note: str = ""
    thresholds: Mapping[str, Optional[float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.category not in VerdictCategory.ALL:
            raise ValidationError(f"unknown verdict category {self.category!r}")
        object.__setattr__(self, "margins", dict(self.margins))
        object.__setattr__(self, "thresholds", dict(self.thresholds))

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "margins": dict(self.margins),
            "thresholds": dict(self.thresholds),
            "confidence_note": self.confidence_note,
        }


def as_distribution(probs: Sequence[float] | PhotonNumberDistribution) -> PhotonNumberDistribution:
    if isinstance(probs, PhotonNumberDistribution):
        return probs
    return PhotonNumberDistribution(np.asarray(probs, dtype=float))
