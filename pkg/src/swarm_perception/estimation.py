"""Sensor model, local maximum-likelihood estimation and confidence-weighted fusion.

Every function here is pure. The array-level helpers (:func:`mle_fill_ratio`,
:func:`fisher_confidence`) broadcast over numpy arrays and are what the
simulators use; the tally/accuracy wrappers are the scalar, per-robot view.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_ALPHA_MAX = 1e12


@dataclass(frozen=True)
class SensorAccuracy:
    """Probabilities of a correct reading on a black (``b``) and white (``w``) tile."""

    b: float
    w: float

    def __post_init__(self):
        for name in ("b", "w"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"sensor accuracy {name}={value} outside [0, 1]")

    @property
    def informative(self) -> bool:
        return self.b + self.w > 1.0

    @property
    def q(self) -> float:
        return (self.b + self.w - 1.0) ** 2


@dataclass(frozen=True)
class ObservationTally:
    """Running count of black readings ``n`` out of ``t`` readings."""

    n: int = 0
    t: int = 0

    def __post_init__(self):
        if not 0 <= self.n <= self.t:
            raise ValueError(f"invalid tally n={self.n}, t={self.t}: need 0 <= n <= t")

    def record(self, reading: bool) -> "ObservationTally":
        return ObservationTally(self.n + int(bool(reading)), self.t + 1)


@dataclass(frozen=True)
class EstimatePair:
    """An estimate of the fill ratio together with its information weight."""

    value: float = 0.0
    confidence: float = 0.0


NEUTRAL = EstimatePair(0.0, 0.0)


def reading_probability(f: float, acc: SensorAccuracy) -> float:
    """Probability that a single reading comes back black for fill ratio ``f``."""
    return acc.b * f + (1.0 - acc.w) * (1.0 - f)


def sample_reading(tile_is_black: bool, acc: SensorAccuracy, rng: np.random.Generator) -> bool:
    """Pass one true tile color through the noisy sensor; consumes one uniform draw."""
    u = rng.random()
    if tile_is_black:
        return bool(u < acc.b)
    return bool(u < 1.0 - acc.w)


def _check_domain(t, b, w):
    if np.any(np.asarray(t) < 1):
        raise ValueError("local estimation needs at least one observation (t >= 1)")
    if np.any(np.asarray(b) + np.asarray(w) <= 1.0):
        raise ValueError("sensor is uninformative: estimation requires b + w > 1")


def mle_fill_ratio(n, t, b, w):
    """Maximum-likelihood fill ratio from ``n`` black readings out of ``t``.

    Broadcasts over array arguments. Readings at or below the false-positive
    floor ``(1 - w) t`` map to 0, readings at or above ``b t`` map to 1, and the
    interior is the inverted sensor model.
    """
    _check_domain(t, b, w)
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = (n / t + w - 1.0) / (b + w - 1.0)
    low = n <= (1.0 - w) * t
    high = n >= b * t
    out = np.where(low, 0.0, np.where(high, 1.0, interior))
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def fisher_confidence(n, t, b, w, alpha_max: float = DEFAULT_ALPHA_MAX):
    """Fisher-information confidence matching the branch picked by :func:`mle_fill_ratio`.

    Singular boundary branches (``w == 1`` on the low branch, ``b == 1`` on the
    high branch) and anything above ``alpha_max`` are reported as ``alpha_max``.
    """
    _check_domain(t, b, w)
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    q = (b + w - 1.0) ** 2
    low = n <= (1.0 - w) * t
    high = n >= b * t
    with np.errstate(divide="ignore", invalid="ignore"):
        low_den = w**2 * (w - 1.0) ** 2
        low_val = q * (t * w**2 - 2.0 * (t - n) * w + (t - n)) / low_den
        high_den = b**2 * (b - 1.0) ** 2
        high_val = q * (t * b**2 - 2.0 * n * b + n) / high_den
        mid_val = q * t**3 / (n * (t - n))
    out = np.where(low, np.where(low_den == 0.0, alpha_max, low_val),
                   np.where(high, np.where(high_den == 0.0, alpha_max, high_val), mid_val))
    out = np.where(np.isfinite(out), out, alpha_max)
    out = np.minimum(out, alpha_max)
    return out if out.ndim else float(out)


def local_estimate(tally: ObservationTally, acc: SensorAccuracy) -> float:
    return mle_fill_ratio(tally.n, tally.t, acc.b, acc.w)


def local_confidence(tally: ObservationTally, acc: SensorAccuracy,
                     alpha_max: float = DEFAULT_ALPHA_MAX) -> float:
    return fisher_confidence(tally.n, tally.t, acc.b, acc.w, alpha_max)


def local_pair(tally: ObservationTally, acc: SensorAccuracy,
               alpha_max: float = DEFAULT_ALPHA_MAX) -> EstimatePair:
    return EstimatePair(local_estimate(tally, acc), local_confidence(tally, acc, alpha_max))


def fuse_social(neighbor_estimates: Iterable[EstimatePair]) -> EstimatePair:
    """Confidence-weighted mean of the neighbors' local estimates.

    An empty input, or one carrying zero total confidence, yields the neutral
    pair ``(0, 0)`` so that fusing it leaves an estimate unchanged.
    """
    estimates: Sequence[EstimatePair] = list(neighbor_estimates)
    for e in estimates:
        if e.confidence < 0:
            raise ValueError(f"negative confidence {e.confidence}")
    beta = sum(e.confidence for e in estimates)
    if beta == 0:
        return NEUTRAL
    value = sum(e.confidence * e.value for e in estimates) / beta
    return EstimatePair(min(max(value, 0.0), 1.0), beta)


def informed_estimate(local: EstimatePair, social: EstimatePair) -> EstimatePair:
    """Combine a robot's own estimate with its social estimate."""
    total = local.confidence + social.confidence
    if total <= 0:
        raise ValueError("cannot form an informed estimate with zero total confidence")
    if social.confidence == 0:
        return local
    value = (local.confidence * local.value + social.confidence * social.value) / total
    return EstimatePair(min(max(value, 0.0), 1.0), total)


def fuse_arrays(local, alpha, social, beta):
    """Element-wise :func:`informed_estimate` over arrays; zero ``beta`` passes ``local`` through."""
    with np.errstate(divide="ignore", invalid="ignore"):
        mixed = np.clip((alpha * local + beta * social) / (alpha + beta), 0.0, 1.0)
    return np.where(beta == 0, local, mixed)
