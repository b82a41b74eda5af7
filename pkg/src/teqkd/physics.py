"""Biphoton detection statistics.

The joint registration statistics of a photon pair measured by two
photodetectors are described by a correlation function of the delay
``T = t_B - t_A`` between the reduced registration moments.  This module
evaluates that function and splits it into two pieces the simulator can use:

* a coincidence probability (a Lorentzian in the frequency mismatch
  ``omega_0 - omega_A - omega_B``), and
* a normalized two-sided exponential delay distribution.

All frequencies are angular frequencies in s^-1 and all times are seconds
(hbar = 1).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

__all__ = [
    "DetectorSpec",
    "SourceKind",
    "SourceSpec",
    "DelayDistribution",
    "correlation_density",
    "coincidence_probability",
    "acceptance_probability",
    "delay_distribution",
    "sample_delay",
    "fire_outcome",
    "check_bandwidths",
]

# smallest positive double; keeps log() finite when a uniform draw is exactly 0
_TINY = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class DetectorSpec:
    """A photodetector centred on ``center_frequency`` with half-width ``bandwidth``."""

    center_frequency: float
    bandwidth: float
    efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.center_frequency):
            raise ValueError(f"center_frequency must be finite, not {self.center_frequency}")
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be finite and > 0, not {self.bandwidth}")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], not {self.efficiency}")


class SourceKind(str, enum.Enum):
    BIPHOTON = "biphoton"
    DUAL_SINGLE_PHOTON = "dual_single_photon"


@dataclass(frozen=True)
class SourceSpec:
    """Photon source.

    ``spectral_width`` is the width of the pair spectrum.  The delay model
    assumes it is broad compared with every detector; it is carried for
    validation only (see :func:`check_bandwidths`).  ``emission_time_jitter``
    is the standard deviation of the emission-time uncertainty and is only
    used by the ``dual_single_photon`` kind.
    """

    sum_frequency: float
    kind: SourceKind = SourceKind.BIPHOTON
    emission_time_jitter: float = 0.0
    spectral_width: float = 1e12

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SourceKind(self.kind))
        if not (math.isfinite(self.sum_frequency) and self.sum_frequency > 0):
            raise ValueError(f"sum_frequency must be > 0, not {self.sum_frequency}")
        if not (math.isfinite(self.emission_time_jitter) and self.emission_time_jitter >= 0):
            raise ValueError(
                f"emission_time_jitter must be >= 0, not {self.emission_time_jitter}"
            )
        if not (math.isfinite(self.spectral_width) and self.spectral_width > 0):
            raise ValueError(f"spectral_width must be > 0, not {self.spectral_width}")


@dataclass(frozen=True)
class DelayDistribution:
    """Two-sided exponential law of ``T``.

    Density ``w+ r+ exp(-r+ T)`` for ``T >= 0`` and ``w- r- exp(r- T)`` for
    ``T < 0`` with ``w- = 1 - w+``.
    """

    rate_positive: float
    rate_negative: float
    weight_positive: float

    def __post_init__(self) -> None:
        if not (self.rate_positive > 0 and self.rate_negative > 0):
            raise ValueError("rates must be > 0")
        if not 0.0 < self.weight_positive < 1.0:
            raise ValueError(f"weight_positive must lie in (0, 1), not {self.weight_positive}")

    @property
    def weight_negative(self) -> float:
        return 1.0 - self.weight_positive

    @property
    def mean(self) -> float:
        return self.weight_positive / self.rate_positive - self.weight_negative / self.rate_negative

    @property
    def variance(self) -> float:
        second = (
            self.weight_positive * 2.0 / self.rate_positive**2
            + self.weight_negative * 2.0 / self.rate_negative**2
        )
        return second - self.mean**2

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        pos = self.weight_positive * self.rate_positive * np.exp(-self.rate_positive * np.abs(t))
        neg = self.weight_negative * self.rate_negative * np.exp(-self.rate_negative * np.abs(t))
        return np.where(t >= 0, pos, neg)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        below = self.weight_negative * np.exp(self.rate_negative * np.minimum(t, 0.0))
        above = self.weight_negative + self.weight_positive * -np.expm1(
            -self.rate_positive * np.maximum(t, 0.0)
        )
        return np.where(t >= 0, above, below)

    def ppf(self, u):
        """Inverse CDF, used for inverse-transform sampling."""
        u = np.asarray(u, dtype=float)
        w_neg = self.weight_negative
        with np.errstate(divide="ignore", invalid="ignore"):
            neg = np.log(np.maximum(u, _TINY) / w_neg) / self.rate_negative
            v = (u - w_neg) / self.weight_positive
            pos = -np.log1p(-np.clip(v, 0.0, 1.0)) / self.rate_positive
        return np.where(u < w_neg, neg, pos)

    def abs_quantile(self, q: float) -> float:
        """Quantile of ``|T|``, found by bisection on its CDF."""
        def mass_within(x: float) -> float:
            return float(self.cdf(x) - self.cdf(-x))

        hi = 1.0 / min(self.rate_positive, self.rate_negative)
        while mass_within(hi) < q:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mass_within(mid) < q:
                lo = mid
            else:
                hi = mid
        return hi


def _mismatch(det_a: DetectorSpec, det_b: DetectorSpec, source: SourceSpec) -> float:
    return source.sum_frequency - det_a.center_frequency - det_b.center_frequency


def correlation_density(
    t: float, det_a: DetectorSpec, det_b: DetectorSpec, source: SourceSpec
) -> float:
    """Unnormalized joint-registration density at delay ``t``.

    ``(2 pi gA gB)^2 [exp(-2 gB t) if t >= 0 else exp(2 gA t)] / (Omega^2 + (gA + gB)^2)``.
    ``t = 0`` goes to the first branch; both branches equal 1 there.
    """
    ga, gb = det_a.bandwidth, det_b.bandwidth
    omega = _mismatch(det_a, det_b, source)
    shape = math.exp(-2.0 * gb * t) if t >= 0 else math.exp(2.0 * ga * t)
    return (2.0 * math.pi * ga * gb) ** 2 * shape / (omega**2 + (ga + gb) ** 2)


def coincidence_probability(
    det_a: DetectorSpec, det_b: DetectorSpec, source: SourceSpec
) -> float:
    """Probability that both detectors fire on one emitted pair.

    Lorentzian ``(gA + gB)^2 / (Omega^2 + (gA + gB)^2)`` scaled by both
    efficiencies; equal to ``eta_A * eta_B`` for complementary detectors.
    """
    width2 = (det_a.bandwidth + det_b.bandwidth) ** 2
    omega = _mismatch(det_a, det_b, source)
    return det_a.efficiency * det_b.efficiency * width2 / (omega**2 + width2)


def acceptance_probability(detector: DetectorSpec, photon_frequency: float) -> float:
    """Probability that a lone photon of known frequency fires ``detector``.

    Same Lorentzian lineshape as :func:`coincidence_probability` with the
    partner's bandwidth taken to zero.
    """
    g2 = detector.bandwidth**2
    delta = photon_frequency - detector.center_frequency
    return detector.efficiency * g2 / (delta**2 + g2)


def delay_distribution(det_a: DetectorSpec, det_b: DetectorSpec) -> DelayDistribution:
    ga, gb = det_a.bandwidth, det_b.bandwidth
    return DelayDistribution(
        rate_positive=2.0 * gb,
        rate_negative=2.0 * ga,
        weight_positive=ga / (ga + gb),
    )


def sample_delay(
    dist: DelayDistribution, rng: np.random.Generator, size: Optional[int] = None
) -> Union[float, np.ndarray]:
    """Draw ``T`` by inverse transform; one uniform per sample."""
    if size is None:
        return _ppf_scalar(dist, rng.random())
    return dist.ppf(rng.random(size))


def _ppf_scalar(dist: DelayDistribution, u: float) -> float:
    w_neg = dist.weight_negative
    if u < w_neg:
        return math.log(max(u, _TINY) / w_neg) / dist.rate_negative
    v = min((u - w_neg) / dist.weight_positive, 1.0)
    return -math.log1p(-v) / dist.rate_positive if v < 1.0 else math.inf


def fire_outcome(
    det_a: DetectorSpec,
    det_b: DetectorSpec,
    source: SourceSpec,
    rng: np.random.Generator,
) -> Optional[float]:
    """Simulate one pair: ``None`` if no coincidence, else the delay ``T``.

    Always consumes the same number of draws from ``rng`` (two, plus one
    normal draw for the dual single-photon source) so that runs with
    different detector choices stay aligned on a shared stream.
    """
    u_fire = rng.random()
    t = sample_delay(delay_distribution(det_a, det_b), rng)
    if source.kind is SourceKind.DUAL_SINGLE_PHOTON:
        t += source.emission_time_jitter * rng.standard_normal()
    if u_fire >= coincidence_probability(det_a, det_b, source):
        return None
    return t


def check_bandwidths(source: SourceSpec, *detectors: DetectorSpec) -> list[str]:
    """Warn about detectors wider than the source spectrum; returns the messages."""
    problems = [
        f"detector bandwidth {d.bandwidth:g} s^-1 exceeds source spectral width "
        f"{source.spectral_width:g} s^-1"
        for d in detectors
        if d.bandwidth > source.spectral_width
    ]
    for msg in problems:
        warnings.warn(msg, stacklevel=2)
    return problems
