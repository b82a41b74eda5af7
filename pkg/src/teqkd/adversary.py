"""Intercept-resend eavesdropper limited by time-energy uncertainty.

To tell omega_1 from omega_2 Eve needs a detector of bandwidth gamma_* below
their split, and a detector that narrow cannot register a photon faster than
~1/gamma_*.  Every resent photon therefore arrives late on the tapped arm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .physics import DetectorSpec, acceptance_probability
from .roles import Choice, Party, bit_from_choice

__all__ = [
    "Strategy",
    "DelayModel",
    "AdversaryConfig",
    "InterceptOutcome",
    "intercept",
    "apply_to_round",
    "mean_added_delay",
]


class Strategy(str, enum.Enum):
    NARROWBAND_INTERCEPT = "narrowband_intercept"
    WIDEBAND_INTERCEPT = "wideband_intercept"


class DelayModel(str, enum.Enum):
    EXPONENTIAL = "exponential"  # rate 2 gamma_*, mean 1/(2 gamma_*)
    FLOOR = "floor"  # exactly 1/gamma_*


@dataclass(frozen=True)
class AdversaryConfig:
    detector_low: DetectorSpec
    detector_high: DetectorSpec
    enabled: bool = True
    tapped_arm: Party = Party.B
    strategy: Strategy = Strategy.NARROWBAND_INTERCEPT
    resend_on_miss: bool = True
    delay_model: DelayModel = DelayModel.EXPONENTIAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "tapped_arm", Party(self.tapped_arm))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "delay_model", DelayModel(self.delay_model))
        if self.detector_low.bandwidth != self.detector_high.bandwidth:
            raise ValueError("Eve's two detectors must share one bandwidth gamma_*")
        if self.detector_low.center_frequency >= self.detector_high.center_frequency:
            raise ValueError("detector_low must sit below detector_high")
        if self.strategy is Strategy.NARROWBAND_INTERCEPT and self.gamma_star >= self.split:
            raise ValueError(
                f"narrowband intercept needs gamma_* ({self.gamma_star:g}) below the "
                f"frequency split ({self.split:g}); use wideband_intercept"
            )

    @classmethod
    def build(
        cls,
        omega_low: float,
        omega_high: float,
        gamma_star: float,
        efficiency: float = 1.0,
        strategy: Optional[Strategy] = None,
        **kwargs,
    ) -> "AdversaryConfig":
        """Config with detectors at ``omega_low``/``omega_high``.

        With ``strategy=None`` the strategy is picked from ``gamma_star``
        versus the frequency split.
        """
        if strategy is None:
            strategy = (
                Strategy.NARROWBAND_INTERCEPT
                if gamma_star < abs(omega_high - omega_low)
                else Strategy.WIDEBAND_INTERCEPT
            )
        return cls(
            detector_low=DetectorSpec(omega_low, gamma_star, efficiency),
            detector_high=DetectorSpec(omega_high, gamma_star, efficiency),
            strategy=strategy,
            **kwargs,
        )

    @property
    def gamma_star(self) -> float:
        return self.detector_low.bandwidth

    @property
    def split(self) -> float:
        return self.detector_high.center_frequency - self.detector_low.center_frequency


@dataclass(frozen=True)
class InterceptOutcome:
    learned_bit: Optional[int]
    resent: bool
    added_delay: float
    resent_frequency: Optional[float] = None
    # omniscient bookkeeping, never published
    photon_frequency: Optional[float] = field(default=None, compare=False)
    estimated_bit: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.added_delay < 0:
            raise ValueError("Eve can only delay a photon, never advance it")
        if self.resent != (self.resent_frequency is not None):
            raise ValueError("resent_frequency is present exactly when resent")


def _draw_delay(cfg: AdversaryConfig, u: float) -> float:
    if cfg.delay_model is DelayModel.FLOOR:
        return 1.0 / cfg.gamma_star
    return -math.log1p(-u) / (2.0 * cfg.gamma_star)


def intercept(
    photon_frequency: float, cfg: AdversaryConfig, rng: np.random.Generator
) -> InterceptOutcome:
    """Measure one photon on the tapped arm and (maybe) resend a substitute.

    Eve picks one of her two detectors at random.  If it fires she knows the
    frequency and the bit.  If it stays dark she infers the photon was the
    other frequency (learned_bit stays empty, she never saw it) and resends
    that only when ``resend_on_miss`` is set.  Three uniforms are consumed
    on every call.
    """
    if not cfg.enabled:
        return InterceptOutcome(None, True, 0.0, photon_frequency, photon_frequency)
    u_pick, u_hit, u_delay = rng.random(3)
    if u_pick < 0.5:
        chosen, other = cfg.detector_low, cfg.detector_high
    else:
        chosen, other = cfg.detector_high, cfg.detector_low
    delay = _draw_delay(cfg, u_delay)

    if u_hit < acceptance_probability(chosen, photon_frequency):
        bit = _bit_at(chosen, cfg)
        return InterceptOutcome(
            learned_bit=bit,
            resent=True,
            added_delay=delay,
            resent_frequency=chosen.center_frequency,
            photon_frequency=photon_frequency,
            estimated_bit=bit,
        )
    if cfg.resend_on_miss:
        return InterceptOutcome(
            None, True, delay, other.center_frequency, photon_frequency, _bit_at(other, cfg)
        )
    return InterceptOutcome(None, False, 0.0, None, photon_frequency, _bit_at(other, cfg))


def _bit_at(detector: DetectorSpec, cfg: AdversaryConfig) -> int:
    # bit the tapped party records when its photon has this detector's frequency
    choice = Choice.NARROW_LOW if detector is cfg.detector_low else Choice.NARROW_HIGH
    return bit_from_choice(choice, cfg.tapped_arm)


def apply_to_round(outcome: InterceptOutcome, arm_time: float) -> float:
    """Raw detection time on the tapped arm once Eve's delay is included."""
    return arm_time + outcome.added_delay


def mean_added_delay(cfg: AdversaryConfig) -> float:
    if cfg.delay_model is DelayModel.FLOOR:
        return 1.0 / cfg.gamma_star
    return 1.0 / (2.0 * cfg.gamma_star)
