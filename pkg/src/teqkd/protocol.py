"""Two-party key generation: detector choice, rounds, announcements, sifting."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import physics
from .adversary import AdversaryConfig, InterceptOutcome, apply_to_round, intercept
from .channel import (
    ChannelSpec,
    DetectorClass,
    MessageKind,
    PublicMessage,
    Transcript,
    quantize,
    reduce_time,
)
from .physics import DetectorSpec, SourceSpec
from .roles import Choice, Party, bit_from_choice

__all__ = [
    "Choice",
    "Party",
    "bit_from_choice",
    "PartyConfig",
    "RoundRecord",
    "SiftedKey",
    "InsufficientRounds",
    "choose_detector",
    "run_round",
    "announce",
    "sift",
]


@dataclass(frozen=True)
class PartyConfig:
    narrow_low: DetectorSpec
    narrow_high: DetectorSpec
    wide: DetectorSpec
    p_wide: float = 0.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.p_wide < 1.0:
            raise ValueError(f"p_wide must lie in (0, 1), not {self.p_wide}")
        if self.narrow_low.center_frequency >= self.narrow_high.center_frequency:
            raise ValueError("narrow_low must be centred below narrow_high")

    @property
    def split(self) -> float:
        return self.narrow_high.center_frequency - self.narrow_low.center_frequency

    def detector(self, choice: Choice) -> DetectorSpec:
        return {
            Choice.WIDE: self.wide,
            Choice.NARROW_LOW: self.narrow_low,
            Choice.NARROW_HIGH: self.narrow_high,
        }[Choice(choice)]

    def validate(self, source: SourceSpec) -> list[str]:
        """Hard errors are returned; soft bandwidth problems are only warned about."""
        errors = []
        total = self.narrow_low.center_frequency + self.narrow_high.center_frequency
        if total != source.sum_frequency:
            errors.append(
                f"narrow centres must sum to the source frequency: "
                f"{self.narrow_low.center_frequency!r} + {self.narrow_high.center_frequency!r}"
                f" = {total!r} != {source.sum_frequency!r}"
            )
        for name in ("narrow_low", "narrow_high"):
            if getattr(self, name).bandwidth >= self.split:
                warnings.warn(f"{name} bandwidth does not resolve the frequency split", stacklevel=2)
        if self.wide.bandwidth <= self.split:
            warnings.warn("wide bandwidth is not larger than the frequency split", stacklevel=2)
        physics.check_bandwidths(source, self.narrow_low, self.narrow_high, self.wide)
        return errors


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    choice_A: Choice
    choice_B: Choice
    fired: bool
    t_A: Optional[float] = None
    t_B: Optional[float] = None
    T: Optional[float] = None
    # omniscient only: what Eve did on this round
    intercept: Optional[InterceptOutcome] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.choice_A, Choice):
            object.__setattr__(self, "choice_A", Choice(self.choice_A))
        if not isinstance(self.choice_B, Choice):
            object.__setattr__(self, "choice_B", Choice(self.choice_B))
        timing = (self.t_A, self.t_B, self.T)
        if self.fired:
            if any(x is None for x in timing):
                raise ValueError("a fired round needs t_A, t_B and T")
            if not math.isclose(self.T, self.t_B - self.t_A, rel_tol=1e-9, abs_tol=1e-21):
                raise ValueError("T must equal t_B - t_A")
        elif any(x is not None for x in timing):
            raise ValueError("a round that did not fire carries no timing")

    def choice(self, party: Party) -> Choice:
        return self.choice_A if Party(party) is Party.A else self.choice_B

    @property
    def is_narrow_narrow(self) -> bool:
        return self.choice_A.is_narrow and self.choice_B.is_narrow

    @property
    def is_wide_wide(self) -> bool:
        return self.choice_A is Choice.WIDE and self.choice_B is Choice.WIDE


@dataclass(frozen=True)
class SiftedKey:
    bits_A: tuple[int, ...]
    bits_B: tuple[int, ...]
    source_rounds: tuple[int, ...]
    test_rounds: tuple[int, ...]

    def __post_init__(self) -> None:
        if not len(self.bits_A) == len(self.bits_B) == len(self.source_rounds):
            raise ValueError("bit strings and source_rounds must have equal length")
        if set(self.source_rounds) & set(self.test_rounds):
            raise ValueError("key and test rounds overlap")

    def __len__(self) -> int:
        return len(self.source_rounds)

    @property
    def disagreements(self) -> int:
        return sum(a != b for a, b in zip(self.bits_A, self.bits_B))


class InsufficientRounds(RuntimeError):
    """Sifting left the key or the test partition empty."""


def choose_detector(cfg: PartyConfig, rng: np.random.Generator) -> Choice:
    u = rng.random()
    if u < cfg.p_wide:
        return Choice.WIDE
    if u < cfg.p_wide + 0.5 * (1.0 - cfg.p_wide):
        return Choice.NARROW_LOW
    return Choice.NARROW_HIGH


def _intercepted_delay(
    det_a: DetectorSpec,
    det_b: DetectorSpec,
    cfg_tapped: PartyConfig,
    source: SourceSpec,
    adversary: AdversaryConfig,
    rng: np.random.Generator,
) -> tuple[Optional[float], InterceptOutcome]:
    """Fire decision and intrinsic delay for a round Eve sits on.

    The photon on the tapped arm reaches Eve as omega_1 or omega_2 with equal
    odds; its partner carries the complement.  The untapped party sees the
    partner, the tapped party sees Eve's substitute, and each detector
    accepts its photon through the single-photon Lorentzian.
    """
    arm = adversary.tapped_arm
    omegas = (cfg_tapped.narrow_low.center_frequency, cfg_tapped.narrow_high.center_frequency)
    u_freq, u_fire = rng.random(2)
    photon = omegas[int(u_freq >= 0.5)]
    partner = source.sum_frequency - photon
    outcome = intercept(photon, adversary, rng)
    t = physics.sample_delay(physics.delay_distribution(det_a, det_b), rng)
    if source.kind is physics.SourceKind.DUAL_SINGLE_PHOTON:
        t += source.emission_time_jitter * rng.standard_normal()
    if not outcome.resent:
        return None, outcome
    det_tapped, det_free = (det_a, det_b) if arm is Party.A else (det_b, det_a)
    p = physics.acceptance_probability(det_free, partner) * physics.acceptance_probability(
        det_tapped, outcome.resent_frequency
    )
    return (t if u_fire < p else None), outcome


def run_round(
    idx: int,
    cfg_a: PartyConfig,
    cfg_b: PartyConfig,
    source: SourceSpec,
    channel: ChannelSpec,
    adversary: Optional[AdversaryConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> RoundRecord:
    """Play one round and return what both detectors recorded.

    Times are measured from the pair emission.  The earlier of the two
    honest detections is placed at reduced time 0; raw times add the
    propagation delay ``r / c`` (and Eve's delay on the tapped arm) and are
    then reduced and quantized exactly as a real receiver would.
    """
    if rng is None:
        rng = np.random.default_rng(idx)
    choice_a = choose_detector(cfg_a, rng)
    choice_b = choose_detector(cfg_b, rng)
    det_a, det_b = cfg_a.detector(choice_a), cfg_b.detector(choice_b)

    outcome = None
    if adversary is None or not adversary.enabled:
        t = physics.fire_outcome(det_a, det_b, source, rng)
    else:
        cfg_tapped = cfg_a if adversary.tapped_arm is Party.A else cfg_b
        t, outcome = _intercepted_delay(det_a, det_b, cfg_tapped, source, adversary, rng)

    if t is None:
        return RoundRecord(idx, choice_a, choice_b, False, intercept=outcome)

    raw = {
        Party.A: max(-t, 0.0) + channel.distance_A / channel.light_speed,
        Party.B: max(t, 0.0) + channel.distance_B / channel.light_speed,
    }
    if outcome is not None:
        arm = adversary.tapped_arm
        raw[arm] = apply_to_round(outcome, raw[arm])
    t_a = quantize(reduce_time(raw[Party.A], channel.distance_A, channel.light_speed),
                   channel.timing_resolution)
    t_b = quantize(reduce_time(raw[Party.B], channel.distance_B, channel.light_speed),
                   channel.timing_resolution)
    return RoundRecord(idx, choice_a, choice_b, True, t_a, t_b, t_b - t_a, intercept=outcome)


def _detector_class(choice: Choice) -> DetectorClass:
    return DetectorClass.WIDE if choice is Choice.WIDE else DetectorClass.NARROW


def announce(records: Iterable[RoundRecord], transcript: Transcript) -> Transcript:
    """Publish detector classes and fired flags, plus T for wide-wide coincidences.

    Only the wide/narrow class goes out; which narrow detector was used
    stays private.  Wide-wide delays are disclosed so both parties can run
    the eavesdropping test on identical data.
    """
    for rec in records:
        i = rec.round_index
        for party in (Party.A, Party.B):
            transcript.append(
                PublicMessage(i, party, MessageKind.DETECTOR_CLASS, _detector_class(rec.choice(party)))
            )
        for party in (Party.A, Party.B):
            transcript.append(PublicMessage(i, party, MessageKind.FIRED, rec.fired))
        if rec.fired and rec.is_wide_wide:
            transcript.append(PublicMessage(i, Party.A, MessageKind.TEST_DISCLOSURE, rec.T))
    return transcript


def public_partition(transcript: Transcript) -> tuple[list[int], list[int]]:
    """Key and test round indices as anyone reading the transcript sees them."""
    classes: dict[int, dict[Party, DetectorClass]] = {}
    fired: dict[int, bool] = {}
    for msg in transcript:
        if msg.kind is MessageKind.DETECTOR_CLASS:
            classes.setdefault(msg.round_index, {})[msg.sender] = msg.value
        elif msg.kind is MessageKind.FIRED:
            fired[msg.round_index] = fired.get(msg.round_index, True) and msg.value
    key, test = [], []
    for i in sorted(classes):
        if not fired.get(i, False):
            continue
        both = set(classes[i].values())
        if len(classes[i]) != 2 or len(both) != 1:
            continue
        (cls,) = both
        (key if cls is DetectorClass.NARROW else test).append(i)
    return key, test


def sift(
    records: Sequence[RoundRecord], transcript: Transcript, *, strict: bool = True
) -> SiftedKey:
    """Split fired rounds into key (narrow-narrow) and test (wide-wide) rounds.

    The partition comes from public data only; the bits come from each
    party's private detector choice.  Mixed wide-narrow rounds are dropped.
    With ``strict`` an empty key or test partition raises
    :class:`InsufficientRounds`.
    """
    by_index = {r.round_index: r for r in records}
    key_rounds, test_rounds = public_partition(transcript)
    missing = [i for i in key_rounds + test_rounds if i not in by_index]
    if missing:
        raise ValueError(f"transcript mentions rounds with no record: {missing[:5]}")
    bits_a = tuple(bit_from_choice(by_index[i].choice_A, Party.A) for i in key_rounds)
    bits_b = tuple(bit_from_choice(by_index[i].choice_B, Party.B) for i in key_rounds)
    key = SiftedKey(bits_a, bits_b, tuple(key_rounds), tuple(test_rounds))
    if strict and (not key_rounds or not test_rounds):
        raise InsufficientRounds(
            f"{len(key_rounds)} key rounds and {len(test_rounds)} test rounds after sifting"
        )
    return key
