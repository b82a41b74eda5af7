"""Monte Carlo simulator for key distribution secured by time-energy uncertainty."""

from .adversary import AdversaryConfig, DelayModel, InterceptOutcome, Strategy, apply_to_round, intercept
from .channel import ChannelSpec, OrderingViolation, PublicMessage, Transcript, exchange, reduce_time
from .config import ConfigError, ScenarioConfig, baseline, load
from .physics import (
    DelayDistribution,
    DetectorSpec,
    SourceKind,
    SourceSpec,
    acceptance_probability,
    coincidence_probability,
    correlation_density,
    delay_distribution,
    fire_outcome,
    sample_delay,
)
from .protocol import (
    Choice,
    InsufficientRounds,
    Party,
    PartyConfig,
    RoundRecord,
    SiftedKey,
    announce,
    bit_from_choice,
    choose_detector,
    run_round,
    sift,
)
from .simulation import replay, run_trial, sweep
from .stats import Decision, TestVerdict, detection_probability, eavesdrop_test, summarize

__version__ = "0.1.0"
