"""End-to-end runs: rounds, announcements, sifting, test; event logs and sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .adversary import InterceptOutcome
from .channel import (
    EventRecord,
    MessageKind,
    PublicMessage,
    Transcript,
    Verdict,
    decode_record,
    encode_record,
)
from .config import ScenarioConfig
from .protocol import RoundRecord, SiftedKey, announce, run_round, sift
from .roles import Party
from .stats import (
    Decision,
    RunSummary,
    TestVerdict,
    eavesdrop_test,
    eve_bit_agreement,
    summarize,
)
from . import physics

__all__ = [
    "round_rng",
    "run_rounds",
    "RunResult",
    "run_trial",
    "TrialStats",
    "run_trials",
    "event_records",
    "encode_events",
    "replay",
    "SweepRow",
    "sweep",
    "nn_error_floor",
]


def round_rng(cfg: ScenarioConfig, trial: int, idx: int, seed: Optional[int] = None) -> np.random.Generator:
    """Independent stream for one round of one trial."""
    base = cfg.seed if seed is None else seed
    return np.random.default_rng([base, cfg.party_A.rng_seed, cfg.party_B.rng_seed, trial, idx])


def run_rounds(cfg: ScenarioConfig, trial: int = 0, seed: Optional[int] = None) -> list[RoundRecord]:
    adversary = cfg.adversary if cfg.adversary.enabled else None
    return [
        run_round(i, cfg.party_A, cfg.party_B, cfg.source, cfg.channel, adversary,
                  round_rng(cfg, trial, i, seed))
        for i in range(cfg.n_rounds)
    ]


@dataclass
class RunResult:
    config: ScenarioConfig
    records: list[RoundRecord]
    transcript: Transcript
    key: SiftedKey
    verdict: TestVerdict
    n_announced: int

    def summary(self) -> RunSummary:
        tapped = self.config.adversary.tapped_arm if self.config.adversary.enabled else None
        return summarize(self.records, self.key, self.verdict, tapped_arm=tapped,
                         bins=self.config.histogram_bins)


def conclude(
    records: Sequence[RoundRecord], transcript: Transcript, threshold: float, rule: str
) -> tuple[SiftedKey, TestVerdict]:
    """Sift, test, and publish the verdict (inconclusive runs publish nothing)."""
    key = sift(records, transcript, strict=False)
    by_index = {r.round_index: r for r in records}
    verdict = eavesdrop_test([by_index[i] for i in key.test_rounds], threshold, rule)
    if verdict.decision is not Decision.INCONCLUSIVE:
        last = max(r.round_index for r in records)
        for party in (Party.A, Party.B):
            transcript.append(PublicMessage(last, party, MessageKind.VERDICT, Verdict(verdict.decision.value)))
    return key, verdict


def run_trial(cfg: ScenarioConfig, trial: int = 0, seed: Optional[int] = None) -> RunResult:
    records = run_rounds(cfg, trial, seed)
    transcript = announce(records, Transcript())
    n_announced = len(transcript)
    key, verdict = conclude(records, transcript, cfg.threshold, cfg.test_rule)
    return RunResult(cfg, records, transcript, key, verdict, n_announced)


@dataclass(frozen=True)
class TrialStats:
    """What a sweep needs from one trial, small enough to ship between processes."""

    decision: Decision
    n_fired: int
    key_length: int
    key_ones: int
    disagreements: int
    n_test: int
    eve_correct: int = 0
    eve_key_rounds: int = 0
    eve_resent: int = 0
    eve_delay_sum: float = 0.0


def _trial_stats(cfg: ScenarioConfig, trial: int, seed: Optional[int]) -> TrialStats:
    res = run_trial(cfg, trial, seed)
    correct = total = resent = 0
    delay_sum = 0.0
    if cfg.adversary.enabled:
        correct, total = eve_bit_agreement(res.records, res.key, cfg.adversary.tapped_arm)
        for r in res.records:
            if r.intercept is not None and r.intercept.resent:
                resent += 1
                delay_sum += r.intercept.added_delay
    return TrialStats(
        decision=res.verdict.decision,
        n_fired=sum(r.fired for r in res.records),
        key_length=len(res.key),
        key_ones=sum(res.key.bits_A),
        disagreements=res.key.disagreements,
        n_test=res.verdict.n_test,
        eve_correct=correct,
        eve_key_rounds=total,
        eve_resent=resent,
        eve_delay_sum=delay_sum,
    )


def _trial_chunk(args: tuple[ScenarioConfig, Sequence[int], Optional[int]]) -> list[TrialStats]:
    cfg, trials, seed = args
    return [_trial_stats(cfg, k, seed) for k in trials]


def run_trials(
    cfg: ScenarioConfig, n_trials: int, seed: Optional[int] = None, n_jobs: int = 1
) -> list[TrialStats]:
    """Trials ``0..n_trials-1``; results are identical for every ``n_jobs``."""
    if n_jobs <= 1:
        return _trial_chunk((cfg, range(n_trials), seed))
    chunks = [range(k, min(k + 50, n_trials)) for k in range(0, n_trials, 50)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = pool.map(_trial_chunk, [(cfg, c, seed) for c in chunks])
        return [t for part in parts for t in part]


def nn_error_floor(cfg: ScenarioConfig) -> float:
    """Chance that a fired narrow-narrow round is a non-complementary (wrong-bit) one."""
    a, b = cfg.party_A, cfg.party_B
    good = physics.coincidence_probability(a.narrow_low, b.narrow_high, cfg.source) + \
        physics.coincidence_probability(a.narrow_high, b.narrow_low, cfg.source)
    bad = physics.coincidence_probability(a.narrow_low, b.narrow_low, cfg.source) + \
        physics.coincidence_probability(a.narrow_high, b.narrow_high, cfg.source)
    return bad / (good + bad) if good + bad > 0 else 0.0


# --- event log ---------------------------------------------------------------

def _scenario_record(cfg: ScenarioConfig) -> EventRecord:
    return EventRecord(0, None, "scenario", {
        "n_rounds": cfg.n_rounds,
        "seed": cfg.seed,
        "threshold": float(cfg.threshold),
        "rule": cfg.test_rule,
        "bins": cfg.histogram_bins,
        "tapped_arm": cfg.adversary.tapped_arm.value if cfg.adversary.enabled else None,
        "nn_error_floor": nn_error_floor(cfg),
    })


def _round_record(r: RoundRecord) -> EventRecord:
    value: dict = {"choice_A": r.choice_A.value, "choice_B": r.choice_B.value, "fired": r.fired}
    if r.fired:
        value.update(t_A=r.t_A, t_B=r.t_B, T=r.T)
    return EventRecord(r.round_index, None, "round", value)


def _intercept_record(i: int, o: InterceptOutcome, arm: Party) -> EventRecord:
    return EventRecord(i, arm.value, "intercept", {
        "learned_bit": o.learned_bit,
        "resent": o.resent,
        "added_delay": o.added_delay,
        "resent_frequency": o.resent_frequency,
        "photon_frequency": o.photon_frequency,
        "estimated_bit": o.estimated_bit,
    })


def event_records(result: RunResult, omniscient: bool = False) -> list[Union[EventRecord, PublicMessage]]:
    """Complete log of a run: scenario header, then per round the round record,
    Eve's intercept (omniscient only) and the round's public messages, then
    the verdict messages."""
    out: list[Union[EventRecord, PublicMessage]] = [_scenario_record(result.config)]
    announced = result.transcript.messages[: result.n_announced]
    trailing = result.transcript.messages[result.n_announced:]
    by_round: dict[int, list[PublicMessage]] = {}
    for m in announced:
        by_round.setdefault(m.round_index, []).append(m)
    arm = result.config.adversary.tapped_arm
    for r in result.records:
        out.append(_round_record(r))
        if omniscient and r.intercept is not None:
            out.append(_intercept_record(r.round_index, r.intercept, arm))
        out.extend(by_round.get(r.round_index, []))
    out.extend(trailing)
    return out


def encode_events(records: Iterable[Union[EventRecord, PublicMessage]]) -> str:
    return "".join(encode_record(r) + "\n" for r in records)


@dataclass
class Replay:
    records: list[RoundRecord]
    transcript: Transcript
    key: SiftedKey
    verdict: TestVerdict
    summary: RunSummary
    header: dict


def replay(lines: Iterable[str]) -> Replay:
    """Rebuild a run from its event log and recompute every summary figure."""
    header: Optional[dict] = None
    rounds: dict[int, dict] = {}
    intercepts: dict[int, InterceptOutcome] = {}
    messages: list[PublicMessage] = []
    for line in lines:
        if not line.strip():
            continue
        rec = decode_record(line)
        if isinstance(rec, PublicMessage):
            messages.append(rec)
        elif rec.kind == "scenario":
            header = rec.value
        elif rec.kind == "round":
            rounds[rec.round_index] = rec.value
        elif rec.kind == "intercept":
            intercepts[rec.round_index] = InterceptOutcome(**rec.value)
        else:
            raise ValueError(f"unknown event kind {rec.kind!r}")
    if header is None:
        raise ValueError("event log has no scenario header")
    records = [
        RoundRecord(i, v["choice_A"], v["choice_B"], v["fired"], v.get("t_A"), v.get("t_B"),
                    v.get("T"), intercept=intercepts.get(i))
        for i, v in sorted(rounds.items())
    ]
    transcript = Transcript(messages)
    key = sift(records, transcript, strict=False)
    by_index = {r.round_index: r for r in records}
    verdict = eavesdrop_test([by_index[i] for i in key.test_rounds], header["threshold"], header["rule"])
    tapped = Party(header["tapped_arm"]) if header.get("tapped_arm") else None
    summary = summarize(records, key, verdict, tapped_arm=tapped, bins=header["bins"])
    return Replay(records, transcript, key, verdict, summary, header)


# --- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    value: float
    seed: int
    key_rate: float
    detection_probability: float
    detection_stderr: float
    false_positive_rate: float
    eve_accuracy: float
    eve_accuracy_stderr: float
    eve_mean_delay: float
    key_disagreement_rate: float
    n_trials: int
    eve_resent: int = 0

    def as_dict(self) -> dict[str, float]:
        return {
            "value": self.value,
            "seed": self.seed,
            "key_rate": self.key_rate,
            "detection_probability": self.detection_probability,
            "detection_stderr": self.detection_stderr,
            "false_positive_rate": self.false_positive_rate,
            "eve_accuracy": self.eve_accuracy,
            "eve_accuracy_stderr": self.eve_accuracy_stderr,
            "eve_mean_delay": self.eve_mean_delay,
            "key_disagreement_rate": self.key_disagreement_rate,
            "n_trials": self.n_trials,
            "eve_resent": self.eve_resent,
        }


def row_seed(seed: int, row: int) -> int:
    return int(np.random.SeedSequence([seed, row]).generate_state(1)[0])


def _ratio(num: float, den: float) -> float:
    return num / den if den else math.nan


def sweep(cfg: ScenarioConfig, n_trials: Optional[int] = None, n_jobs: int = 1) -> list[SweepRow]:
    """One row per swept value; row ``k`` is seeded from ``(cfg.seed, k)``.

    Detection probability uses the scenario as configured; the false-positive
    rate reruns the same trials with the eavesdropper off.
    """
    if cfg.sweep is None:
        raise ValueError("scenario has no sweep section")
    if not cfg.sweep.values:
        raise ValueError("sweep value list is empty")
    n_trials = cfg.n_trials if n_trials is None else n_trials
    rows = []
    for k, value in enumerate(cfg.sweep.values):
        row_cfg = cfg.with_value(cfg.sweep.parameter, value)
        seed = row_seed(cfg.seed, k)
        trials = run_trials(row_cfg, n_trials, seed=seed, n_jobs=n_jobs)
        if row_cfg.adversary.enabled:
            honest = run_trials(row_cfg.honest, n_trials, seed=seed, n_jobs=n_jobs)
        else:
            honest = trials
        detected = sum(t.decision is Decision.COMPROMISED for t in trials)
        false_pos = sum(t.decision is Decision.COMPROMISED for t in honest)
        p = detected / n_trials
        eve_total = sum(t.eve_key_rounds for t in trials)
        acc = _ratio(sum(t.eve_correct for t in trials), eve_total)
        keys = sum(t.key_length for t in trials)
        rows.append(SweepRow(
            value=float(value),
            seed=seed,
            key_rate=keys / (n_trials * row_cfg.n_rounds),
            detection_probability=p,
            detection_stderr=math.sqrt(p * (1 - p) / n_trials),
            false_positive_rate=false_pos / n_trials,
            eve_accuracy=acc,
            eve_accuracy_stderr=math.sqrt(acc * (1 - acc) / eve_total) if eve_total else math.nan,
            eve_mean_delay=_ratio(sum(t.eve_delay_sum for t in trials), sum(t.eve_resent for t in trials)),
            key_disagreement_rate=_ratio(sum(t.disagreements for t in trials), keys),
            n_trials=n_trials,
            eve_resent=sum(t.eve_resent for t in trials),
        ))
    return rows
