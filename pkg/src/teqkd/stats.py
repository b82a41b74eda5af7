"""Eavesdropping test on wide-wide delays, detection power and run summaries."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from .protocol import RoundRecord, SiftedKey
from .roles import Party, bit_from_choice

if TYPE_CHECKING:
    from .config import ScenarioConfig

__all__ = [
    "Decision",
    "TestVerdict",
    "eavesdrop_test",
    "false_positive_bound",
    "DetectionEstimate",
    "detection_probability",
    "RunSummary",
    "summarize",
    "histogram",
    "format_number",
]


class Decision(str, enum.Enum):
    CLEAN = "clean"
    COMPROMISED = "compromised"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TestVerdict:
    decision: Decision
    n_test: int
    max_abs_T: float
    mean_T: float
    threshold: float
    flagged_rounds: tuple[int, ...] = ()
    rule: str = "exceedance"

    __test__ = False  # not a pytest class


def eavesdrop_test(
    test_records: Sequence[RoundRecord], threshold: float, rule: str = "exceedance"
) -> TestVerdict:
    """Decide whether the wide-wide delays show an eavesdropper.

    Without Eve the honest delays are of order 1/gamma_wide; Eve's
    re-registration adds ~1/gamma_* which is orders of magnitude larger.

    ``rule="exceedance"`` (default) flags the run when any ``|T|`` exceeds
    ``threshold``.  ``rule="mean_shift"`` flags it when
    ``|mean T| > threshold / sqrt(n_test)``, which is the better choice when
    Eve's delay scale approaches the honest one.
    """
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    ts = np.array([r.T for r in test_records], dtype=float)
    n = len(ts)
    if n == 0:
        return TestVerdict(Decision.INCONCLUSIVE, 0, math.nan, math.nan, threshold, (), rule)
    flagged = tuple(r.round_index for r in test_records if abs(r.T) > threshold)
    mean_t = float(ts.mean())
    if rule == "exceedance":
        compromised = bool(flagged)
    elif rule == "mean_shift":
        compromised = abs(mean_t) > threshold / math.sqrt(n)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    decision = Decision.COMPROMISED if compromised else Decision.CLEAN
    return TestVerdict(decision, n, float(np.abs(ts).max()), mean_t, threshold, flagged, rule)


def false_positive_bound(n_test: int, gamma_a: float, gamma_b: float, threshold: float) -> float:
    """Union bound on P(compromised) for honest wide-wide rounds (exceedance rule)."""
    per_round = math.exp(-2.0 * gamma_a * threshold) + math.exp(-2.0 * gamma_b * threshold)
    return min(1.0, n_test * per_round)


@dataclass(frozen=True)
class DetectionEstimate:
    probability: float
    stderr: float
    n_trials: int
    n_detected: int

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        return max(0.0, self.probability - z * self.stderr), min(1.0, self.probability + z * self.stderr)


def _binomial(n_detected: int, n_trials: int) -> DetectionEstimate:
    p = n_detected / n_trials
    return DetectionEstimate(p, math.sqrt(p * (1.0 - p) / n_trials), n_trials, n_detected)


def detection_probability(
    scenario: "ScenarioConfig",
    n_rounds: Optional[int] = None,
    n_trials: Optional[int] = None,
    seed: Optional[int] = None,
    n_jobs: int = 1,
) -> DetectionEstimate:
    """Fraction of independent end-to-end runs that end ``compromised``.

    Trial ``k`` draws from streams keyed by ``(seed, k, round)``, so the
    estimate does not depend on ``n_jobs`` and two scenarios run with the
    same seed are paired round by round.
    """
    from .simulation import run_trials

    if n_rounds is not None:
        scenario = scenario.with_value("n_rounds", n_rounds)
    n_trials = scenario.n_trials if n_trials is None else n_trials
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    trials = run_trials(scenario, n_trials, seed=seed, n_jobs=n_jobs)
    return _binomial(sum(t.decision is Decision.COMPROMISED for t in trials), n_trials)


def histogram(values: Sequence[float], bins: int = 20) -> list[tuple[float, float, int]]:
    """``(bin_left, bin_right, count)`` rows; empty input gives no rows."""
    if len(values) == 0:
        return []
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


@dataclass
class RunSummary:
    n_rounds: int
    n_fired: int
    coincidence_rate: float
    key_length: int
    key_rate: float
    key_ones_fraction: float
    n_test: int
    decision: str
    threshold: float
    max_abs_T: float
    mean_T: float
    n_flagged: int
    # computed with knowledge of both keys; not available to either party
    key_disagreement_rate: float
    eve_intercepts: Optional[int] = None
    eve_key_rounds: Optional[int] = None
    eve_accuracy: Optional[float] = None
    eve_mean_added_delay: Optional[float] = None
    histogram: list[tuple[float, float, int]] = field(default_factory=list)

    def scalars(self) -> dict[str, object]:
        d = asdict(self)
        d.pop("histogram")
        return {k: v for k, v in d.items() if v is not None}

    def to_text(self) -> str:
        out = []
        for key, value in self.scalars().items():
            prefix = "omniscient." if key.startswith(("key_disagreement", "eve_")) else ""
            out.append(f"{prefix}{key} = {format_number(value)}")
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        return table_csv([self.scalars()])

    def histogram_csv(self) -> str:
        return table_csv(
            [{"bin_left": l, "bin_right": r, "count": c} for l, r, c in self.histogram],
            columns=("bin_left", "bin_right", "count"),
        )


def format_number(value: object) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.12g}"
    if isinstance(value, enum.Enum):
        return str(value.value)
    return str(value)


def table_csv(rows: Iterable[dict[str, object]], columns: Optional[Sequence[str]] = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_number(row.get(c, "")) for c in columns) + "\n")
    return buf.getvalue()


def eve_bit_agreement(records: Iterable[RoundRecord], key: SiftedKey, tapped_arm: Party) -> tuple[int, int]:
    """(correct, total) of Eve's bit estimates against the untapped party's key bits."""
    by_index = {r.round_index: r for r in records}
    untapped = Party(tapped_arm).other
    correct = total = 0
    for i in key.source_rounds:
        outcome = by_index[i].intercept
        if outcome is None or outcome.estimated_bit is None:
            continue
        total += 1
        correct += outcome.estimated_bit == bit_from_choice(by_index[i].choice(untapped), untapped)
    return correct, total


def summarize(
    records: Sequence[RoundRecord],
    key: SiftedKey,
    verdict: TestVerdict,
    *,
    tapped_arm: Optional[Party] = None,
    bins: int = 20,
) -> RunSummary:
    """Key, coincidence and test figures for one run.

    Eve's figures appear only when the records carry intercept outcomes;
    ``tapped_arm`` is then needed to score her bit estimates.
    """
    n = len(records)
    n_fired = sum(r.fired for r in records)
    by_index = {r.round_index: r for r in records}
    test_t = [by_index[i].T for i in key.test_rounds]
    summary = RunSummary(
        n_rounds=n,
        n_fired=n_fired,
        coincidence_rate=n_fired / n if n else math.nan,
        key_length=len(key),
        key_rate=len(key) / n if n else math.nan,
        key_ones_fraction=sum(key.bits_A) / len(key) if len(key) else math.nan,
        n_test=verdict.n_test,
        decision=verdict.decision.value,
        threshold=verdict.threshold,
        max_abs_T=verdict.max_abs_T,
        mean_T=verdict.mean_T,
        n_flagged=len(verdict.flagged_rounds),
        key_disagreement_rate=key.disagreements / len(key) if len(key) else math.nan,
        histogram=histogram(test_t, bins),
    )
    intercepts = [r.intercept for r in records if r.intercept is not None]
    if intercepts:
        resent = [o.added_delay for o in intercepts if o.resent]
        summary.eve_intercepts = len(intercepts)
        summary.eve_mean_added_delay = float(np.mean(resent)) if resent else math.nan
        if tapped_arm is not None:
            correct, total = eve_bit_agreement(records, key, tapped_arm)
            summary.eve_key_rounds = total
            summary.eve_accuracy = correct / total if total else math.nan
    return summary
