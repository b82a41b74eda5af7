"""Scenario configuration.

A scenario file is flat ``key = value`` text with dotted section paths::

    # baseline scenario
    n_rounds = 200
    source.sum_frequency = 2e15
    party.p_wide = 0.5            # party.* applies to party_A and party_B
    party_B.wide.efficiency = 0.9
    adversary.enabled = true

Frequencies are angular frequencies in s^-1, times in seconds, distances in
metres.  Unset keys take the baseline defaults in :data:`DEFAULTS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

from .adversary import AdversaryConfig, DelayModel, Strategy
from .channel import ChannelSpec
from .physics import DetectorSpec, SourceKind, SourceSpec
from .protocol import PartyConfig
from .roles import Party

__all__ = ["ConfigError", "ScenarioConfig", "SweepSpec", "DEFAULTS", "parse_text", "load"]

OMEGA_0 = 2e15
SPLIT = 1e5
OMEGA_1 = OMEGA_0 / 2 - SPLIT / 2
OMEGA_2 = OMEGA_0 / 2 + SPLIT / 2

TEST_RULES = ("exceedance", "mean_shift")


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true/false, got {raw!r}")


def _int(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(value)


def _float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return value


def _str(raw: str) -> str:
    return raw.strip().strip("\"'")


def _float_list(raw: str) -> list[float]:
    items = [x for x in raw.replace("[", "").replace("]", "").split(",") if x.strip()]
    return [_float(x) for x in items]


def _detector_keys(prefix: str, center: float, bandwidth: float) -> dict[str, tuple]:
    return {
        f"{prefix}.center_frequency": (_float, center),
        f"{prefix}.bandwidth": (_float, bandwidth),
        f"{prefix}.efficiency": (_float, 1.0),
    }


def _schema() -> dict[str, tuple[Callable[[str], Any], Any]]:
    keys: dict[str, tuple] = {
        "seed": (_int, 20260101),
        "n_rounds": (_int, 200),
        "threshold": (_float, None),  # None -> 10 / (narrowest wide bandwidth)
        "n_trials": (_int, 200),
        "test.rule": (_str, "exceedance"),
        "histogram.bins": (_int, 20),
        "source.sum_frequency": (_float, OMEGA_0),
        "source.kind": (_str, "biphoton"),
        "source.spectral_width": (_float, 1e12),
        "source.emission_time_jitter": (_float, 0.0),
        "channel.distance_A": (_float, 0.0),
        "channel.distance_B": (_float, 0.0),
        "channel.light_speed": (_float, 3e8),
        "channel.timing_resolution": (_float, 1e-10),
        "adversary.enabled": (_bool, False),
        "adversary.tapped_arm": (_str, "B"),
        "adversary.gamma_star": (_float, 1e5),
        "adversary.efficiency": (_float, 1.0),
        "adversary.strategy": (_str, "auto"),
        "adversary.resend_on_miss": (_bool, True),
        "adversary.delay_model": (_str, "exponential"),
        "sweep.parameter": (_str, None),
        "sweep.values": (_float_list, None),
    }
    for p in ("party_A", "party_B"):
        keys[f"{p}.p_wide"] = (_float, 0.5)
        keys[f"{p}.rng_seed"] = (_int, 1 if p == "party_A" else 2)
        keys.update(_detector_keys(f"{p}.narrow_low", OMEGA_1, 1e2))
        keys.update(_detector_keys(f"{p}.narrow_high", OMEGA_2, 1e2))
        keys.update(_detector_keys(f"{p}.wide", OMEGA_0 / 2, 1e9))
    return keys


SCHEMA = _schema()
DEFAULTS: dict[str, Any] = {k: default for k, (_, default) in SCHEMA.items()}


class ConfigError(ValueError):
    """Every problem found in a scenario, one message per violated invariant."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.problems))


def _canonical_keys(key: str) -> list[str]:
    if key.startswith("party."):
        rest = key[len("party."):]
        return [f"party_A.{rest}", f"party_B.{rest}"]
    return [key]


def parse_text(text: str, source_name: str = "<config>") -> tuple[dict[str, Any], dict[str, int]]:
    """Parse scenario text into typed settings and a key -> line-number map."""
    settings: dict[str, Any] = {}
    lines: dict[str, int] = {}
    problems: list[str] = []
    shared: list[tuple[str, Any, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"{source_name}:{lineno}: expected 'key = value', got {body!r}")
            continue
        key, raw = (part.strip() for part in body.split("=", 1))
        targets = _canonical_keys(key)
        if any(t not in SCHEMA for t in targets):
            problems.append(f"{source_name}:{lineno}: unknown key {key!r}")
            continue
        try:
            value = SCHEMA[targets[0]][0](raw)
        except ValueError as exc:
            problems.append(f"{source_name}:{lineno}: {key}: {exc}")
            continue
        if key.startswith("party."):
            shared.append((key, value, lineno))
            continue
        settings[key] = value
        lines[key] = lineno
    # party.* first, explicit party_A./party_B. keys win
    for key, value, lineno in shared:
        for target in _canonical_keys(key):
            if target not in settings:
                settings[target] = value
                lines[target] = lineno
    if problems:
        raise ConfigError(problems)
    return settings, lines


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    source: SourceSpec
    party_A: PartyConfig
    party_B: PartyConfig
    channel: ChannelSpec
    adversary: AdversaryConfig
    n_rounds: int
    threshold: float
    seed: int
    n_trials: int = 200
    test_rule: str = "exceedance"
    histogram_bins: int = 20
    sweep: Optional[SweepSpec] = None
    settings: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_settings(
        cls, settings: Optional[dict[str, Any]] = None, lines: Optional[dict[str, int]] = None,
        source_name: str = "<config>",
    ) -> "ScenarioConfig":
        """Build and validate; all problems are reported together."""
        s = dict(DEFAULTS)
        lines = dict(lines or {})
        given = settings or {}
        for key, value in given.items():
            if key.startswith("party."):
                for target in _canonical_keys(key):
                    if target not in given:
                        s[target] = value
                        if key in lines:
                            lines[target] = lines[key]
            else:
                s[key] = value
        problems: list[str] = []

        def where(*keys: str) -> str:
            found = sorted({lines[k] for k in keys if k in lines})
            loc = f"{source_name}:{','.join(map(str, found))}" if found else source_name
            return f"{loc}: {'/'.join(keys) if len(keys) < 3 else keys[0].rsplit('.', 1)[0]}"

        def build(keys: tuple[str, ...], factory: Callable[[], Any]) -> Any:
            try:
                return factory()
            except (ValueError, TypeError) as exc:
                problems.append(f"{where(*keys)}: {exc}")
                return None

        def detector(prefix: str) -> Optional[DetectorSpec]:
            keys = tuple(f"{prefix}.{f}" for f in ("center_frequency", "bandwidth", "efficiency"))
            return build(keys, lambda: DetectorSpec(*(s[k] for k in keys)))

        source_keys = tuple(f"source.{f}" for f in ("sum_frequency", "kind", "emission_time_jitter", "spectral_width"))
        source = build(source_keys, lambda: SourceSpec(*(s[k] for k in source_keys)))

        parties = {}
        for p in ("party_A", "party_B"):
            dets = [detector(f"{p}.{d}") for d in ("narrow_low", "narrow_high", "wide")]
            if not 0.0 < s[f"{p}.p_wide"] < 1.0:
                problems.append(f"{where(f'{p}.p_wide')}: p_wide must lie in (0, 1), not {s[f'{p}.p_wide']}")
                dets.append(None)
            if None in dets:
                parties[p] = None
                continue
            parties[p] = build(
                (f"{p}.p_wide", f"{p}.rng_seed"),
                lambda: PartyConfig(*dets, p_wide=s[f"{p}.p_wide"], rng_seed=s[f"{p}.rng_seed"]),
            )
            if parties[p] is not None and source is not None:
                for msg in parties[p].validate(source):
                    problems.append(
                        f"{where(f'{p}.narrow_low.center_frequency', f'{p}.narrow_high.center_frequency')}: {msg}"
                    )
        a, b = parties["party_A"], parties["party_B"]
        if a is not None and b is not None and (
            a.narrow_low.center_frequency != b.narrow_low.center_frequency
            or a.narrow_high.center_frequency != b.narrow_high.center_frequency
        ):
            problems.append(f"{source_name}: both parties must use the same omega_1 and omega_2")

        channel_keys = tuple(f"channel.{f}" for f in ("distance_A", "distance_B", "light_speed", "timing_resolution"))
        channel = build(channel_keys, lambda: ChannelSpec(*(s[k] for k in channel_keys)))

        adversary = None
        if a is not None:
            adv_keys = tuple(
                f"adversary.{f}"
                for f in ("enabled", "tapped_arm", "gamma_star", "efficiency", "strategy",
                          "resend_on_miss", "delay_model")
            )

            def make_adversary() -> AdversaryConfig:
                strategy = s["adversary.strategy"]
                return AdversaryConfig.build(
                    a.narrow_low.center_frequency,
                    a.narrow_high.center_frequency,
                    s["adversary.gamma_star"],
                    efficiency=s["adversary.efficiency"],
                    strategy=None if strategy == "auto" else Strategy(strategy),
                    enabled=s["adversary.enabled"],
                    tapped_arm=Party(s["adversary.tapped_arm"]),
                    resend_on_miss=s["adversary.resend_on_miss"],
                    delay_model=DelayModel(s["adversary.delay_model"]),
                )

            adversary = build(adv_keys, make_adversary)

        if s["seed"] < 0:
            problems.append(f"{where('seed')}: seed must be >= 0")
        if s["n_rounds"] < 1:
            problems.append(f"{where('n_rounds')}: n_rounds must be >= 1")
        if s["n_trials"] < 1:
            problems.append(f"{where('n_trials')}: n_trials must be >= 1")
        if s["histogram.bins"] < 1:
            problems.append(f"{where('histogram.bins')}: histogram.bins must be >= 1")
        if s["test.rule"] not in TEST_RULES:
            problems.append(f"{where('test.rule')}: test.rule must be one of {TEST_RULES}")
        threshold = s["threshold"]
        if threshold is None and a is not None and b is not None:
            threshold = 10.0 / min(a.wide.bandwidth, b.wide.bandwidth)
        if threshold is not None and not threshold > 0:
            problems.append(f"{where('threshold')}: threshold must be > 0")

        sweep = None
        if s["sweep.parameter"] is not None or s["sweep.values"] is not None:
            param, values = s["sweep.parameter"], s["sweep.values"]
            if param is None:
                problems.append(f"{where('sweep.values')}: sweep.values given without sweep.parameter")
            elif any(t not in SCHEMA or t.startswith("sweep.") for t in _canonical_keys(param)):
                problems.append(f"{where('sweep.parameter')}: unknown parameter path {param!r}")
            elif not values:
                problems.append(f"{where('sweep.parameter', 'sweep.values')}: sweep value list is empty")
            else:
                sweep = SweepSpec(param, tuple(values))

        if problems:
            raise ConfigError(problems)
        return cls(
            source=source,
            party_A=a,
            party_B=b,
            channel=channel,
            adversary=adversary,
            n_rounds=s["n_rounds"],
            threshold=threshold,
            seed=s["seed"],
            n_trials=s["n_trials"],
            test_rule=s["test.rule"],
            histogram_bins=s["histogram.bins"],
            sweep=sweep,
            settings=s,
        )

    def with_value(self, path: str, value: Any) -> "ScenarioConfig":
        """Copy with one setting changed (``party.*`` paths set both parties)."""
        targets = _canonical_keys(path)
        if any(t not in SCHEMA for t in targets):
            raise ConfigError([f"unknown parameter path {path!r}"])
        settings = dict(self.settings)
        for t in targets:
            converter = SCHEMA[t][0]
            settings[t] = converter(str(value)) if converter in (_int, _bool, _str) else float(value)
        return ScenarioConfig.from_settings(settings)

    def with_settings(self, **updates: Any) -> "ScenarioConfig":
        """Like :meth:`with_value` for several keys; dots become ``__``."""
        cfg = self
        for key, value in updates.items():
            cfg = cfg.with_value(key.replace("__", "."), value)
        return cfg

    @property
    def honest(self) -> "ScenarioConfig":
        """Same scenario with the eavesdropper switched off."""
        return self.with_value("adversary.enabled", False)


def load(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config: {exc}"]) from exc
    settings, lines = parse_text(text, str(path))
    return ScenarioConfig.from_settings(settings, lines, str(path))


def baseline() -> ScenarioConfig:
    return ScenarioConfig.from_settings()
