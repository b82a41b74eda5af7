"""Propagation timing and the public classical channel.

Events and public messages share one newline-delimited wire format: each
line is a JSON object with the fields ``round``, ``sender``, ``kind`` and
``value`` in that order.  Times are written as decimal seconds with twelve
significant digits.
"""

from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Optional, Union

from .roles import Party

__all__ = [
    "ChannelSpec",
    "DetectorClass",
    "Verdict",
    "MessageKind",
    "PublicMessage",
    "EventRecord",
    "OrderingViolation",
    "Transcript",
    "reduce_time",
    "quantize",
    "exchange",
    "format_time",
    "encode_record",
    "decode_record",
]

DEFAULT_LIGHT_SPEED = 3e8


@dataclass(frozen=True)
class ChannelSpec:
    distance_A: float = 0.0
    distance_B: float = 0.0
    light_speed: float = DEFAULT_LIGHT_SPEED
    timing_resolution: float = 1e-10

    def __post_init__(self) -> None:
        if not (self.distance_A >= 0 and self.distance_B >= 0):
            raise ValueError("distances must be >= 0")
        if not (math.isfinite(self.light_speed) and self.light_speed > 0):
            raise ValueError(f"light_speed must be > 0, not {self.light_speed}")
        if not self.timing_resolution >= 0:
            raise ValueError(f"timing_resolution must be >= 0, not {self.timing_resolution}")

    def distance(self, party: Party) -> float:
        return self.distance_A if Party(party) is Party.A else self.distance_B


def reduce_time(t0: float, distance: float, light_speed: float = DEFAULT_LIGHT_SPEED) -> float:
    """Registration time referred back to the source: ``t0 - distance / light_speed``."""
    if light_speed <= 0:
        raise ValueError("light_speed must be > 0")
    return t0 - distance / light_speed


def quantize(t: float, resolution: float) -> float:
    if resolution == 0:
        return t
    return round(t / resolution) * resolution


class DetectorClass(str, enum.Enum):
    """Public detector label.  Deliberately has no way to name omega_1 vs omega_2."""

    WIDE = "wide"
    NARROW = "narrow"


class Verdict(str, enum.Enum):
    CLEAN = "clean"
    COMPROMISED = "compromised"


class MessageKind(str, enum.Enum):
    DETECTOR_CLASS = "detector_class"
    FIRED = "fired"
    TEST_DISCLOSURE = "test_disclosure"
    VERDICT = "verdict"


_PAYLOAD_TYPES = {
    MessageKind.DETECTOR_CLASS: DetectorClass,
    MessageKind.FIRED: bool,
    MessageKind.TEST_DISCLOSURE: float,
    MessageKind.VERDICT: Verdict,
}


@dataclass(frozen=True)
class PublicMessage:
    round_index: int
    sender: Party
    kind: MessageKind
    value: Union[DetectorClass, bool, float, Verdict]

    def __post_init__(self) -> None:
        if self.round_index < 0:
            raise ValueError(f"round_index must be >= 0, not {self.round_index}")
        if not isinstance(self.sender, Party):
            object.__setattr__(self, "sender", Party(self.sender))
        kind = MessageKind(self.kind)
        object.__setattr__(self, "kind", kind)
        expected = _PAYLOAD_TYPES[kind]
        value = self.value
        if expected is bool:
            if not isinstance(value, bool):
                raise TypeError(f"{kind.value} payload must be bool, not {value!r}")
        elif expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{kind.value} payload must be a time, not {value!r}")
            value = float(value)
        else:
            value = expected(value)
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class EventRecord:
    """Any non-public line of the event log (rounds, intercepts)."""

    round_index: int
    sender: Optional[str]
    kind: str
    value: dict[str, Any]


class OrderingViolation(ValueError):
    """A sender's round index went backwards."""


def format_time(t: float) -> str:
    return f"{t:.11e}"


def _encode_value(v: Any) -> str:
    if isinstance(v, enum.Enum):
        return json.dumps(v.value)
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_time(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_encode_value(x) for x in v) + "]"
    raise TypeError(f"cannot encode {v!r}")


def encode_record(record: Union[PublicMessage, EventRecord]) -> str:
    sender = record.sender.value if isinstance(record.sender, Party) else record.sender
    kind = record.kind.value if isinstance(record.kind, enum.Enum) else record.kind
    return (
        f'{{"round": {record.round_index}, "sender": {_encode_value(sender)}, '
        f'"kind": {_encode_value(kind)}, "value": {_encode_value(record.value)}}}'
    )


def decode_record(line: str) -> Union[PublicMessage, EventRecord]:
    obj = json.loads(line)
    if list(obj) != ["round", "sender", "kind", "value"]:
        raise ValueError(f"malformed record (fields {list(obj)}): {line!r}")
    kind = obj["kind"]
    if kind in MessageKind._value2member_map_:
        return PublicMessage(obj["round"], obj["sender"], kind, obj["value"])
    return EventRecord(obj["round"], obj["sender"], kind, obj["value"])


@dataclass
class Transcript:
    """Append-only, totally ordered log of public messages.

    Readable by everyone, including an eavesdropper.  Appends are serialized
    through a lock; each sender's round indices must not decrease.
    """

    messages: list[PublicMessage] = field(default_factory=list)
    _last: dict[Party, int] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self) -> None:
        existing, self.messages = self.messages, []
        for msg in existing:
            self.append(msg)

    def append(self, msg: PublicMessage) -> None:
        with self._lock:
            last = self._last.get(msg.sender)
            if last is not None and msg.round_index < last:
                raise OrderingViolation(
                    f"sender {msg.sender.value} went from round {last} to {msg.round_index}"
                )
            self._last[msg.sender] = msg.round_index
            self.messages.append(msg)

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[PublicMessage]:
        return iter(list(self.messages))

    def for_round(self, round_index: int) -> list[PublicMessage]:
        return [m for m in self.messages if m.round_index == round_index]

    def encode(self) -> str:
        return "".join(encode_record(m) + "\n" for m in self.messages)

    @classmethod
    def decode(cls, lines: Iterable[str]) -> "Transcript":
        msgs = []
        for line in lines:
            if not line.strip():
                continue
            rec = decode_record(line)
            if isinstance(rec, PublicMessage):
                msgs.append(rec)
        return cls(msgs)


def exchange(msg: PublicMessage, transcript: Transcript) -> Transcript:
    transcript.append(msg)
    return transcript
