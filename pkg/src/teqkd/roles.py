"""Party labels, detector choices and the narrow-detector bit convention."""

from __future__ import annotations

import enum


class Party(str, enum.Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Party":
        return Party.B if self is Party.A else Party.A


class Choice(str, enum.Enum):
    WIDE = "wide"
    NARROW_LOW = "narrow_low"
    NARROW_HIGH = "narrow_high"

    @property
    def is_narrow(self) -> bool:
        return self is not Choice.WIDE


def bit_from_choice(choice: Choice, party: Party) -> int:
    """Key bit recorded by ``party`` after a narrow-narrow coincidence.

    A firing on the low detector means B's photon was the high one; that
    event is logical 1 for both.  B's mapping is therefore the mirror image.
    """
    choice = Choice(choice)
    if choice is Choice.WIDE:
        raise ValueError("wide-band detections carry no key bit")
    low_is_one = Party(party) is Party.A
    return int((choice is Choice.NARROW_LOW) == low_is_one)
