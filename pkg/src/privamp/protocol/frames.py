"""Wire unit and terminal statuses.

Frames carry declared phase/round indices; receivers process them strictly in
arrival order and abort on any disagreement with their own state, so the
adversary's insert/delete/change operations on the bit stream are concrete
and auditable.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..bits import BitString

__all__ = ["Frame", "A_TO_B", "B_TO_A", "other_direction", "FRAME_KINDS"]

A_TO_B = "A>B"
B_TO_A = "B>A"

FRAME_KINDS = ("seed", "data", "response", "plaintext", "final")


def other_direction(d: str) -> str:
    return B_TO_A if d == A_TO_B else A_TO_B


@dataclass(frozen=True)
class Frame:
    kind: str
    payload: BitString
    phase: int
    round: int
    bit: int | None = None  # data frames only: the message bit being sent

    def __post_init__(self):
        if self.kind not in FRAME_KINDS:
            raise ValueError(f"unknown frame kind {self.kind!r}")
        if (self.kind == "data") != (self.bit is not None):
            raise ValueError("exactly data frames carry a bit flag")

    def token(self) -> str:
        b = "-" if self.bit is None else str(self.bit)
        return f"{self.kind}:{b}:{self.phase}:{self.round}:{self.payload}"

    @classmethod
    def from_token(cls, tok: str) -> "Frame":
        kind, b, phase, rnd, payload = tok.split(":")
        return cls(
            kind=kind,
            payload=BitString(payload),
            phase=int(phase),
            round=int(rnd),
            bit=None if b == "-" else int(b),
        )


RUNNING = "running"
ACCEPTED = "accepted"
ABORTED = "aborted"
