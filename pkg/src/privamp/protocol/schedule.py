"""Geometric prefix-challenge schedules.

Entries C1[i] = base^{3i-2}*unit, C2[i] = base^{3i-1}*unit, C3[i] = base^{3i}*unit
for i = 1..rounds. Interleaved C1[1] < C2[1] < C3[1] < C1[2] < ... each entry is
base times its predecessor, which is what opens the information gap at every
verification.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ChallengeSchedule", "schedule_build", "ScheduleError"]


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ChallengeSchedule:
    base: int
    unit: int
    rounds: int
    c1: tuple[int, ...]
    c2: tuple[int, ...]
    c3: tuple[int, ...]

    def c1_at(self, i: int) -> int:
        return self.c1[i - 1]

    def c2_at(self, i: int) -> int:
        return self.c2[i - 1]

    def c3_at(self, i: int) -> int:
        return self.c3[i - 1]

    def data_len(self, bit: int, i: int) -> int:
        return self.c1_at(i) if bit == 0 else self.c2_at(i)

    @property
    def max_entry(self) -> int:
        return self.c3[-1] if self.rounds else 0

    def interleaved(self) -> list[int]:
        out = []
        for i in range(self.rounds):
            out += [self.c1[i], self.c2[i], self.c3[i]]
        return out

    def revealed_per_phase_bound(self) -> int:
        """Worst-case bits revealed in one phase: sum of C2[i] + C3[i]."""
        return sum(self.c2) + sum(self.c3)

    def static_gaps(self) -> list[tuple[str, int, int, int]]:
        """(case, demanded, prior-information, gap) for the three tampering cases.

        Prior information follows the Eve-view case analysis: insertion at
        round i leaves Eve with C2[i-1]+C3[i-1] bits, deletion with
        C2[i]+C3[i-1], a 0->1 change with C1[i]+C3[i-1].
        """
        gaps = []
        for i in range(1, self.rounds + 1):
            c3_prev = self.c3_at(i - 1) if i > 1 else 0
            c2_prev = self.c2_at(i - 1) if i > 1 else 0
            cases = [
                ("insert", self.c1_at(i), c2_prev + c3_prev),
                ("delete", self.c3_at(i), self.c2_at(i) + c3_prev),
                ("flip01", self.c2_at(i), self.c1_at(i) + c3_prev),
            ]
            for name, demanded, info in cases:
                gaps.append((f"{name}@{i}", demanded, info, demanded - info))
        return gaps

    def challenge_gap_ok(self) -> bool:
        """Every tampering case demands >= 2*unit fresh bits."""
        return all(gap >= 2 * self.unit for _, _, _, gap in self.static_gaps())


def schedule_build(base: int, unit: int, rounds: int, ext_output_len: int) -> ChallengeSchedule:
    """Build and validate the geometric schedule.

    Raises ScheduleError naming the violating entry when the schedule
    outgrows the configured extractor output.
    """
    if base < 2:
        raise ScheduleError(f"base must be >= 2, got {base}")
    if rounds and unit < 1:
        raise ScheduleError(f"unit must be >= 1, got {unit}")
    if rounds < 0:
        raise ScheduleError("rounds must be >= 0")
    c1, c2, c3 = [], [], []
    for i in range(1, rounds + 1):
        c1.append(base ** (3 * i - 2) * unit)
        c2.append(base ** (3 * i - 1) * unit)
        c3.append(base ** (3 * i) * unit)
    sched = ChallengeSchedule(base, unit, rounds, tuple(c1), tuple(c2), tuple(c3))
    if rounds and sched.max_entry > ext_output_len:
        raise ScheduleError(
            f"C3[{rounds}] = {sched.max_entry} exceeds extractor output length {ext_output_len}"
        )
    seq = sched.interleaved()
    for prev, cur in zip(seq, seq[1:]):
        if cur < base * prev:
            raise ScheduleError("schedule entries must grow by the base each step")
    return sched
