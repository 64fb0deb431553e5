"""Protocol parameter records, derived schedules, and feasibility flags.

The asymptotic preconditions (k >= 10*base^{3t}*ell and the k^gamma
transcript budget) fail by orders of magnitude at desk scale, so they are
computed and carried as flags rather than hard errors; strict mode restores
the hard failure. Reports always state the flags and the schedule base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from ..extractors import IRREDUCIBLE_POLY
from .schedule import ChallengeSchedule, schedule_build

__all__ = ["ProtocolParams", "ExtractParams", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    """Parameters for the authentication family and key derivation.

    n, k: shared-secret length and claimed min-entropy. t: phase message
    length = schedule unit. ell: length of the string one auth run
    authenticates. epsilon_exp: key-extraction slack, eps = 2^-epsilon_exp.
    """

    n: int
    k: float
    t: int
    ell: int
    base: int = 2
    lambda_m: int = 0  # 0: default to t
    e: float = 0.25
    rho: float = 0.25
    gamma: float = 0.9
    epsilon_exp: int = 40
    lambda_k: int = 0  # 0: derive from the accounting formula
    strict: bool = False
    idealized_seed_accounting: bool = False

    def __post_init__(self):
        if self.t < 1:
            raise ConfigError("t must be >= 1")
        if self.ell < 1:
            raise ConfigError("ell must be >= 1")
        if not 0 < self.k <= self.n:
            raise ConfigError(f"need 0 < k <= n, got k={self.k}, n={self.n}")
        if self.strict and not self.security_precondition_met:
            raise ConfigError(
                f"k = {self.k} below the theorem precondition "
                f"10*base^(3t)*ell = {self.k_required}"
            )

    @cached_property
    def schedule(self) -> ChallengeSchedule:
        sched = schedule_build(self.base, self.t, self.t, ext_output_len=10**18)
        return sched

    @property
    def m_ext(self) -> int:
        """Extractor output length; the schedule's largest demand."""
        return self.schedule.max_entry

    @property
    def seed_len(self) -> int:
        """Honest Toeplitz seed cost per extraction."""
        return self.n + self.m_ext - 1

    @property
    def seed_len_reported(self) -> int:
        """Seed cost for accounting: honest, or the idealized d(t) = 3t."""
        return 3 * self.t if self.idealized_seed_accounting else self.seed_len

    @property
    def k_required(self) -> float:
        return 10.0 * self.base ** (3 * self.t) * self.ell

    @property
    def security_precondition_met(self) -> bool:
        return self.k >= self.k_required

    @property
    def effective_lambda_m(self) -> int:
        return self.lambda_m if self.lambda_m else self.t

    @property
    def lambda_c(self) -> int:
        lc = self.effective_lambda_m / self.rho
        if abs(lc - round(lc)) > 1e-9:
            raise ConfigError(f"lambda_m/rho = {lc} not an integer")
        return int(round(lc))

    def phases_for(self, length: int) -> int:
        return (length + self.t - 1) // self.t

    def padded_len(self, length: int) -> int:
        return self.phases_for(length) * self.t

    def key_length(self, entropy_spent: int) -> int:
        """lambda_k = k - spent - 2*log(1/eps), per the accounting ledger."""
        if self.lambda_k:
            return self.lambda_k
        lk = math.floor(self.k - entropy_spent - 2 * self.epsilon_exp)
        if lk <= 0:
            raise ConfigError(
                f"non-positive key length: k={self.k}, spent={entropy_spent}, "
                f"2log(1/eps)={2 * self.epsilon_exp}"
            )
        return lk

    def flags(self) -> list[str]:
        out = ["stand-in-extractor", f"base={self.base}"]
        if not self.security_precondition_met:
            out.append("security-precondition-unmet")
        if self.idealized_seed_accounting:
            out.append("idealized-seed-accounting")
        return out


@dataclass(frozen=True)
class ExtractParams:
    """Parameters for the three-source Extract pipeline at desk scale.

    The slice widths s1/s2/s3 play the roles of c*log n, mu*log k and
    k^beta; unit is the challenge-schedule unit (c*log n role). Derived:
    D = 3^iterations rows, t = 2*D*s2 forward rounds (the constant-weight
    encoding of x2), t' = 2*m_srg backward rounds; t' < t is enforced.
    """

    n: int            # |W|
    k: float          # claimed min-entropy of W
    n_source: int     # |X| = |Y|
    k_source: float   # claimed min-entropy of X and Y
    iterations: int
    p: int
    q_row: int        # field window: SR rows from (condensed row, W window)
    m_sr: int         # SR row width (k^gamma role)
    s1: int
    s2: int
    s3: int
    q_srg: int
    m_srg: int
    q_fin: int
    m_key: int
    unit: int
    base: int = 2
    gamma: float = 0.9
    strict: bool = False

    def __post_init__(self):
        for q, label in ((self.q_row, "q_row"), (self.q_srg, "q_srg"), (self.q_fin, "q_fin")):
            if q not in IRREDUCIBLE_POLY:
                raise ConfigError(f"{label}={q} is not a pinned field size")
        for s, label in ((self.s1, "s1"), (self.s2, "s2"), (self.s3, "s3")):
            if not 0 < s <= self.m_sr:
                raise ConfigError(f"slice width {label}={s} outside 1..m_sr={self.m_sr}")
        if self.m_sr > self.q_row:
            raise ConfigError("m_sr cannot exceed the q_row field size")
        if self.m_srg > self.q_srg or self.m_key > self.q_fin:
            raise ConfigError("extractor output exceeds its field size")
        if self.t_prime >= self.t:
            raise ConfigError(
                f"t' = {self.t_prime} must be < t = {self.t} "
                "(r3 shorter than x2 by construction)"
            )
        if self.strict and not self.schedule_budget_ok:
            raise ConfigError(
                f"challenge output {self.m_chal} exceeds the k^gamma budget {self.k**self.gamma:.1f}"
            )

    @property
    def D(self) -> int:
        return 3**self.iterations

    @property
    def t(self) -> int:
        return 2 * self.D * self.s2

    @property
    def t_prime(self) -> int:
        return 2 * self.m_srg

    @property
    def rounds(self) -> int:
        return self.t + self.t_prime

    @cached_property
    def schedule(self) -> ChallengeSchedule:
        return schedule_build(self.base, self.unit, self.rounds, ext_output_len=10**18)

    @property
    def m_chal(self) -> int:
        return self.schedule.max_entry

    @property
    def schedule_budget_ok(self) -> bool:
        return self.m_chal <= self.k**self.gamma

    def flags(self) -> list[str]:
        out = ["stand-in-extractor", "seed-expanded", f"base={self.base}", f"D={self.D}"]
        if not self.schedule_budget_ok:
            out.append("schedule-budget-exceeded")
        return out
