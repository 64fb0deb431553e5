"""Weak-source families and exact information-theoretic measurements.

Sources double as protocol inputs and as the oracle side of the test suite:
families with n <= 24 can be expanded into explicit DistributionTables and
measured exhaustively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .bits import BitString
from .prf import prf_bits

__all__ = [
    "DistributionTable",
    "SourceSpec",
    "sample",
    "min_entropy",
    "statistical_distance",
    "conditional_minentropy_audit",
    "empirical_min_entropy",
]

TABLE_N_LIMIT = 24
MASS_TOLERANCE = 1e-12

FAMILIES = ("flat-on-random-subset", "bit-fixing", "biased-iid", "explicit-table")


class DistributionTable:
    """Explicit distribution over n-bit strings, keyed by integer value.

    Exhaustive-enumeration representation; capped at n <= 24.
    """

    def __init__(self, n: int, probs: dict[int, float]):
        if n < 0 or n > TABLE_N_LIMIT:
            raise ValueError(f"DistributionTable supports 0 <= n <= {TABLE_N_LIMIT}, got {n}")
        total = 0.0
        for v, p in probs.items():
            if v < 0 or v >> n:
                raise ValueError(f"value {v} outside {n}-bit range")
            if p < 0:
                raise ValueError(f"negative mass {p} on {v}")
            total += p
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"masses sum to {total}, not 1 within {MASS_TOLERANCE}")
        self.n = n
        self.probs = {v: p for v, p in probs.items() if p > 0}

    @classmethod
    def uniform(cls, n: int) -> "DistributionTable":
        m = 1.0 / (1 << n)
        return cls(n, {v: m for v in range(1 << n)})

    @classmethod
    def point_mass(cls, value: BitString) -> "DistributionTable":
        return cls(len(value), {value.to_int(): 1.0})

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "DistributionTable":
        """Two-column fixture format: `bitstring mass` per line, # comments."""
        probs: dict[int, float] = {}
        n = None
        for raw in lines:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            bits_text, mass_text = line.split()
            b = BitString(bits_text)
            if n is None:
                n = len(b)
            elif len(b) != n:
                raise ValueError(f"mixed string lengths in table: {len(b)} vs {n}")
            probs[b.to_int()] = probs.get(b.to_int(), 0.0) + float(mass_text)
        if n is None:
            raise ValueError("empty distribution table")
        return cls(n, probs)

    def to_lines(self) -> list[str]:
        return [
            f"{BitString.from_int(v, self.n)} {p!r}"
            for v, p in sorted(self.probs.items())
        ]

    def support_size(self) -> int:
        return len(self.probs)

    def mass(self, value: int) -> float:
        return self.probs.get(value, 0.0)

    def min_entropy(self) -> float:
        return min_entropy(self)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DistributionTable)
            and self.n == other.n
            and self.probs == other.probs
        )


def min_entropy(d: DistributionTable) -> float:
    """-log2 of the maximum probability mass."""
    if not d.probs:
        raise ValueError("empty support")
    return -math.log2(max(d.probs.values()))


def statistical_distance(d1: DistributionTable, d2: DistributionTable) -> float:
    """Half the L1 distance; equals the max-over-subsets form."""
    if d1.n != d2.n:
        raise ValueError(f"mismatched lengths {d1.n} vs {d2.n}")
    keys = set(d1.probs) | set(d2.probs)
    return 0.5 * sum(abs(d1.mass(v) - d2.mass(v)) for v in keys)


def conditional_minentropy_audit(
    joint: DistributionTable, x_bits: int, eps: float
) -> tuple[float, float]:
    """Audit the conditional min-entropy lemma on an explicit (X, Y) table.

    The joint table ranges over x||y concatenations with |x| = x_bits.
    threshold = H_inf(X) - log2|supp(Y)| - log2(1/eps); returns the Y-mass of
    outcomes y with H_inf(X | Y=y) >= threshold, which the lemma puts at
    >= 1 - eps. A lower value indicates an implementation bug.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    if not 0 <= x_bits <= joint.n:
        raise ValueError("x_bits out of range")
    y_bits = joint.n - x_bits
    x_marginal: dict[int, float] = {}
    per_y: dict[int, dict[int, float]] = {}
    for v, p in joint.probs.items():
        x, y = v >> y_bits, v & ((1 << y_bits) - 1)
        x_marginal[x] = x_marginal.get(x, 0.0) + p
        row = per_y.setdefault(y, {})
        row[x] = row.get(x, 0.0) + p
    hx = -math.log2(max(x_marginal.values()))
    threshold = hx - math.log2(len(per_y)) - math.log2(1.0 / eps)
    passing = 0.0
    for y, cond in per_y.items():
        py = sum(cond.values())
        h_cond = -math.log2(max(cond.values()) / py)
        if h_cond >= threshold - 1e-12:
            passing += py
    return passing, threshold


@dataclass(frozen=True)
class SourceSpec:
    """Declarative (n, k) weak-source family.

    family: flat-on-random-subset | bit-fixing | biased-iid | explicit-table.
    seed pins the pseudorandom choices (subset / fixed positions) so that
    experiments replay bit-identically.
    """

    family: str
    n: int
    k: float
    seed: int = 0
    bias: float | None = None
    table: DistributionTable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown source family {self.family!r}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")
        if self.family == "biased-iid":
            p = self.bias
            if p is None or not 0.0 <= p <= 1.0:
                raise ValueError("biased-iid needs bias in [0,1]")
            if self.n and self.n * -math.log2(max(p, 1.0 - p) or 1.0) < self.k - 1e-9:
                raise ValueError("bias too strong for the claimed min-entropy k")
        if self.family == "explicit-table":
            if self.table is None:
                raise ValueError("explicit-table needs a DistributionTable")
            if self.table.n != self.n:
                raise ValueError("table length disagrees with n")

    @property
    def k_int(self) -> int:
        return math.ceil(self.k)

    def _tag(self) -> bytes:
        return f"src:{self.family}:{self.n}:{self.k}:{self.seed}".encode()

    def _flat_support(self) -> np.ndarray:
        # Exact random subset; only for enumerable spaces.
        if self.n > TABLE_N_LIMIT:
            raise ValueError("flat support enumeration capped at n <= 24")
        rng = np.random.default_rng(self.seed)
        return np.sort(rng.choice(1 << self.n, size=1 << self.k_int, replace=False))

    def _fixing(self) -> tuple[np.ndarray, np.ndarray]:
        # (free position indices, fixed bit values for the others)
        rng = np.random.default_rng(self.seed)
        free = np.sort(rng.choice(self.n, size=self.k_int, replace=False))
        fixed_vals = rng.integers(0, 2, size=self.n).astype(np.uint8)
        return free, fixed_vals

    def sample(self, rng: np.random.Generator) -> BitString:
        """One i.i.d. draw."""
        if self.family == "flat-on-random-subset":
            if self.n <= TABLE_N_LIMIT:
                support = self._flat_support()
                return BitString.from_int(int(support[rng.integers(len(support))]), self.n)
            # PRF-graph flat source: the low ceil(k) bits are the index, the
            # rest a keyed PRF of it. Injective, so min-entropy is exactly
            # ceil(k).
            kk = self.k_int
            idx_bits = rng.integers(0, 2, size=kk, dtype=np.uint8)
            idx_bytes = np.packbits(idx_bits).tobytes()
            head = prf_bits(self._tag(), idx_bytes, self.n - kk)
            return BitString(head + idx_bits.tobytes())
        if self.family == "bit-fixing":
            free, fixed_vals = self._fixing()
            out = fixed_vals.copy()
            out[free] = rng.integers(0, 2, size=len(free), dtype=np.uint8)
            return BitString.from_array(out)
        if self.family == "biased-iid":
            draws = rng.random(self.n) < self.bias
            return BitString.from_array(draws.astype(np.uint8))
        table = self.table
        vals = sorted(table.probs)
        cum = np.cumsum([table.probs[v] for v in vals])
        u = rng.random()
        return BitString.from_int(vals[int(np.searchsorted(cum, u))], self.n)

    def support(self) -> list[int]:
        """Explicit support for enumerable families."""
        if self.family == "flat-on-random-subset":
            return [int(v) for v in self._flat_support()]
        if self.family == "explicit-table":
            return sorted(self.table.probs)
        return sorted(self.as_table().probs)

    def as_table(self) -> DistributionTable:
        if self.family == "explicit-table":
            return self.table
        if self.family == "flat-on-random-subset":
            sup = self._flat_support()
            m = 1.0 / len(sup)
            return DistributionTable(self.n, {int(v): m for v in sup})
        if self.family == "bit-fixing":
            free, fixed_vals = self._fixing()
            if len(free) > TABLE_N_LIMIT:
                raise ValueError("bit-fixing table enumeration too large")
            free_set = {int(f) for f in free}
            base = 0
            for pos in range(self.n):
                if pos not in free_set:
                    base |= int(fixed_vals[pos]) << (self.n - 1 - pos)
            vals = []
            for combo in range(1 << len(free)):
                v = base
                for i, pos in enumerate(free):
                    if (combo >> (len(free) - 1 - i)) & 1:
                        v |= 1 << (self.n - 1 - int(pos))
                vals.append(v)
            m = 1.0 / len(vals)
            return DistributionTable(self.n, {v: m for v in vals})
        # biased-iid
        if self.n > TABLE_N_LIMIT:
            raise ValueError("biased table enumeration capped at n <= 24")
        p = self.bias
        probs = {}
        for v in range(1 << self.n):
            w = bin(v).count("1")
            probs[v] = (p**w) * ((1 - p) ** (self.n - w))
        return DistributionTable(self.n, probs)

    def analytic_min_entropy(self) -> float:
        if self.family in ("flat-on-random-subset", "bit-fixing"):
            return float(self.k_int)
        if self.family == "biased-iid":
            return self.n * -math.log2(max(self.bias, 1 - self.bias))
        return self.table.min_entropy()

    def to_config(self) -> dict[str, str]:
        out = {"family": self.family, "n": str(self.n), "k": repr(self.k), "seed": str(self.seed)}
        if self.bias is not None:
            out["bias"] = repr(self.bias)
        return out

    @classmethod
    def from_config(cls, cfg: dict[str, str], table: DistributionTable | None = None) -> "SourceSpec":
        return cls(
            family=cfg["family"],
            n=int(cfg["n"]),
            k=float(cfg["k"]),
            seed=int(cfg.get("seed", "0")),
            bias=float(cfg["bias"]) if "bias" in cfg else None,
            table=table,
        )


def sample(spec: SourceSpec, rng: np.random.Generator) -> BitString:
    return spec.sample(rng)


def empirical_min_entropy(samples: Iterable[BitString]) -> float:
    """Min-entropy of the empirical distribution of the given draws."""
    counts: dict[BitString, int] = {}
    total = 0
    for s in samples:
        counts[s] = counts.get(s, 0) + 1
        total += 1
    if not total:
        raise ValueError("no samples")
    return -math.log2(max(counts.values()) / total)
