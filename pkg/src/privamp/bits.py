"""Bit strings, bit matrices, and the string metrics the protocols are built on.

Index 0 is the leftmost position everywhere; prefixes take low indices.
Edit distance here means single-bit insertions and deletions only (the
variant that also counts 0->1 changes lives in :func:`min_edit_ops_with_flips`).
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "BitString",
    "BitMatrix",
    "PrefixRangeError",
    "prefix",
    "slice_rows",
    "weight",
    "edit_distance",
    "lcs_length",
    "min_edit_ops_with_flips",
    "flip_claim_violations",
    "parse_bits",
]


class PrefixRangeError(ValueError):
    """Requested prefix length exceeds the available bits.

    In protocol context this signals that a challenge schedule outgrew the
    configured extractor output.
    """


class BitString:
    """Immutable finite sequence of bits.

    Stored as one byte per bit (values 0/1), which keeps slicing, equality
    and popcount at C speed via ``bytes``. Hashable, so usable as dict keys
    in codebooks and distribution tables.
    """

    __slots__ = ("_b",)

    def __init__(self, bits: Iterable[int] | str | bytes | "BitString" = b""):
        if isinstance(bits, BitString):
            self._b = bits._b
        elif isinstance(bits, bytes):
            if any(x > 1 for x in bits):
                raise ValueError("byte-backed bits must be 0 or 1")
            self._b = bits
        elif isinstance(bits, str):
            try:
                self._b = bytes("01".index(c) for c in bits)
            except ValueError:
                raise ValueError(f"bit string may contain only 0/1, got {bits!r}") from None
        else:
            vals = bytes(int(b) for b in bits)
            if any(x > 1 for x in vals):
                raise ValueError("bits must be 0 or 1")
            self._b = vals

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitString":
        """Big-endian encoding: bit 0 of the result is the most significant."""
        if value < 0 or (length >= 0 and value >> length):
            raise ValueError(f"value {value} does not fit in {length} bits")
        return cls(bytes((value >> (length - 1 - i)) & 1 for i in range(length)))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(bytes(length))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BitString":
        return cls(np.asarray(arr, dtype=np.uint8).tobytes())

    def to_int(self) -> int:
        v = 0
        for b in self._b:
            v = (v << 1) | b
        return v

    def to_array(self) -> np.ndarray:
        """Read-only uint8 view of the bits."""
        a = np.frombuffer(self._b, dtype=np.uint8)
        a.flags.writeable = False
        return a

    def __len__(self) -> int:
        return len(self._b)

    def __iter__(self) -> Iterator[int]:
        return iter(self._b)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return BitString(self._b[idx])
        return self._b[idx]

    def __add__(self, other: "BitString") -> "BitString":
        return BitString(self._b + other._b)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and self._b == other._b

    def __hash__(self) -> int:
        return hash(self._b)

    def __str__(self) -> str:
        return "".join("01"[b] for b in self._b)

    def __repr__(self) -> str:
        return f"BitString('{self}')"


def parse_bits(text: str) -> BitString:
    """Parse the ASCII 0/1 encoding used in logs and fixtures."""
    return BitString(text.strip())


class BitMatrix:
    """Immutable sequence of equal-length rows.

    Houses somewhere-random sources and the per-row extractor outputs of the
    matrix-challenge rounds.
    """

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[BitString]):
        rows = tuple(BitString(r) for r in rows)
        if rows:
            n = len(rows[0])
            if any(len(r) != n for r in rows):
                raise ValueError("all rows must share one length")
        self.rows = rows

    @property
    def row_length(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[BitString]:
        return iter(self.rows)

    def __getitem__(self, i: int) -> BitString:
        return self.rows[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, BitMatrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def flatten(self) -> BitString:
        out = b"".join(r._b for r in self.rows)
        return BitString(out)

    @classmethod
    def from_flat(cls, flat: BitString, n_rows: int) -> "BitMatrix":
        if n_rows <= 0 or len(flat) % n_rows:
            raise ValueError(f"cannot reshape {len(flat)} bits into {n_rows} rows")
        w = len(flat) // n_rows
        return cls([flat[i * w : (i + 1) * w] for i in range(n_rows)])

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.rows)

    def __repr__(self) -> str:
        return f"BitMatrix({len(self)}x{self.row_length})"


def prefix(r: BitString, s: int) -> BitString:
    """First ``s`` bits of ``r``. Raises PrefixRangeError if s > |r| or s < 0."""
    if s < 0 or s > len(r):
        raise PrefixRangeError(f"prefix length {s} out of range for {len(r)}-bit string")
    return r[:s]


def slice_rows(x: BitMatrix, s: int) -> BitMatrix:
    """Row-wise prefix: each output row i is prefix(x_i, s)."""
    if s < 0 or s > x.row_length:
        raise PrefixRangeError(f"slice width {s} out of range for rows of {x.row_length} bits")
    return BitMatrix([r[:s] for r in x.rows])


def weight(r: BitString) -> int:
    """Number of 1 bits."""
    return sum(r._b)


def lcs_length(a: BitString, b: BitString) -> int:
    """Longest common subsequence length, classic O(|a||b|) dynamic program."""
    bb = b._b
    m = len(bb)
    prev = [0] * (m + 1)
    for ca in a._b:
        cur = [0] * (m + 1)
        pj1 = prev[0]
        for j in range(1, m + 1):
            pj = prev[j]
            if ca == bb[j - 1]:
                cur[j] = pj1 + 1
            else:
                cj1 = cur[j - 1]
                cur[j] = pj if pj >= cj1 else cj1
            pj1 = pj
        prev = cur
    return prev[m]


def edit_distance(c: BitString, c2: BitString) -> int:
    """Minimum single-bit insertions/deletions turning c into c2.

    Equals |c| + |c2| - 2*LCS(c, c2).
    """
    return len(c) + len(c2) - 2 * lcs_length(c, c2)


def _lcs_bitparallel(a_int: int, a_len: int, pm0: int, pm1: int, b_len: int) -> int:
    # Crochemore et al. bit-vector LLCS; strings encoded MSB-first in ints,
    # pm bit j = 1 iff b's character j equals the mask's symbol.
    full = (1 << b_len) - 1
    v = full
    for i in range(a_len - 1, -1, -1):
        m = pm1 if (a_int >> i) & 1 else pm0
        u = v & m
        v = ((v + u) | (v - u)) & full
    return b_len - bin(v).count("1")


def _match_masks(b_int: int, b_len: int) -> tuple[int, int]:
    pm1 = 0
    for j in range(b_len):
        if (b_int >> (b_len - 1 - j)) & 1:
            pm1 |= 1 << j
    return ~pm1 & ((1 << b_len) - 1), pm1


DEFAULT_EXHAUSTIVE_BOUND = 12


def min_edit_ops_with_flips(
    c: BitString, c2: BitString, bound: int = DEFAULT_EXHAUSTIVE_BOUND
) -> tuple[int, int, int]:
    """A minimizer (n0, n1, n2) of n2 + n0 over op sequences turning c into c2.

    n0 counts 0->1 changes, n1 counts 1->0 changes, n2 counts insertions and
    deletions. 1->0 changes are free in the objective, so this is a weighted
    edit distance with substitution costs {equal: 0, 1->0: 0, 0->1: 1} and
    unit indel cost. Inputs above ``bound`` bits are refused.
    """
    la, lb = len(c), len(c2)
    if la > bound or lb > bound:
        raise ValueError(f"inputs exceed the {bound}-bit exhaustive-search bound")
    a, b = c._b, c2._b
    # dp holds the n2+n0 cost; ops recovered by backtracking one optimal path.
    dp = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        dp[i][0] = i
    for j in range(lb + 1):
        dp[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            sub = 0 if a[i - 1] == b[j - 1] or (a[i - 1] == 1 and b[j - 1] == 0) else 1
            dp[i][j] = min(dp[i - 1][j] + 1, dp[i][j - 1] + 1, dp[i - 1][j - 1] + sub)
    n0 = n1 = n2 = 0
    i, j = la, lb
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = 0 if a[i - 1] == b[j - 1] or (a[i - 1] == 1 and b[j - 1] == 0) else 1
            if dp[i][j] == dp[i - 1][j - 1] + sub:
                if a[i - 1] != b[j - 1]:
                    if a[i - 1] == 0:
                        n0 += 1
                    else:
                        n1 += 1
                i -= 1
                j -= 1
                continue
        if i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            n2 += 1
            i -= 1
        else:
            n2 += 1
            j -= 1
    return n0, n1, n2


def _all_pairs_tables(la: int, lb: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (D, D') over every pair in {0,1}^la x {0,1}^lb.

    Pair index = a_value * 2^lb + b_value, values read MSB-first.
    """
    npairs = 1 << (la + lb)
    idx = np.arange(npairs, dtype=np.int64)
    a_idx = idx >> lb
    b_idx = idx & ((1 << lb) - 1)
    abits = [((a_idx >> (la - 1 - i)) & 1).astype(np.uint8) for i in range(la)]
    bbits = [((b_idx >> (lb - 1 - j)) & 1).astype(np.uint8) for j in range(lb)]
    inf = np.uint8(127)

    def run(flips: bool) -> np.ndarray:
        prev = [np.full(npairs, j, dtype=np.uint8) for j in range(lb + 1)]
        for i in range(1, la + 1):
            ai = abits[i - 1]
            cur = [np.full(npairs, i, dtype=np.uint8)]
            for j in range(1, lb + 1):
                bj = bbits[j - 1]
                if flips:
                    sub = ((ai == 0) & (bj == 1)).astype(np.uint8)
                    diag = prev[j - 1] + sub
                else:
                    diag = np.where(ai == bj, prev[j - 1], inf)
                cur.append(np.minimum(np.minimum(prev[j] + 1, cur[j - 1] + 1), diag))
            prev = cur
        return prev[lb]

    return run(False), run(True)


def flip_claim_violations(max_len: int = 10) -> tuple[int, int]:
    """Exhaustively check D' >= D/4 on its domain: equal length, equal weight.

    The weight-balance argument behind the claim needs both strings to carry
    the same number of 1s (codewords of a constant-weight code do). Returns
    (pairs_checked, violations).
    """
    checked = violations = 0
    for length in range(max_len + 1):
        d, dprime = _all_pairs_tables(length, length)
        vals = np.arange(1 << length, dtype=np.int64)
        pop = np.zeros(1 << length, dtype=np.uint8)
        for i in range(length):
            pop += ((vals >> i) & 1).astype(np.uint8)
        wa = np.repeat(pop, 1 << length)
        wb = np.tile(pop, 1 << length)
        mask = wa == wb
        checked += int(mask.sum())
        violations += int(np.sum(4 * dprime[mask].astype(np.int32) < d[mask]))
    return checked, violations
