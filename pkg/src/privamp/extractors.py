"""The four extractor/condenser roles the protocols consume.

Concrete defaults (all pure functions, freely shareable across workers):

* strong seeded extractor  -> Toeplitz leftover-hashing (seed = n+m-1 bits)
* strong two-source        -> first m bits of the product in GF(2^n)
* somewhere condenser      -> iterated (a, b, a*b mod p) block
* SR-vs-general extractor  -> XOR over rows of the two-source extractor
* TExt simulation          -> keyed SHA-256 stand-in, simulation-only

The GF(2^n) moduli are pinned so outputs are bit-exact across runs:

    n=4  : x^4+x+1                  (0x13)
    n=8  : x^8+x^4+x^3+x+1          (0x11B)
    n=16 : x^16+x^12+x^3+x+1        (0x1100B)
    n=32 : x^32+x^7+x^3+x^2+1       (0x10000008D)
    n=64 : x^64+x^4+x^3+x+1         (0x1000000000000001B)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as _fft

from .bits import BitMatrix, BitString
from .prf import prf_bits

__all__ = [
    "IRREDUCIBLE_POLY",
    "SeededExtractorSpec",
    "TwoSourceExtractorSpec",
    "CondenserSpec",
    "toeplitz_extract",
    "gf2n_product_extract",
    "gf_mul",
    "somewhere_condense",
    "srg_extract",
    "random_oracle_two_source",
    "expand_seed",
    "fit_to_field",
    "lhl_error_bound",
    "two_source_error_bound",
]

IRREDUCIBLE_POLY = {
    4: 0x13,
    8: 0x11B,
    16: 0x1100B,
    32: 0x10000008D,
    64: 0x1000000000000001B,
}

SEEDED_KINDS = ("toeplitz-hash", "plug-in")
TWO_SOURCE_KINDS = ("gf2n-product", "random-oracle-sim", "plug-in")

_DIRECT_LIMIT = 4096  # n*m below this: plain Python inner products


def lhl_error_bound(k: float, m: int) -> float:
    """Leftover-hash error 2^((m-k)/2 - 1) for a 2-universal family, capped at 1."""
    return min(1.0, 2.0 ** ((m - k) / 2.0 - 1.0))


def two_source_error_bound(n: int, m: int, k1: float, k2: float) -> float:
    """Error bound 2^((n+m-k1-k2)/2 - 1) for the GF(2^n)-product extractor, capped at 1."""
    return min(1.0, 2.0 ** ((n + m - k1 - k2) / 2.0 - 1.0))


def toeplitz_extract(w: BitString, seed: BitString, m: int) -> BitString:
    """GF(2) Toeplitz hash: output bit j = <w, j-th band of the seed matrix>.

    The (m x n) Toeplitz matrix T over GF(2) is defined by the seed via
    T[j][i] = seed[n-1+j-i], so the seed must have exactly n+m-1 bits.
    Computed as a window of the polynomial product of w and seed; the FFT
    path is exact (coefficients are integers <= n, far below float53).
    """
    n = len(w)
    if len(seed) != n + m - 1:
        raise ValueError(f"seed must have n+m-1 = {n + m - 1} bits, got {len(seed)}")
    if m == 0:
        return BitString()
    if n == 0:
        return BitString.zeros(m)
    if n * m <= _DIRECT_LIMIT:
        wa = w.to_array()
        sa = seed.to_array()
        out = bytes(int(np.dot(wa, sa[n - 1 + j - np.arange(n)])) & 1 for j in range(m))
        return BitString(out)
    if n <= 64:
        # Few set bits: XOR of shifted seed windows beats the FFT.
        sa = seed.to_array()
        acc = np.zeros(m, dtype=np.uint8)
        for i, bit in enumerate(w):
            if bit:
                acc ^= sa[n - 1 - i : n - 1 - i + m]
        return BitString.from_array(acc)
    # Circular convolution of size >= n+m-1: wraparound only corrupts
    # coefficients below index n-1, outside the window we read.
    size = _fft.next_fast_len(n + m - 1, real=True)
    fw = _fft.rfft(w.to_array().astype(np.float64), size)
    fs = _fft.rfft(seed.to_array().astype(np.float64), size)
    conv = _fft.irfft(fw * fs, size)
    window = np.rint(conv[n - 1 : n - 1 + m]).astype(np.int64) & 1
    return BitString.from_array(window.astype(np.uint8))


def gf_mul(a: int, b: int, n: int) -> int:
    """Product in GF(2^n) under the pinned modulus."""
    try:
        poly = IRREDUCIBLE_POLY[n]
    except KeyError:
        raise ValueError(f"no pinned irreducible polynomial for n={n}") from None
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return r


def gf2n_product_extract(x: BitString, y: BitString, m: int) -> BitString:
    """First m bits of x*y in GF(2^n); a strong two-source extractor when
    k1 + k2 comfortably exceeds n + 2m."""
    n = len(x)
    if len(y) != n:
        raise ValueError(f"operands must share a length, got {n} and {len(y)}")
    if n not in IRREDUCIBLE_POLY:
        raise ValueError(f"unsupported field size n={n}; pick one of {sorted(IRREDUCIBLE_POLY)}")
    if m > n:
        raise ValueError(f"m={m} exceeds field size n={n}")
    prod = gf_mul(x.to_int(), y.to_int(), n)
    return BitString.from_int(prod, n)[:m]


def fit_to_field(v: BitString, n_field: int) -> BitString:
    """Truncate or zero-pad (on the right) to the field width.

    The protocols use this where operand lengths differ from the pinned
    field sizes; every such window is declared in the params and flagged in
    reports.
    """
    if len(v) >= n_field:
        return v[:n_field]
    return v + BitString.zeros(n_field - len(v))


def expand_seed(short_seed: BitString, length: int, tag: str = "seed-expand") -> BitString:
    """Deterministic counter-mode expansion of a short seed.

    Breaks the information-theoretic seed model; every use is flagged
    simulation-grade in reports and accounting.
    """
    return BitString(prf_bits(tag.encode(), str(short_seed).encode(), length))


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


@dataclass(frozen=True)
class CondenserSpec:
    """Iterated sum-product-style block: one row (a,b) -> (a, b, a*b mod p)."""

    n: int
    iterations: int
    p: int

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.n % (1 << self.iterations):
            raise ValueError(f"n={self.n} not divisible by 2^{self.iterations}")
        if self.iterations:
            half = self.n >> self.iterations
            if not _is_prime(self.p):
                raise ValueError(f"p={self.p} is not prime")
            if self.p > (1 << half):
                raise ValueError(f"p={self.p} does not fit the {half}-bit product row")

    @property
    def D(self) -> int:
        return 3**self.iterations

    @property
    def m(self) -> int:
        return self.n >> self.iterations


def somewhere_condense(x: BitString, spec: CondenserSpec) -> BitMatrix:
    """Apply the basic block `iterations` times to every row.

    iterations=0 is the identity (single row x). Empirically some row gains
    entropy rate; no worst-case guarantee is claimed for this block.
    """
    if len(x) != spec.n:
        raise ValueError(f"input has {len(x)} bits, spec wants {spec.n}")
    rows = [x]
    for _ in range(spec.iterations):
        nxt = []
        for r in rows:
            half = len(r) // 2
            a, b = r[:half], r[half:]
            prod = (a.to_int() % spec.p) * (b.to_int() % spec.p) % spec.p
            nxt.extend([a, b, BitString.from_int(prod, half)])
        rows = nxt
    return BitMatrix(rows)


def srg_extract(
    x: BitString,
    y: BitMatrix,
    m: int,
    two_source: Callable[[BitString, BitString, int], BitString] = gf2n_product_extract,
) -> BitString:
    """XOR over rows i of two_source(x, y_i, m).

    Provably near-uniform when the rows are mutually independent and at
    least one row is uniform and independent of x; no worst-case SR-source
    guarantee is claimed.
    """
    if not len(y):
        raise ValueError("SR source needs at least one row")
    acc = np.zeros(m, dtype=np.uint8)
    for row in y.rows:
        acc ^= two_source(x, row, m).to_array()
    return BitString.from_array(acc)


def random_oracle_two_source(
    x: BitString, y: BitString, m: int, session_seed: int
) -> BitString:
    """Keyed PRF stand-in for the non-constructive TExt.

    Simulation-only: no information-theoretic guarantee. Deterministic in
    (x, y, session_seed).
    """
    payload = f"{session_seed}|{len(x)}|{x}|{y}".encode()
    return BitString(prf_bits(b"texts-sim", payload, m))


@dataclass(frozen=True)
class SeededExtractorSpec:
    """Strong seeded extractor role: n source bits + d seed bits -> m bits."""

    n: int
    m: int
    kind: str = "toeplitz-hash"
    fn: Callable[[BitString, BitString, int], BitString] | None = None

    def __post_init__(self):
        if self.kind not in SEEDED_KINDS:
            raise ValueError(f"unknown seeded extractor kind {self.kind!r}")
        if self.kind == "plug-in" and self.fn is None:
            raise ValueError("plug-in kind needs fn")

    @property
    def d(self) -> int:
        return self.n + self.m - 1

    def extract(self, w: BitString, seed: BitString) -> BitString:
        if self.kind == "toeplitz-hash":
            return toeplitz_extract(w, seed, self.m)
        return self.fn(w, seed, self.m)

    def error_bound(self, k: float) -> float:
        if self.kind == "toeplitz-hash":
            return lhl_error_bound(k, self.m)
        return 1.0


@dataclass(frozen=True)
class TwoSourceExtractorSpec:
    """Strong two-source extractor role over (n1, n2) -> m bits."""

    n1: int
    n2: int
    m: int
    kind: str = "gf2n-product"
    session_seed: int = 0
    fn: Callable[[BitString, BitString, int], BitString] | None = None

    def __post_init__(self):
        if self.kind not in TWO_SOURCE_KINDS:
            raise ValueError(f"unknown two-source extractor kind {self.kind!r}")
        if self.kind == "gf2n-product":
            if self.n1 != self.n2:
                raise ValueError("gf2n-product requires n1 = n2")
            if self.n1 not in IRREDUCIBLE_POLY:
                raise ValueError(f"unsupported field size {self.n1}")
            if self.m > self.n1:
                raise ValueError("gf2n-product requires m <= n")
        if self.kind == "plug-in" and self.fn is None:
            raise ValueError("plug-in kind needs fn")

    def extract(self, x: BitString, y: BitString) -> BitString:
        if self.kind == "gf2n-product":
            return gf2n_product_extract(x, y, self.m)
        if self.kind == "random-oracle-sim":
            return random_oracle_two_source(x, y, self.m, self.session_seed)
        return self.fn(x, y, self.m)

    def error_bound(self, k1: float, k2: float) -> float | None:
        """None means simulation-only (no stated bound)."""
        if self.kind == "gf2n-product":
            return two_source_error_bound(self.n1, self.m, k1, k2)
        return None

    @property
    def flags(self) -> tuple[str, ...]:
        if self.kind == "random-oracle-sim":
            return ("simulation-only",)
        return ()
