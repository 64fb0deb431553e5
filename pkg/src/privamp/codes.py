"""Edit-metric error-detecting codes and the constant-weight message map.

The codebook generator replaces the asymptotic construction with a greedy
search over constant-weight strings, then certifies the distance and weight
properties exhaustively: the protocols' security argument only consumes the
certified properties, never the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .bits import BitString, edit_distance, _lcs_bitparallel, _match_masks

__all__ = [
    "EditCodebook",
    "CodeGenerationError",
    "constant_weight_encode",
    "constant_weight_decode",
    "edit_code_generate",
    "edit_encode",
    "edit_decode_exact",
    "save_codebook",
    "load_codebook",
]

DEFAULT_E = 0.25
DEFAULT_RHO = 0.25
GENERATION_LAMBDA_M_LIMIT = 12
EXHAUSTIVE_SPACE_LIMIT = 1 << 18
STREAM_ATTEMPT_BUDGET = 2_000_000


class CodeGenerationError(RuntimeError):
    def __init__(self, msg: str, achieved: int):
        super().__init__(msg)
        self.achieved = achieved


def constant_weight_encode(m: BitString) -> BitString:
    """0 -> 01, 1 -> 10; output weight is always |m|."""
    out = bytearray()
    for b in m:
        out += b"\x01\x00" if b else b"\x00\x01"
    return BitString(bytes(out))


def constant_weight_decode(c: BitString) -> BitString | None:
    """Invert pairs 01 -> 0, 10 -> 1; None on any 00/11 pair or odd length."""
    if len(c) % 2:
        return None
    out = bytearray()
    for i in range(0, len(c), 2):
        pair = (c[i], c[i + 1])
        if pair == (0, 1):
            out.append(0)
        elif pair == (1, 0):
            out.append(1)
        else:
            return None
    return BitString(bytes(out))


@dataclass(frozen=True)
class EditCodebook:
    """Constant-weight code with certified pairwise edit distance >= e*lambda_c."""

    lambda_m: int
    lambda_c: int
    e: float
    weight: int
    entries: dict[BitString, BitString] = field(compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_decode", {c: m for m, c in self.entries.items()}
        )

    @property
    def min_distance(self) -> float:
        return self.e * self.lambda_c

    def encode(self, m: BitString) -> BitString:
        return self.entries[m]

    def decode_exact(self, c: BitString) -> BitString | None:
        """Unique preimage of an exact codeword match; None rejects."""
        return self._decode.get(c)

    def verify(self) -> None:
        """Exhaustive certification; raises ValueError on any violation."""
        if len(self.entries) != 1 << self.lambda_m:
            raise ValueError(
                f"expected {1 << self.lambda_m} codewords, found {len(self.entries)}"
            )
        words = list(self.entries.values())
        for c in words:
            if len(c) != self.lambda_c:
                raise ValueError(f"codeword length {len(c)} != {self.lambda_c}")
            if sum(c) != self.weight:
                raise ValueError(f"codeword weight {sum(c)} != {self.weight}")
        if len(set(words)) != len(words):
            raise ValueError("duplicate codewords")
        need = self.min_distance
        for i in range(len(words)):
            for j in range(i + 1, len(words)):
                d = edit_distance(words[i], words[j])
                if d + 1e-9 < need:
                    raise ValueError(
                        f"pair distance {d} below {need}: {words[i]} vs {words[j]}"
                    )


def edit_encode(m: BitString, book: EditCodebook) -> BitString:
    return book.encode(m)


def edit_decode_exact(c: BitString, book: EditCodebook) -> BitString | None:
    return book.decode_exact(c)


def _lex_constant_weight(length: int, w: int):
    """All weight-w strings of the given length, ascending lexicographic."""
    if w == 0:
        yield 0
        return
    # Gosper's hack over integers, smallest (lexicographically largest
    # suffix of 1s) first; iterate by integer value ascending.
    v = (1 << w) - 1
    top = 1 << length
    while v < top:
        yield v
        c = v & -v
        r = v + c
        v = (((r ^ v) >> 2) // c) | r


def _stream_constant_weight(length: int, w: int, tag: bytes):
    """Deterministic pseudorandom stream of weight-w strings (may repeat)."""
    from .prf import prf_bytes

    ctr = 0
    while True:
        pool = prf_bytes(tag, ctr.to_bytes(8, "big"), 4 * length)
        pos = list(range(length))
        bi = 0
        for i in range(length - 1, 0, -1):
            r = pool[bi % len(pool)] % (i + 1)
            bi += 1
            pos[i], pos[r] = pos[r], pos[i]
        v = 0
        for p in pos[:w]:
            v |= 1 << p
        yield v
        ctr += 1


def edit_code_generate(
    lambda_m: int,
    e: float = DEFAULT_E,
    rho: float = DEFAULT_RHO,
    cache_dir: str | Path | None = None,
    max_attempts: int = STREAM_ATTEMPT_BUDGET,
) -> EditCodebook:
    """Greedy deterministic search for a constant-weight edit codebook.

    Admits a candidate iff its edit distance to every admitted string is
    >= e*lambda_c; the same parameters always produce the bit-identical
    book. Fails with the achieved count if 2^lambda_m codewords cannot be
    found. Books are cached on disk and re-verified on load.
    """
    if lambda_m < 1 or lambda_m > GENERATION_LAMBDA_M_LIMIT:
        raise ValueError(f"lambda_m must be in 1..{GENERATION_LAMBDA_M_LIMIT}")
    if not 0 < e <= 1:
        raise ValueError("e must be in (0,1]")
    lambda_c = lambda_m / rho
    if abs(lambda_c - round(lambda_c)) > 1e-9:
        raise ValueError(f"lambda_m/rho = {lambda_c} is not an integer")
    lambda_c = int(round(lambda_c))
    if lambda_c % 2:
        raise ValueError(f"lambda_c = {lambda_c} must be even for the constant-weight space")
    w = lambda_c // 2

    if cache_dir is not None:
        path = _cache_path(cache_dir, lambda_m, lambda_c, e, w)
        if path.exists():
            return load_codebook(path)

    need = 1 << lambda_m
    # Admit iff edit >= e*lambda_c, i.e. LCS <= lambda_c - e*lambda_c/2.
    max_lcs = math.floor(lambda_c - e * lambda_c / 2.0 + 1e-9)
    space = math.comb(lambda_c, w)
    if space <= EXHAUSTIVE_SPACE_LIMIT:
        candidates = _lex_constant_weight(lambda_c, w)
        budget = space
    else:
        tag = f"editcode:{lambda_m}:{lambda_c}:{e!r}".encode()
        candidates = _stream_constant_weight(lambda_c, w, tag)
        budget = max_attempts

    admitted: list[int] = []
    masks: list[tuple[int, int]] = []
    seen: set[int] = set()
    tried = 0
    for cand in candidates:
        tried += 1
        if tried > budget:
            break
        if cand in seen:
            continue
        seen.add(cand)
        ok = True
        for pm0, pm1 in reversed(masks):
            if _lcs_bitparallel(cand, lambda_c, pm0, pm1, lambda_c) > max_lcs:
                ok = False
                break
        if ok:
            admitted.append(cand)
            masks.append(_match_masks(cand, lambda_c))
            if len(admitted) == need:
                break
    if len(admitted) < need:
        raise CodeGenerationError(
            f"greedy search found only {len(admitted)}/{need} codewords "
            f"for (lambda_m={lambda_m}, e={e}, rho={rho})",
            achieved=len(admitted),
        )

    entries = {
        BitString.from_int(msg, lambda_m): BitString.from_int(admitted[msg], lambda_c)
        for msg in range(need)
    }
    book = EditCodebook(lambda_m, lambda_c, e, w, entries)
    book.verify()
    if cache_dir is not None:
        save_codebook(book, path)
    return book


def _cache_path(cache_dir: str | Path, lm: int, lc: int, e: float, w: int) -> Path:
    tag = repr(e).replace(".", "p")
    return Path(cache_dir) / f"edit_lm{lm}_lc{lc}_e{tag}_w{w}.txt"


def save_codebook(book: EditCodebook, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"lambda_m={book.lambda_m} lambda_c={book.lambda_c} e={book.e!r} weight={book.weight}"]
    for m in sorted(book.entries, key=lambda b: b.to_int()):
        lines.append(f"{m} {book.entries[m]}")
    path.write_text("\n".join(lines) + "\n")


def load_codebook(path: str | Path) -> EditCodebook:
    """Parse and re-verify a cached book; verification failure rejects the file."""
    lines = Path(path).read_text().splitlines()
    header = dict(kv.split("=", 1) for kv in lines[0].split())
    entries = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        m_text, c_text = line.split()
        entries[BitString(m_text)] = BitString(c_text)
    book = EditCodebook(
        lambda_m=int(header["lambda_m"]),
        lambda_c=int(header["lambda_c"]),
        e=float(header["e"]),
        weight=int(header["weight"]),
        entries=entries,
    )
    book.verify()
    return book
