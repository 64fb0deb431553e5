"""Party state machines for the prefix-challenge authentication family.

SAuth authenticates one t-bit chunk per phase: fresh seeds are exchanged,
each side extracts from the shared secret, and every message bit is escorted
by an extractor-output prefix whose demanded length grows geometrically.
Auth chains ell/t phases and ends with the weight check; NAuth sends the
message in plaintext and authenticates its constant-weight edit codeword.

One machine instance is single-owner; distinct sessions share nothing but
the (pure) extraction memo.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..bits import BitString, prefix, weight
from ..codes import EditCodebook
from ..extractors import toeplitz_extract
from .frames import ACCEPTED, ABORTED, RUNNING, Frame
from .params import ConfigError, ProtocolParams

__all__ = [
    "PartyRandomness",
    "ExtCache",
    "AuthInitiator",
    "AuthResponder",
    "sauth_init",
    "sauth_step",
    "make_sauth_pair",
    "auth_run",
    "nauth_run",
    "pad_to_phases",
    "strip_phase_pad",
    "honest_frame_count",
]


class BudgetExhausted(RuntimeError):
    pass


class PartyRandomness:
    """Party-local fresh randomness with an exact drawn-bits ledger."""

    def __init__(self, rng: np.random.Generator, budget: int | None = None):
        self._rng = rng
        self.budget = budget
        self.drawn = 0

    def draw(self, nbits: int) -> BitString:
        if self.budget is not None and self.drawn + nbits > self.budget:
            raise BudgetExhausted(
                f"randomness budget exhausted: {self.drawn}+{nbits} > {self.budget}"
            )
        self.drawn += nbits
        return BitString.from_array(self._rng.integers(0, 2, size=nbits, dtype=np.uint8))


class ExtCache:
    """Session-scoped memo for the pure extraction calls.

    Within one session both parties evaluate Ext(w, s) on identical honest
    inputs; memoizing the pure function halves the work without sharing any
    party state.
    """

    def __init__(self, w: BitString, extract: Callable[[BitString, BitString, int], BitString] = toeplitz_extract):
        self._w = w
        self._extract = extract
        self._memo: dict[tuple[BitString, int], BitString] = {}

    def ext(self, seed: BitString, m: int) -> BitString:
        key = (seed, m)
        out = self._memo.get(key)
        if out is None:
            out = self._extract(self._w, seed, m)
            self._memo[key] = out
        return out


def pad_to_phases(s: BitString, t: int) -> BitString:
    """10...0 suffix up to the next multiple of t (exact multiples unpadded)."""
    r = len(s) % t
    if r == 0:
        return s
    return s + BitString([1]) + BitString.zeros(t - r - 1)


def strip_phase_pad(s: BitString, original_len: int) -> BitString | None:
    """Remove and verify the pad; None if the pad bits are malformed."""
    if len(s) == original_len:
        return s
    tail = s[original_len:]
    if tail[0] != 1 or weight(tail) != 1:
        return None
    return s[:original_len]


class _Segment:
    """One plaintext chunk plus the padded string authenticated for it."""

    __slots__ = ("plaintext", "auth_bits", "expected_weight", "codeword_len")

    def __init__(self, plaintext: BitString | None, auth_bits: BitString, codeword_len: int):
        self.plaintext = plaintext
        self.auth_bits = auth_bits
        self.expected_weight = weight(auth_bits)
        self.codeword_len = codeword_len


def _build_segments(
    message: BitString, params: ProtocolParams, codebook: EditCodebook | None
) -> list[_Segment]:
    if codebook is None:
        return [_Segment(None, pad_to_phases(message, params.t), len(message))]
    lm = codebook.lambda_m
    segments = []
    for start in range(0, len(message), lm):
        chunk = message[start : start + lm]
        stored = chunk + BitString.zeros(lm - len(chunk))
        cw = codebook.encode(stored)
        segments.append(_Segment(stored, pad_to_phases(cw, params.t), len(cw)))
    return segments


class AuthInitiator:
    """Alice: authenticates `message` (optionally via the edit code)."""

    role = "initiator"

    def __init__(
        self,
        w: BitString,
        message: BitString,
        params: ProtocolParams,
        randomness: PartyRandomness,
        cache: ExtCache | None = None,
        codebook: EditCodebook | None = None,
        check_weight: bool = True,
    ):
        self.w = w
        self.message = message
        self.params = params
        self.randomness = randomness
        self.cache = cache if cache is not None else ExtCache(w)
        self.codebook = codebook
        self.check_weight = check_weight
        self.segments = _build_segments(message, params, codebook)
        self.seg_idx = 0
        self.bit_idx = 0  # within current segment's auth_bits
        self.phase = 0    # global 1-based once started
        self.round = 0
        self.r_send: BitString | None = None   # Ext(w, peer seed): escorts data bits
        self.r_verify: BitString | None = None  # Ext(w, own seed): checks responses
        self.own_seed: BitString | None = None
        self.status = RUNNING
        self.outcome: BitString | None = None
        self.abort_reason: str | None = None
        self.w_bits_revealed = 0
        self._awaiting = "start"

    def _abort(self, reason: str) -> list[Frame]:
        self.status = ABORTED
        self.abort_reason = reason
        return []

    def expected_frame_info(self) -> tuple[str | None, int | None, int | None]:
        if self._awaiting == "peer-seed":
            return "seed", self.phase, 0
        if self._awaiting == "response":
            return "response", self.phase, self.round
        return None, None, None

    def _open_phase(self) -> list[Frame]:
        out = []
        seg = self.segments[self.seg_idx]
        if self.bit_idx == 0 and seg.plaintext is not None:
            out.append(
                Frame("plaintext", seg.plaintext, phase=self.phase + 1, round=0)
            )
        self.phase += 1
        self.round = 0
        self.own_seed = self.randomness.draw(self.params.seed_len)
        self.r_send = None
        self.r_verify = None
        out.append(Frame("seed", self.own_seed, phase=self.phase, round=0))
        self._awaiting = "peer-seed"
        return out

    def start(self) -> list[Frame]:
        if self._awaiting != "start":
            raise RuntimeError("start() called twice")
        return self._open_phase()

    def _send_bit(self) -> list[Frame]:
        seg = self.segments[self.seg_idx]
        self.round += 1
        bit = seg.auth_bits[self.bit_idx]
        length = self.params.schedule.data_len(bit, self.round)
        payload = prefix(self.r_send, length)
        self.w_bits_revealed += length
        self._awaiting = "response"
        return [Frame("data", payload, phase=self.phase, round=self.round, bit=bit)]

    def receive(self, frame: Frame) -> list[Frame]:
        if self.status != RUNNING:
            return []
        if self._awaiting == "peer-seed":
            if frame.kind != "seed" or frame.phase != self.phase or frame.round != 0:
                return self._abort("desync")
            if len(frame.payload) != self.params.seed_len:
                return self._abort("seed-length")
            self.r_send = self.cache.ext(frame.payload, self.params.m_ext)
            self.r_verify = self.cache.ext(self.own_seed, self.params.m_ext)
            return self._send_bit()
        if self._awaiting == "response":
            if frame.kind != "response" or frame.phase != self.phase or frame.round != self.round:
                return self._abort("desync")
            expected = prefix(self.r_verify, self.params.schedule.c3_at(self.round))
            if frame.payload != expected:
                return self._abort("response-mismatch")
            self.bit_idx += 1
            seg = self.segments[self.seg_idx]
            if self.round < self.params.t:
                return self._send_bit()
            # phase complete
            if self.bit_idx < len(seg.auth_bits):
                return self._open_phase()
            self.seg_idx += 1
            self.bit_idx = 0
            if self.seg_idx < len(self.segments):
                return self._open_phase()
            self.status = ACCEPTED
            self.outcome = self.message
            return []
        return self._abort("unexpected-frame")


class AuthResponder:
    """Bob: verifies the escorted bits and reassembles the message.

    The weight of each authenticated string is public (for NAuth it is fixed
    by the codebook plus the pad); `message_len` is the public plaintext
    length.
    """

    role = "responder"

    def __init__(
        self,
        w: BitString,
        params: ProtocolParams,
        randomness: PartyRandomness,
        message_len: int,
        cache: ExtCache | None = None,
        codebook: EditCodebook | None = None,
        expected_weight: int | None = None,
        check_weight: bool = True,
    ):
        self.w = w
        self.params = params
        self.randomness = randomness
        self.cache = cache if cache is not None else ExtCache(w)
        self.codebook = codebook
        self.check_weight = check_weight
        self.message_len = message_len
        if codebook is None:
            padded = params.padded_len(message_len)
            self._segment_plan = [(None, padded, message_len)]
            if expected_weight is None and check_weight:
                raise ConfigError("auth responder needs the public message weight")
            self._expected_weights = [expected_weight]
        else:
            lm = codebook.lambda_m
            chunks = (message_len + lm - 1) // lm
            if chunks == 0:
                raise ConfigError("empty message")
            padded = params.padded_len(codebook.lambda_c)
            pad_w = 1 if padded != codebook.lambda_c else 0
            self._segment_plan = [(lm, padded, codebook.lambda_c)] * chunks
            self._expected_weights = [codebook.weight + pad_w] * chunks
        self.seg_idx = 0
        self.phase = 0
        self.round = 0
        self.received_bits = BitString()
        self.plaintexts: list[BitString] = []
        self.accepted_chunks: list[BitString] = []
        self.r_send: BitString | None = None    # Ext(w, received initiator seed)
        self.r_verify: BitString | None = None  # Ext(w, own seed)
        self.own_seed: BitString | None = None
        self.status = RUNNING
        self.outcome: BitString | None = None
        self.abort_reason: str | None = None
        self.w_bits_revealed = 0
        self._awaiting = "plaintext" if codebook is not None else "seed"

    def _abort(self, reason: str) -> list[Frame]:
        self.status = ABORTED
        self.abort_reason = reason
        return []

    def expected_frame_info(self) -> tuple[str | None, int | None, int | None]:
        if self._awaiting == "plaintext":
            return "plaintext", self.phase + 1, 0
        if self._awaiting == "seed":
            return "seed", self.phase + 1, 0
        if self._awaiting == "data":
            return "data", self.phase, self.round + 1
        return None, None, None

    def _phases_in_segment(self) -> int:
        return self._segment_plan[self.seg_idx][1] // self.params.t

    def _bits_so_far(self) -> int:
        return len(self.received_bits)

    def receive(self, frame: Frame) -> list[Frame]:
        if self.status != RUNNING:
            return []
        if self._awaiting == "plaintext":
            plan_pt, _, _ = self._segment_plan[self.seg_idx]
            if frame.kind != "plaintext" or frame.phase != self.phase + 1 or frame.round != 0:
                return self._abort("desync")
            if len(frame.payload) != plan_pt:
                return self._abort("plaintext-length")
            self.plaintexts.append(frame.payload)
            self._awaiting = "seed"
            return []
        if self._awaiting == "seed":
            if frame.kind != "seed" or frame.phase != self.phase + 1 or frame.round != 0:
                return self._abort("desync")
            if len(frame.payload) != self.params.seed_len:
                return self._abort("seed-length")
            self.phase += 1
            self.round = 0
            self.own_seed = self.randomness.draw(self.params.seed_len)
            self.r_send = self.cache.ext(frame.payload, self.params.m_ext)
            self.r_verify = self.cache.ext(self.own_seed, self.params.m_ext)
            self._awaiting = "data"
            return [Frame("seed", self.own_seed, phase=self.phase, round=0)]
        if self._awaiting == "data":
            if frame.kind != "data" or frame.phase != self.phase or frame.round != self.round + 1:
                return self._abort("desync")
            self.round += 1
            bit = frame.bit
            expected_len = self.params.schedule.data_len(bit, self.round)
            if len(frame.payload) != expected_len:
                return self._abort("data-length")
            if frame.payload != prefix(self.r_verify, expected_len):
                return self._abort("data-mismatch")
            self.received_bits = self.received_bits + BitString([bit])
            c3 = self.params.schedule.c3_at(self.round)
            response = Frame("response", prefix(self.r_send, c3), phase=self.phase, round=self.round)
            self.w_bits_revealed += c3
            out = [response]
            _, padded_len, cw_len = self._segment_plan[self.seg_idx]
            if self.round == self.params.t:
                if self._bits_so_far() < padded_len:
                    self._awaiting = "seed"
                else:
                    # the step-b response is already due; checks come after
                    err = self._finish_segment()
                    if err is not None:
                        self.status = ABORTED
                        self.abort_reason = err
            return out
        return self._abort("unexpected-frame")

    def _finish_segment(self) -> str | None:
        """Weight check, pad check, codeword check; None on success."""
        _, padded_len, cw_len = self._segment_plan[self.seg_idx]
        got = self.received_bits
        if self.check_weight and weight(got) != self._expected_weights[self.seg_idx]:
            return "weight-mismatch"
        stripped = strip_phase_pad(got, cw_len)
        if stripped is None:
            return "pad-mismatch"
        if self.codebook is not None:
            m_prime = self.plaintexts[self.seg_idx]
            if self.codebook.encode(m_prime) != stripped:
                return "codeword-mismatch"
            self.accepted_chunks.append(m_prime)
        else:
            self.accepted_chunks.append(stripped)
        self.received_bits = BitString()
        self.seg_idx += 1
        if self.seg_idx < len(self._segment_plan):
            self._awaiting = "plaintext" if self.codebook is not None else "seed"
            return None
        full = BitString()
        for c in self.accepted_chunks:
            full = full + c
        full = full[: self.message_len]
        if self.codebook is not None and len(full) < sum(len(c) for c in self.accepted_chunks):
            # zero padding of the trailing chunk must be intact
            tail_start = self.message_len
            joined = BitString()
            for c in self.accepted_chunks:
                joined = joined + c
            if weight(joined[tail_start:]) != 0:
                return "chunk-pad-mismatch"
        self.status = ACCEPTED
        self.outcome = full
        return None


def sauth_init(
    w: BitString, m: BitString, params: ProtocolParams, fresh_seed: BitString
) -> tuple[AuthInitiator, Frame]:
    """One-phase SAuth: emit the fresh-seed frame, await the counterpart seed."""
    if len(m) != params.t:
        raise ConfigError(f"SAuth message must have t={params.t} bits")
    if len(fresh_seed) != params.seed_len:
        raise ConfigError(f"fresh seed must have {params.seed_len} bits")
    rand = PartyRandomness(np.random.default_rng(0), budget=len(fresh_seed))
    init = AuthInitiator(w, m, params, rand, check_weight=False)
    frames = init.start()
    # substitute the provided seed for the drawn one
    init.own_seed = fresh_seed
    frame = Frame("seed", fresh_seed, phase=1, round=0)
    assert frames[-1].kind == "seed"
    return init, frame


def sauth_step(
    state: AuthInitiator | AuthResponder, incoming: Frame, w: BitString
) -> tuple[AuthInitiator | AuthResponder, Frame | None]:
    """Advance one party by one received frame; outgoing frame if any."""
    if state.w != w:
        raise ConfigError("stepping with a different shared secret")
    out = state.receive(incoming)
    return state, (out[0] if out else None)


def make_sauth_pair(
    w: BitString,
    m: BitString,
    params: ProtocolParams,
    rng_a: np.random.Generator,
    rng_b: np.random.Generator,
    expected_weight: int | None = None,
) -> tuple[AuthInitiator, AuthResponder]:
    """Single-phase pair with no weight check (pure SAuth semantics)."""
    if len(m) != params.t:
        raise ConfigError(f"SAuth message must have t={params.t} bits")
    cache = ExtCache(w)
    init = AuthInitiator(
        w, m, params, PartyRandomness(rng_a), cache=cache, check_weight=False
    )
    resp = AuthResponder(
        w,
        params,
        PartyRandomness(rng_b),
        message_len=params.t,
        cache=cache,
        expected_weight=expected_weight,
        check_weight=expected_weight is not None,
    )
    return init, resp


def _honest_pump(initiator, responder) -> None:
    from .frames import RUNNING as _RUNNING

    queue = [(True, f) for f in initiator.start()]
    while queue:
        to_b, frame = queue.pop(0)
        receiver = responder if to_b else initiator
        if receiver.status != _RUNNING:
            continue
        for out in receiver.receive(frame):
            queue.append((not to_b, out))


def auth_run(
    w: BitString,
    m: BitString,
    params: ProtocolParams,
    rng_a: np.random.Generator | None = None,
    rng_b: np.random.Generator | None = None,
) -> BitString | None:
    """Honest-channel Auth of an ell-bit message; responder's outcome or None."""
    if len(m) != params.ell:
        raise ConfigError(f"auth message must have ell={params.ell} bits")
    rng_a = rng_a if rng_a is not None else np.random.default_rng(1)
    rng_b = rng_b if rng_b is not None else np.random.default_rng(2)
    cache = ExtCache(w)
    padded = pad_to_phases(m, params.t)
    init = AuthInitiator(w, m, params, PartyRandomness(rng_a), cache=cache)
    resp = AuthResponder(
        w,
        params,
        PartyRandomness(rng_b),
        message_len=len(m),
        cache=cache,
        expected_weight=weight(padded),
    )
    _honest_pump(init, resp)
    return resp.outcome if resp.status == ACCEPTED else None


def nauth_run(
    w: BitString,
    m: BitString,
    params: ProtocolParams,
    codebook: EditCodebook,
    rng_a: np.random.Generator | None = None,
    rng_b: np.random.Generator | None = None,
) -> BitString | None:
    """Honest-channel NAuth; responder's accepted message or None."""
    rng_a = rng_a if rng_a is not None else np.random.default_rng(1)
    rng_b = rng_b if rng_b is not None else np.random.default_rng(2)
    cache = ExtCache(w)
    init = AuthInitiator(
        w, m, params, PartyRandomness(rng_a), cache=cache, codebook=codebook
    )
    resp = AuthResponder(
        w,
        params,
        PartyRandomness(rng_b),
        message_len=len(m),
        cache=cache,
        codebook=codebook,
    )
    _honest_pump(init, resp)
    return resp.outcome if resp.status == ACCEPTED else None


def honest_frame_count(params: ProtocolParams, message_len: int, nauth: bool) -> int:
    """Frames an honest run exchanges; the mediation cap is 10x this."""
    if nauth:
        lam_c = params.lambda_c
        lm = params.effective_lambda_m
        chunks = (message_len + lm - 1) // lm
        phases_per = params.padded_len(lam_c) // params.t
        return chunks * (1 + phases_per * (2 + 2 * params.t))
    phases = params.padded_len(message_len) // params.t
    return phases * (2 + 2 * params.t)
