"""Three-source extraction over the adversarial channel.

NExtract: both parties apply the simulated two-source extractor to their own
source and W; no communication, simulation-only. ExtractH: same shape with
the rate->1/2 product extractor. Extract: the 13-step pipeline - condense,
per-row extraction against W, prefix slices, matrix-challenge rounds
authenticating x2 forward and r3 backward, then local key extraction.

The matrix-challenge rounds reuse the geometric schedule; every revealed
unit is a D-row slice, so frame payloads are row-major flattenings of
matrix slices.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..bits import BitMatrix, BitString, slice_rows, weight
from ..codes import constant_weight_decode, constant_weight_encode
from ..extractors import (
    CondenserSpec,
    TwoSourceExtractorSpec,
    expand_seed,
    fit_to_field,
    gf2n_product_extract,
    random_oracle_two_source,
    somewhere_condense,
    toeplitz_extract,
)
from .frames import ACCEPTED, ABORTED, RUNNING, Frame
from .params import ConfigError, ExtractParams

__all__ = [
    "extracth_run",
    "nextract_run",
    "extract_run",
    "ExtractInitiator",
    "ExtractResponder",
    "extract_honest_frame_count",
]


def extracth_run(
    x: BitString,
    y: BitString,
    w: BitString,
    spec: TwoSourceExtractorSpec,
    declared_k_x: float,
    declared_k_y: float,
) -> tuple[BitString, BitString]:
    """Each party extracts from (own source, W) locally; no communication.

    Requires the declared source rates to exceed 1/2, the regime where the
    product extractor stands in for a high-rate two-source extractor.
    """
    if declared_k_x * 2 <= len(x) or declared_k_y * 2 <= len(y):
        raise ConfigError("extracth needs declared source entropy rate > 1/2")
    s_x = spec.extract(fit_to_field(x, spec.n1), fit_to_field(w, spec.n2))
    s_y = spec.extract(fit_to_field(y, spec.n1), fit_to_field(w, spec.n2))
    return s_x, s_y


def nextract_run(
    x: BitString, y: BitString, w: BitString, m: int, session_seed: int
) -> tuple[BitString, BitString]:
    """Simulation-only stand-in for the non-constructive protocol."""
    return (
        random_oracle_two_source(x, w, m, session_seed),
        random_oracle_two_source(y, w, m, session_seed),
    )


class _ChalCache:
    """Per-row challenge extraction memo, shareable across sessions.

    The announced slice rows are far too short to seed a Toeplitz matrix, so
    they are PRF-expanded first; that is the seed-expanded simulation-grade
    flag every Extract report carries.
    """

    def __init__(self, store: dict | None = None):
        self.store = store if store is not None else {}

    def ext(self, w: BitString, row: BitString, m: int) -> BitString:
        key = (w, row, m)
        out = self.store.get(key)
        if out is None:
            seed = expand_seed(row, len(w) + m - 1, tag="chal-seed")
            out = toeplitz_extract(w, seed, m)
            self.store[key] = out
        return out


def _ext_matrix(cache: _ChalCache, w: BitString, rows: BitMatrix, m: int) -> BitMatrix:
    return BitMatrix([cache.ext(w, r, m) for r in rows])


def _srg_fn(q: int) -> Callable[[BitString, BitString, int], BitString]:
    return lambda a, b, m: gf2n_product_extract(fit_to_field(a, q), fit_to_field(b, q), m)


class _ExtractParty:
    def __init__(self, w: BitString, source: BitString, ep: ExtractParams, cache: _ChalCache | None):
        if len(w) != ep.n:
            raise ConfigError(f"|w| = {len(w)} != n = {ep.n}")
        if len(source) != ep.n_source:
            raise ConfigError(f"source length {len(source)} != {ep.n_source}")
        self.w = w
        self.ep = ep
        self.cache = cache if cache is not None else _ChalCache()
        cond = somewhere_condense(source, CondenserSpec(ep.n_source, ep.iterations, ep.p))
        rows = [
            gf2n_product_extract(
                fit_to_field(r, ep.q_row), fit_to_field(w, ep.q_row), ep.m_sr
            )
            for r in cond
        ]
        self.sr = BitMatrix(rows)
        self.s1 = slice_rows(self.sr, ep.s1)
        self.s2 = slice_rows(self.sr, ep.s2)
        self.s3 = slice_rows(self.sr, ep.s3)
        self.r_send: BitMatrix | None = None
        self.r_verify: BitMatrix | None = None
        self.round = 0
        self.received_bits = BitString()
        self.status = RUNNING
        self.outcome: BitString | None = None
        self.abort_reason: str | None = None
        self.w_bits_revealed = 0

    def _abort(self, reason: str) -> list[Frame]:
        self.status = ABORTED
        self.abort_reason = reason
        return []

    def expected_frame_info(self) -> tuple[str | None, int | None, int | None]:
        state = self._awaiting
        if state in ("seed", "peer-seed"):
            return "seed", 1, 0
        if state == "data":
            return "data", 1, self.round + 1
        if state == "response":
            return "response", 1, self.round
        return None, None, None

    def _slice_flat(self, mat: BitMatrix, width: int) -> BitString:
        return slice_rows(mat, width).flatten()

    def _check_payload(self, frame: Frame, expect_kind: str, demanded: int) -> str | None:
        if frame.kind != expect_kind or frame.phase != 1 or frame.round != self.round:
            return "desync"
        if len(frame.payload) != demanded * self.ep.D:
            return f"{expect_kind}-length"
        return None


class ExtractInitiator(_ExtractParty):
    """Alice: announces x1, authenticates x2 forward, recovers r3 backward."""

    role = "initiator"

    def __init__(self, w, x, ep: ExtractParams, cache: _ChalCache | None = None):
        super().__init__(w, x, ep, cache)
        self.m_x = constant_weight_encode(self.s2.flatten())
        assert len(self.m_x) == ep.t
        self._awaiting = "start"

    def start(self) -> list[Frame]:
        self._awaiting = "peer-seed"
        return [Frame("seed", self.s1.flatten(), phase=1, round=0)]

    def _send_bit(self) -> list[Frame]:
        self.round += 1
        bit = self.m_x[self.round - 1]
        c = self.ep.schedule.data_len(bit, self.round)
        payload = self._slice_flat(self.r_send, c)
        self.w_bits_revealed += len(payload)
        self._awaiting = "response"
        return [Frame("data", payload, phase=1, round=self.round, bit=bit)]

    def receive(self, frame: Frame) -> list[Frame]:
        if self.status != RUNNING:
            return []
        ep = self.ep
        if self._awaiting == "peer-seed":
            if frame.kind != "seed" or frame.round != 0:
                return self._abort("desync")
            if len(frame.payload) != ep.D * ep.s1:
                return self._abort("seed-length")
            y1 = BitMatrix.from_flat(frame.payload, ep.D)
            self.r_send = _ext_matrix(self.cache, self.w, y1, ep.m_chal)
            self.r_verify = _ext_matrix(self.cache, self.w, self.s1, ep.m_chal)
            return self._send_bit()
        if self._awaiting == "response":
            err = self._check_payload(frame, "response", ep.schedule.c3_at(self.round))
            if err:
                return self._abort(err)
            if frame.payload != self._slice_flat(self.r_verify, ep.schedule.c3_at(self.round)):
                return self._abort("response-mismatch")
            if self.round < ep.t:
                return self._send_bit()
            self._awaiting = "data"
            return []
        if self._awaiting == "data":
            nxt = self.round + 1
            if frame.kind != "data" or frame.phase != 1 or frame.round != nxt:
                return self._abort("desync")
            self.round = nxt
            c = ep.schedule.data_len(frame.bit, self.round)
            if len(frame.payload) != c * ep.D:
                return self._abort("data-length")
            if frame.payload != self._slice_flat(self.r_verify, c):
                return self._abort("data-mismatch")
            self.received_bits = self.received_bits + BitString([frame.bit])
            c3 = ep.schedule.c3_at(self.round)
            payload = self._slice_flat(self.r_send, c3)
            self.w_bits_revealed += len(payload)
            out = [Frame("response", payload, phase=1, round=self.round)]
            if self.round == ep.t + ep.t_prime:
                err = self._finish()
                if err:
                    self.status = ABORTED
                    self.abort_reason = err
            return out
        return self._abort("unexpected-frame")

    def _finish(self) -> str | None:
        ep = self.ep
        if weight(self.received_bits) != ep.m_srg:
            return "weight-mismatch"
        r3 = constant_weight_decode(self.received_bits)
        if r3 is None:
            return "cw-malformed"
        s_x = gf2n_product_extract(
            fit_to_field(self.s3.flatten(), ep.q_fin), fit_to_field(r3, ep.q_fin), ep.m_key
        )
        self.status = ACCEPTED
        self.outcome = s_x
        return None


class ExtractResponder(_ExtractParty):
    """Bob: verifies x2's escort, computes r3 and s_y, authenticates r3 back."""

    role = "responder"

    def __init__(self, w, y, ep: ExtractParams, cache: _ChalCache | None = None):
        super().__init__(w, y, ep, cache)
        self.m_y: BitString | None = None
        self._awaiting = "seed"

    def receive(self, frame: Frame) -> list[Frame]:
        if self.status != RUNNING:
            return []
        ep = self.ep
        if self._awaiting == "seed":
            if frame.kind != "seed" or frame.round != 0:
                return self._abort("desync")
            if len(frame.payload) != ep.D * ep.s1:
                return self._abort("seed-length")
            x1 = BitMatrix.from_flat(frame.payload, ep.D)
            self.r_send = _ext_matrix(self.cache, self.w, x1, ep.m_chal)
            self.r_verify = _ext_matrix(self.cache, self.w, self.s1, ep.m_chal)
            self._awaiting = "data"
            return [Frame("seed", self.s1.flatten(), phase=1, round=0)]
        if self._awaiting == "data":
            nxt = self.round + 1
            if frame.kind != "data" or frame.phase != 1 or frame.round != nxt:
                return self._abort("desync")
            self.round = nxt
            c = ep.schedule.data_len(frame.bit, self.round)
            if len(frame.payload) != c * ep.D:
                return self._abort("data-length")
            if frame.payload != self._slice_flat(self.r_verify, c):
                return self._abort("data-mismatch")
            self.received_bits = self.received_bits + BitString([frame.bit])
            c3 = ep.schedule.c3_at(self.round)
            payload = self._slice_flat(self.r_send, c3)
            self.w_bits_revealed += len(payload)
            out = [Frame("response", payload, phase=1, round=self.round)]
            if self.round == ep.t:
                # the round-t response is already due; checks come after
                err = self._step9()
                if err:
                    self.status = ABORTED
                    self.abort_reason = err
                else:
                    out += self._send_back_bit()
            return out
        if self._awaiting == "response":
            err = self._check_payload(frame, "response", ep.schedule.c3_at(self.round))
            if err:
                return self._abort(err)
            if frame.payload != self._slice_flat(self.r_verify, ep.schedule.c3_at(self.round)):
                return self._abort("response-mismatch")
            if self.round < ep.t + ep.t_prime:
                return self._send_back_bit()
            self.status = ACCEPTED
            self.outcome = self._s_y
            return []
        return self._abort("unexpected-frame")

    def _step9(self) -> str | None:
        ep = self.ep
        if weight(self.received_bits) != ep.D * ep.s2:
            return "weight-mismatch"
        x2_flat = constant_weight_decode(self.received_bits)
        if x2_flat is None:
            return "cw-malformed"
        x2 = BitMatrix.from_flat(x2_flat, ep.D)
        srg_fn = _srg_fn(ep.q_srg)
        acc = np.zeros(ep.m_srg, dtype=np.uint8)
        for row in x2.rows:
            acc ^= srg_fn(self.s2.flatten(), row, ep.m_srg).to_array()
        self._r3 = BitString.from_array(acc)
        self._s_y = gf2n_product_extract(
            fit_to_field(self.s3.flatten(), ep.q_fin),
            fit_to_field(self._r3, ep.q_fin),
            ep.m_key,
        )
        self.m_y = constant_weight_encode(self._r3)
        return None

    def _send_back_bit(self) -> list[Frame]:
        ep = self.ep
        self.round += 1
        bit = self.m_y[self.round - ep.t - 1]
        c = ep.schedule.data_len(bit, self.round)
        payload = self._slice_flat(self.r_send, c)
        self.w_bits_revealed += len(payload)
        self._awaiting = "response"
        return [Frame("data", payload, phase=1, round=self.round, bit=bit)]


def extract_honest_frame_count(ep: ExtractParams) -> int:
    return 2 + 2 * (ep.t + ep.t_prime)


def extract_run(
    x: BitString,
    y: BitString,
    w: BitString,
    ep: ExtractParams,
    cache: _ChalCache | None = None,
) -> tuple[BitString, BitString] | None:
    """Honest-channel Extract; (s_x, s_y), or None if either side aborted."""
    cache = cache if cache is not None else _ChalCache()
    alice = ExtractInitiator(w, x, ep, cache)
    bob = ExtractResponder(w, y, ep, cache)
    queue = [(True, f) for f in alice.start()]
    while queue:
        to_b, frame = queue.pop(0)
        receiver = bob if to_b else alice
        if receiver.status != RUNNING:
            continue
        for out in receiver.receive(frame):
            queue.append((not to_b, out))
    if alice.status == ACCEPTED and bob.status == ACCEPTED:
        return alice.outcome, bob.outcome
    return None
