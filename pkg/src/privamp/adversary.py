"""The active-adversary channel: Eve observes, substitutes, injects, drops.

Eve works at frame level; the edit taxonomy (insert / delete / 0->1 change)
maps one-to-one onto operations on the data-bit frame stream. Strategies are
deterministic given (history, strategy seed) and never read party-internal
state unless explicitly constructed in oracle test mode, which exists to
calibrate the harness against the analytic win rates.

Transcripts record every mediation event from Eve's point of view, with the
receiver's expectation captured at each delivery, so the phase annotator can
replay the information arithmetic without touching the parties.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import BitMatrix, BitString, prefix
from .protocol.frames import A_TO_B, ABORTED, ACCEPTED, B_TO_A, RUNNING, Frame, other_direction
from .protocol.schedule import ChallengeSchedule

__all__ = [
    "EveStrategy",
    "Transcript",
    "TranscriptEvent",
    "Delivery",
    "PhaseAnnotation",
    "SessionResult",
    "run_session",
    "annotate_phases",
    "lemma_adjacent_bad_ok",
    "strategy_passive",
    "strategy_bitflip",
    "strategy_insert",
    "strategy_delete",
    "strategy_weight_preserving_swap",
    "strategy_replay",
    "strategy_guess_challenges",
    "GUESS_KINDS",
]

GUESS_KINDS = ("random", "oracle", "oracle-p")

BAD_OPS = ("insert", "delete", "flip01")


@dataclass(frozen=True)
class SessionInfo:
    schedule: ChallengeSchedule
    unit: int
    rows: int  # D: rows per revealed slice (1 for the auth family)


class OracleView:
    """Test-mode window onto the honest parties' pending reveals."""

    def __init__(self, initiator, responder, info: SessionInfo):
        self._parties = {"A": initiator, "B": responder}
        self._info = info

    def _slice(self, mat, width: int) -> BitString:
        if isinstance(mat, BitMatrix):
            from .bits import slice_rows

            return slice_rows(mat, width).flatten()
        return prefix(mat, width)

    def honest_payload(self, sender: str, kind: str, bit: int | None, round_i: int) -> BitString:
        # Read the receiver's verification target: it equals the honest
        # sender's stream and exists by the time the frame is checked.
        receiver = self._parties["B" if sender == "A" else "A"]
        if kind == "data":
            width = self._info.schedule.data_len(bit, round_i)
        else:
            width = self._info.schedule.c3_at(round_i)
        return self._slice(receiver.r_verify, width)


class GuessSource:
    """Where forged prefix content comes from: random bits or the oracle."""

    def __init__(self, kind: str, rng: np.random.Generator, oracle: OracleView | None, p: float = 1.0):
        if kind not in GUESS_KINDS:
            raise ValueError(f"unknown guess source {kind!r}")
        self.kind = kind
        self.rng = rng
        self.oracle = oracle
        self.p = p

    def _random_bits(self, n: int) -> BitString:
        return BitString.from_array(self.rng.integers(0, 2, size=n, dtype=np.uint8))

    def payload(
        self,
        sender: str,
        kind: str,
        bit: int | None,
        round_i: int,
        known: BitString,
        demanded_width: int,
        rows: int,
    ) -> BitString:
        """Forge a payload of `rows` x `demanded_width`, keeping the known
        per-row prefixes and filling the rest."""
        use_oracle = self.kind == "oracle" or (
            self.kind == "oracle-p" and self.rng.random() < self.p
        )
        if use_oracle:
            return self.oracle.honest_payload(sender, kind, bit, round_i)
        known_w = len(known) // rows if rows and len(known) % rows == 0 else 0
        out = BitString()
        for r in range(rows):
            row_known = known[r * known_w : (r + 1) * known_w]
            out = out + row_known + self._random_bits(demanded_width - known_w)
        return out


def _payload_truncate(payload: BitString, rows: int, from_w: int, to_w: int) -> BitString:
    out = BitString()
    for r in range(rows):
        out = out + payload[r * from_w : r * from_w + to_w]
    return out


@dataclass(frozen=True)
class Delivery:
    direction: str
    frame: Frame
    expect_kind: str | None
    expect_phase: int | None
    expect_round: int | None


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    direction: str
    original: Frame
    deliveries: tuple[Delivery, ...]
    status_a: str
    status_b: str


@dataclass
class Transcript:
    trial_id: int
    events: list[TranscriptEvent] = field(default_factory=list)
    truncated: bool = False
    annotation: list["PhaseAnnotation"] | None = None

    def to_lines(self) -> list[str]:
        lines = [f"# transcript trial={self.trial_id} truncated={int(self.truncated)}"]
        for ev in self.events:
            parts = [
                f"trial={self.trial_id}",
                f"seq={ev.seq}",
                f"dir={ev.direction}",
                f"status_a={ev.status_a}",
                f"status_b={ev.status_b}",
                f"orig={ev.original.token()}",
            ]
            dlv = ";".join(
                f"{d.direction}|{d.frame.token()}|{d.expect_kind}|{d.expect_phase}|{d.expect_round}"
                for d in ev.deliveries
            )
            parts.append(f"dlv={dlv if dlv else '-'}")
            lines.append(" ".join(parts))
        return lines

    @classmethod
    def from_lines(cls, lines) -> "Transcript":
        tr = None
        for raw in lines:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                head = dict(kv.split("=", 1) for kv in line[1:].split() if "=" in kv)
                tr = cls(trial_id=int(head.get("trial", "0")), truncated=bool(int(head.get("truncated", "0"))))
                continue
            fields = dict(kv.split("=", 1) for kv in line.split(" "))
            if tr is None:
                tr = cls(trial_id=int(fields["trial"]))
            deliveries = []
            if fields["dlv"] != "-":
                for tok in fields["dlv"].split(";"):
                    d, ftok, ek, ep, er = tok.split("|")
                    deliveries.append(
                        Delivery(
                            d,
                            Frame.from_token(ftok),
                            None if ek == "None" else ek,
                            None if ep == "None" else int(ep),
                            None if er == "None" else int(er),
                        )
                    )
            tr.events.append(
                TranscriptEvent(
                    seq=int(fields["seq"]),
                    direction=fields["dir"],
                    original=Frame.from_token(fields["orig"]),
                    deliveries=tuple(deliveries),
                    status_a=fields["status_a"],
                    status_b=fields["status_b"],
                )
            )
        if tr is None:
            raise ValueError("empty transcript")
        return tr


@dataclass(frozen=True)
class PhaseAnnotation:
    index: int
    start_seq: int
    end_seq: int
    bad: bool
    challenge: bool
    ops: tuple[str, ...]


@dataclass
class SessionResult:
    outcome_a: BitString | None
    outcome_b: BitString | None
    transcript: Transcript
    status_a: str
    status_b: str
    abort_reason_a: str | None
    abort_reason_b: str | None

    @property
    def eve_wins(self) -> bool:
        return (
            self.outcome_a is not None
            and self.outcome_b is not None
            and self.outcome_a != self.outcome_b
        )

    @property
    def correct(self) -> bool:
        return (
            self.outcome_a is not None
            and self.outcome_b is not None
            and self.outcome_a == self.outcome_b
        )


class EveStrategy:
    """Named deterministic strategy; session() binds per-session state."""

    name = "passive"
    needs_oracle = False

    def __init__(self, **params):
        self.params = params

    def describe(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"

    def session(self, rng: np.random.Generator, oracle: OracleView, info: SessionInfo):
        raise NotImplementedError


class _Passive(EveStrategy):
    name = "passive"

    def session(self, rng, oracle, info):
        def mediate(history, direction, frame):
            return [(direction, frame)]

        return mediate


def _make_guess(params, rng, oracle) -> GuessSource:
    kind = params.get("guess", "random")
    p = float(params.get("p", 1.0))
    return GuessSource(kind, rng, oracle, p)


class _DataStreamMediator:
    """Base for strategies driven by the A->B data-frame index.

    Tracks the widest per-row prefix revealed in the current phase for both
    streams, so forged frames can keep the known prefix and only guess the
    fresh tail (the minimal consistent forgery).
    """

    def __init__(self, info: SessionInfo, guess: GuessSource):
        self.info = info
        self.guess = guess
        self.data_idx = -1
        self.known_data = BitString()
        self.known_resp = BitString()

    def _on_phase_start(self):
        self.known_data = BitString()
        self.known_resp = BitString()

    def observe(self, direction, frame):
        if frame.kind == "seed" and direction == A_TO_B:
            self._on_phase_start()
        elif frame.kind == "data":
            if len(frame.payload) > len(self.known_data):
                self.known_data = frame.payload
            self.data_idx += 1
        elif frame.kind == "response":
            if len(frame.payload) > len(self.known_resp):
                self.known_resp = frame.payload

    def flip_frame(self, frame: Frame, direction: str) -> Frame:
        """Forge the opposite bit for a data frame (0->1 guesses the tail)."""
        rows = self.info.rows
        if frame.bit == 0:
            demanded = self.info.schedule.data_len(1, frame.round)
            payload = self.guess.payload(
                "A" if direction == A_TO_B else "B",
                "data",
                1,
                frame.round,
                frame.payload,
                demanded,
                rows,
            )
            return Frame("data", payload, frame.phase, frame.round, bit=1)
        to_w = self.info.schedule.data_len(0, frame.round)
        from_w = len(frame.payload) // rows
        payload = _payload_truncate(frame.payload, rows, from_w, to_w)
        return Frame("data", payload, frame.phase, frame.round, bit=0)


class _Bitflip(EveStrategy):
    name = "bitflip"

    def __init__(self, position: int, guess: str = "random", p: float = 1.0):
        if position < 0:
            raise ValueError("bitflip position must be >= 0")
        super().__init__(position=position, guess=guess, p=p)
        self.needs_oracle = guess != "random"

    def session(self, rng, oracle, info):
        st = _DataStreamMediator(info, _make_guess(self.params, rng, oracle))
        pos = self.params["position"]

        def mediate(history, direction, frame):
            st.observe(direction, frame)
            if direction == A_TO_B and frame.kind == "data" and st.data_idx == pos:
                return [(direction, st.flip_frame(frame, direction))]
            return [(direction, frame)]

        return mediate


class _WeightSwap(EveStrategy):
    name = "swap"

    def __init__(self, pos0: int, pos1: int, guess: str = "random", p: float = 1.0):
        if pos0 < 0 or pos1 < 0 or pos0 == pos1:
            raise ValueError("swap needs two distinct non-negative positions")
        super().__init__(pos0=pos0, pos1=pos1, guess=guess, p=p)
        self.needs_oracle = guess != "random"

    def session(self, rng, oracle, info):
        st = _DataStreamMediator(info, _make_guess(self.params, rng, oracle))
        pos0, pos1 = self.params["pos0"], self.params["pos1"]

        def mediate(history, direction, frame):
            st.observe(direction, frame)
            if direction == A_TO_B and frame.kind == "data" and st.data_idx in (pos0, pos1):
                want = 0 if st.data_idx == pos0 else 1
                if frame.bit == want:
                    return [(direction, st.flip_frame(frame, direction))]
            return [(direction, frame)]

        return mediate


class _GuessChallenges(EveStrategy):
    """Weight-consistent swap at the first available (0, then 1) positions."""

    name = "guess-challenges"

    def __init__(self, guess: str = "random", p: float = 1.0):
        super().__init__(guess=guess, p=p)
        self.needs_oracle = guess != "random"

    def session(self, rng, oracle, info):
        st = _DataStreamMediator(info, _make_guess(self.params, rng, oracle))
        state = {"flipped0": False, "flipped1": False}

        def mediate(history, direction, frame):
            st.observe(direction, frame)
            if direction == A_TO_B and frame.kind == "data":
                if not state["flipped0"] and frame.bit == 0:
                    state["flipped0"] = True
                    return [(direction, st.flip_frame(frame, direction))]
                if state["flipped0"] and not state["flipped1"] and frame.bit == 1:
                    state["flipped1"] = True
                    return [(direction, st.flip_frame(frame, direction))]
            return [(direction, frame)]

        return mediate


class _Replay(EveStrategy):
    """Re-deliver the previous data frame in place of the current one."""

    name = "replay"

    def __init__(self, window: int = 1):
        if window < 1:
            raise ValueError("replay window must be >= 1")
        super().__init__(window=window)

    def session(self, rng, oracle, info):
        seen: list[Frame] = []
        window = self.params["window"]

        def mediate(history, direction, frame):
            if direction == A_TO_B and frame.kind == "data":
                seen.append(frame)
                if len(seen) - 1 == window and len(seen) >= 2:
                    return [(direction, seen[-2])]
            return [(direction, frame)]

        return mediate


class _Insert(EveStrategy):
    """Inject a forged data bit at the given round of one phase.

    Auth family only (one row per slice). The injected frame arrives before
    the sender reveals that round's prefix, so its content is a challenge;
    every subsequent data frame of the phase is relabelled one round later
    and its prefix extended (more challenges); the sender's final data frame
    of the phase is dropped to resynchronize.
    """

    name = "insert"

    def __init__(self, bit: int, round: int, phase: int = 1, guess: str = "random", p: float = 1.0):
        if round < 1:
            raise ValueError("insert round must be >= 1")
        if bit not in (0, 1):
            raise ValueError("insert bit must be 0 or 1")
        super().__init__(bit=bit, round=round, phase=phase, guess=guess, p=p)
        self.needs_oracle = guess != "random"

    def session(self, rng, oracle, info):
        st = _DataStreamMediator(info, _make_guess(self.params, rng, oracle))
        bit, target, phase = self.params["bit"], self.params["round"], self.params["phase"]
        t = info.schedule.rounds
        state = {"phase": 0, "active": False, "done": False}

        def forged() -> Frame:
            demanded = info.schedule.data_len(bit, target)
            payload = st.guess.payload("A", "data", bit, target, st.known_data, demanded, info.rows)
            return Frame("data", payload, phase, target, bit=bit)

        def mediate(history, direction, frame):
            if frame.kind == "seed" and direction == A_TO_B:
                state["phase"] += 1
            st.observe(direction, frame)
            in_phase = state["phase"] == phase and not state["done"]
            if not in_phase:
                return [(direction, frame)]
            # trigger point: just before the target round's data exists
            if not state["active"]:
                trig = (
                    (target == 1 and direction == B_TO_A and frame.kind == "seed")
                    or (
                        target > 1
                        and direction == B_TO_A
                        and frame.kind == "response"
                        and frame.round == target - 1
                    )
                )
                if trig:
                    state["active"] = True
                    return [(direction, frame), (A_TO_B, forged())]
                return [(direction, frame)]
            # active: shift the remaining data stream of this phase
            if direction == A_TO_B and frame.kind == "data" and frame.round >= target:
                if frame.round == t:
                    state["done"] = True
                    return []  # drop; Bob already holds t bits
                demanded = info.schedule.data_len(frame.bit, frame.round + 1)
                payload = st.guess.payload(
                    "A", "data", frame.bit, frame.round + 1, frame.payload, demanded, info.rows
                )
                return [(direction, Frame("data", payload, frame.phase, frame.round + 1, bit=frame.bit))]
            return [(direction, frame)]

        return mediate


class _Delete(EveStrategy):
    """Drop the data bit at the given round of one phase.

    Auth family only. Eve must immediately forge the response the sender
    awaits (a challenge), extend every later response by one round (more
    challenges), and forge a final free data bit from already-revealed
    content so the receiver's count completes.
    """

    name = "delete"

    def __init__(self, round: int, phase: int = 1, guess: str = "random", p: float = 1.0):
        if round < 1:
            raise ValueError("delete round must be >= 1")
        super().__init__(round=round, phase=phase, guess=guess, p=p)
        self.needs_oracle = guess != "random"

    def session(self, rng, oracle, info):
        st = _DataStreamMediator(info, _make_guess(self.params, rng, oracle))
        target, phase = self.params["round"], self.params["phase"]
        t = info.schedule.rounds
        state = {"phase": 0, "active": False, "done": False}

        def forged_response(round_i: int) -> Frame:
            demanded = info.schedule.c3_at(round_i)
            payload = st.guess.payload("B", "response", None, round_i, st.known_resp, demanded, info.rows)
            return Frame("response", payload, phase, round_i)

        def forged_final_data() -> Frame:
            # bit 0 costs nothing: its prefix is inside the widest revealed
            width = info.schedule.data_len(0, t)
            payload = _payload_truncate(
                st.known_data, info.rows, len(st.known_data) // info.rows, width
            )
            return Frame("data", payload, phase, t, bit=0)

        def mediate(history, direction, frame):
            if frame.kind == "seed" and direction == A_TO_B:
                state["phase"] += 1
            st.observe(direction, frame)
            in_phase = state["phase"] == phase and not state["done"]
            if not in_phase:
                return [(direction, frame)]
            if not state["active"]:
                if direction == A_TO_B and frame.kind == "data" and frame.round == target:
                    state["active"] = True
                    return [(B_TO_A, forged_response(target))]
                return [(direction, frame)]
            if direction == A_TO_B and frame.kind == "data" and frame.round > target:
                to_w = info.schedule.data_len(frame.bit, frame.round - 1)
                from_w = len(frame.payload) // info.rows
                payload = _payload_truncate(frame.payload, info.rows, from_w, to_w)
                return [(direction, Frame("data", payload, frame.phase, frame.round - 1, bit=frame.bit))]
            if direction == B_TO_A and frame.kind == "response" and frame.round >= target:
                if frame.round == t:
                    state["done"] = True
                    return []  # sender already finished the phase
                demanded = info.schedule.c3_at(frame.round + 1)
                payload = st.guess.payload(
                    "B", "response", None, frame.round + 1, frame.payload, demanded, info.rows
                )
                out = [(B_TO_A, Frame("response", payload, frame.phase, frame.round + 1))]
                if frame.round == t - 1:
                    # receiver still lacks one data bit; forge it for free
                    out.append((A_TO_B, forged_final_data()))
                return out
            return [(direction, frame)]

        return mediate


def strategy_passive() -> EveStrategy:
    return _Passive()


def strategy_bitflip(position: int, guess: str = "random", p: float = 1.0) -> EveStrategy:
    return _Bitflip(position, guess, p)


def strategy_insert(bit: int, round: int, phase: int = 1, guess: str = "random", p: float = 1.0) -> EveStrategy:
    return _Insert(bit, round, phase, guess, p)


def strategy_delete(round: int, phase: int = 1, guess: str = "random", p: float = 1.0) -> EveStrategy:
    return _Delete(round, phase, guess, p)


def strategy_weight_preserving_swap(i: int, j: int, guess: str = "random", p: float = 1.0) -> EveStrategy:
    return _WeightSwap(i, j, guess, p)


def strategy_replay(window: int = 1) -> EveStrategy:
    return _Replay(window)


def strategy_guess_challenges(guess: str = "random", p: float = 1.0) -> EveStrategy:
    return _GuessChallenges(guess, p)


STRATEGY_FACTORIES = {
    "passive": strategy_passive,
    "bitflip": strategy_bitflip,
    "insert": strategy_insert,
    "delete": strategy_delete,
    "swap": strategy_weight_preserving_swap,
    "replay": strategy_replay,
    "guess-challenges": strategy_guess_challenges,
}


def _expectation(party) -> tuple[str | None, int | None, int | None]:
    info = getattr(party, "expected_frame_info", None)
    if info is None:
        return None, None, None
    return info()


def run_session(
    initiator,
    responder,
    eve: EveStrategy,
    info: SessionInfo,
    honest_frames: int,
    session_seed: int = 0,
    trial_id: int = 0,
) -> SessionResult:
    """Drive both machines to terminal status with Eve mediating every frame.

    Nontermination is impossible: a frame-count cap of 10x the honest length
    forces an abort that counts as detection.
    """
    rng = np.random.default_rng(session_seed)
    oracle = OracleView(initiator, responder, info)
    mediate = eve.session(rng, oracle, info)
    transcript = Transcript(trial_id=trial_id)
    history: list[tuple[str, Frame]] = []
    queue: list[tuple[str, Frame]] = [(A_TO_B, f) for f in initiator.start()]
    cap = max(10 * honest_frames, 16)
    seq = 0
    while queue:
        direction, frame = queue.pop(0)
        if seq >= cap:
            transcript.truncated = True
            break
        history.append((direction, frame))
        deliveries = mediate(history, direction, frame)
        recs = []
        for ddir, dframe in deliveries:
            receiver = responder if ddir == A_TO_B else initiator
            ek, ep, er = _expectation(receiver)
            recs.append(Delivery(ddir, dframe, ek, ep, er))
            if receiver.status == RUNNING:
                for out in receiver.receive(dframe):
                    queue.append((other_direction(ddir), out))
        seq += 1
        transcript.events.append(
            TranscriptEvent(
                seq=seq,
                direction=direction,
                original=frame,
                deliveries=tuple(recs),
                status_a=initiator.status,
                status_b=responder.status,
            )
        )
    for party, label in ((initiator, "a"), (responder, "b")):
        if party.status == RUNNING:
            party.status = ABORTED
            party.abort_reason = "starved" if not transcript.truncated else "frame-cap"
    return SessionResult(
        outcome_a=initiator.outcome if initiator.status == ACCEPTED else None,
        outcome_b=responder.outcome if responder.status == ACCEPTED else None,
        transcript=transcript,
        status_a=initiator.status,
        status_b=responder.status,
        abort_reason_a=initiator.abort_reason,
        abort_reason_b=responder.abort_reason,
    )


def _classify_ops(ev: TranscriptEvent) -> list[str]:
    ops = []
    data_frames = [d for d in ev.deliveries if d.frame.kind == "data"]
    if ev.original.kind == "data":
        if not data_frames:
            ops.append("delete")
        else:
            first = data_frames[0]
            if first.frame.bit != ev.original.bit:
                ops.append("flip01" if ev.original.bit == 0 else "flip10")
            ops.extend("insert" for _ in data_frames[1:])
    else:
        ops.extend("insert" for _ in data_frames)
    return ops


def annotate_phases(tr: Transcript, info: SessionInfo) -> Transcript:
    """Segment Eve-view phases at fresh-seed announcements and mark each
    phase bad (contains insert/delete/0->1) and/or challenge (some forged
    frame faced a verification demanding >= revealed + 2*unit fresh bits).

    The revealed counter follows Eve's view: original W-derived payloads
    observed since the current phase began.
    """
    annotations: list[PhaseAnnotation] = []
    phase_idx = 0
    last_phase = 0
    start_seq = tr.events[0].seq if tr.events else 0
    revealed = 0
    bad_ops: list[str] = []
    challenge = False
    prev_seq = start_seq

    def close(end_seq):
        annotations.append(
            PhaseAnnotation(
                index=phase_idx,
                start_seq=start_seq,
                end_seq=end_seq,
                bad=any(op in BAD_OPS for op in bad_ops),
                challenge=challenge,
                ops=tuple(bad_ops),
            )
        )

    for ev in tr.events:
        if ev.original.kind == "seed" and ev.original.phase > last_phase:
            # a party announced a fresh seed: new phase in Eve's view
            close(prev_seq)
            phase_idx += 1
            last_phase = ev.original.phase
            start_seq = ev.seq
            revealed = 0
            bad_ops = []
            challenge = False
        prev_seq = ev.seq
        bad_ops.extend(_classify_ops(ev))
        # Eve observes the original before forging anything in this event
        if ev.original.kind in ("data", "response"):
            revealed += len(ev.original.payload)
        authored = {
            (d.direction, d.frame) for d in ev.deliveries
        } - {(ev.direction, ev.original)}
        for d in ev.deliveries:
            if d.frame.kind not in ("data", "response"):
                continue
            is_authored = (d.direction, d.frame) in authored
            matches = (
                d.expect_kind == d.frame.kind
                and d.expect_phase == d.frame.phase
                and d.expect_round == d.frame.round
            )
            if is_authored and matches:
                if d.frame.kind == "data":
                    demanded = info.schedule.data_len(d.frame.bit, d.frame.round) * info.rows
                else:
                    demanded = info.schedule.c3_at(d.frame.round) * info.rows
                if demanded >= revealed + 2 * info.unit:
                    challenge = True
    close(prev_seq)
    tr.annotation = annotations
    return tr


def lemma_adjacent_bad_ok(tr: Transcript) -> bool:
    """Among any two adjacent bad phases, at least one is a challenge phase."""
    if tr.annotation is None:
        raise ValueError("annotate_phases first")
    bad = [a for a in tr.annotation if a.bad]
    for first, second in zip(bad, bad[1:]):
        if not (first.challenge or second.challenge):
            return False
    return True
