"""Key derivation: authenticate a fresh extractor seed, then both sides extract.

The key length follows the accounting ledger: lambda_k = k - entropy_spent -
2*log(1/eps). At realistic sizes the full Toeplitz seed is far too long to
authenticate bit-by-bit, so the default authenticates a short seed and
expands it deterministically (flagged simulation-grade); tiny-n exact
oracles use the full-seed mode, where the leftover-hash bound applies as a
theorem.
"""

from __future__ import annotations

import numpy as np

from ..bits import BitString
from ..codes import EditCodebook
from ..extractors import expand_seed, toeplitz_extract
from .frames import ACCEPTED, ABORTED, RUNNING, Frame
from .params import ConfigError, ProtocolParams
from .sauth import AuthInitiator, AuthResponder, ExtCache, PartyRandomness

__all__ = ["derive_key", "PAInitiator", "PAResponder", "KEY_SEED_MODES"]

KEY_SEED_MODES = ("full", "expanded")


def derive_key(
    w: BitString,
    params: ProtocolParams,
    authenticated_seed: BitString,
    entropy_spent: int = 0,
    mode: str = "expanded",
) -> BitString:
    """Extract the session key from W under the agreed seed.

    mode="full": the authenticated seed IS the Toeplitz seed (length must be
    n + lambda_k - 1). mode="expanded": PRF-expand the short seed; flagged
    simulation-grade everywhere it is reported.
    """
    if mode not in KEY_SEED_MODES:
        raise ConfigError(f"unknown key seed mode {mode!r}")
    lam_k = params.key_length(entropy_spent)
    need = params.n + lam_k - 1
    if mode == "full":
        if len(authenticated_seed) != need:
            raise ConfigError(
                f"full-mode seed must have n+lambda_k-1 = {need} bits, got {len(authenticated_seed)}"
            )
        seed_full = authenticated_seed
    else:
        seed_full = expand_seed(authenticated_seed, need, tag="derive-key")
    return toeplitz_extract(w, seed_full, lam_k)


class PAInitiator:
    """Privacy-amplification wrapper: NAuth a fresh short seed, then derive."""

    role = "initiator"

    def __init__(
        self,
        w: BitString,
        params: ProtocolParams,
        randomness: PartyRandomness,
        codebook: EditCodebook,
        sigma_len: int = 16,
        cache: ExtCache | None = None,
    ):
        self.w = w
        self.params = params
        self.sigma = randomness.draw(sigma_len)
        self.cache = cache if cache is not None else ExtCache(w)
        self.inner = AuthInitiator(
            w, self.sigma, params, randomness, cache=self.cache, codebook=codebook
        )
        self.status = RUNNING
        self.outcome: BitString | None = None
        self.abort_reason: str | None = None

    @property
    def w_bits_revealed(self) -> int:
        return self.inner.w_bits_revealed

    @property
    def randomness(self) -> PartyRandomness:
        return self.inner.randomness

    def start(self) -> list[Frame]:
        return self.inner.start()

    def receive(self, frame: Frame) -> list[Frame]:
        if self.status != RUNNING:
            return []
        out = self.inner.receive(frame)
        if self.inner.status == ABORTED:
            self.status = ABORTED
            self.abort_reason = self.inner.abort_reason
        elif self.inner.status == ACCEPTED:
            spent = _public_spent(self.params, len(self.sigma))
            self.outcome = derive_key(self.w, self.params, self.sigma, spent)
            self.status = ACCEPTED
            out = out + [Frame("final", BitString(), phase=self.inner.phase, round=0)]
        return out


class PAResponder:
    role = "responder"

    def __init__(
        self,
        w: BitString,
        params: ProtocolParams,
        randomness: PartyRandomness,
        codebook: EditCodebook,
        sigma_len: int = 16,
        cache: ExtCache | None = None,
    ):
        self.w = w
        self.params = params
        self.sigma_len = sigma_len
        self.cache = cache if cache is not None else ExtCache(w)
        self.inner = AuthResponder(
            w, params, randomness, message_len=sigma_len, cache=self.cache, codebook=codebook
        )
        self.status = RUNNING
        self.outcome: BitString | None = None
        self.abort_reason: str | None = None

    @property
    def w_bits_revealed(self) -> int:
        return self.inner.w_bits_revealed

    @property
    def randomness(self) -> PartyRandomness:
        return self.inner.randomness

    def receive(self, frame: Frame) -> list[Frame]:
        if self.status != RUNNING:
            return []
        if frame.kind == "final":
            # informational close from the initiator; gates nothing
            return []
        out = self.inner.receive(frame)
        if self.inner.status == ABORTED:
            self.status = ABORTED
            self.abort_reason = self.inner.abort_reason
        elif self.inner.status == ACCEPTED:
            spent = _public_spent(self.params, self.sigma_len)
            self.outcome = derive_key(self.w, self.params, self.inner.outcome, spent)
            self.status = ACCEPTED
        return out


def _public_spent(params: ProtocolParams, sigma_len: int) -> int:
    """Closed-form W-bits revealed by an honest NAuth of sigma_len bits.

    Both parties must agree on lambda_k, so the spent count is the public
    worst case over message bits (C2 taken for every data round), not the
    realized transcript sum.
    """
    lm = params.effective_lambda_m
    chunks = (sigma_len + lm - 1) // lm
    phases = params.padded_len(params.lambda_c) // params.t
    per_phase = sum(params.schedule.c2) + sum(params.schedule.c3)
    return chunks * phases * per_phase


def pa_run(
    w: BitString,
    params: ProtocolParams,
    codebook: EditCodebook,
    rng_a: np.random.Generator,
    rng_b: np.random.Generator,
    sigma_len: int = 16,
) -> tuple[BitString | None, BitString | None]:
    """Honest-channel privacy amplification; both keys (None = rejection)."""
    cache = ExtCache(w)
    init = PAInitiator(w, params, PartyRandomness(rng_a), codebook, sigma_len, cache=cache)
    resp = PAResponder(w, params, PartyRandomness(rng_b), codebook, sigma_len, cache=cache)
    queue = [(True, f) for f in init.start()]
    while queue:
        to_b, frame = queue.pop(0)
        receiver = resp if to_b else init
        if receiver.status != RUNNING:
            continue
        for out in receiver.receive(frame):
            queue.append((not to_b, out))
    a = init.outcome if init.status == ACCEPTED else None
    b = resp.outcome if resp.status == ACCEPTED else None
    return a, b
