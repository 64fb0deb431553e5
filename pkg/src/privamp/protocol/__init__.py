"""Party-side state machines: prefix-challenge authentication, key
derivation, and the three-source extraction pipeline."""

from .frames import A_TO_B, ABORTED, ACCEPTED, B_TO_A, FRAME_KINDS, RUNNING, Frame, other_direction
from .params import ConfigError, ExtractParams, ProtocolParams
from .schedule import ChallengeSchedule, ScheduleError, schedule_build
from .sauth import (
    AuthInitiator,
    AuthResponder,
    ExtCache,
    PartyRandomness,
    auth_run,
    honest_frame_count,
    make_sauth_pair,
    nauth_run,
    pad_to_phases,
    sauth_init,
    sauth_step,
    strip_phase_pad,
)
from .derive import KEY_SEED_MODES, PAInitiator, PAResponder, derive_key, pa_run
from .extract import (
    ExtractInitiator,
    ExtractResponder,
    extract_honest_frame_count,
    extract_run,
    extracth_run,
    nextract_run,
)

__all__ = [
    "A_TO_B",
    "B_TO_A",
    "ABORTED",
    "ACCEPTED",
    "RUNNING",
    "FRAME_KINDS",
    "Frame",
    "other_direction",
    "ConfigError",
    "ExtractParams",
    "ProtocolParams",
    "ChallengeSchedule",
    "ScheduleError",
    "schedule_build",
    "AuthInitiator",
    "AuthResponder",
    "ExtCache",
    "PartyRandomness",
    "auth_run",
    "nauth_run",
    "pa_run",
    "make_sauth_pair",
    "sauth_init",
    "sauth_step",
    "pad_to_phases",
    "strip_phase_pad",
    "honest_frame_count",
    "KEY_SEED_MODES",
    "PAInitiator",
    "PAResponder",
    "derive_key",
    "ExtractInitiator",
    "ExtractResponder",
    "extract_honest_frame_count",
    "extract_run",
    "extracth_run",
    "nextract_run",
]
