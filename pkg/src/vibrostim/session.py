"""Ranking-session state machine.

A session walks a fixed phase graph:

    created -> presenting -> awaiting_rank -> confirming -> awaiting_decision
                                                 ^                |
                                                 +--- amend ------+
                                                       finalize -> finalized

Participants hear every stimulus exactly once in a seeded random order,
answer a strict ranking (position 0 = perceived strongest), hear the
stimuli replayed in that order for confirmation, and may then amend;
every amendment is logged and triggers a fresh confirmation pass.
Illegal calls raise ``IllegalTransition`` and never mutate the session.
"""

from __future__ import annotations

import enum
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .battery import StimulusBattery
from .errors import IllegalTransition, ValidationError
from .rng import shuffle_order

_MAX_SEED = (1 << 64) - 1


class PhaseName(enum.Enum):
    CREATED = "created"
    PRESENTING = "presenting"
    AWAITING_RANK = "awaiting_rank"
    CONFIRMING = "confirming"
    AWAITING_DECISION = "awaiting_decision"
    FINALIZED = "finalized"


@dataclass(frozen=True)
class Phase:
    """Phase name plus cursor: the next index to present/confirm."""

    name: PhaseName
    cursor: int | None = None


@dataclass(frozen=True)
class Amendment:
    timestamp: float
    old: tuple[int, ...]
    new: tuple[int, ...]


@dataclass(frozen=True)
class SessionEvent:
    timestamp: float
    name: str
    stimulus_id: str | None = None


@dataclass(frozen=True)
class SessionRecord:
    """Immutable outcome of a finalized session."""

    session_id: str
    participant: str
    battery_ids: tuple[str, ...]
    seed: int
    presentation_order: tuple[int, ...]
    ranking: tuple[int, ...]
    amendments: tuple[Amendment, ...]
    events: tuple[SessionEvent, ...]
    created_at: float
    finalized_at: float


def _validate_permutation(ranking: Sequence[int], n: int) -> tuple[int, ...]:
    try:
        values = tuple(int(r) for r in ranking)
    except (TypeError, ValueError):
        raise ValidationError(f"ranking must be a sequence of integers, got {ranking!r}", path="ranking") from None
    if any(isinstance(r, bool) for r in ranking):
        raise ValidationError("ranking must not contain booleans", path="ranking")
    if sorted(values) != list(range(n)):
        raise ValidationError(
            f"ranking must be a permutation of 0..{n - 1}, got {list(values)}", path="ranking"
        )
    return values


class ExperimentSession:
    """One participant ranking one battery; single-writer, internally locked."""

    def __init__(
        self,
        battery: StimulusBattery,
        participant: str,
        seed: int,
        *,
        session_id: str | None = None,
        clock: Callable[[], float] = time.time,
    ):
        if len(battery) < 2:
            raise ValidationError("a ranking session needs at least 2 stimuli", path="battery")
        if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed <= _MAX_SEED):
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}", path="seed")
        if not isinstance(participant, str) or not participant:
            raise ValidationError("participant label must be a non-empty string", path="participant")
        self.session_id = session_id or uuid.uuid4().hex
        self.participant = participant
        self.battery = battery
        self.seed = seed
        self.presentation_order: tuple[int, ...] = tuple(shuffle_order(len(battery), seed))
        self.phase = Phase(PhaseName.CREATED)
        self.ranking: tuple[int, ...] | None = None
        self.amendments: list[Amendment] = []
        self.events: list[SessionEvent] = []
        self._clock = clock
        self._lock = threading.Lock()
        self.created_at = clock()
        self.finalized_at: float | None = None
        self._log("created")

    def _log(self, name: str, stimulus_id: str | None = None) -> None:
        self.events.append(SessionEvent(self._clock(), name, stimulus_id))

    def _require(self, *allowed: PhaseName) -> None:
        if self.phase.name not in allowed:
            want = " or ".join(p.value for p in allowed)
            raise IllegalTransition(
                f"operation requires phase {want}, session is in {self.phase.name.value}",
                path="phase",
            )

    @property
    def size(self) -> int:
        return len(self.battery)

    def advance_presentation(self) -> str:
        """Yield the next stimulus id in presentation order.

        After the last stimulus the phase flips to awaiting_rank; a further
        call is an illegal transition.
        """
        with self._lock:
            self._require(PhaseName.CREATED, PhaseName.PRESENTING)
            k = 0 if self.phase.name is PhaseName.CREATED else self.phase.cursor
            stimulus = self.battery[self.presentation_order[k]]
            if k + 1 == self.size:
                self.phase = Phase(PhaseName.AWAITING_RANK)
            else:
                self.phase = Phase(PhaseName.PRESENTING, k + 1)
            self._log("presented", stimulus.id)
            return stimulus.id

    def submit_ranking(self, ranking: Sequence[int]) -> None:
        """Store the answered ranking (position 0 = strongest) and start confirmation."""
        with self._lock:
            self._require(PhaseName.AWAITING_RANK)
            values = _validate_permutation(ranking, self.size)
            self.ranking = values
            self.phase = Phase(PhaseName.CONFIRMING, 0)
            self._log("ranked")

    def advance_confirmation(self) -> str:
        """Yield the next stimulus id in answered-rank order (strongest first)."""
        with self._lock:
            self._require(PhaseName.CONFIRMING)
            k = self.phase.cursor
            stimulus = self.battery[self.ranking[k]]
            if k + 1 == self.size:
                self.phase = Phase(PhaseName.AWAITING_DECISION)
            else:
                self.phase = Phase(PhaseName.CONFIRMING, k + 1)
            self._log("confirmed", stimulus.id)
            return stimulus.id

    def amend_ranking(self, new_ranking: Sequence[int]) -> None:
        """Replace the ranking, log the amendment, and re-confirm from the top.

        An identical permutation is still logged as a (no-op) amendment.
        """
        with self._lock:
            self._require(PhaseName.AWAITING_DECISION)
            values = _validate_permutation(new_ranking, self.size)
            self.amendments.append(Amendment(self._clock(), self.ranking, values))
            self.ranking = values
            self.phase = Phase(PhaseName.CONFIRMING, 0)
            self._log("amended")

    def finalize(self) -> SessionRecord:
        """Seal the session and return its immutable record."""
        with self._lock:
            self._require(PhaseName.AWAITING_DECISION)
            self.phase = Phase(PhaseName.FINALIZED)
            self.finalized_at = self._clock()
            self._log("finalized")
            return SessionRecord(
                session_id=self.session_id,
                participant=self.participant,
                battery_ids=self.battery.ids,
                seed=self.seed,
                presentation_order=self.presentation_order,
                ranking=self.ranking,
                amendments=tuple(self.amendments),
                events=tuple(self.events),
                created_at=self.created_at,
                finalized_at=self.finalized_at,
            )


def create_session(
    battery: StimulusBattery,
    participant: str,
    seed: int,
    *,
    session_id: str | None = None,
    clock: Callable[[], float] = time.time,
) -> ExperimentSession:
    """Create a session with a seeded presentation order (deterministic per seed)."""
    return ExperimentSession(battery, participant, seed, session_id=session_id, clock=clock)
