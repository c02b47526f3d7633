"""Canonical JSON encodings for every document the workbench exchanges.

One rule set everywhere (wire API, .rec files, CLI):

* canonical field order, compact separators, UTF-8, floats as their
  shortest round-trip decimal (Python's repr), so decoding a canonical
  document and re-encoding it is byte-stable;
* strict parsing: unknown fields are rejected with the offending path
  named, every document carries ``"v": 1``.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Sequence

from .battery import StimulusBattery
from .errors import SchemaError, WorkbenchError
from .playback import ModeKind, PlaybackMode
from .rankstats import RankAggregate
from .session import (
    Amendment,
    ExperimentSession,
    Phase,
    PhaseName,
    SessionEvent,
    SessionRecord,
)
from .synth import (
    Envelope,
    EnvelopeKind,
    StimulusProgram,
    WaveformMetrics,
    WaveformSpec,
    WaveShape,
)

SCHEMA_VERSION = 1


def dumps(doc: Any) -> str:
    """Serialize a document canonically (compact, insertion-ordered keys)."""
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def loads(text: str | bytes) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None


def buffer_id_for_doc(doc: dict) -> str:
    """Content hash of a canonical spec/program document (shared render cache key)."""
    return hashlib.sha256(dumps(doc).encode("utf-8")).hexdigest()[:32]


# ---------------------------------------------------------------- helpers

def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require_mapping(doc: Any, path: str) -> dict:
    if not isinstance(doc, dict):
        raise SchemaError(f"expected an object, got {type(doc).__name__}", path=path or None)
    return doc


def _check_fields(doc: dict, path: str, required: Sequence[str], optional: Sequence[str] = ()) -> None:
    for key in doc:
        if key not in required and key not in optional:
            raise SchemaError("unknown field", path=_join(path, key))
    for key in required:
        if key not in doc:
            raise SchemaError("missing field", path=_join(path, key))


def _check_version(doc: dict, path: str) -> None:
    v = doc.get("v", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {v!r}", path=_join(path, "v"))


def _num(doc: dict, key: str, path: str) -> float:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {value!r}", path=_join(path, key))
    return float(value)


def _int(doc: dict, key: str, path: str) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer, got {value!r}", path=_join(path, key))
    return value


def _str(doc: dict, key: str, path: str) -> str:
    value = doc[key]
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {value!r}", path=_join(path, key))
    return value


def _int_list(value: Any, path: str) -> list[int]:
    if not isinstance(value, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in value):
        raise SchemaError(f"expected a list of integers, got {value!r}", path=path)
    return list(value)


def _rewrap(err: WorkbenchError, path: str) -> WorkbenchError:
    if err.path is None:
        err.path = path or None
    return err


# ------------------------------------------------------- waveform / program

def envelope_to_doc(envelope: Envelope) -> dict:
    if envelope.kind is EnvelopeKind.NONE:
        return {"kind": "none"}
    return {"kind": envelope.kind.value, "k": envelope.k}


def envelope_from_doc(doc: Any, path: str = "envelope") -> Envelope:
    doc = _require_mapping(doc, path)
    kind = _str(doc, "kind", path) if "kind" in doc else "none"
    if kind == "none":
        _check_fields(doc, path, required=(), optional=("kind",))
        return Envelope.none()
    if kind not in ("decay", "rise"):
        raise SchemaError(f"unknown envelope kind {kind!r}", path=_join(path, "kind"))
    _check_fields(doc, path, required=("kind",), optional=("k",))
    k = _num(doc, "k", path) if "k" in doc else None
    try:
        return Envelope(EnvelopeKind(kind), k)
    except WorkbenchError as e:
        raise _rewrap(e, _join(path, "k"))


def spec_to_doc(spec: WaveformSpec, *, top_level: bool = True) -> dict:
    doc: dict[str, Any] = {"v": SCHEMA_VERSION} if top_level else {}
    doc.update(
        shape=spec.shape.value,
        frequency=spec.frequency,
        amplitude=spec.amplitude,
        duration=spec.duration,
        envelope=envelope_to_doc(spec.envelope),
        sample_rate=spec.sample_rate,
    )
    return doc


def spec_from_doc(doc: Any, path: str = "", *, top_level: bool = True) -> WaveformSpec:
    doc = _require_mapping(doc, path)
    fields = ("shape", "frequency", "amplitude", "duration", "envelope", "sample_rate")
    _check_fields(doc, path, required=(), optional=fields + (("v",) if top_level else ()))
    if top_level:
        _check_version(doc, path)
    kwargs: dict[str, Any] = {}
    if "shape" in doc:
        tag = _str(doc, "shape", path)
        try:
            kwargs["shape"] = WaveShape(tag)
        except ValueError:
            raise SchemaError(f"unknown wave shape {tag!r}", path=_join(path, "shape")) from None
    if "frequency" in doc:
        kwargs["frequency"] = _num(doc, "frequency", path)
    if "amplitude" in doc:
        kwargs["amplitude"] = _num(doc, "amplitude", path)
    if "duration" in doc:
        kwargs["duration"] = _num(doc, "duration", path)
    if "envelope" in doc:
        kwargs["envelope"] = envelope_from_doc(doc["envelope"], _join(path, "envelope"))
    if "sample_rate" in doc:
        kwargs["sample_rate"] = _int(doc, "sample_rate", path)
    try:
        return WaveformSpec(**kwargs)
    except WorkbenchError as e:
        raise _rewrap(e, path)


def program_to_doc(program: StimulusProgram, *, top_level: bool = True) -> dict:
    doc: dict[str, Any] = {"v": SCHEMA_VERSION} if top_level else {}
    doc.update(
        id=program.id,
        waveform=spec_to_doc(program.waveform, top_level=False),
        repeats=program.repeats,
        gap=program.gap,
        annotation=program.annotation,
    )
    return doc


def program_from_doc(doc: Any, path: str = "", *, top_level: bool = True) -> StimulusProgram:
    doc = _require_mapping(doc, path)
    optional = ("repeats", "gap", "annotation") + (("v",) if top_level else ())
    _check_fields(doc, path, required=("id", "waveform"), optional=optional)
    if top_level:
        _check_version(doc, path)
    annotation = doc.get("annotation")
    if annotation is not None and not isinstance(annotation, str):
        raise SchemaError(f"expected a string or null, got {annotation!r}", path=_join(path, "annotation"))
    kwargs: dict[str, Any] = {
        "id": _str(doc, "id", path),
        "waveform": spec_from_doc(doc["waveform"], _join(path, "waveform"), top_level=False),
        "annotation": annotation,
    }
    if "repeats" in doc:
        kwargs["repeats"] = _int(doc, "repeats", path)
    if "gap" in doc:
        kwargs["gap"] = _num(doc, "gap", path)
    try:
        return StimulusProgram(**kwargs)
    except WorkbenchError as e:
        raise _rewrap(e, path)


def battery_to_doc(battery: StimulusBattery) -> list[dict]:
    return [program_to_doc(p, top_level=False) for p in battery]


def battery_from_doc(doc: Any, path: str = "battery") -> StimulusBattery:
    if not isinstance(doc, list):
        raise SchemaError(f"expected a list of programs, got {type(doc).__name__}", path=path)
    programs = tuple(
        program_from_doc(item, f"{path}[{i}]", top_level=False) for i, item in enumerate(doc)
    )
    try:
        return StimulusBattery(programs)
    except WorkbenchError as e:
        raise _rewrap(e, path)


def metrics_to_doc(metrics: WaveformMetrics) -> dict:
    return {"peak": metrics.peak, "rms": metrics.rms, "mean_rectified": metrics.mean_rectified}


# ------------------------------------------------------------- playback

def mode_to_doc(mode: PlaybackMode) -> dict:
    if mode.kind is ModeKind.GAPPED:
        return {"kind": "gapped", "gap": mode.gap}
    return {"kind": mode.kind.value}


def mode_from_doc(doc: Any, path: str = "mode") -> PlaybackMode:
    doc = _require_mapping(doc, path)
    kind = _str(doc, "kind", path) if "kind" in doc else "once"
    if kind == "gapped":
        _check_fields(doc, path, required=("kind",), optional=("gap",))
        gap = _num(doc, "gap", path) if "gap" in doc else None
        try:
            return PlaybackMode.gapped(gap) if gap is not None else PlaybackMode.gapped()
        except WorkbenchError as e:
            raise _rewrap(e, _join(path, "gap"))
    if kind in ("once", "continuous"):
        _check_fields(doc, path, required=(), optional=("kind",))
        return PlaybackMode.once() if kind == "once" else PlaybackMode.continuous()
    raise SchemaError(f"unknown playback mode {kind!r}", path=_join(path, "kind"))


# ------------------------------------------------------------- sessions

def _amendment_to_doc(a: Amendment) -> dict:
    return {"ts": a.timestamp, "old": list(a.old), "new": list(a.new)}


def _amendment_from_doc(doc: Any, path: str) -> Amendment:
    doc = _require_mapping(doc, path)
    _check_fields(doc, path, required=("ts", "old", "new"))
    return Amendment(
        timestamp=_num(doc, "ts", path),
        old=tuple(_int_list(doc["old"], _join(path, "old"))),
        new=tuple(_int_list(doc["new"], _join(path, "new"))),
    )


def _event_to_doc(e: SessionEvent) -> dict:
    return {"ts": e.timestamp, "event": e.name, "stimulus": e.stimulus_id}


def _event_from_doc(doc: Any, path: str) -> SessionEvent:
    doc = _require_mapping(doc, path)
    _check_fields(doc, path, required=("ts", "event"), optional=("stimulus",))
    stimulus = doc.get("stimulus")
    if stimulus is not None and not isinstance(stimulus, str):
        raise SchemaError(f"expected a string or null, got {stimulus!r}", path=_join(path, "stimulus"))
    return SessionEvent(_num(doc, "ts", path), _str(doc, "event", path), stimulus)


def phase_to_doc(phase: Phase) -> dict:
    return {"name": phase.name.value, "cursor": phase.cursor}


def phase_from_doc(doc: Any, path: str = "phase") -> Phase:
    doc = _require_mapping(doc, path)
    _check_fields(doc, path, required=("name",), optional=("cursor",))
    tag = _str(doc, "name", path)
    try:
        name = PhaseName(tag)
    except ValueError:
        raise SchemaError(f"unknown phase {tag!r}", path=_join(path, "name")) from None
    cursor = doc.get("cursor")
    if cursor is not None and (isinstance(cursor, bool) or not isinstance(cursor, int)):
        raise SchemaError(f"expected an integer or null, got {cursor!r}", path=_join(path, "cursor"))
    if name in (PhaseName.PRESENTING, PhaseName.CONFIRMING) and cursor is None:
        raise SchemaError(f"phase {tag!r} requires a cursor", path=_join(path, "cursor"))
    if name not in (PhaseName.PRESENTING, PhaseName.CONFIRMING):
        cursor = None
    return Phase(name, cursor)


def session_to_doc(session: ExperimentSession) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "session_id": session.session_id,
        "participant": session.participant,
        "battery": battery_to_doc(session.battery),
        "seed": session.seed,
        "presentation_order": list(session.presentation_order),
        "phase": phase_to_doc(session.phase),
        "ranking": list(session.ranking) if session.ranking is not None else None,
        "amendments": [_amendment_to_doc(a) for a in session.amendments],
        "events": [_event_to_doc(e) for e in session.events],
        "created_at": session.created_at,
        "finalized_at": session.finalized_at,
    }


def session_from_doc(doc: Any, path: str = "") -> ExperimentSession:
    """Restore a session snapshot (used for persistence round-trips)."""
    doc = _require_mapping(doc, path)
    _check_fields(
        doc,
        path,
        required=(
            "session_id",
            "participant",
            "battery",
            "seed",
            "presentation_order",
            "phase",
            "ranking",
            "amendments",
            "events",
            "created_at",
            "finalized_at",
        ),
        optional=("v",),
    )
    _check_version(doc, path)
    battery = battery_from_doc(doc["battery"], _join(path, "battery"))
    try:
        session = ExperimentSession(
            battery,
            _str(doc, "participant", path),
            _int(doc, "seed", path),
            session_id=_str(doc, "session_id", path),
        )
    except WorkbenchError as e:
        raise _rewrap(e, path)
    order = _int_list(doc["presentation_order"], _join(path, "presentation_order"))
    if sorted(order) != list(range(len(battery))):
        raise SchemaError("presentation_order is not a permutation", path=_join(path, "presentation_order"))
    session.presentation_order = tuple(order)
    session.phase = phase_from_doc(doc["phase"], _join(path, "phase"))
    ranking = doc["ranking"]
    if ranking is not None:
        values = _int_list(ranking, _join(path, "ranking"))
        if sorted(values) != list(range(len(battery))):
            raise SchemaError("ranking is not a permutation", path=_join(path, "ranking"))
        session.ranking = tuple(values)
    else:
        session.ranking = None
    amendments = doc["amendments"]
    if not isinstance(amendments, list):
        raise SchemaError("expected a list", path=_join(path, "amendments"))
    session.amendments = [
        _amendment_from_doc(a, f"{_join(path, 'amendments')}[{i}]") for i, a in enumerate(amendments)
    ]
    events = doc["events"]
    if not isinstance(events, list):
        raise SchemaError("expected a list", path=_join(path, "events"))
    session.events = [_event_from_doc(e, f"{_join(path, 'events')}[{i}]") for i, e in enumerate(events)]
    session.created_at = _num(doc, "created_at", path)
    finalized_at = doc["finalized_at"]
    if finalized_at is not None and (isinstance(finalized_at, bool) or not isinstance(finalized_at, (int, float))):
        raise SchemaError(f"expected a number or null, got {finalized_at!r}", path=_join(path, "finalized_at"))
    session.finalized_at = float(finalized_at) if finalized_at is not None else None
    return session


def record_to_doc(record: SessionRecord) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "session_id": record.session_id,
        "participant": record.participant,
        "battery_ids": list(record.battery_ids),
        "seed": record.seed,
        "presentation_order": list(record.presentation_order),
        "ranking": list(record.ranking),
        "amendments": [_amendment_to_doc(a) for a in record.amendments],
        "events": [_event_to_doc(e) for e in record.events],
        "created_at": record.created_at,
        "finalized_at": record.finalized_at,
    }


def record_from_doc(doc: Any, path: str = "") -> SessionRecord:
    doc = _require_mapping(doc, path)
    _check_fields(
        doc,
        path,
        required=(
            "session_id",
            "participant",
            "battery_ids",
            "seed",
            "presentation_order",
            "ranking",
            "amendments",
            "events",
            "created_at",
            "finalized_at",
        ),
        optional=("v",),
    )
    _check_version(doc, path)
    battery_ids = doc["battery_ids"]
    if not isinstance(battery_ids, list) or any(not isinstance(x, str) for x in battery_ids):
        raise SchemaError("expected a list of strings", path=_join(path, "battery_ids"))
    n = len(battery_ids)
    order = _int_list(doc["presentation_order"], _join(path, "presentation_order"))
    ranking = _int_list(doc["ranking"], _join(path, "ranking"))
    if sorted(order) != list(range(n)):
        raise SchemaError("presentation_order is not a permutation", path=_join(path, "presentation_order"))
    if sorted(ranking) != list(range(n)):
        raise SchemaError("ranking is not a permutation", path=_join(path, "ranking"))
    amendments = doc["amendments"]
    events = doc["events"]
    if not isinstance(amendments, list):
        raise SchemaError("expected a list", path=_join(path, "amendments"))
    if not isinstance(events, list):
        raise SchemaError("expected a list", path=_join(path, "events"))
    return SessionRecord(
        session_id=_str(doc, "session_id", path),
        participant=_str(doc, "participant", path),
        battery_ids=tuple(battery_ids),
        seed=_int(doc, "seed", path),
        presentation_order=tuple(order),
        ranking=tuple(ranking),
        amendments=tuple(
            _amendment_from_doc(a, f"{_join(path, 'amendments')}[{i}]") for i, a in enumerate(amendments)
        ),
        events=tuple(_event_from_doc(e, f"{_join(path, 'events')}[{i}]") for i, e in enumerate(events)),
        created_at=_num(doc, "created_at", path),
        finalized_at=_num(doc, "finalized_at", path),
    )


# ------------------------------------------------------------- aggregates

def aggregate_to_doc(aggregate: RankAggregate) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "battery_ids": list(aggregate.battery_ids),
        "n_sessions": aggregate.n_sessions,
        "rows": [
            {
                "id": row.stimulus_id,
                "ranks": list(row.ranks),
                "median": row.median,
                "q1": row.q1,
                "q3": row.q3,
                "whisker_low": row.whisker_low,
                "whisker_high": row.whisker_high,
                "outliers": list(row.outliers),
            }
            for row in aggregate.per_stimulus
        ],
    }
