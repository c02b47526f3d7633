"""Local control service: synthesis, playback, and sessions over HTTP + WS.

The service binds to loopback by default and carries no authentication;
it is the single source of truth for every buffer, metric, and statistic
a console displays. Phase changes and playback state are pushed over one
WebSocket per session view. Every domain error maps to a structured body
``{code, path, message}``; illegal session transitions answer 409.
"""

from __future__ import annotations

import asyncio
import socket
from collections import OrderedDict
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from . import __version__, schemas
from .backends import get_backend
from .battery import StimulusBattery, preset_battery
from .errors import (
    DomainError,
    IllegalTransition,
    NotFoundError,
    SchemaError,
    StartupError,
    ValidationError,
    WorkbenchError,
)
from .playback import PlaybackEngine, PlaybackHandle
from .rankstats import aggregate_ranks
from .records import RecordStore
from .session import ExperimentSession, create_session
from .synth import (
    SampleBuffer,
    assemble_program,
    preview_minmax,
    render_wave,
    waveform_metrics,
)
from .wavio import encode_wav

_RENDER_CACHE_MAX = 256


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"  # loopback only by default
    port: int = 8000
    state_dir: Path = Path("state")
    audio_backend: str = "auto"


@dataclass
class _State:
    config: ServiceConfig
    engine: PlaybackEngine
    store: RecordStore
    renders: OrderedDict[str, tuple[SampleBuffer, dict]] = field(default_factory=OrderedDict)
    sessions: dict[str, ExperimentSession] = field(default_factory=dict)
    handles: dict[str, PlaybackHandle] = field(default_factory=dict)
    watchers: dict[str, set[asyncio.Queue]] = field(default_factory=dict)

    def cache_render(self, buffer_id: str, buffer: SampleBuffer, doc: dict) -> None:
        self.renders[buffer_id] = (buffer, doc)
        self.renders.move_to_end(buffer_id)
        while len(self.renders) > _RENDER_CACHE_MAX:
            self.renders.popitem(last=False)

    def subscribe(self, session_id: str) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self.watchers.setdefault(session_id, set()).add(queue)
        return queue

    def unsubscribe(self, session_id: str, queue: asyncio.Queue) -> None:
        self.watchers.get(session_id, set()).discard(queue)

    def push_session(self, session: ExperimentSession) -> None:
        message = {"type": "session", "session": schemas.session_to_doc(session)}
        for queue in self.watchers.get(session.session_id, set()):
            queue.put_nowait(message)

    def push_playback(self, event: str, handle: PlaybackHandle) -> None:
        message = {
            "type": "playback",
            "event": event,
            "handle_id": handle.handle_id,
            "device_index": handle.device.index,
        }
        for queues in self.watchers.values():
            for queue in queues:
                queue.put_nowait(message)


async def _json_body(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        return {}
    doc = schemas.loads(raw)
    if not isinstance(doc, dict):
        raise SchemaError(f"expected a JSON object body, got {type(doc).__name__}")
    return doc


def _render_request(state: _State, doc: dict, buckets: int) -> dict:
    """Render (or fetch from cache) a spec/program doc; build the response."""
    if "waveform" in doc:
        program = schemas.program_from_doc(doc)
        normalized = schemas.program_to_doc(program)
        kind = "program"
    else:
        spec = schemas.spec_from_doc(doc)
        normalized = schemas.spec_to_doc(spec)
        kind = "waveform"
    buffer_id = schemas.buffer_id_for_doc(normalized)
    cached = state.renders.get(buffer_id)
    if cached is not None:
        buffer = cached[0]
    else:
        buffer = assemble_program(program) if kind == "program" else render_wave(spec)
        state.cache_render(buffer_id, buffer, normalized)
    metrics = waveform_metrics(buffer)
    preview = preview_minmax(buffer, buckets)
    return {
        "v": schemas.SCHEMA_VERSION,
        "kind": kind,
        "spec": normalized,
        "buffer_id": buffer_id,
        "samples": len(buffer),
        "sample_rate": buffer.sample_rate,
        "metrics": schemas.metrics_to_doc(metrics),
        "preview": [[lo, hi] for lo, hi in preview],
    }


def _battery_from_request(value: Any) -> StimulusBattery:
    if isinstance(value, str):
        return preset_battery(value)
    if isinstance(value, list):
        return schemas.battery_from_doc(value)
    raise SchemaError(
        'expected a preset name or a list of programs, got '
        f"{type(value).__name__}",
        path="battery",
    )


def _get_session(state: _State, session_id: str) -> ExperimentSession:
    session = state.sessions.get(session_id)
    if session is None:
        raise NotFoundError(f"no session {session_id!r}", path="session_id")
    return session


def _buffer_id_for_program_doc(state: _State, program_doc: dict) -> str:
    """Render a session stimulus through the shared cache; return its id."""
    response = _render_request(state, program_doc, buckets=1)
    return response["buffer_id"]


def create_app(config: ServiceConfig) -> FastAPI:
    config.state_dir = Path(config.state_dir)
    backend = get_backend(config.audio_backend)
    state = _State(
        config=config,
        engine=PlaybackEngine(backend),
        store=RecordStore(config.state_dir),
    )

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        state.engine.stop_all()  # graceful shutdown; records flush per event

    app = FastAPI(title="vibrostim", version=__version__, lifespan=lifespan)
    app.state.workbench = state

    @app.exception_handler(WorkbenchError)
    async def _workbench_error(_request: Request, err: WorkbenchError):
        if isinstance(err, IllegalTransition):
            status = 409
        elif isinstance(err, NotFoundError):
            status = 404
        else:
            status = 400
        return JSONResponse(status_code=status, content=err.to_dict())

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.get("/devices")
    async def devices():
        return {
            "v": schemas.SCHEMA_VERSION,
            "devices": [
                {"index": d.index, "name": d.name, "max_sample_rate": d.max_sample_rate}
                for d in state.engine.devices()
            ],
        }

    @app.post("/render")
    async def render(request: Request, buckets: int = 1000):
        doc = await _json_body(request)
        return _render_request(state, doc, buckets)

    @app.get("/render/{buffer_id}.wav")
    async def render_wav(buffer_id: str):
        cached = state.renders.get(buffer_id)
        if cached is None:
            raise NotFoundError(f"no rendered buffer {buffer_id!r}", path="buffer_id")
        return Response(content=encode_wav(cached[0]), media_type="audio/wav")

    @app.post("/play")
    async def play(request: Request):
        doc = await _json_body(request)
        schemas._check_fields(doc, "", required=("buffer_id",), optional=("v", "mode", "device_index"))
        buffer_id = doc["buffer_id"]
        cached = state.renders.get(buffer_id)
        if cached is None:
            raise NotFoundError(f"no rendered buffer {buffer_id!r}", path="buffer_id")
        mode = schemas.mode_from_doc(doc.get("mode", {"kind": "once"}))
        device_index = doc.get("device_index", 0)
        matching = [d for d in state.engine.devices() if d.index == device_index]
        if not matching:
            raise NotFoundError(f"no output device with index {device_index}", path="device_index")
        handle = state.engine.play(cached[0], mode, matching[0])
        state.handles[handle.handle_id] = handle
        state.push_playback("started", handle)

        loop = asyncio.get_running_loop()

        async def _watch():
            await loop.run_in_executor(None, handle.wait)
            state.push_playback("stopped", handle)

        asyncio.create_task(_watch())
        return {"v": schemas.SCHEMA_VERSION, "handle_id": handle.handle_id}

    @app.post("/stop")
    async def stop(request: Request):
        doc = await _json_body(request)
        schemas._check_fields(doc, "", required=("handle_id",), optional=("v",))
        handle = state.handles.get(doc["handle_id"])
        if handle is None:
            raise NotFoundError(f"no playback handle {doc['handle_id']!r}", path="handle_id")
        state.engine.stop(handle)
        return {"v": schemas.SCHEMA_VERSION, "stopped": True}

    @app.post("/sessions", status_code=201)
    async def create_session_endpoint(request: Request):
        doc = await _json_body(request)
        schemas._check_fields(doc, "", required=("battery", "participant", "seed"), optional=("v", "session_id"))
        battery = _battery_from_request(doc["battery"])
        session = create_session(
            battery,
            schemas._str(doc, "participant", ""),
            schemas._int(doc, "seed", ""),
            session_id=doc.get("session_id"),
        )
        state.sessions[session.session_id] = session
        state.store.append_event(session.session_id, "created", session=schemas.session_to_doc(session))
        return schemas.session_to_doc(session)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return schemas.session_to_doc(_get_session(state, session_id))

    @app.post("/sessions/{session_id}/advance")
    async def advance(session_id: str):
        session = _get_session(state, session_id)
        stimulus_id = session.advance_presentation()
        state.store.append_event(session_id, "presented", stimulus=stimulus_id)
        state.push_session(session)
        program_doc = schemas.program_to_doc(session.battery.get(stimulus_id))
        return {
            "v": schemas.SCHEMA_VERSION,
            "stimulus_id": stimulus_id,
            "buffer_id": _buffer_id_for_program_doc(state, program_doc),
            "phase": schemas.phase_to_doc(session.phase),
        }

    @app.post("/sessions/{session_id}/rank")
    async def rank(session_id: str, request: Request):
        doc = await _json_body(request)
        schemas._check_fields(doc, "", required=("ranking",), optional=("v",))
        session = _get_session(state, session_id)
        session.submit_ranking(doc["ranking"])
        state.store.append_event(session_id, "ranked")
        state.push_session(session)
        return schemas.session_to_doc(session)

    @app.post("/sessions/{session_id}/confirm-advance")
    async def confirm_advance(session_id: str):
        session = _get_session(state, session_id)
        stimulus_id = session.advance_confirmation()
        state.store.append_event(session_id, "confirmed", stimulus=stimulus_id)
        state.push_session(session)
        program_doc = schemas.program_to_doc(session.battery.get(stimulus_id))
        return {
            "v": schemas.SCHEMA_VERSION,
            "stimulus_id": stimulus_id,
            "buffer_id": _buffer_id_for_program_doc(state, program_doc),
            "phase": schemas.phase_to_doc(session.phase),
        }

    @app.post("/sessions/{session_id}/amend")
    async def amend(session_id: str, request: Request):
        doc = await _json_body(request)
        schemas._check_fields(doc, "", required=("ranking",), optional=("v",))
        session = _get_session(state, session_id)
        session.amend_ranking(doc["ranking"])
        state.store.append_event(session_id, "amended")
        state.push_session(session)
        return schemas.session_to_doc(session)

    @app.post("/sessions/{session_id}/finalize")
    async def finalize(session_id: str):
        session = _get_session(state, session_id)
        record = session.finalize()
        state.store.append_finalized(record)
        state.push_session(session)
        return {
            "v": schemas.SCHEMA_VERSION,
            "record": schemas.record_to_doc(record),
            "session": schemas.session_to_doc(session),
        }

    @app.get("/aggregate")
    async def aggregate(battery: str | None = None):
        records = state.store.load_finalized()
        if battery is not None:
            ids = preset_battery(battery).ids
            records = [r for r in records if tuple(r.battery_ids) == ids]
        else:
            if not records:
                raise DomainError("no records to aggregate")
            ids = tuple(records[0].battery_ids)
        if not records:
            raise DomainError("no records to aggregate")
        return schemas.aggregate_to_doc(aggregate_ranks(records, ids))

    @app.websocket("/sessions/{session_id}/ws")
    async def session_ws(websocket: WebSocket, session_id: str):
        session = state.sessions.get(session_id)
        if session is None:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue = state.subscribe(session_id)
        try:
            # resync on connect: current state first
            await websocket.send_json({"type": "session", "session": schemas.session_to_doc(session)})
            while True:
                message = await queue.get()
                await websocket.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            state.unsubscribe(session_id, queue)

    return app


def _check_startup(config: ServiceConfig) -> None:
    state_dir = Path(config.state_dir)
    try:
        state_dir.mkdir(parents=True, exist_ok=True)
        probe = state_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise StartupError(
            f"state directory {state_dir} is not writable ({e}); "
            "pass a writable --state-dir",
            path="state_dir",
        ) from e
    try:
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe_sock:
            probe_sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            probe_sock.bind((config.host, config.port))
    except OSError as e:
        raise StartupError(
            f"cannot bind {config.host}:{config.port} ({e}); "
            "pick a free port with --port",
            path="port",
        ) from e


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted (records are flushed per event)."""
    import uvicorn

    _check_startup(config)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
