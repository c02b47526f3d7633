"""Playback engine: route rendered buffers to an output device.

Three modes: play once, loop seamlessly (zero inserted samples), or loop
with a silent gap between iterations. ``play`` returns immediately and a
dedicated thread feeds the device in block-sized chunks; ``stop`` halts
emission within one device block. One device plays at most one buffer at
a time; starting a new playback on a busy device stops the old one
(last-writer-wins).
"""

from __future__ import annotations

import enum
import math
import threading
import uuid
from dataclasses import dataclass

import numpy as np

from .backends import AudioBackend, OutputDevice, StreamAborted, StreamClosed
from .errors import DeviceError, PlaybackLostError, ValidationError
from .synth import DEFAULT_GAP_S, SampleBuffer, sample_count


class ModeKind(enum.Enum):
    ONCE = "once"
    CONTINUOUS = "continuous"
    GAPPED = "gapped"


@dataclass(frozen=True)
class PlaybackMode:
    """Once, seamless loop, or loop with a strictly positive silent gap."""

    kind: ModeKind
    gap: float | None = None

    def __post_init__(self):
        if self.kind is ModeKind.GAPPED:
            gap = float(self.gap if self.gap is not None else DEFAULT_GAP_S)
            if not math.isfinite(gap) or gap <= 0.0:
                raise ValidationError(f"gapped mode needs gap > 0, got {self.gap!r}", path="gap")
            object.__setattr__(self, "gap", gap)
        else:
            object.__setattr__(self, "gap", None)

    @classmethod
    def once(cls) -> "PlaybackMode":
        return cls(ModeKind.ONCE)

    @classmethod
    def continuous(cls) -> "PlaybackMode":
        return cls(ModeKind.CONTINUOUS)

    @classmethod
    def gapped(cls, gap: float = DEFAULT_GAP_S) -> "PlaybackMode":
        return cls(ModeKind.GAPPED, gap)


class PlaybackState(enum.Enum):
    PLAYING = "playing"
    STOPPED = "stopped"


class PlaybackHandle:
    """Control surface for one playback; safe to share between threads."""

    def __init__(self, device: OutputDevice, stream):
        self.handle_id = uuid.uuid4().hex[:16]
        self.device = device
        self._stream = stream
        self._stop_flag = threading.Event()
        self._done = threading.Event()
        self._thread: threading.Thread | None = None
        self.error: PlaybackLostError | None = None

    @property
    def state(self) -> PlaybackState:
        return PlaybackState.STOPPED if self._done.is_set() else PlaybackState.PLAYING

    def wait(self, timeout: float | None = None) -> bool:
        """Block until emission has fully stopped; True if it has."""
        return self._done.wait(timeout)


def _chunked(samples: np.ndarray, block: int):
    for start in range(0, samples.size, block):
        yield samples[start : start + block]


def _frame_stream(buffer: SampleBuffer, mode: PlaybackMode, block: int):
    """Yield the chunk sequence a mode produces; infinite for loop modes."""
    if mode.kind is ModeKind.ONCE:
        yield from _chunked(buffer.samples, block)
        return
    gap_samples = (
        np.zeros(sample_count(mode.gap, buffer.sample_rate), dtype=np.float64)
        if mode.kind is ModeKind.GAPPED
        else None
    )
    while True:
        yield from _chunked(buffer.samples, block)
        if gap_samples is not None and gap_samples.size:
            yield from _chunked(gap_samples, block)


class PlaybackEngine:
    """Feeds buffers to one backend; owns the per-device active handles."""

    def __init__(self, backend: AudioBackend):
        self.backend = backend
        self._active: dict[int, PlaybackHandle] = {}
        self._lock = threading.Lock()

    def devices(self) -> list[OutputDevice]:
        devices = self.backend.devices()
        if not devices:
            raise DeviceError("no output devices available")
        return devices

    def play(self, buffer: SampleBuffer, mode: PlaybackMode, device: OutputDevice) -> PlaybackHandle:
        """Start emitting ``buffer`` on ``device``; returns immediately."""
        if not device.supports(buffer.sample_rate):
            raise DeviceError(
                f"device {device.name!r} does not support {buffer.sample_rate} Hz "
                "(buffers are never resampled)",
                path="sample_rate",
            )
        previous = None
        with self._lock:
            previous = self._active.get(device.index)
        if previous is not None:
            self.stop(previous)  # last writer wins
        stream = self.backend.open(device, buffer.sample_rate)
        handle = PlaybackHandle(device, stream)
        thread = threading.Thread(
            target=self._run,
            args=(handle, buffer, mode, stream),
            name=f"playback-{handle.handle_id}",
            daemon=True,
        )
        handle._thread = thread
        with self._lock:
            self._active[device.index] = handle
        thread.start()
        return handle

    def _run(self, handle: PlaybackHandle, buffer: SampleBuffer, mode: PlaybackMode, stream) -> None:
        try:
            for chunk in _frame_stream(buffer, mode, stream.block_size):
                if handle._stop_flag.is_set():
                    break
                stream.write(chunk)
        except StreamAborted:
            pass
        except StreamClosed as e:
            handle.error = PlaybackLostError(f"output device lost mid-playback: {e}")
        finally:
            stream.close()
            handle._done.set()
            with self._lock:
                if self._active.get(handle.device.index) is handle:
                    del self._active[handle.device.index]

    def stop(self, handle: PlaybackHandle) -> None:
        """Halt emission within one device block; idempotent."""
        handle._stop_flag.set()
        handle._stream.abort()
        if handle._thread is not None and handle._thread is not threading.current_thread():
            handle._thread.join()
        handle._done.set()
        with self._lock:
            if self._active.get(handle.device.index) is handle:
                del self._active[handle.device.index]

    def stop_all(self) -> None:
        with self._lock:
            handles = list(self._active.values())
        for handle in handles:
            self.stop(handle)


def list_output_devices(backend: AudioBackend) -> list[OutputDevice]:
    """Enumerate playable outputs on a backend (errors if none exist)."""
    return PlaybackEngine(backend).devices()
