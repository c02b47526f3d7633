"""Audio output backends behind one small seam.

The engine only ever talks to ``AudioBackend`` / ``AudioStream``, so the
capturing null backend substitutes for real hardware in headless runs and
tests. The sounddevice backend is optional (``pip install vibrostim[audio]``)
and is imported lazily.
"""

from __future__ import annotations

import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DeviceError

DEFAULT_BLOCK_SIZE = 1024


@dataclass(frozen=True)
class OutputDevice:
    """One enumerated output. ``max_sample_rate`` None means any rate."""

    index: int
    name: str
    max_sample_rate: int | None = None

    def supports(self, sample_rate: int) -> bool:
        return self.max_sample_rate is None or sample_rate <= self.max_sample_rate


class StreamAborted(Exception):
    """Internal: a blocked write was woken by abort(); normal stop path."""


class StreamClosed(Exception):
    """Internal: the stream was closed underneath the writer (device lost)."""


class AudioStream(ABC):
    """A writable sample sink. ``write`` may block; ``abort`` unblocks it."""

    block_size: int = DEFAULT_BLOCK_SIZE

    @abstractmethod
    def write(self, chunk: np.ndarray) -> None: ...

    @abstractmethod
    def abort(self) -> None: ...

    @abstractmethod
    def close(self) -> None: ...


class AudioBackend(ABC):
    @abstractmethod
    def devices(self) -> list[OutputDevice]: ...

    @abstractmethod
    def open(self, device: OutputDevice, sample_rate: int) -> AudioStream: ...


# ----------------------------------------------------------- null backend

class NullStream(AudioStream):
    """Captures or discards everything written to it instead of driving hardware.

    Three independent knobs model device behavior:

    * ``capacity``: once that many samples are pending (written minus
      consumed), ``write`` blocks until ``consume`` frees space, modeling a
      bounded device buffer (how tests pace the emitter);
    * ``retain``: keep written chunks for inspection via ``captured``
      (tests) or just count them (production discard device);
    * ``realtime``: ``write`` takes chunk-duration wall time, like real
      hardware; ``abort``/``close`` interrupt the sleep immediately.
    """

    def __init__(
        self,
        sample_rate: int,
        block_size: int,
        capacity: int | None,
        retain: bool = True,
        realtime: bool = False,
    ):
        self.sample_rate = sample_rate
        self.block_size = block_size
        self.capacity = capacity
        self.retain = retain
        self.realtime = realtime
        self._chunks: list[np.ndarray] = []
        self._written = 0
        self._consumed = 0
        self._aborted = False
        self._closed = False
        self._cond = threading.Condition()

    def _check_open(self) -> None:
        if self._aborted:
            raise StreamAborted
        if self._closed:
            raise StreamClosed

    def write(self, chunk: np.ndarray) -> None:
        chunk = np.asarray(chunk, dtype=np.float64)
        with self._cond:
            while (
                self.capacity is not None
                and self._written - self._consumed >= self.capacity
                and not self._aborted
                and not self._closed
            ):
                self._cond.wait()
            self._check_open()
            if self.realtime and self.sample_rate > 0:
                deadline = time.monotonic() + chunk.size / self.sample_rate
                while not self._aborted and not self._closed:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        break
                    self._cond.wait(timeout=remaining)
                self._check_open()
            if self.retain:
                self._chunks.append(chunk.copy())
            self._written += chunk.size
            self._cond.notify_all()

    def consume(self, n_samples: int) -> None:
        """Free device-buffer space (test-side pacing control)."""
        with self._cond:
            self._consumed = min(self._consumed + n_samples, self._written)
            self._cond.notify_all()

    def abort(self) -> None:
        with self._cond:
            self._aborted = True
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def sample_count(self) -> int:
        with self._cond:
            return self._written

    @property
    def captured(self) -> np.ndarray:
        """Snapshot of every sample written so far."""
        with self._cond:
            if not self._chunks:
                return np.zeros(0, dtype=np.float64)
            return np.concatenate(self._chunks)


class NullBackend(AudioBackend):
    """One device named "null" accepting any rate; streams are inspectable.

    Defaults (capture everything, never block, no pacing) suit headless
    verification; pass ``retain=False`` for a production discard device.
    """

    def __init__(
        self,
        block_size: int = DEFAULT_BLOCK_SIZE,
        capacity: int | None = None,
        retain: bool = True,
        realtime: bool = False,
    ):
        self.block_size = block_size
        self.capacity = capacity
        self.retain = retain
        self.realtime = realtime
        self.streams: list[NullStream] = []

    def devices(self) -> list[OutputDevice]:
        return [OutputDevice(index=0, name="null", max_sample_rate=None)]

    def open(self, device: OutputDevice, sample_rate: int) -> NullStream:
        if not device.supports(sample_rate):
            raise DeviceError(
                f"device {device.name!r} does not support {sample_rate} Hz", path="sample_rate"
            )
        stream = NullStream(
            sample_rate, self.block_size, self.capacity, retain=self.retain, realtime=self.realtime
        )
        self.streams.append(stream)
        return stream

    @property
    def last_stream(self) -> NullStream:
        if not self.streams:
            raise DeviceError("no stream has been opened on the null backend")
        return self.streams[-1]


# ----------------------------------------------------- sounddevice backend

class SoundDeviceStream(AudioStream):
    def __init__(self, stream, block_size: int):
        self._stream = stream
        self.block_size = block_size
        self._lock = threading.Lock()
        self._dead = False

    def write(self, chunk: np.ndarray) -> None:
        with self._lock:
            if self._dead:
                raise StreamAborted
        try:
            self._stream.write(np.asarray(chunk, dtype=np.float32).reshape(-1, 1))
        except Exception as e:  # device unplugged, backend error
            raise StreamClosed(str(e)) from e

    def abort(self) -> None:
        with self._lock:
            if self._dead:
                return
            self._dead = True
        try:
            self._stream.abort()
            self._stream.close()
        except Exception:
            pass

    def close(self) -> None:
        with self._lock:
            if self._dead:
                return
            self._dead = True
        try:
            self._stream.stop()
            self._stream.close()
        except Exception:
            pass


class SoundDeviceBackend(AudioBackend):
    """Real audio output via the sounddevice/PortAudio bindings."""

    def __init__(self, block_size: int = DEFAULT_BLOCK_SIZE):
        self.block_size = block_size
        self._sd = _import_sounddevice()

    def devices(self) -> list[OutputDevice]:
        try:
            infos = self._sd.query_devices()
        except Exception as e:
            raise DeviceError(f"device enumeration failed: {e}") from e
        out = []
        for i, info in enumerate(infos):
            if info.get("max_output_channels", 0) > 0:
                out.append(
                    OutputDevice(
                        index=i,
                        name=str(info.get("name", f"device {i}")),
                        max_sample_rate=None,
                    )
                )
        if not out:
            raise DeviceError("no audio output devices found")
        return out

    def open(self, device: OutputDevice, sample_rate: int) -> SoundDeviceStream:
        try:
            stream = self._sd.OutputStream(
                samplerate=sample_rate,
                device=device.index,
                channels=1,
                dtype="float32",
                blocksize=self.block_size,
            )
            stream.start()
        except Exception as e:
            raise DeviceError(
                f"cannot open device {device.index} at {sample_rate} Hz: {e}"
            ) from e
        return SoundDeviceStream(stream, self.block_size)


def _import_sounddevice():
    try:
        import sounddevice
    except ImportError as e:
        raise DeviceError(
            "the sounddevice backend is not installed; "
            "install the [audio] extra or use --backend null"
        ) from e
    return sounddevice


def get_backend(name: str = "auto") -> AudioBackend:
    """Resolve a backend by name: "null", "sounddevice", or "auto".

    "auto" prefers real hardware and falls back to the null backend when
    sounddevice (or any output device) is unavailable, so headless runs
    always work. The null backend resolved here discards samples instead
    of retaining them; tests that inspect streams construct NullBackend
    directly.
    """
    if name == "null":
        return NullBackend(retain=False)
    if name == "sounddevice":
        return SoundDeviceBackend()
    if name == "auto":
        try:
            backend = SoundDeviceBackend()
            backend.devices()
            return backend
        except DeviceError:
            return NullBackend(retain=False)
    raise DeviceError(f"unknown audio backend {name!r} (null, sounddevice, auto)", path="audio_backend")
