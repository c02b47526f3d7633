"""Playback engine against the capturing null backend (headless)."""

import time

import numpy as np
import pytest

from vibrostim import (
    DeviceError,
    NullBackend,
    PlaybackEngine,
    PlaybackMode,
    PlaybackState,
    StimulusProgram,
    ValidationError,
    WaveformSpec,
    assemble_program,
    list_output_devices,
    render_wave,
)
from vibrostim.backends import OutputDevice

_SPEC = WaveformSpec(duration=0.5)  # 22050 samples


def _engine(**backend_kwargs):
    backend = NullBackend(**backend_kwargs)
    engine = PlaybackEngine(backend)
    return engine, backend


def _wait_for(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.001)
    return False


def test_null_backend_enumerates_one_device():
    devices = list_output_devices(NullBackend())
    assert len(devices) == 1
    assert devices[0].index == 0
    assert devices[0].name == "null"
    assert devices[0].supports(44100) and devices[0].supports(192000)


def test_play_once_emits_buffer_exactly():
    engine, backend = _engine()
    buf = render_wave(_SPEC)
    handle = engine.play(buf, PlaybackMode.once(), engine.devices()[0])
    assert handle.wait(10.0)
    assert handle.state is PlaybackState.STOPPED
    captured = backend.last_stream.captured
    assert captured.size == 22050
    assert np.array_equal(captured, buf.samples)


def test_gapped_loop_matches_assembled_program():
    repeats = 3
    needed = repeats * 22050 + (repeats - 1) * 4410
    engine, backend = _engine(capacity=needed)
    buf = render_wave(_SPEC)
    handle = engine.play(buf, PlaybackMode.gapped(0.1), engine.devices()[0])
    stream = backend.last_stream
    assert _wait_for(lambda: stream.sample_count >= needed)
    engine.stop(handle)
    program = StimulusProgram(id="p", waveform=_SPEC, repeats=repeats, gap=0.1)
    expected = assemble_program(program).samples
    assert np.array_equal(stream.captured[:needed], expected)


def test_continuous_loop_inserts_no_samples():
    iterations = 2
    needed = iterations * 22050
    engine, backend = _engine(capacity=needed)
    buf = render_wave(_SPEC)
    handle = engine.play(buf, PlaybackMode.continuous(), engine.devices()[0])
    stream = backend.last_stream
    assert _wait_for(lambda: stream.sample_count >= needed)
    engine.stop(handle)
    expected = np.concatenate([buf.samples, buf.samples])
    assert np.array_equal(stream.captured[:needed], expected)


def test_stop_halts_within_one_block():
    engine, backend = _engine(block_size=1024, capacity=1024)
    buf = render_wave(_SPEC)
    handle = engine.play(buf, PlaybackMode.once(), engine.devices()[0])
    engine.stop(handle)
    assert handle.state is PlaybackState.STOPPED
    assert backend.last_stream.sample_count <= 1024


def test_stop_is_idempotent_and_final():
    engine, backend = _engine()
    buf = render_wave(_SPEC)
    handle = engine.play(buf, PlaybackMode.continuous(), engine.devices()[0])
    engine.stop(handle)
    engine.stop(handle)  # no error
    count = backend.last_stream.sample_count
    time.sleep(0.05)
    assert backend.last_stream.sample_count == count  # nothing emitted after stop


def test_stop_during_gap_prevents_next_repetition():
    # capacity parks the emitter inside the first silent gap
    engine, backend = _engine(capacity=22050 + 2000)
    buf = render_wave(_SPEC)
    handle = engine.play(buf, PlaybackMode.gapped(0.1), engine.devices()[0])
    stream = backend.last_stream
    assert _wait_for(lambda: stream.sample_count >= 22050 + 1024)
    engine.stop(handle)
    captured = stream.captured
    assert captured.size <= 22050 + 4410  # never reached the second repetition
    assert np.all(captured[22050:] == 0.0)


def test_last_writer_wins_on_device_contention():
    engine, backend = _engine(capacity=1024)
    device = engine.devices()[0]
    first = engine.play(render_wave(_SPEC), PlaybackMode.continuous(), device)
    assert first.state is PlaybackState.PLAYING
    second = engine.play(render_wave(WaveformSpec(duration=0.01)), PlaybackMode.once(), device)
    assert first.state is PlaybackState.STOPPED
    assert second.wait(10.0)
    assert len(backend.streams) == 2


def test_unsupported_rate_is_device_error():
    engine = PlaybackEngine(NullBackend())
    slow = OutputDevice(index=0, name="limited", max_sample_rate=8000)
    with pytest.raises(DeviceError):
        engine.play(render_wave(_SPEC), PlaybackMode.once(), slow)


def test_device_lost_mid_playback_surfaces_on_handle():
    engine, backend = _engine(capacity=1024)
    handle = engine.play(render_wave(_SPEC), PlaybackMode.continuous(), engine.devices()[0])
    stream = backend.last_stream
    assert _wait_for(lambda: stream.sample_count >= 1024)
    stream.close()  # device vanishes underneath the emitter
    assert handle.wait(10.0)
    assert handle.error is not None
    assert handle.error.code == "playback-lost"


def test_gapped_mode_requires_positive_gap():
    with pytest.raises(ValidationError):
        PlaybackMode.gapped(0.0)
    with pytest.raises(ValidationError):
        PlaybackMode.gapped(-0.5)
    assert PlaybackMode.gapped().gap == 0.1
    assert PlaybackMode.once().gap is None
