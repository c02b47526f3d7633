"""Synthesis core: oscillators, envelopes, rendering, program assembly, metrics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibrostim import (
    DomainError,
    Envelope,
    SampleBuffer,
    StimulusProgram,
    ValidationError,
    WaveformSpec,
    WaveShape,
    amplitude_from_percent,
    assemble_program,
    envelope_gain,
    oscillator_sample,
    preview_minmax,
    render_wave,
    sample_count,
    waveform_metrics,
)

# ------------------------------------------------------------- oscillator


def test_oscillator_point_identities():
    assert oscillator_sample(WaveShape.SINE, 0.0) == 0.0
    assert oscillator_sample(WaveShape.SINE, 0.25) == 1.0
    assert oscillator_sample(WaveShape.SQUARE, 0.1) == 1.0
    assert oscillator_sample(WaveShape.SQUARE, 0.6) == -1.0
    # strict inequality at the boundary: 0.5 is already the low half
    assert oscillator_sample(WaveShape.SQUARE, 0.5) == -1.0
    assert oscillator_sample(WaveShape.SQUARE, 0.4999999) == 1.0
    assert oscillator_sample(WaveShape.TRIANGLE, 0.25) == 1.0
    assert oscillator_sample(WaveShape.TRIANGLE, 0.0) == 0.0
    assert oscillator_sample(WaveShape.TRIANGLE, 0.75) == -1.0
    assert oscillator_sample(WaveShape.SAWTOOTH, 0.5) == 0.0
    assert oscillator_sample(WaveShape.SAWTOOTH, 0.0) == -1.0


@pytest.mark.parametrize("phase", [-0.1, 1.0, 1.5, math.inf])
def test_oscillator_rejects_phase_outside_unit_interval(phase):
    with pytest.raises(DomainError):
        oscillator_sample(WaveShape.SINE, phase)


@given(st.sampled_from(list(WaveShape)), st.floats(min_value=0.0, max_value=1.0, exclude_max=True))
def test_oscillator_output_bounded(shape, phase):
    assert abs(oscillator_sample(shape, phase)) <= 1.0


# --------------------------------------------------------------- envelope


def test_envelope_none_is_unity_and_drops_k():
    env = Envelope.none()
    assert env.k is None
    assert envelope_gain(env, 0.123, 0.5) == 1.0


def test_envelope_decay_endpoints():
    env = Envelope.decay(5.0)
    assert envelope_gain(env, 0.0, 0.5) == 1.0
    assert envelope_gain(env, 0.5, 0.5) == pytest.approx(math.exp(-5.0), abs=1e-12)


def test_envelope_rise_endpoints():
    env = Envelope.rise(5.0)
    assert envelope_gain(env, 0.0, 0.5) == pytest.approx(math.exp(-5.0), abs=1e-12)
    assert envelope_gain(env, 0.5, 0.5) == 1.0


def test_envelope_shape_invariant_to_duration():
    env = Envelope.decay(3.0)
    for frac in (0.0, 0.25, 0.5, 1.0):
        assert envelope_gain(env, frac * 0.2, 0.2) == pytest.approx(
            envelope_gain(env, frac * 1.7, 1.7), rel=1e-12
        )


def test_envelope_domain_errors():
    env = Envelope.decay(5.0)
    with pytest.raises(DomainError):
        envelope_gain(env, -0.01, 0.5)
    with pytest.raises(DomainError):
        envelope_gain(env, 0.51, 0.5)
    with pytest.raises(DomainError):
        envelope_gain(env, 0.0, 0.0)


@pytest.mark.parametrize("bad_k", [0.0, -1.0, math.nan, math.inf])
def test_envelope_rejects_bad_exponent(bad_k):
    with pytest.raises(ValidationError):
        Envelope.decay(bad_k)


# ------------------------------------------------------ amplitude percent


def test_amplitude_from_percent_examples():
    assert amplitude_from_percent(0) == 0.0
    assert amplitude_from_percent(100) == 1.0
    assert amplitude_from_percent(55) == 0.55


@pytest.mark.parametrize("bad", [-1, 101, 0.5, "55", True])
def test_amplitude_from_percent_rejects(bad):
    with pytest.raises(ValidationError):
        amplitude_from_percent(bad)


# ------------------------------------------------------------- validation


def test_spec_defaults():
    spec = WaveformSpec()
    assert spec.shape is WaveShape.SINE
    assert spec.frequency == 200.0
    assert spec.duration == 0.3
    assert spec.amplitude == 1.0
    assert spec.sample_rate == 44100


@pytest.mark.parametrize(
    "kwargs",
    [
        {"amplitude": 1.5},
        {"amplitude": -0.1},
        {"frequency": 0.0},
        {"frequency": -10.0},
        {"duration": 0.0},
        {"sample_rate": 0},
        {"sample_rate": 300, "frequency": 200.0},  # Nyquist violation
    ],
)
def test_spec_rejects_invalid(kwargs):
    with pytest.raises(ValidationError):
        WaveformSpec(**kwargs)


def test_program_validation():
    wave = WaveformSpec()
    with pytest.raises(ValidationError):
        StimulusProgram(id="", waveform=wave)
    with pytest.raises(ValidationError):
        StimulusProgram(id="x", waveform=wave, repeats=0)
    with pytest.raises(ValidationError):
        StimulusProgram(id="x", waveform=wave, gap=-0.1)


def test_sample_buffer_is_immutable_and_validated():
    buf = render_wave(WaveformSpec())
    with pytest.raises(ValueError):
        buf.samples[0] = 0.5
    with pytest.raises(ValidationError):
        SampleBuffer(np.array([0.0, 1.2]), 44100)
    with pytest.raises(ValidationError):
        SampleBuffer(np.array([np.nan]), 44100)


# ---------------------------------------------------------------- render


def test_render_sine_battery_waveform():
    spec = WaveformSpec(shape=WaveShape.SINE, frequency=200.0, amplitude=1.0, duration=0.5)
    buf = render_wave(spec)
    assert len(buf) == 22050
    assert buf.samples[0] == 0.0
    # 44100/200 = 220.5 samples per period is non-integer, so the exact
    # peak must be found by scanning; it sits within half a sample of 1.
    assert np.max(np.abs(buf.samples)) >= 0.9999


def test_render_zero_amplitude_is_silent():
    for shape in WaveShape:
        buf = render_wave(WaveformSpec(shape=shape, amplitude=0.0))
        assert np.all(buf.samples == 0.0)


def test_render_square_decay_endpoints():
    spec = WaveformSpec(
        shape=WaveShape.SQUARE, frequency=200.0, duration=0.5, envelope=Envelope.decay(5.0)
    )
    buf = render_wave(spec)
    assert buf.samples[0] == 1.0
    assert abs(buf.samples[-1]) <= math.exp(-5.0) + 1e-5


def test_render_matches_scalar_operations():
    spec = WaveformSpec(
        shape=WaveShape.TRIANGLE, frequency=313.0, duration=0.01, envelope=Envelope.decay(2.5)
    )
    buf = render_wave(spec)
    fs = spec.sample_rate
    for n in [0, 1, 7, 100, len(buf) - 1]:
        phase = math.fmod(spec.frequency * n, fs) / fs
        expected = (
            spec.amplitude
            * envelope_gain(spec.envelope, n / fs, spec.duration)
            * oscillator_sample(spec.shape, phase)
        )
        assert buf.samples[n] == pytest.approx(expected, abs=1e-12)


def test_render_degenerate_duration():
    with pytest.raises(DomainError):
        render_wave(WaveformSpec(duration=1e-6))


def test_render_deterministic():
    spec = WaveformSpec(shape=WaveShape.SAWTOOTH, envelope=Envelope.rise(4.0))
    a = render_wave(spec)
    b = render_wave(spec)
    assert np.array_equal(a.samples, b.samples)


@pytest.mark.parametrize("freq", [100.0, 210.0, 441.0, 2205.0])
def test_render_periodicity_for_integer_period(freq):
    period = int(44100 / freq)
    assert period * freq == 44100
    buf = render_wave(WaveformSpec(shape=WaveShape.SINE, frequency=freq, duration=0.1))
    s = buf.samples
    assert np.array_equal(s[:-period], s[period:])


@settings(max_examples=60)
@given(
    shape=st.sampled_from(list(WaveShape)),
    amplitude=st.floats(min_value=0.0, max_value=1.0),
    frequency=st.floats(min_value=1.0, max_value=4000.0),
    duration=st.floats(min_value=0.001, max_value=0.2),
)
def test_render_peak_never_exceeds_amplitude(shape, amplitude, frequency, duration):
    spec = WaveformSpec(shape=shape, frequency=frequency, amplitude=amplitude, duration=duration)
    try:
        buf = render_wave(spec)
    except DomainError:
        return  # duration rounded to zero samples
    assert np.max(np.abs(buf.samples)) <= amplitude


def test_band_limited_mode_reduces_aliasing():
    spec = WaveformSpec(shape=WaveShape.SQUARE, frequency=2000.0, duration=0.1)
    naive = render_wave(spec).samples
    clean = render_wave(spec, band_limited=True).samples
    assert not np.array_equal(naive, clean)
    assert np.max(np.abs(clean)) <= 1.0

    def out_of_band_energy(x):
        mag = np.abs(np.fft.rfft(x * np.hanning(x.size)))
        freqs = np.fft.rfftfreq(x.size, d=1 / 44100)
        harmonics = [2000.0 * n for n in range(1, 12, 2)]
        mask = np.ones_like(mag, dtype=bool)
        for h in harmonics:
            mask &= np.abs(freqs - h) > 100.0
        return float(np.sum(mag[mask] ** 2))

    assert out_of_band_energy(clean) < out_of_band_energy(naive) / 10


# -------------------------------------------------------------- assembly


def test_assemble_battery_length():
    program = StimulusProgram(
        id="p",
        waveform=WaveformSpec(duration=0.5),
        repeats=5,
        gap=0.1,
    )
    buf = assemble_program(program)
    assert len(buf) == 5 * 22050 + 4 * 4410 == 127890


def test_assemble_single_repeat_is_plain_render():
    program = StimulusProgram(id="p", waveform=WaveformSpec(), repeats=1, gap=0.7)
    assert np.array_equal(assemble_program(program).samples, render_wave(program.waveform).samples)


def test_assemble_gap_regions_are_exactly_zero():
    program = StimulusProgram(id="p", waveform=WaveformSpec(duration=0.5), repeats=3, gap=0.1)
    s = assemble_program(program).samples
    n, g = 22050, 4410
    for i in range(2):
        start = (i + 1) * n + i * g
        assert np.all(s[start : start + g] == 0.0)


@settings(max_examples=60)
@given(
    repeats=st.integers(min_value=1, max_value=6),
    gap=st.floats(min_value=0.0, max_value=0.5),
    duration=st.floats(min_value=0.01, max_value=0.4),
    rate=st.sampled_from([8000, 22050, 44100]),
)
def test_assemble_length_arithmetic(repeats, gap, duration, rate):
    program = StimulusProgram(
        id="p",
        waveform=WaveformSpec(frequency=150.0, duration=duration, sample_rate=rate),
        repeats=repeats,
        gap=gap,
    )
    buf = assemble_program(program)
    n = sample_count(duration, rate)
    g = sample_count(gap, rate)
    assert len(buf) == repeats * n + (repeats - 1) * g


# --------------------------------------------------------------- metrics


def test_metrics_unit_square():
    m = waveform_metrics(render_wave(WaveformSpec(shape=WaveShape.SQUARE)))
    assert m.peak == 1.0
    assert m.rms == 1.0
    assert m.mean_rectified == 1.0


def test_metrics_all_zero():
    m = waveform_metrics(SampleBuffer(np.zeros(100), 44100))
    assert (m.peak, m.rms, m.mean_rectified) == (0.0, 0.0, 0.0)


def test_metrics_integer_period_sine_against_brute_force():
    buf = render_wave(WaveformSpec(shape=WaveShape.SINE, frequency=100.0, duration=1.0))
    m = waveform_metrics(buf)
    # independent oracle: exact compensated summation, no numpy reductions
    values = [float(x) for x in buf.samples]
    n = len(values)
    rms_oracle = math.sqrt(math.fsum(v * v for v in values) / n)
    mr_oracle = math.fsum(abs(v) for v in values) / n
    assert m.rms == pytest.approx(rms_oracle, rel=1e-9)
    assert m.mean_rectified == pytest.approx(mr_oracle, rel=1e-9)
    # five-decimal agreement with the analytic 1/sqrt(2) and 2/pi
    assert m.rms == pytest.approx(0.70711, abs=5e-6)
    assert m.mean_rectified == pytest.approx(0.63662, abs=5e-6)


def test_metrics_empty_buffer_is_domain_error():
    with pytest.raises(DomainError):
        waveform_metrics(SampleBuffer(np.zeros(0), 44100))


# --------------------------------------------------------------- preview


def test_preview_minmax_buckets():
    buf = render_wave(WaveformSpec(duration=0.5))
    pairs = preview_minmax(buf, 100)
    assert len(pairs) == 100
    assert all(lo <= hi for lo, hi in pairs)
    assert min(lo for lo, _ in pairs) == np.min(buf.samples)
    assert max(hi for _, hi in pairs) == np.max(buf.samples)


def test_preview_clamps_to_length():
    buf = SampleBuffer(np.array([0.5, -0.5]), 44100)
    assert preview_minmax(buf, 1000) == [(0.5, 0.5), (-0.5, -0.5)]


@pytest.mark.parametrize("bad", [0, -5, 10_001, 2.5])
def test_preview_rejects_bad_bucket_counts(bad):
    buf = render_wave(WaveformSpec())
    with pytest.raises(ValidationError):
        preview_minmax(buf, bad)
