"""Deterministic vibrotactile waveform synthesis and intensity-proxy metrics.

Everything here is pure: the same spec always renders to a bit-identical
buffer. Two conventions make lengths and phases reproducible:

* sample counts use round-half-away-from-zero (``sample_count``);
* the oscillator phase for sample ``n`` is ``fmod(f * n, fs) / fs``, which
  keeps the phase sequence exactly periodic whenever ``fs / f`` is an
  integer (``fmod`` is exact for floats, a plain ``frac`` after division
  is not).

Synthesis is naive by default: non-sinusoidal shapes alias above Nyquist,
which is exactly what a per-sample GUI generator produces. A band-limited
additive mode is available behind a flag for listening comparisons; it is
excluded from the golden-byte contracts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

DEFAULT_FREQUENCY_HZ = 200.0
DEFAULT_DURATION_S = 0.3
DEFAULT_SAMPLE_RATE = 44100
DEFAULT_DECAY_EXPONENT = 5.0
DEFAULT_GAP_S = 0.1

#: Cap on preview decimation buckets accepted by ``preview_minmax``.
MAX_PREVIEW_BUCKETS = 10_000


def sample_count(seconds: float, sample_rate: int) -> int:
    """Number of samples spanned by ``seconds``, rounding half away from zero."""
    return int(math.floor(seconds * sample_rate + 0.5))


class WaveShape(enum.Enum):
    """The four selectable oscillator shapes."""

    SINE = "sine"
    SQUARE = "square"
    TRIANGLE = "triangle"
    SAWTOOTH = "sawtooth"

    @classmethod
    def parse(cls, tag: str) -> "WaveShape":
        try:
            return cls(tag)
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValidationError(f"unknown wave shape {tag!r} (expected one of: {valid})") from None


class EnvelopeKind(enum.Enum):
    NONE = "none"
    DECAY = "decay"
    RISE = "rise"


@dataclass(frozen=True)
class Envelope:
    """Multiplicative exponential amplitude envelope.

    ``decay`` attenuates from gain 1 at t=0 down to exp(-k) at t=T;
    ``rise`` grows from exp(-k) up to 1 at t=T. The exponent is normalized
    by the waveform duration, so the envelope *shape* is independent of T.
    ``k`` must be positive and is dropped entirely for kind ``none``.
    """

    kind: EnvelopeKind = EnvelopeKind.NONE
    k: float | None = None

    def __post_init__(self):
        if not isinstance(self.kind, EnvelopeKind):
            raise ValidationError(f"envelope kind must be an EnvelopeKind, got {self.kind!r}")
        if self.kind is EnvelopeKind.NONE:
            object.__setattr__(self, "k", None)
            return
        k = self.k if self.k is not None else DEFAULT_DECAY_EXPONENT
        k = float(k)
        if not math.isfinite(k) or k <= 0.0:
            raise ValidationError(f"envelope exponent k must be a positive finite number, got {self.k!r}")
        object.__setattr__(self, "k", k)

    @classmethod
    def none(cls) -> "Envelope":
        return cls(EnvelopeKind.NONE)

    @classmethod
    def decay(cls, k: float = DEFAULT_DECAY_EXPONENT) -> "Envelope":
        return cls(EnvelopeKind.DECAY, k)

    @classmethod
    def rise(cls, k: float = DEFAULT_DECAY_EXPONENT) -> "Envelope":
        return cls(EnvelopeKind.RISE, k)


@dataclass(frozen=True)
class WaveformSpec:
    """Full parameterization of one rendered waveform.

    Defaults mirror the interactive generator: 200 Hz sine, 0.3 s, full
    amplitude, 44.1 kHz, no envelope. Violations (amplitude outside [0, 1],
    non-positive frequency/duration, sub-Nyquist sample rate) are rejected
    at construction so a spec is always renderable.
    """

    shape: WaveShape = WaveShape.SINE
    frequency: float = DEFAULT_FREQUENCY_HZ
    amplitude: float = 1.0
    duration: float = DEFAULT_DURATION_S
    envelope: Envelope = field(default_factory=Envelope.none)
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if not isinstance(self.shape, WaveShape):
            raise ValidationError(f"shape must be a WaveShape, got {self.shape!r}")
        if not isinstance(self.envelope, Envelope):
            raise ValidationError(f"envelope must be an Envelope, got {self.envelope!r}")
        object.__setattr__(self, "frequency", float(self.frequency))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "duration", float(self.duration))
        if not math.isfinite(self.frequency) or self.frequency <= 0.0:
            raise ValidationError(f"frequency must be positive, got {self.frequency}")
        if not (0.0 <= self.amplitude <= 1.0):
            raise ValidationError(f"amplitude must lie in [0, 1], got {self.amplitude}")
        if not math.isfinite(self.duration) or self.duration <= 0.0:
            raise ValidationError(f"duration must be positive, got {self.duration}")
        if not isinstance(self.sample_rate, int) or isinstance(self.sample_rate, bool) or self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        if self.sample_rate < 2.0 * self.frequency:
            raise ValidationError(
                f"sample_rate {self.sample_rate} Hz violates the Nyquist limit for "
                f"{self.frequency} Hz (need at least {2.0 * self.frequency:g} Hz)"
            )


@dataclass(frozen=True)
class StimulusProgram:
    """A waveform repeated ``repeats`` times with silent gaps in between.

    The gap is inserted only *between* repetitions, never after the last.
    ``annotation`` is free text (e.g. a measured peak acceleration of the
    hardware chain); the software never computes physical units itself.
    """

    id: str
    waveform: WaveformSpec
    repeats: int = 1
    gap: float = DEFAULT_GAP_S
    annotation: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError(f"program id must be a non-empty string, got {self.id!r}")
        if not isinstance(self.waveform, WaveformSpec):
            raise ValidationError("waveform must be a WaveformSpec")
        if not isinstance(self.repeats, int) or isinstance(self.repeats, bool) or self.repeats < 1:
            raise ValidationError(f"repeats must be a positive integer, got {self.repeats!r}")
        object.__setattr__(self, "gap", float(self.gap))
        if not math.isfinite(self.gap) or self.gap < 0.0:
            raise ValidationError(f"gap must be non-negative, got {self.gap}")
        if self.annotation is not None and not isinstance(self.annotation, str):
            raise ValidationError("annotation must be a string or None")


@dataclass(frozen=True, eq=False)
class SampleBuffer:
    """Immutable mono sequence of float64 samples in [-1, 1] plus its rate.

    The sample array is copied on construction and marked read-only, so a
    buffer is safe to share between threads.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if not isinstance(self.sample_rate, int) or isinstance(self.sample_rate, bool) or self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        arr = np.array(self.samples, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValidationError(f"samples must be one-dimensional, got shape {arr.shape}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValidationError("samples must be finite")
        if arr.size and np.max(np.abs(arr)) > 1.0:
            raise ValidationError("samples must lie in [-1, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Spanned time in seconds."""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class WaveformMetrics:
    """Intensity proxies computed on normalized samples (not physical units)."""

    peak: float
    rms: float
    mean_rectified: float


def oscillator_sample(shape: WaveShape, phase: float) -> float:
    """Unit-amplitude waveform value at normalized phase in [0, 1).

    Fixed definitions: sine is sin(2*pi*phase); square is +1 strictly below
    phase 0.5 and -1 from 0.5 on; triangle is sine-phase-aligned (rises
    through 0 at phase 0, peaks +1 at 0.25, troughs -1 at 0.75); sawtooth
    is the rising ramp 2*phase - 1.
    """
    if not (0.0 <= phase < 1.0):
        raise DomainError(f"phase must lie in [0, 1), got {phase}")
    if shape is WaveShape.SINE:
        return math.sin(2.0 * math.pi * phase)
    if shape is WaveShape.SQUARE:
        return 1.0 if phase < 0.5 else -1.0
    if shape is WaveShape.TRIANGLE:
        if phase < 0.25:
            return 4.0 * phase
        if phase < 0.75:
            return 2.0 - 4.0 * phase
        return 4.0 * phase - 4.0
    if shape is WaveShape.SAWTOOTH:
        return 2.0 * phase - 1.0
    raise ValidationError(f"unknown wave shape {shape!r}")


def envelope_gain(envelope: Envelope, t: float, duration: float) -> float:
    """Envelope gain at time ``t`` of a waveform lasting ``duration`` seconds.

    ``none`` is identically 1. ``decay`` is exp(-k * t/T); ``rise`` is
    exp(k * (t/T - 1)). Both peak at exactly 1.0 at one endpoint.
    """
    if duration <= 0.0:
        raise DomainError(f"duration must be positive, got {duration}")
    if not (0.0 <= t <= duration):
        raise DomainError(f"t={t} outside [0, {duration}]")
    if envelope.kind is EnvelopeKind.NONE:
        return 1.0
    x = t / duration
    if envelope.kind is EnvelopeKind.DECAY:
        return math.exp(-(envelope.k * x))
    return math.exp(envelope.k * (x - 1.0))


def amplitude_from_percent(p: int) -> float:
    """Map the integer keyboard/slider value 0..100 onto amplitude 0.0..1.0."""
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
        raise ValidationError(f"percent must be an integer, got {p!r}")
    if not (0 <= p <= 100):
        raise ValidationError(f"percent must lie in 0..100, got {p}")
    return p / 100


def _phases(frequency: float, n_samples: int, sample_rate: int) -> np.ndarray:
    # fmod before dividing: exact for floats, so the phase grid repeats
    # bit-identically every fs/f samples when that ratio is an integer.
    idx = np.arange(n_samples, dtype=np.float64)
    return np.fmod(frequency * idx, float(sample_rate)) / float(sample_rate)


def _oscillator_array(shape: WaveShape, phases: np.ndarray) -> np.ndarray:
    if shape is WaveShape.SINE:
        return np.sin(2.0 * np.pi * phases)
    if shape is WaveShape.SQUARE:
        return np.where(phases < 0.5, 1.0, -1.0)
    if shape is WaveShape.TRIANGLE:
        return np.where(
            phases < 0.25,
            4.0 * phases,
            np.where(phases < 0.75, 2.0 - 4.0 * phases, 4.0 * phases - 4.0),
        )
    if shape is WaveShape.SAWTOOTH:
        return 2.0 * phases - 1.0
    raise ValidationError(f"unknown wave shape {shape!r}")


def _band_limited_array(
    shape: WaveShape, phases: np.ndarray, frequency: float, sample_rate: int
) -> np.ndarray:
    """Additive rendering with all partials strictly below Nyquist."""
    if shape is WaveShape.SINE:
        return np.sin(2.0 * np.pi * phases)
    nyquist = sample_rate / 2.0
    base = 2.0 * np.pi * phases
    out = np.zeros_like(phases)
    if shape is WaveShape.SQUARE:
        n = 1
        while n * frequency < nyquist:
            out += np.sin(n * base) / n
            n += 2
        return out * (4.0 / math.pi)
    if shape is WaveShape.TRIANGLE:
        n, sign = 1, 1.0
        while n * frequency < nyquist:
            out += sign * np.sin(n * base) / (n * n)
            n += 2
            sign = -sign
        return out * (8.0 / math.pi**2)
    if shape is WaveShape.SAWTOOTH:
        n = 1
        while n * frequency < nyquist:
            out += np.sin(n * base) / n
            n += 1
        return out * (-2.0 / math.pi)
    raise ValidationError(f"unknown wave shape {shape!r}")


def render_wave(spec: WaveformSpec, *, band_limited: bool = False) -> SampleBuffer:
    """Render a spec to samples: amplitude * envelope_gain(n/fs) * oscillator.

    Deterministic; N = sample_count(duration, sample_rate) samples. A spec
    whose duration rounds to zero samples is rejected.
    """
    fs = spec.sample_rate
    n_samples = sample_count(spec.duration, fs)
    if n_samples == 0:
        raise DomainError(
            f"duration {spec.duration} s spans zero samples at {fs} Hz", path="duration"
        )
    phases = _phases(spec.frequency, n_samples, fs)
    if band_limited:
        osc = _band_limited_array(spec.shape, phases, spec.frequency, fs)
        peak = np.max(np.abs(osc)) if osc.size else 0.0
        if peak > 1.0:  # Gibbs overshoot of truncated series
            osc = osc / peak
    else:
        osc = _oscillator_array(spec.shape, phases)
    if spec.envelope.kind is EnvelopeKind.NONE:
        samples = spec.amplitude * osc
    else:
        t = np.arange(n_samples, dtype=np.float64) / fs
        x = t / spec.duration
        if spec.envelope.kind is EnvelopeKind.DECAY:
            gains = np.exp(-(spec.envelope.k * x))
        else:
            gains = np.exp(spec.envelope.k * (x - 1.0))
        samples = spec.amplitude * gains * osc
    return SampleBuffer(samples, fs)


def assemble_program(program: StimulusProgram, *, band_limited: bool = False) -> SampleBuffer:
    """Concatenate ``repeats`` rendered copies separated by silent gaps.

    Total length is repeats * N + (repeats - 1) * G where G is the rounded
    gap length; no gap trails the final repetition.
    """
    wave = render_wave(program.waveform, band_limited=band_limited)
    if program.repeats == 1:
        return wave
    gap_len = sample_count(program.gap, wave.sample_rate)
    silence = np.zeros(gap_len, dtype=np.float64)
    parts = []
    for i in range(program.repeats):
        if i:
            parts.append(silence)
        parts.append(wave.samples)
    return SampleBuffer(np.concatenate(parts), wave.sample_rate)


def waveform_metrics(buffer: SampleBuffer) -> WaveformMetrics:
    """Peak, RMS and mean rectified value of a buffer (unitless proxies)."""
    s = buffer.samples
    if s.size == 0:
        raise DomainError("cannot compute metrics of an empty buffer")
    rect = np.abs(s)
    return WaveformMetrics(
        peak=float(np.max(rect)),
        rms=float(np.sqrt(np.mean(np.square(s)))),
        mean_rectified=float(np.mean(rect)),
    )


def preview_minmax(buffer: SampleBuffer, buckets: int = 1000) -> list[tuple[float, float]]:
    """Decimate a buffer into per-bucket (min, max) pairs for drawing.

    Bucket count is clamped to the buffer length and capped at
    ``MAX_PREVIEW_BUCKETS``; requests outside 1..cap are rejected.
    """
    if isinstance(buckets, bool) or not isinstance(buckets, (int, np.integer)):
        raise ValidationError(f"bucket count must be an integer, got {buckets!r}")
    if not (1 <= buckets <= MAX_PREVIEW_BUCKETS):
        raise ValidationError(
            f"bucket count must lie in 1..{MAX_PREVIEW_BUCKETS}, got {buckets}", path="buckets"
        )
    s = buffer.samples
    if s.size == 0:
        raise DomainError("cannot preview an empty buffer")
    n_buckets = min(int(buckets), s.size)
    edges = (np.arange(n_buckets + 1, dtype=np.int64) * s.size) // n_buckets
    out = []
    for i in range(n_buckets):
        chunk = s[edges[i] : edges[i + 1]]
        out.append((float(chunk.min()), float(chunk.max())))
    return out
