"""Stimulus batteries: ordered sets of programs presented in one session."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotFoundError, ValidationError
from .synth import (
    DEFAULT_DECAY_EXPONENT,
    Envelope,
    StimulusProgram,
    WaveformSpec,
    WaveShape,
)


@dataclass(frozen=True)
class StimulusBattery:
    """Ordered set of stimulus programs with unique ids."""

    programs: tuple[StimulusProgram, ...]

    def __post_init__(self):
        programs = tuple(self.programs)
        if not programs:
            raise ValidationError("battery must contain at least one program")
        ids = [p.id for p in programs]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"battery ids must be unique, got {ids}")
        object.__setattr__(self, "programs", programs)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.programs)

    def __len__(self) -> int:
        return len(self.programs)

    def __iter__(self):
        return iter(self.programs)

    def __getitem__(self, index: int) -> StimulusProgram:
        return self.programs[index]

    def get(self, program_id: str) -> StimulusProgram:
        for p in self.programs:
            if p.id == program_id:
                return p
        raise NotFoundError(f"no program with id {program_id!r} in battery")


def _reference_battery() -> StimulusBattery:
    """The five-stimulus reference battery.

    200 Hz, 0.5 s waveforms at 44.1 kHz, each repeated 5 times with 0.1 s
    silent gaps: sine and square both plain and with the default decay
    (k=5), plus a decaying sawtooth. Annotations record the decay exponent
    and the peak accelerations measured on the reference amplifier +
    voice-coil actuator chain; those are hardware facts, not computed here.
    """

    def spec(shape: WaveShape, envelope: Envelope) -> WaveformSpec:
        return WaveformSpec(
            shape=shape,
            frequency=200.0,
            amplitude=1.0,
            duration=0.5,
            envelope=envelope,
            sample_rate=44100,
        )

    decay = Envelope.decay(DEFAULT_DECAY_EXPONENT)
    k_note = f"decay exponent k={DEFAULT_DECAY_EXPONENT:g}"
    return StimulusBattery(
        (
            StimulusProgram(
                id="sine",
                waveform=spec(WaveShape.SINE, Envelope.none()),
                repeats=5,
                gap=0.1,
                annotation="measured peak acceleration 5.6 m/s^2 on the reference rig",
            ),
            StimulusProgram(
                id="sine-decay",
                waveform=spec(WaveShape.SINE, decay),
                repeats=5,
                gap=0.1,
                annotation=f"{k_note}; measured peak acceleration 5.6 m/s^2 on the reference rig",
            ),
            StimulusProgram(
                id="square",
                waveform=spec(WaveShape.SQUARE, Envelope.none()),
                repeats=5,
                gap=0.1,
                annotation="measured peak acceleration 19.9 m/s^2 on the reference rig",
            ),
            StimulusProgram(
                id="square-decay",
                waveform=spec(WaveShape.SQUARE, decay),
                repeats=5,
                gap=0.1,
                annotation=f"{k_note}; measured peak acceleration 19.9 m/s^2 on the reference rig",
            ),
            StimulusProgram(
                id="saw-decay",
                waveform=spec(WaveShape.SAWTOOTH, decay),
                repeats=5,
                gap=0.1,
                annotation=f"{k_note}; measured peak acceleration 15.1 m/s^2 on the reference rig",
            ),
        )
    )


_PRESETS = {"paper": _reference_battery}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_battery(name: str = "paper") -> StimulusBattery:
    """Look up a named preset battery ("paper" is the five-stimulus set)."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise NotFoundError(
            f"unknown preset {name!r} (available: {', '.join(preset_names())})", path="preset"
        ) from None
    return factory()
