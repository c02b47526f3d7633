"""Vibrotactile stimulus workbench.

Deterministic waveform synthesis with exponential decay/rise envelopes,
bit-exact WAV export, gapped/continuous playback, and a complete
rank-by-intensity experiment harness with confirmation replay and boxplot
aggregation.
"""

from .backends import NullBackend, OutputDevice, get_backend
from .battery import StimulusBattery, preset_battery, preset_names
from .errors import (
    DeviceError,
    DomainError,
    IllegalTransition,
    NotFoundError,
    PlaybackLostError,
    SchemaError,
    ValidationError,
    WavFormatError,
    WorkbenchError,
)
from .playback import PlaybackEngine, PlaybackHandle, PlaybackMode, PlaybackState, list_output_devices
from .rankstats import RankAggregate, StimulusRankStats, aggregate_ranks, quantile_linear
from .rng import SplitMix64, shuffle_order
from .session import (
    Amendment,
    ExperimentSession,
    Phase,
    PhaseName,
    SessionEvent,
    SessionRecord,
    create_session,
)
from .synth import (
    DEFAULT_DECAY_EXPONENT,
    DEFAULT_DURATION_S,
    DEFAULT_FREQUENCY_HZ,
    DEFAULT_GAP_S,
    DEFAULT_SAMPLE_RATE,
    Envelope,
    EnvelopeKind,
    SampleBuffer,
    StimulusProgram,
    WaveformMetrics,
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
from .wavio import decode_wav, encode_wav, export_filename

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # synthesis
    "WaveShape",
    "Envelope",
    "EnvelopeKind",
    "WaveformSpec",
    "StimulusProgram",
    "SampleBuffer",
    "WaveformMetrics",
    "oscillator_sample",
    "envelope_gain",
    "amplitude_from_percent",
    "render_wave",
    "assemble_program",
    "waveform_metrics",
    "preview_minmax",
    "sample_count",
    "DEFAULT_FREQUENCY_HZ",
    "DEFAULT_DURATION_S",
    "DEFAULT_SAMPLE_RATE",
    "DEFAULT_DECAY_EXPONENT",
    "DEFAULT_GAP_S",
    # wav
    "encode_wav",
    "decode_wav",
    "export_filename",
    # playback
    "OutputDevice",
    "NullBackend",
    "get_backend",
    "PlaybackEngine",
    "PlaybackMode",
    "PlaybackState",
    "PlaybackHandle",
    "list_output_devices",
    # experiment
    "StimulusBattery",
    "preset_battery",
    "preset_names",
    "SplitMix64",
    "shuffle_order",
    "ExperimentSession",
    "create_session",
    "SessionRecord",
    "SessionEvent",
    "Amendment",
    "Phase",
    "PhaseName",
    "RankAggregate",
    "StimulusRankStats",
    "aggregate_ranks",
    "quantile_linear",
    # errors
    "WorkbenchError",
    "ValidationError",
    "SchemaError",
    "DomainError",
    "WavFormatError",
    "DeviceError",
    "PlaybackLostError",
    "IllegalTransition",
    "NotFoundError",
]
