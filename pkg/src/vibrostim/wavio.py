"""Bit-exact mono 16-bit PCM WAV encoding and decoding.

The encoder always emits the minimal 44-byte canonical header (RIFF/WAVE,
a 16-byte ``fmt `` chunk with PCM format code 1, one channel, 16 bits, then
``data``). Samples scale symmetrically by 32767 with ties rounded away
from zero, so -1.0 maps to -32767 and code -32768 is never produced.

The decoder walks RIFF chunks, skipping unknown ones (files from other
tools may carry LIST/fact/etc.), and validates the format-defining fields
strictly, naming the offending field in the error.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ValidationError, WavFormatError
from .synth import SampleBuffer

_SCALE = 32767.0


def encode_wav(buffer: SampleBuffer) -> bytes:
    """Encode a buffer as mono 16-bit PCM WAV bytes. Never clips silently."""
    s = buffer.samples
    if s.size == 0:
        raise ValidationError("cannot encode an empty buffer")
    if np.max(np.abs(s)) > 1.0:
        raise ValidationError("samples outside [-1, 1] cannot be encoded")
    # round half away from zero, symmetric around 0
    ints = (np.floor(np.abs(s) * _SCALE + 0.5) * np.sign(s)).astype("<i2")
    data = ints.tobytes()
    rate = buffer.sample_rate
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        rate,
        rate * 2,  # byte rate
        2,  # block align
        16,  # bits per sample
        b"data",
        len(data),
    )
    return header + data


def _u16(b: bytes, off: int) -> int:
    return int.from_bytes(b[off : off + 2], "little")


def _u32(b: bytes, off: int) -> int:
    return int.from_bytes(b[off : off + 4], "little")


def decode_wav(data: bytes) -> SampleBuffer:
    """Decode mono 16-bit PCM WAV bytes into a SampleBuffer.

    Integer code i maps to i / 32767 clamped to [-1, 1] (only the never-
    encoded code -32768 actually clamps). Unknown chunks are skipped.
    """
    if len(data) < 12:
        raise WavFormatError("file too short for a RIFF header", path="riff")
    if data[0:4] != b"RIFF":
        raise WavFormatError(f"bad RIFF id {data[0:4]!r}", path="riff.id")
    if data[8:12] != b"WAVE":
        raise WavFormatError(f"bad RIFF format {data[8:12]!r}", path="riff.format")

    fmt: bytes | None = None
    pcm: bytes | None = None
    off = 12
    while off + 8 <= len(data):
        chunk_id = data[off : off + 4]
        size = _u32(data, off + 4)
        body_start = off + 8
        if body_start + size > len(data):
            raise WavFormatError(
                f"chunk {chunk_id!r} of {size} bytes overruns the file",
                path=f"chunk.{chunk_id.decode('ascii', 'replace').strip()}",
            )
        if chunk_id == b"fmt " and fmt is None:
            fmt = data[body_start : body_start + size]
        elif chunk_id == b"data" and pcm is None:
            pcm = data[body_start : body_start + size]
        off = body_start + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("missing fmt chunk", path="fmt")
    if pcm is None:
        raise WavFormatError("missing data chunk", path="data")
    if len(fmt) < 16:
        raise WavFormatError(f"fmt chunk too short ({len(fmt)} bytes)", path="fmt.size")

    format_code = _u16(fmt, 0)
    channels = _u16(fmt, 2)
    rate = _u32(fmt, 4)
    byte_rate = _u32(fmt, 8)
    block_align = _u16(fmt, 12)
    bits = _u16(fmt, 14)
    if format_code != 1:
        raise WavFormatError(f"unsupported format code {format_code} (PCM is 1)", path="fmt.format_code")
    if channels != 1:
        raise WavFormatError(f"unsupported channel count {channels} (mono only)", path="fmt.channels")
    if bits != 16:
        raise WavFormatError(f"unsupported bit depth {bits} (16-bit only)", path="fmt.bits_per_sample")
    if rate <= 0:
        raise WavFormatError(f"bad sample rate {rate}", path="fmt.sample_rate")
    if block_align != 2:
        raise WavFormatError(f"inconsistent block align {block_align} (expected 2)", path="fmt.block_align")
    if byte_rate != rate * 2:
        raise WavFormatError(
            f"inconsistent byte rate {byte_rate} (expected {rate * 2})", path="fmt.byte_rate"
        )
    if len(pcm) % 2:
        raise WavFormatError(f"odd data chunk size {len(pcm)} for 16-bit samples", path="data.size")
    if not pcm:
        raise WavFormatError("empty data chunk", path="data.size")

    ints = np.frombuffer(pcm, dtype="<i2").astype(np.float64)
    samples = np.clip(ints / _SCALE, -1.0, 1.0)
    return SampleBuffer(samples, rate)


def export_filename(program_id: str, frequency: float, duration: float) -> str:
    """Canonical export name: <program-id>_<frequency>Hz_<duration>s.wav."""
    return f"{program_id}_{frequency:g}Hz_{duration:g}s.wav"
