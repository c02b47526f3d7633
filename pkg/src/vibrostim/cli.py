"""Headless command line mirroring the service endpoints.

Every subcommand is a thin client of the same library operations the
service exposes, so CLI and API behavior cannot diverge. Usage errors
exit 2; domain errors exit 1 and print the structured code/path/message.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__, schemas
from .backends import NullBackend, get_backend
from .battery import StimulusBattery, preset_battery, preset_names
from .errors import DomainError, WorkbenchError
from .playback import PlaybackEngine, PlaybackMode
from .rankstats import RankAggregate, aggregate_ranks
from .records import RecordStore, read_record_files
from .session import ExperimentSession, create_session
from .synth import (
    DEFAULT_DECAY_EXPONENT,
    Envelope,
    StimulusProgram,
    WaveformSpec,
    WaveShape,
    assemble_program,
    render_wave,
    waveform_metrics,
)
from .wavio import decode_wav, encode_wav, export_filename

_SHAPES = [s.value for s in WaveShape]


def _make_envelope(kind: str, k: float) -> Envelope:
    if kind == "none":
        return Envelope.none()
    if kind == "decay":
        return Envelope.decay(k)
    return Envelope.rise(k)


def _pick_device(engine: PlaybackEngine, index: int):
    for device in engine.devices():
        if device.index == index:
            return device
    raise DomainError(f"no output device with index {index}", path="device")


def _resolve_backend(name: str, *, realtime: bool = False):
    if name == "null":
        return NullBackend(retain=False, realtime=realtime)
    backend = get_backend(name)
    if isinstance(backend, NullBackend):  # auto fell back to null
        backend.realtime = realtime
    return backend


@click.group()
@click.version_option(version=__version__, prog_name="vibrostim")
def cli():
    """Vibrotactile stimulus workbench."""


@cli.command()
@click.option("--shape", type=click.Choice(_SHAPES), default="sine", show_default=True)
@click.option("--freq", type=float, default=200.0, show_default=True, help="Frequency in Hz.")
@click.option("--amp", type=float, default=1.0, show_default=True, help="Amplitude in [0, 1].")
@click.option("--dur", type=float, default=0.3, show_default=True, help="Duration in seconds.")
@click.option("--rate", type=int, default=44100, show_default=True, help="Sample rate in Hz.")
@click.option(
    "--envelope", type=click.Choice(["none", "decay", "rise"]), default="none", show_default=True
)
@click.option("--k", type=float, default=DEFAULT_DECAY_EXPONENT, show_default=True, help="Envelope exponent.")
@click.option("--band-limited", is_flag=True, help="Additive partials up to Nyquist instead of naive synthesis.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output WAV path.")
@click.option("--plot", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Also save a preview figure.")
def render(shape, freq, amp, dur, rate, envelope, k, band_limited, out, plot):
    """Render one waveform to a WAV file."""
    spec = WaveformSpec(
        shape=WaveShape(shape),
        frequency=freq,
        amplitude=amp,
        duration=dur,
        envelope=_make_envelope(envelope, k),
        sample_rate=rate,
    )
    buffer = render_wave(spec, band_limited=band_limited)
    if out is None:
        out = Path(f"{shape}_{freq:g}Hz_{dur:g}s.wav")
    out.write_bytes(encode_wav(buffer))
    metrics = waveform_metrics(buffer)
    click.echo(
        f"wrote {out} ({len(buffer)} samples, {dur:g} s at {rate} Hz, "
        f"peak {metrics.peak:.4f}, rms {metrics.rms:.4f})"
    )
    if plot is not None:
        from .plots import save_waveform_preview

        save_waveform_preview(buffer, plot, title=f"{shape} {freq:g} Hz")
        click.echo(f"wrote {plot}")


@cli.group()
def battery():
    """Work with stimulus batteries."""


@battery.command("export")
@click.option("--preset", type=click.Choice(preset_names()), default="paper", show_default=True)
@click.option(
    "--dir",
    "directory",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
)
def battery_export(preset, directory):
    """Write every program of a preset battery as a WAV file."""
    directory.mkdir(parents=True, exist_ok=True)
    for program in preset_battery(preset):
        buffer = assemble_program(program)
        name = export_filename(program.id, program.waveform.frequency, program.waveform.duration)
        path = directory / name
        path.write_bytes(encode_wav(buffer))
        click.echo(f"wrote {path} ({len(buffer)} samples)")


@cli.command()
@click.argument("wav_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice(["once", "continuous", "gapped"]), default="once", show_default=True)
@click.option("--gap", type=float, default=0.1, show_default=True, help="Silent gap for gapped mode, seconds.")
@click.option("--device", type=int, default=0, show_default=True, help="Output device index.")
@click.option("--backend", type=click.Choice(["auto", "null", "sounddevice"]), default="auto", show_default=True)
def play(wav_file, mode, gap, device, backend):
    """Play a WAV file on an output device (Ctrl-C stops loop modes)."""
    buffer = decode_wav(wav_file.read_bytes())
    if mode == "once":
        playback_mode = PlaybackMode.once()
    elif mode == "continuous":
        playback_mode = PlaybackMode.continuous()
    else:
        playback_mode = PlaybackMode.gapped(gap)
    # loop modes on the null device pace in real time so they idle politely
    engine = PlaybackEngine(_resolve_backend(backend, realtime=(mode != "once")))
    out = _pick_device(engine, device)
    handle = engine.play(buffer, playback_mode, out)
    click.echo(f"playing {wav_file} on device {out.index} ({out.name}), mode {mode}")
    try:
        while not handle.wait(0.2):
            pass
    except KeyboardInterrupt:
        click.echo("stopping")
    finally:
        engine.stop(handle)
    if handle.error is not None:
        raise handle.error


@cli.group()
def experiment():
    """Run ranking experiments."""


def _labels(n: int) -> list[str]:
    return [chr(ord("A") + i) for i in range(n)]


def _parse_label_ranking(text: str, session: ExperimentSession) -> list[int]:
    """Map 'C A B ...' (labels by presentation position) to battery indices."""
    labels = _labels(session.size)
    tokens = [t.upper() for t in text.replace(",", " ").split()]
    if sorted(tokens) != sorted(labels):
        raise click.UsageError(
            f"enter each of {' '.join(labels)} exactly once, strongest first (got {text!r})"
        )
    return [session.presentation_order[labels.index(t)] for t in tokens]


def _label_of(session: ExperimentSession, stimulus_id: str) -> str:
    battery_index = session.battery.ids.index(stimulus_id)
    position = session.presentation_order.index(battery_index)
    return _labels(session.size)[position]


@experiment.command("run")
@click.option("--preset", type=click.Choice(preset_names()), default="paper", show_default=True)
@click.option("--participant", required=True, help="Participant label (no PII).")
@click.option("--seed", type=int, required=True, help="Presentation-order seed.")
@click.option("--device", type=int, default=0, show_default=True)
@click.option("--backend", type=click.Choice(["auto", "null", "sounddevice"]), default="auto", show_default=True)
@click.option(
    "--records-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("records"),
    show_default=True,
)
def experiment_run(preset, participant, seed, device, backend, records_dir):
    """Interactive terminal flow of one ranking session.

    Stimuli are blind during the run: they are labeled A, B, C... in
    presentation order, and the label-to-stimulus mapping is revealed only
    in the final summary.
    """
    battery_set = preset_battery(preset)
    session = create_session(battery_set, participant, seed)
    store = RecordStore(records_dir)
    store.append_event(session.session_id, "created", session=schemas.session_to_doc(session))
    engine = PlaybackEngine(_resolve_backend(backend))
    out = _pick_device(engine, device)
    labels = _labels(session.size)

    def play_stimulus(stimulus_id: str) -> None:
        buffer = assemble_program(session.battery.get(stimulus_id))
        handle = engine.play(buffer, PlaybackMode.once(), out)
        handle.wait()
        if handle.error is not None:
            raise handle.error

    click.echo(
        f"session {session.session_id} | participant {participant} | "
        f"{session.size} stimuli | seed {seed}"
    )
    click.echo(f"stimuli are labeled {' '.join(labels)} in presentation order\n")

    click.echo("-- presentation --")
    for position in range(session.size):
        label = labels[position]
        click.prompt(f"press Enter to play stimulus {label}", default="", show_default=False, prompt_suffix="")
        stimulus_id = session.advance_presentation()
        store.append_event(session.session_id, "presented", stimulus=stimulus_id)
        play_stimulus(stimulus_id)
        click.echo(f"  played {label}")

    click.echo("\n-- ranking --")
    ranking = click.prompt(
        f"rank the stimuli, strongest first (e.g. '{' '.join(labels)}')",
        value_proc=lambda text: _parse_label_ranking(text, session),
    )
    session.submit_ranking(ranking)
    store.append_event(session.session_id, "ranked")

    while True:
        click.echo("\n-- confirmation (replaying in your ranked order) --")
        for position in range(session.size):
            stimulus_id = session.advance_confirmation()
            store.append_event(session.session_id, "confirmed", stimulus=stimulus_id)
            click.echo(f"  rank {position + 1}: stimulus {_label_of(session, stimulus_id)} (playing)")
            play_stimulus(stimulus_id)
        if click.confirm("keep this ranking?", default=True):
            break
        new_ranking = click.prompt(
            "re-order, strongest first",
            value_proc=lambda text: _parse_label_ranking(text, session),
        )
        session.amend_ranking(new_ranking)
        store.append_event(session.session_id, "amended")

    record = session.finalize()
    path = store.append_finalized(record)
    click.echo("\n-- summary (operator view) --")
    for position, battery_index in enumerate(record.presentation_order):
        click.echo(f"  {labels[position]} = {battery_set[battery_index].id}")
    final_labels = " ".join(_label_of(session, battery_set[i].id) for i in record.ranking)
    final_ids = " > ".join(battery_set[i].id for i in record.ranking)
    click.echo(f"final ranking (strongest first): {final_labels}  [{final_ids}]")
    click.echo(f"amendments: {len(record.amendments)}")
    click.echo(f"record written to {path}")


@cli.command()
@click.argument("record_files", nargs=-1, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["table", "csv", "json"]), default="table", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write output here instead of stdout.")
@click.option("--plot", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Also save a boxplot figure.")
def aggregate(record_files, fmt, out, plot):
    """Aggregate finalized session records into boxplot statistics."""
    records = read_record_files(record_files)
    if not records:
        raise DomainError("no records to aggregate")
    result = aggregate_ranks(records, records[0].battery_ids)
    text = _format_aggregate(result, fmt)
    if out is not None:
        out.write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)
    if plot is not None:
        from .plots import save_rank_boxplot

        save_rank_boxplot(result, plot)
        click.echo(f"wrote {plot}")


def _format_aggregate(result: RankAggregate, fmt: str) -> str:
    if fmt == "json":
        return schemas.dumps(schemas.aggregate_to_doc(result)) + "\n"
    header = ["id", "n", "ranks", "median", "q1", "q3", "whisker_low", "whisker_high", "outliers"]
    rows = [
        [
            row.stimulus_id,
            str(len(row.ranks)),
            ",".join(str(r) for r in row.ranks),
            f"{row.median:g}",
            f"{row.q1:g}",
            f"{row.q3:g}",
            f"{row.whisker_low:g}",
            f"{row.whisker_high:g}",
            ",".join(str(r) for r in row.outliers) or "-",
        ]
        for row in result.per_stimulus
    ]
    if fmt == "csv":
        import csv
        import io

        sink = io.StringIO()
        writer = csv.writer(sink)
        writer.writerow(header)
        writer.writerows(rows)
        return sink.getvalue()
    lines = ["\t".join(header)]
    lines.extend("\t".join(row) for row in rows)
    return "\n".join(lines) + "\n"


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option(
    "--state-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("state"), show_default=True
)
@click.option("--audio-backend", type=click.Choice(["auto", "null", "sounddevice"]), default="auto", show_default=True)
def serve(host, port, state_dir, audio_backend):
    """Run the local control service (HTTP + WebSocket)."""
    from .service import ServiceConfig, serve as run_service

    run_service(ServiceConfig(host=host, port=port, state_dir=state_dir, audio_backend=audio_backend))


def main(argv=None):
    try:
        cli(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)  # usage errors exit 2
    except WorkbenchError as e:
        where = f" at {e.path}" if e.path else ""
        click.echo(f"error[{e.code}]{where}: {e.message}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
