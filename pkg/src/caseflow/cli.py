"""Command-line front end.

Subcommands cover the whole pipeline: analyze a model into task
dependencies, correlate an event stream, replay a log at speed, evaluate
correlation quality against a labeled log, and extract duration heuristics
from one. Every option can also come from a key=value config file; explicit
flags win over the file.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from .correlator import CorrelationError, Correlator
from .dependencies import DependencyError, build_task_dependencies
from .evaluation import build_report, score
from .heuristics import (
    HeuristicError,
    extract_heuristics,
    load_heuristics,
    save_heuristics,
)
from .model import DEFAULT_SILENT_LABELS, NetError, parse_pnml, parse_simple_net, validate
from .streams import (
    ReplayError,
    StreamFormatError,
    events_to_csv,
    read_events,
    replay,
    strip_case_ids,
)


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read config: {exc}")
    cfg: dict[str, str] = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            _fail(f"{path}:{i}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip().strip("\"'")
    return cfg


def _pick(flag, cfg: dict, key: str, default=None, convert=None):
    """Explicit flag beats config file beats default."""
    if flag is not None:
        return flag
    if key in cfg:
        raw = cfg[key]
        try:
            return convert(raw) if convert else raw
        except ValueError:
            _fail(f"config {key}={raw!r} is not valid")
    return default


def _parse_silent_labels(value) -> frozenset[str]:
    if value is None:
        return DEFAULT_SILENT_LABELS
    return frozenset(x.strip() for x in str(value).split(",") if x.strip())


def _check_threshold(threshold: float) -> float:
    if not 0 <= threshold <= 100:
        _fail(f"threshold must be within [0, 100], got {threshold}")
    return threshold


def _load_net(model, model_format, silent_labels):
    if model is None:
        _fail("a model file is required (--model or config)")
    try:
        text = Path(model).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read model: {exc}")
    fmt = model_format
    if fmt is None:
        fmt = "pnml" if str(model).endswith(".pnml") or text.lstrip().startswith("<") else "net"
    try:
        if fmt == "pnml":
            net = parse_pnml(text, silent_labels=silent_labels)
        elif fmt == "net":
            net = parse_simple_net(text, silent_labels=silent_labels)
        else:
            _fail(f"unknown model format {fmt!r}")
    except NetError as exc:
        _fail(str(exc))
    diagnostics = validate(net)
    for warning in diagnostics.warnings:
        click.echo(f"warning: {warning.code}: {warning.message}", err=True)
    if not diagnostics.ok():
        for error in diagnostics.errors:
            where = f" ({error.node})" if error.node else ""
            click.echo(f"error: {error.code}: {error.message}{where}", err=True)
        sys.exit(2)
    return net


def _build_td(net):
    try:
        return build_task_dependencies(net)
    except DependencyError as exc:
        _fail(str(exc))


def _load_table(heuristics, cfg):
    path = _pick(heuristics, cfg, "heuristics")
    if path is None:
        _fail("a heuristics file is required (--heuristics or config)")
    try:
        return load_heuristics(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        _fail(f"cannot read heuristics: {exc}")
    except HeuristicError as exc:
        _fail(str(exc))


def _read_stream(path, fmt):
    if path is None:
        _fail("an input stream is required (--input or config)")
    try:
        return read_events(path, fmt=fmt)
    except OSError as exc:
        _fail(f"cannot read input: {exc}")
    except StreamFormatError as exc:
        _fail(str(exc))


def _emit(text: str, output: str | None) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        Path(output).write_text(text, encoding="utf-8")


@click.group()
def main():
    """Correlate unlabeled event streams to cases using a workflow model."""


@main.command()
@click.option("--model", type=str, default=None, help="Workflow model file.")
@click.option("--model-format", type=click.Choice(["pnml", "net"]), default=None)
@click.option("--silent-labels", default=None, help="Comma-separated silent transition labels.")
@click.option("--output", type=str, default=None, help="Write JSON here instead of stdout.")
@click.option("--config", "config_path", type=str, default=None, help="key=value defaults file.")
def analyze(model, model_format, silent_labels, output, config_path):
    """Derive task dependencies and loop entries from a workflow model."""
    cfg = _load_config(config_path)
    labels = _parse_silent_labels(_pick(silent_labels, cfg, "silent_labels"))
    net = _load_net(_pick(model, cfg, "model"), _pick(model_format, cfg, "model_format"), labels)
    td = _build_td(net)
    _emit(json.dumps(td.to_json_dict(), indent=2, sort_keys=True) + "\n",
          _pick(output, cfg, "output"))


@main.command()
@click.option("--model", type=str, default=None)
@click.option("--model-format", type=click.Choice(["pnml", "net"]), default=None)
@click.option("--silent-labels", default=None)
@click.option("--heuristics", type=str, default=None, help="Duration windows CSV.")
@click.option("--input", "input_path", type=str, default=None, help="Event stream to correlate.")
@click.option("--format", "stream_format", type=click.Choice(["csv", "jsonl"]), default=None)
@click.option("--threshold", type=float, default=None, help="Minimum trust to keep, 0..100.")
@click.option("--speedup", type=float, default=None, help="Replay speed factor; default is no pacing.")
@click.option("--output", type=str, default=None)
@click.option("--config", "config_path", type=str, default=None)
def correlate(model, model_format, silent_labels, heuristics, input_path, stream_format,
              threshold, speedup, output, config_path):
    """Correlate an unlabeled stream and export the result as CSV."""
    cfg = _load_config(config_path)
    labels = _parse_silent_labels(_pick(silent_labels, cfg, "silent_labels"))
    net = _load_net(_pick(model, cfg, "model"), _pick(model_format, cfg, "model_format"), labels)
    td = _build_td(net)
    table = _load_table(heuristics, cfg)
    events = _read_stream(_pick(input_path, cfg, "input"),
                          _pick(stream_format, cfg, "format", default="csv"))
    threshold = _check_threshold(_pick(threshold, cfg, "threshold", default=0.0, convert=float))
    speedup = _pick(speedup, cfg, "speedup", default=math.inf, convert=float)
    try:
        correlator = Correlator(td, table)
        replay(events, correlator.ingest, speedup=speedup)
    except (CorrelationError, ReplayError) as exc:
        _fail(str(exc))
    _emit(correlator.store.export_log(threshold), _pick(output, cfg, "output"))
    click.echo(f"noise events: {correlator.store.noise_count()}", err=True)


@main.command("replay")
@click.option("--input", "input_path", type=str, default=None)
@click.option("--format", "stream_format", type=click.Choice(["csv", "jsonl"]), default=None)
@click.option("--speedup", type=float, default=None)
@click.option("--output", type=str, default=None)
@click.option("--config", "config_path", type=str, default=None)
def replay_command(input_path, stream_format, speedup, output, config_path):
    """Replay a stream at speed, echoing events in delivery order."""
    cfg = _load_config(config_path)
    events = _read_stream(_pick(input_path, cfg, "input"),
                          _pick(stream_format, cfg, "format", default="csv"))
    speedup = _pick(speedup, cfg, "speedup", default=math.inf, convert=float)
    delivered = []
    try:
        report = replay(events, delivered.append, speedup=speedup)
    except ReplayError as exc:
        _fail(str(exc))
    _emit(events_to_csv(delivered), _pick(output, cfg, "output"))
    click.echo(f"delivered {report.delivered} events in {report.wall_seconds:.3f}s", err=True)


@main.command()
@click.option("--model", type=str, default=None)
@click.option("--model-format", type=click.Choice(["pnml", "net"]), default=None)
@click.option("--silent-labels", default=None)
@click.option("--heuristics", type=str, default=None)
@click.option("--truth", type=str, default=None, help="Labeled log; its case ids are the truth.")
@click.option("--input", "input_path", type=str, default=None,
              help="Alias for --truth, for config symmetry.")
@click.option("--format", "stream_format", type=click.Choice(["csv", "jsonl"]), default=None)
@click.option("--mode", type=click.Choice(["max_trust", "threshold"]), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--output", type=str, default=None)
@click.option("--config", "config_path", type=str, default=None)
def evaluate(model, model_format, silent_labels, heuristics, truth, input_path,
             stream_format, mode, threshold, output, config_path):
    """Strip a labeled log, re-correlate it, and score the result."""
    cfg = _load_config(config_path)
    labels = _parse_silent_labels(_pick(silent_labels, cfg, "silent_labels"))
    net = _load_net(_pick(model, cfg, "model"), _pick(model_format, cfg, "model_format"), labels)
    td = _build_td(net)
    table = _load_table(heuristics, cfg)
    truth_path = _pick(truth, cfg, "truth") or _pick(input_path, cfg, "input")
    labeled = _read_stream(truth_path, _pick(stream_format, cfg, "format", default="csv"))
    mode = _pick(mode, cfg, "mode", default="max_trust")
    threshold = _pick(threshold, cfg, "threshold", convert=float)
    if mode == "threshold":
        if threshold is None:
            _fail("threshold mode needs --threshold")
        _check_threshold(threshold)
    stream, _ = strip_case_ids(labeled)
    truth_labels = [ev.case_id for ev in labeled]
    try:
        correlator = Correlator(td, table)
        report = replay(stream, correlator.ingest)
        counts = score(correlator.store.instances(), truth_labels, mode=mode, threshold=threshold)
    except (CorrelationError, ReplayError, ValueError) as exc:
        _fail(str(exc))
    payload = build_report(counts, report.latencies)
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", _pick(output, cfg, "output"))


@main.command("extract-heuristics")
@click.option("--input", "input_path", type=str, default=None, help="Labeled log to measure.")
@click.option("--format", "stream_format", type=click.Choice(["csv", "jsonl"]), default=None)
@click.option("--model", type=str, default=None,
              help="Needed for completions-only logs to anchor durations.")
@click.option("--model-format", type=click.Choice(["pnml", "net"]), default=None)
@click.option("--silent-labels", default=None)
@click.option("--output", type=str, default=None)
@click.option("--config", "config_path", type=str, default=None)
def extract_heuristics_command(input_path, stream_format, model, model_format,
                               silent_labels, output, config_path):
    """Measure per-activity duration windows from a labeled log."""
    cfg = _load_config(config_path)
    events = _read_stream(_pick(input_path, cfg, "input"),
                          _pick(stream_format, cfg, "format", default="csv"))
    td = None
    model = _pick(model, cfg, "model")
    if model is not None:
        labels = _parse_silent_labels(_pick(silent_labels, cfg, "silent_labels"))
        td = _build_td(_load_net(model, _pick(model_format, cfg, "model_format"), labels))
    try:
        table = extract_heuristics(events, td=td)
    except HeuristicError as exc:
        _fail(str(exc))
    _emit(save_heuristics(table), _pick(output, cfg, "output"))


if __name__ == "__main__":
    main()
