"""Command-line entry points: estimate, simulate, analyze, synth and e2e.

Exit codes: 0 success, 2 bad input or validation failure, 3 bad model or
physio profile, 4 internal error.  Log verbosity comes from ``SWARMLOAD_LOG``
(a logging level name, default WARNING).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from .analytics import (
    build_shift_report,
    demand_rank_correlation,
    write_descriptives_csv,
    write_minute_series_csv,
    write_probes_csv,
    write_states_csv,
)
from .core import parse_presence
from .engine import ShiftConfig, Thresholds, read_estimates_jsonl, run_pipeline, write_estimates_csv, write_estimates_jsonl
from .errors import ContractViolation, FaultSpecError, FormatError, ProfileInvalid, ScenarioError, SwarmloadError
from .estimators import DATA_DIR as MODEL_DATA_DIR
from .estimators import load_profile
from .events import read_events_jsonl
from .ingest import parse_sensor_csv, write_sensor_csv
from .physio import default_physio_profile, inject_faults, load_faults, load_physio_profile, synthesize
from .sim.scenario import load_scenario
from .sim.simulator import DemandTrace, run_scenario
from .subjective import parse_probe_csv

log = logging.getLogger("swarmload")

EXIT_OK, EXIT_INPUT, EXIT_PROFILE, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _model_profile(arg: str | None):
    if arg is None:
        return load_profile(MODEL_DATA_DIR / "profiles" / "default.json")
    path = Path(arg)
    if not path.exists() and (MODEL_DATA_DIR / "profiles" / f"{arg}.json").exists():
        path = MODEL_DATA_DIR / "profiles" / f"{arg}.json"
    return load_profile(path)


def _physio_profile(arg: str | None, zero_noise: bool):
    prof = default_physio_profile() if arg is None else load_physio_profile(arg)
    return prof.zero_noise() if zero_noise else prof


def _thresholds(arg: str | None) -> Thresholds:
    if arg is None:
        return Thresholds()
    try:
        lo, hi = (float(x) for x in arg.split(","))
        return Thresholds(lo, hi)
    except (ValueError, ContractViolation) as exc:
        raise InputError(f"--thresholds expects 'UNDERLOAD_MAX,OVERLOAD_MIN': {exc}") from None


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


class Outputs:
    """Collects output files and writes them only if none would clobber an existing file."""

    def __init__(self, directory: str, force: bool):
        self.dir = Path(directory)
        self.force = force
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def commit(self) -> list[Path]:
        paths = [self.dir / n for n in self.files]
        if not self.force:
            taken = [str(p) for p in paths if p.exists()]
            if taken:
                raise InputError(f"refusing to overwrite {', '.join(taken)} (pass --force)")
        self.dir.mkdir(parents=True, exist_ok=True)
        for p, text in zip(paths, self.files.values()):
            p.write_text(text)
        return paths


def _render(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


# ----------------------------------------------------------------- commands


def _estimate(sensor_text: str, args) -> list:
    series, errors = parse_sensor_csv(sensor_text)
    for e in errors:
        log.warning("line %d: %s", e.line, e.message)
    if not series:
        raise InputError("sensor CSV contains no readings")
    present = None if args.presence is None else parse_presence(args.presence)
    config = ShiftConfig(present=present, seed=args.seed if args.seed is not None else 0, thresholds=_thresholds(args.thresholds))
    return run_pipeline(series, _model_profile(args.profile), config)


def _estimate_outputs(out: Outputs, estimates: list) -> None:
    out.add("estimates.jsonl", _render(write_estimates_jsonl, estimates))
    out.add("estimates.csv", _render(write_estimates_csv, estimates))


def _estimate_summary(estimates: list) -> str:
    usable = sum(e.usable for e in estimates)
    return f"estimates={len(estimates)} usable={usable} no_data={len(estimates) - usable}"


def cmd_estimate(args) -> int:
    estimates = _estimate(_read_text(args.input), args)
    out = Outputs(args.output_dir, args.force)
    _estimate_outputs(out, estimates)
    out.commit()
    print(_estimate_summary(estimates))
    return EXIT_OK


def _simulate(args):
    script = load_scenario(args.input)
    if args.seed is not None:
        script = script.with_seed(args.seed)
    return run_scenario(script)


def cmd_simulate(args) -> int:
    result = _simulate(args)
    out = Outputs(args.output_dir, args.force)
    out.add("events.jsonl", result.events_jsonl())
    out.add("demand.csv", result.demand.to_csv())
    out.commit()
    print(json.dumps(result.summary(), sort_keys=True))
    return EXIT_OK


def _analyze(estimates, probes, events, shift_id: str, out: Outputs):
    report = build_shift_report(shift_id, estimates, probes, events)
    out.add("report.json", json.dumps(report.to_dict(), indent=2) + "\n")
    out.add("descriptives.csv", _render(write_descriptives_csv, [report]))
    out.add("states.csv", _render(write_states_csv, [report]))
    if report.probes is not None:
        out.add("probes.csv", _render(write_probes_csv, report))
    if report.per_minute is not None:
        out.add("minute_series.csv", _render(write_minute_series_csv, report.per_minute))
    return report


def _report_summary(report) -> str:
    return f"estimates={report.total} usable={report.usable} no_data={report.no_data}"


def cmd_analyze(args) -> int:
    try:
        estimates = read_estimates_jsonl(io.StringIO(_read_text(args.input)))
        probes = None if args.probes is None else parse_probe_csv(_read_text(args.probes))
        events = None if args.events is None else read_events_jsonl(io.StringIO(_read_text(args.events)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"schema mismatch: {exc}") from None
    out = Outputs(args.output_dir, args.force)
    report = _analyze(estimates, probes, events, args.shift_id, out)
    out.commit()
    print(_report_summary(report))
    return EXIT_OK


def _synth(trace: DemandTrace, args) -> list:
    profile = _physio_profile(args.physio_profile, args.zero_noise)
    series = synthesize(trace.t_ms, trace.demand, profile, args.seed)
    if args.faults:
        series = inject_faults(series, load_faults(args.faults), args.seed)
    return series


def cmd_synth(args) -> int:
    try:
        trace = DemandTrace.read_csv(io.StringIO(_read_text(args.input)))
    except (IndexError, ValueError) as exc:
        raise InputError(f"bad demand CSV: {exc}") from None
    series = _synth(trace, args)
    out = Outputs(args.output_dir, args.force)
    out.add("sensors.csv", _render(write_sensor_csv, series))
    out.commit()
    print(f"samples={sum(len(s) for s in series)} channels={len(series)}")
    return EXIT_OK


def cmd_e2e(args) -> int:
    """Simulate, synthesize sensors, estimate workload and analyze in one pass."""
    result = _simulate(args)
    series = _synth(result.demand, args)
    sensor_text = _render(write_sensor_csv, series)
    estimates = _estimate(sensor_text, args)
    out = Outputs(args.output_dir, args.force)
    out.add("events.jsonl", result.events_jsonl())
    out.add("demand.csv", result.demand.to_csv())
    out.add("sensors.csv", sensor_text)
    _estimate_outputs(out, estimates)
    report = _analyze(estimates, None, result.events, args.shift_id, out)
    rho, minutes = demand_rank_correlation(result.demand.t_ms, result.demand.demand, estimates)
    out.add("rank.json", json.dumps({"spearman_rho": None if math.isnan(rho) else rho, "minutes": minutes}) + "\n")
    out.commit()
    print(json.dumps(result.summary(), sort_keys=True))
    print(_report_summary(report))
    print(f"spearman_rho={rho:.4f} minutes={minutes}")
    return EXIT_OK


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmload", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, seed_required=False):
        sp.add_argument("--input", required=True, help="input file (or bundled scenario name)")
        sp.add_argument("--output-dir", default=".", help="directory for outputs (default: current)")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        sp.add_argument("--seed", type=int, required=seed_required, default=None)

    def estimate_opts(sp):
        sp.add_argument("--profile", help="model profile JSON or bundled name (default, reference)")
        sp.add_argument("--presence", help="comma list of sensor groups or metrics that were recording")
        sp.add_argument("--thresholds", help="UNDERLOAD_MAX,OVERLOAD_MIN (default 25,60)")

    def synth_opts(sp):
        sp.add_argument("--physio-profile", help="physio profile JSON (default: bundled)")
        sp.add_argument("--zero-noise", action="store_true", help="drop all sensor noise and randomness in speech bouts")
        sp.add_argument("--faults", help="JSON list of sensor faults to inject")

    sp = sub.add_parser("estimate", help="estimate workload from a sensor CSV")
    common(sp)
    estimate_opts(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("simulate", help="run a mission scenario")
    common(sp, seed_required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="build a shift report from estimates")
    common(sp)
    sp.add_argument("--probes", help="in-situ probe CSV")
    sp.add_argument("--events", help="simulator event log JSONL")
    sp.add_argument("--shift-id", default="shift")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("synth", help="synthesize sensor streams from a demand CSV")
    common(sp, seed_required=True)
    synth_opts(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("e2e", help="simulate, synthesize, estimate and analyze")
    common(sp, seed_required=True)
    estimate_opts(sp)
    synth_opts(sp)
    sp.add_argument("--shift-id", default="shift")
    sp.set_defaults(func=cmd_e2e)
    return p


def _configure_logging() -> None:
    level = os.environ.get("SWARMLOAD_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProfileInvalid as exc:
        print(f"error: profile: {exc}", file=sys.stderr)
        return EXIT_PROFILE
    except (InputError, FormatError, ScenarioError, FaultSpecError, ContractViolation, SwarmloadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
