"""Shift and campaign statistics, state frequencies, episodes and per-minute event series."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, TextIO

import numpy as np
from scipy.stats import spearmanr

from .core import WorkloadState, minute_bin
from .engine import OverallEstimate
from .errors import EmptyAlignment, EmptyInput, EmptyShift
from .events import EVENT_TYPES, Event
from .features import COMPONENT_STEP_MS
from .subjective import InSituProbe, align_probe_with_estimates

log = logging.getLogger(__name__)

S = WorkloadState
USABLE_STATES = (S.UNDERLOAD, S.NORMAL_LOAD, S.OVERLOAD)
MINUTE_SERIES = (
    "tactics_plan",
    "tactics_commander",
    "blockages",
    "tasked_hardware_ugv",
    "tasked_hardware_uav",
    "tasked_virtual_ugv",
    "tasked_virtual_uav",
    "active_hardware",
)


@dataclass(frozen=True)
class Descriptives:
    mean: float
    sd: float
    min: float
    max: float
    n: int


def shift_descriptives(estimates: Iterable[OverallEstimate]) -> Descriptives:
    vals = np.array([e.value for e in estimates if e.usable], dtype=float)
    if vals.size == 0:
        raise EmptyShift("no usable estimates")
    return Descriptives(float(vals.mean()), float(vals.std()), float(vals.min()), float(vals.max()), int(vals.size))


def weighted_campaign_stats(shifts: Sequence[tuple[float, float, int]]) -> tuple[float, float]:
    """Estimate-count-weighted mean and pooled SD across shifts.

    The SD pools second moments: ``sqrt(sum n(s^2 + m^2) / N - m_w^2)``.
    """
    if not shifts:
        raise EmptyInput("no shifts")
    m = np.array([s[0] for s in shifts], dtype=float)
    sd = np.array([s[1] for s in shifts], dtype=float)
    n = np.array([s[2] for s in shifts], dtype=float)
    if np.any(n < 1):
        raise EmptyInput("every shift needs at least one estimate")
    total = n.sum()
    mw = float((n * m).sum() / total)
    second = float((n * (sd**2 + m**2)).sum() / total)
    return mw, math.sqrt(max(second - mw * mw, 0.0))


@dataclass(frozen=True)
class StateFrequencies:
    counts: Mapping[WorkloadState, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def usable(self) -> int:
        return self.total - self.counts.get(S.NO_DATA, 0)

    def percent(self, state: WorkloadState) -> float | None:
        """Share of usable estimates, in percent; ``None`` when nothing is usable."""
        if state is S.NO_DATA or self.usable == 0:
            return None
        return 100.0 * self.counts.get(state, 0) / self.usable

    def to_dict(self) -> dict[str, Any]:
        return {
            "counts": {s.value: self.counts.get(s, 0) for s in WorkloadState},
            "total": self.total,
            "usable": self.usable,
            "percent_of_usable": {s.value: self.percent(s) for s in USABLE_STATES},
        }


def state_frequencies(estimates: Iterable[OverallEstimate | WorkloadState]) -> StateFrequencies:
    tally = Counter(e if isinstance(e, WorkloadState) else e.state for e in estimates)
    return StateFrequencies({s: tally.get(s, 0) for s in WorkloadState})


@dataclass(frozen=True)
class Episode:
    state: WorkloadState
    start: int
    count: int
    step_ms: int = COMPONENT_STEP_MS

    @property
    def duration_ms(self) -> int:
        return self.count * self.step_ms

    def describe(self) -> str:
        mins, secs = divmod(self.duration_ms // 1000, 60)
        return f"{mins} min {secs} s"

    def to_dict(self) -> dict[str, Any]:
        return {"state": self.state.value, "start_ms": self.start, "count": self.count, "duration_ms": self.duration_ms}


def sustained_episodes(
    estimates: Sequence[OverallEstimate | tuple[int, WorkloadState]],
    target: WorkloadState,
    step_ms: int = COMPONENT_STEP_MS,
) -> tuple[list[Episode], Episode | None]:
    """Maximal runs of ``target``; NoData or a missing tick ends a run.

    Returns all runs and the longest (earliest wins ties).
    """
    episodes: list[Episode] = []
    start = prev_t = None
    count = 0
    for e in estimates:
        t, state = (e.t, e.state) if isinstance(e, OverallEstimate) else e
        contiguous = prev_t is not None and t - prev_t == step_ms
        if state is target and count and contiguous:
            count += 1
        else:
            if count:
                episodes.append(Episode(target, start, count, step_ms))
            count, start = (1, t) if state is target else (0, None)
        prev_t = t
    if count:
        episodes.append(Episode(target, start, count, step_ms))
    longest = max(episodes, key=lambda ep: ep.count, default=None)
    return episodes, longest


def per_minute_series(events: Iterable[Event]) -> tuple[dict[str, np.ndarray], list[str]]:
    """Dense per-minute counts from a simulator event log.

    Returns ``(series, warnings)``.  Series run from minute 0 to the minute of
    the last event and are empty for an empty log.
    """
    warnings: list[str] = []
    classes: dict[Any, str] = {}
    tallies: dict[str, Counter] = {name: Counter() for name in MINUTE_SERIES}
    active: dict[int, set] = {}
    last_minute = -1
    for ev in events:
        typ = ev.get("type")
        if typ not in EVENT_TYPES:
            msg = f"skipping unknown event type {typ!r} at t_ms={ev.get('t_ms')}"
            log.warning(msg)
            warnings.append(msg)
            continue
        minute = minute_bin(int(ev["t_ms"]))
        last_minute = max(last_minute, minute)
        if typ == "fleet":
            for v in ev["vehicles"]:
                classes[v["id"]] = f"{v['instantiation']}_{v['kind'].lower()}"
        elif typ == "tactic_issued":
            origin = "tactics_plan" if ev.get("origin") == "plan" else "tactics_commander"
            tallies[origin][minute] += 1
            for cls in ev.get("classes", ()):
                tallies[f"tasked_{cls}"][minute] += 1
        elif typ == "swap":
            cls = classes.get(ev["new"])
            if cls:
                tallies[f"tasked_{cls}"][minute] += 1
        elif typ == "blocked":
            tallies["blockages"][minute] += 1
        elif typ == "telemetry":
            ids = active.setdefault(minute, set())
            ids.update(v for v in ev["vehicles"] if classes.get(v, "").startswith("hardware"))
    for minute, ids in active.items():
        tallies["active_hardware"][minute] = len(ids)
    n = last_minute + 1
    series = {name: np.array([tallies[name][m] for m in range(n)], dtype=np.int64) for name in MINUTE_SERIES}
    return series, warnings


def write_minute_series_csv(series: Mapping[str, np.ndarray], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["minute", "series", "value"])
    for name in MINUTE_SERIES:
        if name not in series:
            continue
        for minute, value in enumerate(series[name].tolist()):
            w.writerow([minute, name, value])


# ------------------------------------------------------------------ report


@dataclass
class ProbeRow:
    probe: InSituProbe
    mean: float
    sd: float
    count: int


@dataclass
class ShiftReport:
    shift_id: str
    frequencies: StateFrequencies
    descriptives: Descriptives | None
    episodes: dict[WorkloadState, list[Episode]]
    per_minute: dict[str, np.ndarray] | None = None
    probes: list[ProbeRow] | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.frequencies.total

    @property
    def usable(self) -> int:
        return self.frequencies.usable

    @property
    def no_data(self) -> int:
        return self.frequencies.counts.get(S.NO_DATA, 0)

    def longest(self, state: WorkloadState) -> Episode | None:
        return max(self.episodes.get(state, []), key=lambda ep: ep.count, default=None)

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "shift_id": self.shift_id,
            "estimate_count": self.total,
            "usable_count": self.usable,
            "no_data_count": self.no_data,
            "descriptives": None
            if self.descriptives is None
            else {k: getattr(self.descriptives, k) for k in ("mean", "sd", "min", "max", "n")},
            "state_frequencies": self.frequencies.to_dict(),
            "episodes": {
                s.value: {
                    "runs": [ep.to_dict() for ep in self.episodes.get(s, [])],
                    "longest": None if self.longest(s) is None else self.longest(s).to_dict(),
                }
                for s in USABLE_STATES
            },
        }
        if self.per_minute is not None:
            doc["per_minute"] = {k: v.tolist() for k, v in self.per_minute.items()}
        if self.probes is not None:
            doc["probes"] = [
                {
                    "t_ms": r.probe.t_ms,
                    "dimension": r.probe.dimension,
                    "rating": r.probe.rating,
                    "normalized": r.probe.normalized,
                    "estimate_mean": r.mean,
                    "estimate_sd": r.sd,
                    "estimate_count": r.count,
                }
                for r in self.probes
            ]
        if self.warnings:
            doc["warnings"] = list(self.warnings)
        return doc


def build_shift_report(
    shift_id: str,
    estimates: Sequence[OverallEstimate],
    probes: Sequence[InSituProbe] | None = None,
    events: Iterable[Event] | None = None,
) -> ShiftReport:
    estimates = sorted(estimates, key=lambda e: e.t)
    freqs = state_frequencies(estimates)
    try:
        desc = shift_descriptives(estimates)
    except EmptyShift:
        desc = None
    episodes = {s: sustained_episodes(estimates, s)[0] for s in USABLE_STATES}
    report = ShiftReport(shift_id, freqs, desc, episodes)
    if events is not None:
        report.per_minute, report.warnings = per_minute_series(events)
    if probes is not None:
        rows = []
        for p in probes:
            try:
                a = align_probe_with_estimates(p.t_ms, estimates)
            except EmptyAlignment:
                continue
            rows.append(ProbeRow(p, a.mean, a.sd, a.count))
        report.probes = rows
    return report


def write_descriptives_csv(reports: Iterable[ShiftReport], stream: TextIO) -> None:
    """Per-shift mean (SD) and min-max table."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["shift", "n", "mean", "sd", "min", "max", "mean_sd", "min_max"])
    for r in reports:
        d = r.descriptives
        if d is None:
            w.writerow([r.shift_id, 0, "", "", "", "", "", ""])
        else:
            w.writerow(
                [r.shift_id, d.n, d.mean, d.sd, d.min, d.max, f"{d.mean:.2f} ({d.sd:.2f})", f"{d.min:.2f}-{d.max:.2f}"]
            )


def write_states_csv(reports: Iterable[ShiftReport], stream: TextIO) -> None:
    """Per-shift state classification counts."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["shift", "underload", "normal_load", "overload", "no_data", "total", "usable", "overload_pct"])
    for r in reports:
        c = r.frequencies.counts
        pct = r.frequencies.percent(S.OVERLOAD)
        w.writerow(
            [
                r.shift_id,
                c.get(S.UNDERLOAD, 0),
                c.get(S.NORMAL_LOAD, 0),
                c.get(S.OVERLOAD, 0),
                c.get(S.NO_DATA, 0),
                r.total,
                r.usable,
                "" if pct is None else f"{pct:.2f}",
            ]
        )


def write_probes_csv(report: ShiftReport, stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["t_ms", "dimension", "rating", "normalized", "estimate_mean", "estimate_sd", "estimate_count"])
    for r in report.probes or ():
        w.writerow([r.probe.t_ms, r.probe.dimension, r.probe.rating, r.probe.normalized, r.mean, r.sd, r.count])


# ------------------------------------------------------------ rank agreement


def minute_means(t_ms: np.ndarray | Sequence[int], values: np.ndarray | Sequence[float]) -> dict[int, float]:
    """Mean of the finite ``values`` in each minute bin that has any."""
    t = np.asarray(t_ms, dtype=np.int64)
    v = np.asarray(values, dtype=np.float64)
    ok = np.isfinite(v)
    if not ok.any():
        return {}
    bins = t[ok] // 60_000
    sums = np.bincount(bins, v[ok])
    counts = np.bincount(bins)
    return {int(m): float(sums[m] / counts[m]) for m in np.flatnonzero(counts)}


def estimate_minute_means(estimates: Iterable[OverallEstimate]) -> dict[int, float]:
    """Per-minute mean overall workload over usable estimates.

    An estimate is binned by the last millisecond its window covers, so a
    window ending exactly on a minute boundary counts toward the minute before.
    """
    est = [e for e in estimates if e.usable]
    return minute_means([e.t - 1 for e in est], [e.value for e in est])


def demand_rank_correlation(
    demand_t_ms: np.ndarray | Sequence[int],
    demand: np.ndarray | Sequence[float],
    estimates: Iterable[OverallEstimate],
) -> tuple[float, int]:
    """Spearman rho between minute-averaged demand and minute-averaged overall workload.

    Returns ``(rho, minutes)``; rho is NaN with fewer than three shared
    minutes or when either side is constant.
    """
    dm = minute_means(demand_t_ms, demand)
    em = estimate_minute_means(estimates)
    shared = sorted(set(dm) & set(em))
    if len(shared) < 3:
        return math.nan, len(shared)
    a = np.array([dm[m] for m in shared])
    b = np.array([em[m] for m in shared])
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return math.nan, len(shared)
    return float(spearmanr(a, b).statistic), len(shared)
