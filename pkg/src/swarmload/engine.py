"""Overall workload: component aggregation, state classification and the shift pipeline."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, TextIO

import numpy as np

from .core import ComponentKind, MetricKind, WorkloadState, component_metrics
from .errors import ContractViolation, FormatError, NoValidReadings
from .estimators import (
    ComponentEstimate,
    ModelProfile,
    Source,
    predict_display,
    static_component_value,
)
from .features import (
    COMPONENT_STEP_MS,
    EpochMatrix,
    EpochSpec,
    SPEECH_STEP_MS,
    epoch_matrix,
    resample_speech_estimates,
    window_ends,
)
from .ingest import (
    CAMPAIGN_NOISE_STATS,
    DEFAULT_MAX_GAP_MS,
    ChannelSeries,
    ImputationStats,
    detect_gaps,
    flag_stuck_values,
    repair_noise_channel,
)

log = logging.getLogger(__name__)

C = ComponentKind


@dataclass(frozen=True)
class Thresholds:
    underload_max: float = 25.0
    overload_min: float = 60.0

    def __post_init__(self):
        if not self.underload_max < self.overload_min:
            raise ContractViolation("underload threshold must sit below overload threshold")


DEFAULT_THRESHOLDS = Thresholds()


def classify(value: float, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> WorkloadState:
    """Underload at or below 25, overload at or above 60, normal in between."""
    if value is None or math.isnan(value):
        raise ContractViolation("cannot classify NaN workload")
    if value <= thresholds.underload_max:
        return WorkloadState.UNDERLOAD
    if value >= thresholds.overload_min:
        return WorkloadState.OVERLOAD
    return WorkloadState.NORMAL_LOAD


@dataclass(frozen=True)
class OverallEstimate:
    t: int
    value: float | None
    state: WorkloadState
    components: Mapping[ComponentKind, ComponentEstimate] = field(default_factory=dict)
    missing: frozenset[ComponentKind] = frozenset()

    @property
    def usable(self) -> bool:
        return self.state is not WorkloadState.NO_DATA

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_ms": self.t,
            "value": self.value,
            "state": self.state.value,
            "components": {k.value: self.components[k].to_dict() for k in ComponentKind if k in self.components},
            "missing": [k.value for k in ComponentKind if k in self.missing],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> OverallEstimate:
        t = int(doc["t_ms"])
        comps = {}
        for name, c in (doc.get("components") or {}).items():
            kind = ComponentKind(name)
            comps[kind] = ComponentEstimate(kind, t, float(c["display"]), float(c["raw"]), Source(c["source"]))
        value = doc.get("value")
        return cls(
            t,
            None if value is None else float(value),
            WorkloadState(doc["state"]),
            comps,
            frozenset(ComponentKind(m) for m in doc.get("missing", [])),
        )


def no_data_estimate(t: int, missing: Iterable[ComponentKind] = ()) -> OverallEstimate:
    return OverallEstimate(int(t), None, WorkloadState.NO_DATA, {}, frozenset(missing))


def aggregate_overall(
    present: Mapping[ComponentKind, ComponentEstimate] | Iterable[ComponentEstimate],
    missing: Iterable[ComponentKind],
    profile: ModelProfile,
    t: int | None = None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> OverallEstimate:
    """Scale the summed raw component values onto 0-100.

    Missing components contribute their profile midpoint:
    ``100 * (sum(raw present) + sum(midpoint missing)) / max_overall``.
    """
    if not isinstance(present, Mapping):
        present = {c.kind: c for c in present}
    missing = frozenset(missing)
    if set(present) & missing:
        raise ContractViolation(f"components both present and missing: {sorted(k.value for k in set(present) & missing)}")
    if set(present) | missing != set(ComponentKind):
        lacking = set(ComponentKind) - set(present) - missing
        raise ContractViolation(f"components unaccounted for: {sorted(k.value for k in lacking)}")
    raw = sum(present[k].raw_value for k in ComponentKind if k in present)
    fill = sum(profile[k].midpoint_raw for k in ComponentKind if k in missing)
    value = 100.0 * (raw + fill) / profile.max_overall
    if t is None:
        t = max((c.t for c in present.values()), default=0)
    comps = dict(present)
    for k in missing:
        comps[k] = static_component_value(k, profile, t)
    ordered = {k: comps[k] for k in ComponentKind}
    return OverallEstimate(int(t), value, classify(value, thresholds), ordered, missing)


# ----------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class ShiftConfig:
    """Per-shift run options.

    ``present`` lists metrics whose sensors were worn/recording; ``None``
    means "whatever appears in the data".  A component is sensed only when
    every metric feeding it is present; otherwise its midpoint stands in.
    """

    present: frozenset[MetricKind] | None = None
    duration_ms: int | None = None
    max_gap_ms: int = DEFAULT_MAX_GAP_MS
    seed: int = 0
    noise_fallback: ImputationStats | None = CAMPAIGN_NOISE_STATS
    stuck_run: int | None = None
    speech_resample: str = "mean"
    thresholds: Thresholds = DEFAULT_THRESHOLDS


def _prepare_channels(channels, config: ShiftConfig) -> dict[MetricKind, ChannelSeries]:
    if isinstance(channels, Mapping):
        by_metric = dict(channels)
    else:
        by_metric = {s.metric: s for s in channels}
    present = set(by_metric) if config.present is None else set(config.present)
    for m in sorted(present - set(by_metric), key=list(MetricKind).index):
        log.warning("%s declared present but has no samples; treating as absent", m.value)
    chans = {m: s for m, s in by_metric.items() if m in present and len(s) > 0}

    noise = chans.get(MetricKind.NOISE_LEVEL)
    if noise is not None:
        if config.stuck_run:
            noise = flag_stuck_values(noise, config.stuck_run)
        try:
            noise, stats = repair_noise_channel(noise, config.seed)
        except NoValidReadings:
            if config.noise_fallback is None:
                log.warning("noise meter has no valid readings; treating as absent")
                del chans[MetricKind.NOISE_LEVEL]
                noise = None
            else:
                noise, stats = repair_noise_channel(noise, config.seed, config.noise_fallback)
        if noise is not None:
            log.info("noise channel: %d valid, %d imputed", stats.n_valid, stats.n_imputed)
            chans[MetricKind.NOISE_LEVEL] = noise
    return chans


def run_pipeline(
    channels: Sequence[ChannelSeries] | Mapping[MetricKind, ChannelSeries],
    profile: ModelProfile,
    config: ShiftConfig = ShiftConfig(),
) -> list[OverallEstimate]:
    """Estimate overall workload every 5 s across a shift.

    Ticks are window ends 30 s, 35 s, ... up to the shift duration.  A tick is
    NoData when any sensed component lacks a usable epoch there.
    """
    chans = _prepare_channels(channels, config)
    duration = config.duration_ms
    if duration is None:
        duration = max((s.end_ms for s in chans.values()), default=0)
    ticks = window_ends(duration, COMPONENT_STEP_MS)
    if ticks.size == 0:
        return []

    sensed = [k for k in ComponentKind if k is not C.VISUAL and all(m in chans for m in component_metrics(k))]
    static = frozenset(k for k in ComponentKind if k not in sensed)
    gaps = {m: detect_gaps(s, config.max_gap_ms) for m, s in chans.items()}

    cache: dict[tuple[MetricKind, int], EpochMatrix] = {}

    def epochs(m: MetricKind, step: int) -> EpochMatrix:
        key = (m, step)
        if key not in cache:
            cache[key] = epoch_matrix(chans[m], EpochSpec(step_ms=step), gaps[m], duration)
        return cache[key]

    display: dict[ComponentKind, np.ndarray] = {}
    imputed: dict[ComponentKind, np.ndarray] = {}
    for kind in sensed:
        step = SPEECH_STEP_MS if kind is C.SPEECH else COMPONENT_STEP_MS
        mats = [epochs(m, step) for m in component_metrics(kind)]
        ok = np.logical_and.reduce([em.ok for em in mats])
        x = np.hstack([em.features for em in mats])
        vals = np.full(ok.shape, np.nan)
        if ok.any():
            vals[ok] = predict_display(kind, x[ok], profile)
        imp = np.logical_or.reduce([em.imputed for em in mats])
        if kind is C.SPEECH:
            _, vals = resample_speech_estimates(mats[0].ends, vals, ticks, COMPONENT_STEP_MS, config.speech_resample)
            imp = np.zeros(ticks.shape, bool)
        display[kind] = vals
        imputed[kind] = imp

    out: list[OverallEstimate] = []
    for i, t in enumerate(ticks.tolist()):
        if any(np.isnan(display[k][i]) for k in sensed):
            out.append(no_data_estimate(t, static))
            continue
        present = {}
        for k in sensed:
            d = float(display[k][i])
            src = Source.IMPUTED if imputed[k][i] else Source.SENSED
            present[k] = ComponentEstimate(k, t, d, d * profile[k].max_raw / 100.0, src)
        out.append(aggregate_overall(present, static, profile, t, config.thresholds))
    return out


# --------------------------------------------------------------------- I/O

CSV_COLUMNS = (
    ["t_ms", "value", "state"]
    + [f"{k.value}_{f}" for k in ComponentKind for f in ("display", "raw", "source")]
    + ["missing"]
)


def write_estimates_jsonl(estimates: Iterable[OverallEstimate], stream: TextIO) -> None:
    for e in sorted(estimates, key=lambda e: e.t):
        stream.write(json.dumps(e.to_dict()) + "\n")


def read_estimates_jsonl(stream: TextIO) -> list[OverallEstimate]:
    out = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            out.append(OverallEstimate.from_dict(json.loads(line)))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"estimates line {lineno}: {exc}") from None
    return out


def write_estimates_csv(estimates: Iterable[OverallEstimate], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for e in sorted(estimates, key=lambda e: e.t):
        row: list[Any] = [e.t, "" if e.value is None else repr(e.value), e.state.value]
        for k in ComponentKind:
            c = e.components.get(k)
            row += ["", "", ""] if c is None else [repr(c.display_value), repr(c.raw_value), c.source.value]
        row.append(";".join(k.value for k in ComponentKind if k in e.missing))
        w.writerow(row)
