"""Sensor CSV parsing, gap detection and noise-meter repair."""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from typing import TextIO

import numpy as np

from .core import MetricKind, parse_metric
from .errors import ContractViolation, FormatError, NoValidReadings

log = logging.getLogger(__name__)

CSV_HEADER = ("t_ms", "metric", "value", "valid")
NOMINAL_PERIOD_MS = 1000
DEFAULT_MAX_GAP_MS = 5000
DEFAULT_STUCK_RUN = 30


@dataclass(frozen=True)
class SensorSample:
    t_ms: int
    metric: MetricKind
    value: float
    valid: bool = True


@dataclass(frozen=True, eq=False)
class ChannelSeries:
    """One metric's time-ordered readings, stored column-wise.

    ``imputed`` marks samples whose value was synthesized by
    :func:`repair_noise_channel`; those samples are also ``valid``.
    """

    metric: MetricKind
    t_ms: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    imputed: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        t = np.asarray(self.t_ms, dtype=np.int64)
        object.__setattr__(self, "t_ms", t)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "valid", np.asarray(self.valid, dtype=bool))
        imp = np.zeros(t.shape, bool) if self.imputed is None else np.asarray(self.imputed, dtype=bool)
        object.__setattr__(self, "imputed", imp)
        if not (t.shape == self.values.shape == self.valid.shape == imp.shape):
            raise ContractViolation("channel columns differ in length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ContractViolation(f"{self.metric.value}: timestamps must be strictly increasing")

    @classmethod
    def from_samples(cls, metric: MetricKind, samples: Iterable[SensorSample]) -> ChannelSeries:
        rows = sorted(samples, key=lambda s: s.t_ms)
        return cls(
            metric,
            np.array([s.t_ms for s in rows], dtype=np.int64),
            np.array([s.value for s in rows], dtype=np.float64),
            np.array([s.valid for s in rows], dtype=bool),
        )

    def __len__(self) -> int:
        return int(self.t_ms.size)

    @property
    def samples(self) -> list[SensorSample]:
        return [
            SensorSample(int(t), self.metric, float(v), bool(ok))
            for t, v, ok in zip(self.t_ms, self.values, self.valid)
        ]

    @property
    def end_ms(self) -> int:
        """Exclusive end of the recording, one nominal period after the last sample."""
        return int(self.t_ms[-1]) + NOMINAL_PERIOD_MS if len(self) else 0

    def same_as(self, other: ChannelSeries) -> bool:
        return (
            self.metric == other.metric
            and self.t_ms.tobytes() == other.t_ms.tobytes()
            and self.values.tobytes() == other.values.tobytes()
            and self.valid.tobytes() == other.valid.tobytes()
            and self.imputed.tobytes() == other.imputed.tobytes()
        )


@dataclass(frozen=True)
class ParseError:
    line: int
    message: str


@dataclass(frozen=True)
class GapRecord:
    start: int
    end: int
    metrics: frozenset[MetricKind]

    def __post_init__(self):
        if self.end <= self.start:
            raise ContractViolation("gap end must follow start")


@dataclass(frozen=True)
class ImputationStats:
    mean: float
    sd: float
    min: float
    max: float
    n_valid: int = 0
    n_imputed: int = 0


# Campaign-level noise-meter statistics over all good readings; used when a
# shift has no valid readings of its own.
CAMPAIGN_NOISE_STATS = ImputationStats(mean=60.75, sd=6.00, min=50.78, max=81.89)


def parse_sensor_csv(stream: TextIO | str) -> tuple[list[ChannelSeries], list[ParseError]]:
    """Parse ``t_ms,metric,value,valid`` rows into per-metric series.

    Bad rows are collected as :class:`ParseError` and skipped.  A missing or
    wrong header raises :class:`FormatError`.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise FormatError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")

    errors: list[ParseError] = []
    rows: dict[MetricKind, dict[int, SensorSample]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            errors.append(ParseError(lineno, f"expected 4 fields, got {len(row)}"))
            continue
        try:
            t_ms = int(row[0])
            if t_ms < 0:
                raise ValueError("negative timestamp")
            metric = parse_metric(row[1])
            value = float(row[2])
            if row[3].strip() not in ("0", "1"):
                raise ValueError(f"valid flag must be 0 or 1, got {row[3]!r}")
            valid = row[3].strip() == "1"
        except ValueError as exc:
            errors.append(ParseError(lineno, str(exc)))
            continue
        per_metric = rows.setdefault(metric, {})
        if t_ms in per_metric:
            errors.append(ParseError(lineno, f"duplicate timestamp {t_ms} for {metric.value}"))
            continue
        if not np.isfinite(value) and valid:
            errors.append(ParseError(lineno, "non-finite value flagged valid"))
            continue
        per_metric[t_ms] = SensorSample(t_ms, metric, value, valid)

    series = [ChannelSeries.from_samples(m, rows[m].values()) for m in MetricKind if m in rows]
    return series, errors


def write_sensor_csv(series: Iterable[ChannelSeries], stream: TextIO) -> None:
    """Write series in the sensor CSV format, time-major then MetricKind order."""
    order = {m: i for i, m in enumerate(MetricKind)}
    rows = []
    for s in series:
        for t, v, ok in zip(s.t_ms.tolist(), s.values.tolist(), s.valid.tolist()):
            rows.append((t, order[s.metric], s.metric.value, v, ok))
    rows.sort(key=lambda r: (r[0], r[1]))
    stream.write(",".join(CSV_HEADER) + "\n")
    for t, _, name, v, ok in rows:
        stream.write(f"{t},{name},{v!r},{int(ok)}\n")


def detect_gaps(series: ChannelSeries, max_gap_ms: int = DEFAULT_MAX_GAP_MS) -> list[GapRecord]:
    if len(series) < 2:
        return []
    t = series.t_ms
    hits = np.flatnonzero(np.diff(t) > max_gap_ms)
    metrics = frozenset({series.metric})
    return [GapRecord(int(t[i]), int(t[i + 1]), metrics) for i in hits]


def flag_stuck_values(series: ChannelSeries, min_run: int = DEFAULT_STUCK_RUN) -> ChannelSeries:
    """Invalidate runs of at least ``min_run`` identical consecutive readings."""
    v = series.values
    if len(series) < min_run:
        return series
    valid = series.valid.copy()
    run_start = 0
    for i in range(1, len(v) + 1):
        if i == len(v) or v[i] != v[run_start]:
            if i - run_start >= min_run:
                valid[run_start:i] = False
            run_start = i
    if np.array_equal(valid, series.valid):
        return series
    return replace(series, valid=valid)


def _duration_weights(t_ms: np.ndarray) -> np.ndarray:
    # Each reading stands for the time until the next one, capped at the
    # nominal period so recording gaps do not inflate a neighbour.
    gaps = np.diff(t_ms, append=t_ms[-1] + NOMINAL_PERIOD_MS).astype(float)
    return np.minimum(gaps, NOMINAL_PERIOD_MS)


def valid_stats(series: ChannelSeries) -> ImputationStats:
    """Duration-weighted mean/SD and extrema of the valid readings."""
    ok = series.valid & ~series.imputed
    if not ok.any():
        raise NoValidReadings(f"{series.metric.value}: no valid readings")
    w = _duration_weights(series.t_ms)[ok]
    x = series.values[ok]
    mean = float(np.average(x, weights=w))
    sd = float(np.sqrt(np.average((x - mean) ** 2, weights=w)))
    return ImputationStats(mean, sd, float(x.min()), float(x.max()), n_valid=int(ok.sum()))


def repair_noise_channel(
    series: ChannelSeries,
    seed: int,
    stats: ImputationStats | None = None,
) -> tuple[ChannelSeries, ImputationStats]:
    """Replace invalid noise readings with clipped Gaussian draws.

    Draws come from Normal(mean, sd) of the valid readings and are clipped to
    their [min, max].  Passing ``stats`` overrides the per-shift statistics
    (e.g. campaign-wide values for a shift with no good readings).
    """
    if series.metric is not MetricKind.NOISE_LEVEL:
        raise ContractViolation(f"expected noise_level series, got {series.metric.value}")
    if stats is None:
        stats = valid_stats(series)
    bad = ~series.valid
    n_bad = int(bad.sum())
    n_valid = len(series) - n_bad
    stats = replace(stats, n_valid=n_valid, n_imputed=n_bad)
    if n_bad == 0:
        return series, stats
    rng = np.random.default_rng(seed)
    draws = np.clip(rng.normal(stats.mean, stats.sd, size=n_bad), stats.min, stats.max)
    values = series.values.copy()
    values[bad] = draws
    log.debug("imputed %d of %d noise readings", n_bad, len(series))
    repaired = ChannelSeries(series.metric, series.t_ms, values, np.ones(len(series), bool), bad | series.imputed)
    return repaired, stats


def merge_gaps(gaps: Sequence[GapRecord]) -> list[GapRecord]:
    """Union overlapping gap records, combining their metric sets."""
    out: list[GapRecord] = []
    for g in sorted(gaps, key=lambda g: (g.start, g.end)):
        if out and g.start <= out[-1].end:
            last = out[-1]
            out[-1] = GapRecord(last.start, max(last.end, g.end), last.metrics | g.metrics)
        else:
            out.append(g)
    return out
