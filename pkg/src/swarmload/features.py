"""Thirty-second epoch features over sensor channels."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ComponentKind, MetricKind
from .errors import ContractViolation, InsufficientSamples
from .ingest import NOMINAL_PERIOD_MS, ChannelSeries, GapRecord, SensorSample

WINDOW_MS = 30_000
COMPONENT_STEP_MS = 5_000
SPEECH_STEP_MS = 1_000
# Fraction of the nominal sample count a window may be missing before it is NoData.
MAX_MISSING_FRACTION = 0.2


@dataclass(frozen=True)
class FeatureVector:
    metric: MetricKind
    window_end: int
    mean: float
    variance: float
    avg_gradient: float
    slope: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mean, self.variance, self.avg_gradient, self.slope)


@dataclass(frozen=True)
class NoDataEpoch:
    metric: MetricKind
    window_end: int
    reason: str


@dataclass(frozen=True)
class EpochSpec:
    window_ms: int = WINDOW_MS
    step_ms: int = COMPONENT_STEP_MS

    def __post_init__(self):
        if self.window_ms != WINDOW_MS:
            raise ContractViolation(f"epoch window must be {WINDOW_MS} ms")
        if self.step_ms <= 0 or self.window_ms % self.step_ms:
            raise ContractViolation(f"step {self.step_ms} ms must divide the window")

    @classmethod
    def for_component(cls, kind: ComponentKind) -> EpochSpec:
        return cls(step_ms=SPEECH_STEP_MS if kind is ComponentKind.SPEECH else COMPONENT_STEP_MS)

    @property
    def min_samples(self) -> int:
        expected = self.window_ms // NOMINAL_PERIOD_MS
        return max(2, math.ceil(expected * (1.0 - MAX_MISSING_FRACTION) - 1e-9))


def extract_epoch_features(
    window: Sequence[SensorSample],
    metric: MetricKind | None = None,
    window_end: int | None = None,
) -> FeatureVector:
    """Mean, population variance, average per-second gradient and LS slope.

    Invalid samples are dropped before anything is computed.
    """
    rows = sorted((s for s in window if s.valid), key=lambda s: s.t_ms)
    if metric is None:
        if not window:
            raise InsufficientSamples("empty window")
        metric = window[0].metric
    if len(rows) < 2:
        raise InsufficientSamples(f"{metric.value}: {len(rows)} valid samples in window")
    t_s = np.array([s.t_ms for s in rows], dtype=np.float64) / 1000.0
    v = np.array([s.value for s in rows], dtype=np.float64)
    if np.any(np.diff(t_s) <= 0):
        raise ContractViolation("duplicate timestamps in window")
    mean, var, grad, slope = kernels.window_features(t_s, v, np.array([0]), np.array([len(v)]))[0]
    end = rows[-1].t_ms if window_end is None else window_end
    return FeatureVector(metric, int(end), float(mean), float(var), float(grad), float(slope))


@dataclass(frozen=True)
class EpochMatrix:
    """Column form of :func:`slide_epochs` output for one channel.

    ``features`` rows are NaN where ``ok`` is False.
    """

    metric: MetricKind
    ends: np.ndarray
    features: np.ndarray
    ok: np.ndarray
    imputed: np.ndarray
    reasons: tuple[str | None, ...]


def window_ends(duration_ms: int, step_ms: int, window_ms: int = WINDOW_MS) -> np.ndarray:
    if duration_ms < window_ms:
        return np.empty(0, dtype=np.int64)
    return np.arange(window_ms, duration_ms + 1, step_ms, dtype=np.int64)


def epoch_matrix(
    series: ChannelSeries,
    spec: EpochSpec,
    gaps: Sequence[GapRecord] = (),
    duration_ms: int | None = None,
) -> EpochMatrix:
    if duration_ms is None:
        duration_ms = series.end_ms
    ends = window_ends(duration_ms, spec.step_ms, spec.window_ms)
    ok_rows = series.valid
    t = series.t_ms[ok_rows]
    v = series.values[ok_rows]
    imp_cum = np.concatenate([[0], np.cumsum(series.imputed[ok_rows])])
    starts = np.searchsorted(t, ends - spec.window_ms, side="left")
    stops = np.searchsorted(t, ends, side="left")
    feats = kernels.window_features(t / 1000.0, v, starts, stops)
    counts = stops - starts
    ok = counts >= spec.min_samples
    reasons: list[str | None] = [None if k else "insufficient_samples" for k in ok]
    for g in gaps:
        hit = (ends >= g.start) & (ends - spec.window_ms <= g.end)
        for i in np.flatnonzero(hit):
            reasons[i] = "gap"
        ok &= ~hit
    feats[~ok] = np.nan
    imputed = (imp_cum[stops] - imp_cum[starts]) > 0
    return EpochMatrix(series.metric, ends, feats, ok, imputed & ok, tuple(reasons))


def slide_epochs(
    series: ChannelSeries,
    spec: EpochSpec,
    gaps: Sequence[GapRecord] = (),
    duration_ms: int | None = None,
) -> list[FeatureVector | NoDataEpoch]:
    """Features for windows ending at 30 s, 30 s + step, ... up to the series end.

    Each window covers ``[end - 30 s, end)``.  A window is NoData when it
    touches a gap record or holds fewer than 80% of its nominal samples.
    """
    em = epoch_matrix(series, spec, gaps, duration_ms)
    out: list[FeatureVector | NoDataEpoch] = []
    for i, end in enumerate(em.ends.tolist()):
        if em.ok[i]:
            m, var, g, s = em.features[i].tolist()
            out.append(FeatureVector(series.metric, end, m, var, g, s))
        else:
            out.append(NoDataEpoch(series.metric, end, em.reasons[i] or "no_data"))
    return out


def resample_speech_estimates(
    t_ms: Sequence[int] | np.ndarray,
    values: Sequence[float | None] | np.ndarray,
    bin_ends: Sequence[int] | np.ndarray | None = None,
    step_ms: int = COMPONENT_STEP_MS,
    how: str = "mean",
) -> tuple[np.ndarray, np.ndarray]:
    """Bring 1 s speech estimates onto the 5 s grid.

    Bin ending at ``e`` collects estimates with ``e - step < t <= e``; ``how``
    is ``"mean"`` (bin average) or ``"latest"`` (last estimate in the bin).
    NoData inputs are ``None``/NaN and are skipped; empty bins come out NaN.
    """
    if how not in ("mean", "latest"):
        raise ContractViolation(f"unknown resampling mode {how!r}")
    t = np.asarray(t_ms, dtype=np.int64)
    x = np.array([np.nan if v is None else v for v in values], dtype=np.float64)
    if bin_ends is None:
        if t.size == 0:
            return np.empty(0, np.int64), np.empty(0)
        first = -(-int(t[0]) // step_ms) * step_ms
        bin_ends = np.arange(first, int(t[-1]) + 1, step_ms, dtype=np.int64)
    ends = np.asarray(bin_ends, dtype=np.int64)
    lo = np.searchsorted(t, ends - step_ms, side="right")
    hi = np.searchsorted(t, ends, side="right")
    out = np.full(ends.shape, np.nan)
    for k in range(ends.size):
        chunk = x[lo[k] : hi[k]]
        chunk = chunk[~np.isnan(chunk)]
        if chunk.size:
            out[k] = chunk.mean() if how == "mean" else chunk[-1]
    return ends, out
