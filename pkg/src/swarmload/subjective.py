"""In-situ probe ratings, subjective component weightings and probe/estimate alignment."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .core import ComponentKind, minute_bin
from .errors import ContractViolation, EmptyAlignment, FormatError

PROBE_HEADER = ("t_ms", "dimension", "rating")
PROBE_DIMENSIONS = tuple(k.value for k in ComponentKind) + ("stress", "fatigue", "overall")

# Normalized values for ratings 1..7, as reported alongside the raw ratings.
# The linear map 16.5 * r - 15.5 agrees everywhere except r = 2 (17.5).
LIKERT_TABLE: Mapping[int, float] = {1: 1.0, 2: 18.0, 3: 34.0, 4: 50.5, 5: 67.0, 6: 83.5, 7: 100.0}

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class InSituProbe:
    t_ms: int
    dimension: str
    rating: int

    def __post_init__(self):
        if self.dimension not in PROBE_DIMENSIONS:
            raise ContractViolation(f"unknown probe dimension {self.dimension!r}")
        if not 1 <= self.rating <= 7:
            raise ContractViolation(f"rating {self.rating} outside 1..7")

    @property
    def normalized(self) -> float:
        return normalize_likert(self.rating)


@dataclass(frozen=True)
class WeightingScheme:
    weights: Mapping[ComponentKind, float]

    def __post_init__(self):
        if set(self.weights) != set(ComponentKind):
            raise ContractViolation("weighting scheme must cover all five components")
        if any(w < 0 for w in self.weights.values()):
            raise ContractViolation("component weights must be non-negative")
        total = sum(self.weights.values())
        if abs(total - 100.0) > _WEIGHT_TOL:
            raise ContractViolation(f"component weights sum to {total}, not 100")

    @classmethod
    def of(cls, **percent: float) -> WeightingScheme:
        return cls({ComponentKind(k): float(v) for k, v in percent.items()})


def normalize_likert(rating: int) -> float:
    """Map a 1-7 rating onto the 1-100 scale."""
    if isinstance(rating, bool) or int(rating) != rating or rating not in LIKERT_TABLE:
        raise ContractViolation(f"rating {rating!r} outside 1..7")
    return LIKERT_TABLE[int(rating)]


def weighted_subjective_overall(
    component_means: Mapping[ComponentKind, float], scheme: WeightingScheme
) -> float:
    if set(component_means) != set(ComponentKind):
        raise ContractViolation("need a mean normalized response for every component")
    return float(sum(scheme.weights[k] / 100.0 * component_means[k] for k in ComponentKind))


def component_means(probes: Sequence[InSituProbe]) -> dict[ComponentKind, float]:
    """Average normalized rating per workload component (components with no probes are absent)."""
    by_kind: dict[ComponentKind, list[float]] = {}
    for p in probes:
        if p.dimension in ComponentKind._value2member_map_:
            by_kind.setdefault(ComponentKind(p.dimension), []).append(p.normalized)
    return {k: float(np.mean(v)) for k, v in by_kind.items()}


@dataclass(frozen=True)
class Alignment:
    mean: float
    sd: float
    count: int


def align_probe_with_estimates(probe_t_ms: int, estimates: Sequence) -> Alignment:
    """Mean/SD (population) of usable overall estimates in the probe's minute.

    ``estimates`` are :class:`~swarmload.engine.OverallEstimate` objects or
    ``(t_ms, value)`` pairs; NoData entries (value ``None``) are skipped.
    """
    target = minute_bin(probe_t_ms)
    vals = []
    for e in estimates:
        t, v = (e.t, e.value) if hasattr(e, "value") else e
        if v is not None and not math.isnan(v) and minute_bin(t) == target:
            vals.append(v)
    if not vals:
        raise EmptyAlignment(f"no estimates in minute {target}")
    arr = np.asarray(vals, dtype=float)
    return Alignment(float(arr.mean()), float(arr.std()), int(arr.size))


def parse_probe_csv(stream: TextIO | str) -> list[InSituProbe]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != PROBE_HEADER:
        raise FormatError(f"expected header {','.join(PROBE_HEADER)!r}, got {header!r}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        try:
            t, dim, rating = row
            out.append(InSituProbe(int(t), dim.strip().lower(), int(rating)))
        except (ValueError, ContractViolation) as exc:
            raise FormatError(f"probe line {lineno}: {exc}") from None
    out.sort(key=lambda p: p.t_ms)
    return out
