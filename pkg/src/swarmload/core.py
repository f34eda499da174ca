"""Shared vocabulary: component/metric/state enums and shift-clock helpers."""

from __future__ import annotations

import enum
from collections.abc import Mapping

MS_PER_MINUTE = 60_000


class ComponentKind(str, enum.Enum):
    COGNITIVE = "cognitive"
    SPEECH = "speech"
    AUDITORY = "auditory"
    VISUAL = "visual"
    PHYSICAL = "physical"


class WorkloadState(str, enum.Enum):
    UNDERLOAD = "underload"
    NORMAL_LOAD = "normal_load"
    OVERLOAD = "overload"
    NO_DATA = "no_data"


class MetricKind(str, enum.Enum):
    """Sensed metrics, declared in the fixed concatenation order used by estimators."""

    HEART_RATE = "heart_rate"  # bpm
    HRV = "hrv"  # ms
    RESPIRATION_RATE = "respiration_rate"  # breaths/min
    POSTURE_MAGNITUDE = "posture_magnitude"  # degrees
    SPEECH_RATE = "speech_rate"  # syllables/s
    VOICE_INTENSITY = "voice_intensity"  # dB
    VOICE_ACTIVITY = "voice_activity"  # 0/1
    VOICE_PITCH = "voice_pitch"  # Hz
    NOISE_LEVEL = "noise_level"  # dB


C = ComponentKind
M = MetricKind

_METRIC_COMPONENTS: dict[MetricKind, frozenset[ComponentKind]] = {
    M.HEART_RATE: frozenset({C.COGNITIVE, C.PHYSICAL}),
    M.HRV: frozenset({C.COGNITIVE}),
    M.RESPIRATION_RATE: frozenset({C.PHYSICAL}),
    M.POSTURE_MAGNITUDE: frozenset({C.PHYSICAL}),
    M.SPEECH_RATE: frozenset({C.SPEECH}),
    M.VOICE_INTENSITY: frozenset({C.SPEECH}),
    M.VOICE_ACTIVITY: frozenset({C.SPEECH}),
    M.VOICE_PITCH: frozenset({C.SPEECH}),
    M.NOISE_LEVEL: frozenset({C.COGNITIVE, C.AUDITORY}),
}

# Sensor groups as they are switched on/off per shift.
SENSOR_GROUPS: dict[str, tuple[MetricKind, ...]] = {
    "bioharness": (M.HEART_RATE, M.HRV, M.RESPIRATION_RATE, M.POSTURE_MAGNITUDE),
    "microphone": (M.SPEECH_RATE, M.VOICE_INTENSITY, M.VOICE_ACTIVITY, M.VOICE_PITCH),
    "noise_meter": (M.NOISE_LEVEL,),
}

FEATURE_NAMES = ("mean", "variance", "avg_gradient", "slope")


def metric_component_map() -> Mapping[MetricKind, frozenset[ComponentKind]]:
    """Which workload components each sensed metric feeds."""
    return dict(_METRIC_COMPONENTS)


def component_metrics(kind: ComponentKind) -> tuple[MetricKind, ...]:
    """Metrics feeding ``kind``, in MetricKind declaration order (empty for visual)."""
    return tuple(m for m in MetricKind if kind in _METRIC_COMPONENTS[m])


def minute_bin(t_ms: int) -> int:
    if t_ms < 0:
        raise ValueError(f"negative shift time {t_ms}")
    return int(t_ms) // MS_PER_MINUTE


def hhmm_to_ms(hhmm: str, shift_start: str) -> int:
    """Convert a wall-clock ``HHMM`` reading to milliseconds since ``shift_start``."""

    def _minutes(s: str) -> int:
        s = s.strip().replace(":", "")
        if len(s) != 4 or not s.isdigit():
            raise ValueError(f"expected HHMM, got {s!r}")
        hh, mm = int(s[:2]), int(s[2:])
        if hh > 23 or mm > 59:
            raise ValueError(f"invalid clock time {s!r}")
        return hh * 60 + mm

    delta = _minutes(hhmm) - _minutes(shift_start)
    if delta < 0:
        raise ValueError(f"{hhmm} is before shift start {shift_start}")
    return delta * MS_PER_MINUTE


def parse_metric(name: str) -> MetricKind:
    try:
        return MetricKind(name.strip())
    except ValueError:
        raise ValueError(f"unknown metric {name!r}") from None


def parse_presence(spec: str) -> frozenset[MetricKind]:
    """Parse a comma list of sensor groups and/or metric names into present metrics."""
    present: set[MetricKind] = set()
    for token in filter(None, (t.strip() for t in spec.split(","))):
        if token in SENSOR_GROUPS:
            present.update(SENSOR_GROUPS[token])
        else:
            present.add(parse_metric(token))
    return frozenset(present)
