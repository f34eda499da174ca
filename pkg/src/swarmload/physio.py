"""Synthetic sensor streams driven by a task-demand trace.

Every channel is a monotone affine image of lagged demand plus Gaussian
noise.  This is deliberately not a physiological model: the point is to give
the estimation pipeline inputs with a known ordering so that rank agreement
between demand and estimated workload can be checked end to end.

Speech channels (rate, intensity, activity, pitch) are nonzero only inside
speaking bouts.  Bouts start at a rate that grows with demand; with
``stochastic_bouts`` off they are placed by a deterministic
integrate-and-fire rule instead of random draws, so a zero-noise profile
yields a speaking fraction that is itself a monotone function of demand.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .core import MetricKind, parse_metric
from .errors import ContractViolation, FaultSpecError, ProfileInvalid
from .ingest import ChannelSeries

M = MetricKind
DATA_DIR = Path(__file__).parent / "data" / "profiles"

SPEECH_METRICS = (M.SPEECH_RATE, M.VOICE_INTENSITY, M.VOICE_ACTIVITY, M.VOICE_PITCH)
CONFOUND_METRICS = (M.HEART_RATE, M.RESPIRATION_RATE)
_NON_NEGATIVE = frozenset(MetricKind) - {M.VOICE_ACTIVITY}


@dataclass(frozen=True)
class MetricResponse:
    """``baseline + gain * demand(t - lag_s) + N(0, noise_sd)``, with ``baseline`` in ``[low, high]``."""

    baseline: float
    gain: float
    noise_sd: float
    lag_s: float
    low: float
    high: float

    def to_dict(self) -> dict[str, float]:
        return {
            "baseline": self.baseline,
            "gain": self.gain,
            "noise_sd": self.noise_sd,
            "lag_s": self.lag_s,
            "plausible": [self.low, self.high],
        }


@dataclass(frozen=True)
class SpeechBouts:
    base_per_min: float = 0.0
    gain_per_min: float = 6.0
    mean_bout_s: float = 6.0
    stochastic_bouts: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "base_per_min": self.base_per_min,
            "gain_per_min": self.gain_per_min,
            "mean_bout_s": self.mean_bout_s,
            "stochastic_bouts": self.stochastic_bouts,
        }


@dataclass(frozen=True)
class PhysioProfile:
    responses: Mapping[MetricKind, MetricResponse]
    speech: SpeechBouts = SpeechBouts()
    ambient_floor_db: float = 45.0
    confound_bias: Mapping[MetricKind, float] = field(default_factory=dict)

    def __post_init__(self):
        missing = [m.value for m in MetricKind if m not in self.responses]
        if missing:
            raise ProfileInvalid(f"physio profile lacks metrics {missing}")
        for m, r in self.responses.items():
            if r.noise_sd < 0:
                raise ProfileInvalid(f"{m.value}: noise_sd must be >= 0")
            if r.lag_s < 0:
                raise ProfileInvalid(f"{m.value}: lag_s must be >= 0")
            if not r.low <= r.baseline <= r.high:
                raise ProfileInvalid(f"{m.value}: baseline {r.baseline} outside plausible range [{r.low}, {r.high}]")
        bad = [m.value for m in self.confound_bias if m not in CONFOUND_METRICS]
        if bad:
            raise ProfileInvalid(f"confound_bias applies to heart rate and respiration only, got {bad}")
        s = self.speech
        if s.base_per_min < 0 or s.gain_per_min < 0 or s.mean_bout_s < 1:
            raise ProfileInvalid("speech bout rates must be >= 0 and mean bout length >= 1 s")

    def zero_noise(self) -> PhysioProfile:
        """The same profile with every noise SD at 0 and deterministic bouts."""
        return replace(
            self,
            responses={m: replace(r, noise_sd=0.0) for m, r in self.responses.items()},
            speech=replace(self.speech, stochastic_bouts=False),
        )

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "metrics": {m.value: self.responses[m].to_dict() for m in MetricKind},
            "speech_bouts": self.speech.to_dict(),
            "ambient_floor_db": self.ambient_floor_db,
        }
        if self.confound_bias:
            doc["confound_bias"] = {m.value: v for m, v in self.confound_bias.items()}
        return doc


def physio_profile_from_dict(doc: Mapping[str, Any]) -> PhysioProfile:
    try:
        responses = {}
        for name, r in doc["metrics"].items():
            low, high = r["plausible"]
            responses[parse_metric(name)] = MetricResponse(
                float(r["baseline"]), float(r["gain"]), float(r.get("noise_sd", 0.0)), float(r.get("lag_s", 0.0)),
                float(low), float(high),
            )
        sb = doc.get("speech_bouts", {})
        speech = SpeechBouts(
            float(sb.get("base_per_min", SpeechBouts.base_per_min)),
            float(sb.get("gain_per_min", SpeechBouts.gain_per_min)),
            float(sb.get("mean_bout_s", SpeechBouts.mean_bout_s)),
            bool(sb.get("stochastic_bouts", True)),
        )
        bias = {parse_metric(k): float(v) for k, v in doc.get("confound_bias", {}).items()}
        return PhysioProfile(responses, speech, float(doc.get("ambient_floor_db", 45.0)), bias)
    except ProfileInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileInvalid(f"malformed physio profile: {exc}") from exc


def load_physio_profile(source: str | Path | Mapping[str, Any]) -> PhysioProfile:
    if isinstance(source, Mapping):
        return physio_profile_from_dict(source)
    path = Path(source)
    if not path.exists() and (DATA_DIR / f"{source}.json").exists():
        path = DATA_DIR / f"{source}.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProfileInvalid(f"cannot read physio profile {source}: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ProfileInvalid("physio profile must be a JSON object")
    return physio_profile_from_dict(doc)


def default_physio_profile() -> PhysioProfile:
    return load_physio_profile(DATA_DIR / "physio-default.json")


def _lagged(t_ms: np.ndarray, demand: np.ndarray, lag_s: float) -> np.ndarray:
    # holds the first demand value before the trace starts
    return np.interp(t_ms - lag_s * 1000.0, t_ms, demand)


def speaking_mask(demand: np.ndarray, speech: SpeechBouts, rng: np.random.Generator) -> np.ndarray:
    """Per-second speaking flags for a 1 Hz demand series."""
    n = demand.size
    start_p = np.clip((speech.base_per_min + speech.gain_per_min * demand) / 60.0, 0.0, 1.0)
    mask = np.zeros(n, dtype=bool)
    if speech.stochastic_bouts:
        draws = rng.random(n)
        lengths = rng.geometric(1.0 / speech.mean_bout_s, size=n)
        i = 0
        while i < n:
            if draws[i] < start_p[i]:
                end = min(n, i + int(lengths[i]))
                mask[i:end] = True
                i = end
            else:
                i += 1
        return mask
    length = int(round(speech.mean_bout_s))
    acc = 0.0
    i = 0
    while i < n:
        acc += start_p[i]
        if acc >= 1.0:
            acc -= 1.0
            end = min(n, i + length)
            mask[i:end] = True
            i = end
        else:
            i += 1
    return mask


def synthesize(
    t_ms: np.ndarray | Sequence[int],
    demand: np.ndarray | Sequence[float],
    profile: PhysioProfile,
    seed: int,
) -> list[ChannelSeries]:
    """All nine sensor channels sampled on the demand trace's timestamps."""
    t = np.asarray(t_ms, dtype=np.int64)
    d = np.asarray(demand, dtype=np.float64)
    if t.shape != d.shape:
        raise ContractViolation("demand timestamps and values differ in length")
    if d.size and (not np.all(np.isfinite(d)) or d.min() < 0.0 or d.max() > 1.0):
        raise ContractViolation("demand must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    speaking = speaking_mask(d, profile.speech, rng)
    ones = np.ones(t.shape, dtype=bool)
    out = []
    for m in MetricKind:
        r = profile.responses[m]
        noise = rng.normal(0.0, r.noise_sd, size=t.size) if r.noise_sd > 0 else np.zeros(t.size)
        if m is M.VOICE_ACTIVITY:
            v = speaking.astype(np.float64)
        else:
            v = r.baseline + r.gain * _lagged(t, d, r.lag_s) + noise + profile.confound_bias.get(m, 0.0)
            if m in _NON_NEGATIVE:
                v = np.maximum(v, 0.0)
            if m in SPEECH_METRICS:
                v = np.where(speaking, v, 0.0)
            elif m is M.NOISE_LEVEL:
                v = np.maximum(v, profile.ambient_floor_db)
        out.append(ChannelSeries(m, t.copy(), v, ones.copy()))
    return out


# ------------------------------------------------------------------ faults

FAULT_MODES = ("invalid_flag", "stuck_value", "drop_samples")


@dataclass(frozen=True)
class FaultSpec:
    """``mode`` applied to ``metric`` (``None`` = every metric) over ``[start_ms, end_ms)``."""

    metric: MetricKind | None
    start_ms: int
    end_ms: int
    mode: str

    def __post_init__(self):
        if self.mode not in FAULT_MODES:
            raise FaultSpecError(f"unknown fault mode {self.mode!r}")
        if self.end_ms <= self.start_ms:
            raise FaultSpecError("fault interval must have end > start")

    def covers(self, m: MetricKind) -> bool:
        return self.metric is None or self.metric is m

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> FaultSpec:
        try:
            name = doc.get("metric", "all")
            metric = None if name in (None, "all") else parse_metric(name)
            return cls(metric, int(round(float(doc["start_s"]) * 1000)), int(round(float(doc["end_s"]) * 1000)), doc["mode"])
        except FaultSpecError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FaultSpecError(f"malformed fault: {exc}") from exc


def _check_faults(faults: Sequence[FaultSpec]) -> None:
    for i, a in enumerate(faults):
        for b in faults[i + 1 :]:
            shared = a.metric is None or b.metric is None or a.metric is b.metric
            if shared and a.mode != b.mode and a.start_ms < b.end_ms and b.start_ms < a.end_ms:
                raise FaultSpecError(
                    f"contradictory faults overlap: {a.mode} [{a.start_ms}, {a.end_ms}) "
                    f"and {b.mode} [{b.start_ms}, {b.end_ms})"
                )


def inject_faults(
    series: Sequence[ChannelSeries], faults: Sequence[FaultSpec | Mapping[str, Any]], seed: int = 0
) -> list[ChannelSeries]:
    """Reproduce sensor failure modes on copies of ``series``.

    ``invalid_flag`` clears the valid flag and scrambles the value,
    ``stuck_value`` repeats the reading at the interval start, and
    ``drop_samples`` deletes the readings.  Overlapping faults of different
    modes on the same metric raise :class:`FaultSpecError`.
    """
    specs = [f if isinstance(f, FaultSpec) else FaultSpec.from_dict(f) for f in faults]
    _check_faults(specs)
    rng = np.random.default_rng(seed)
    out = []
    for s in series:
        mine = [f for f in specs if f.covers(s.metric)]
        if not mine:
            out.append(s)
            continue
        t, v, ok, imp = s.t_ms.copy(), s.values.copy(), s.valid.copy(), s.imputed.copy()
        keep = np.ones(t.shape, dtype=bool)
        for f in mine:
            inside = (t >= f.start_ms) & (t < f.end_ms)
            if not inside.any():
                continue
            if f.mode == "invalid_flag":
                ok[inside] = False
                v[inside] = rng.uniform(-1000.0, 1000.0, size=int(inside.sum()))
            elif f.mode == "stuck_value":
                v[inside] = v[np.argmax(inside)]
            else:
                keep &= ~inside
        out.append(ChannelSeries(s.metric, t[keep], v[keep], ok[keep], imp[keep]))
    return out


def load_faults(path: str | Path) -> list[FaultSpec]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FaultSpecError(f"cannot read fault spec {path}: {exc}") from exc
    if isinstance(doc, Mapping):
        doc = doc.get("faults", [])
    return [FaultSpec.from_dict(f) for f in doc]
