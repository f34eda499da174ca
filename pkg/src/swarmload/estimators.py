"""Per-component workload estimators and the model profile that holds them.

Profile JSON layout::

    {
      "max_overall": 70.4,
      "contextual_features": {"cognitive": 0.0, "physical": 0.0, "auditory": 0.0},
      "components": [
        {"kind": "cognitive", "max_raw": 14.08, "midpoint_raw": 7.04,
         "estimator": {"type": "network", "layers": [15, 8, 1],
                       "weights": [[...], [...]], "biases": [[...], [...]],
                       "activation": "tanh",
                       "input_offset": [...], "input_scale": [...]}},
        {"kind": "visual", "max_raw": 14.08, "midpoint_raw": 7.04, "estimator": null},
        ...
      ]
    }

Estimator inputs are the four features (mean, variance, avg_gradient, slope)
of each feeding metric in :class:`~swarmload.core.MetricKind` order, so a
cognitive input is ``[hr x4, hrv x4, noise x4]``.  Cognitive, physical and
auditory estimators may take the three contextual features (cognitive,
physical, auditory task composition) appended after those, making their
input width ``4 * n_metrics + 3``.  ``weights[i]`` is layer ``i``'s matrix of
shape ``(layers[i], layers[i + 1])`` given either flat row-major or as rows.
The final layer has width 1 and is squashed by the logistic function; the
display value is that times 100.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .core import FEATURE_NAMES, ComponentKind, MetricKind, component_metrics
from .errors import ContractViolation, MissingInput, ProfileInvalid
from .features import FeatureVector

C = ComponentKind
MAX_OVERALL_WORKLOAD = 70.4
CONTEXTUAL_KINDS = (C.COGNITIVE, C.PHYSICAL, C.AUDITORY)
SENSED_KINDS = (C.COGNITIVE, C.SPEECH, C.AUDITORY, C.PHYSICAL)
_SUM_TOL = 1e-6

DATA_DIR = Path(__file__).parent / "data"


class Source(str, enum.Enum):
    SENSED = "sensed"
    STATIC_MODEL = "static_model"
    IMPUTED = "imputed"


def feature_width(kind: ComponentKind) -> int:
    return 4 * len(component_metrics(kind))


def allowed_input_widths(kind: ComponentKind) -> tuple[int, ...]:
    base = feature_width(kind)
    if kind in CONTEXTUAL_KINDS:
        return (base, base + len(CONTEXTUAL_KINDS))
    return (base,)


def _logistic(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True, eq=False)
class NetworkWeights:
    layers: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str = "tanh"
    input_offset: np.ndarray | None = None
    input_scale: np.ndarray | None = None

    @property
    def input_dim(self) -> int:
        return self.layers[0]

    def logit(self, x: np.ndarray) -> np.ndarray:
        h = _standardize(np.atleast_2d(x), self.input_offset, self.input_scale)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.tanh(h) if self.activation == "tanh" else np.maximum(h, 0.0)
        return h[:, 0]


@dataclass(frozen=True, eq=False)
class LinearWeights:
    coefficients: np.ndarray
    intercept: float = 0.0
    input_offset: np.ndarray | None = None
    input_scale: np.ndarray | None = None

    @property
    def input_dim(self) -> int:
        return int(self.coefficients.shape[0])

    def logit(self, x: np.ndarray) -> np.ndarray:
        return _standardize(np.atleast_2d(x), self.input_offset, self.input_scale) @ self.coefficients + self.intercept


Estimator = NetworkWeights | LinearWeights


def _standardize(x, offset, scale):
    if offset is not None:
        x = x - offset
    if scale is not None:
        x = x / scale
    return x


@dataclass(frozen=True)
class ComponentModel:
    kind: ComponentKind
    max_raw: float
    midpoint_raw: float
    estimator: Estimator | None = None


@dataclass(frozen=True)
class ModelProfile:
    components: Mapping[ComponentKind, ComponentModel]
    max_overall: float = MAX_OVERALL_WORKLOAD
    contextual: Mapping[ComponentKind, float] = field(
        default_factory=lambda: {k: 0.0 for k in CONTEXTUAL_KINDS}
    )

    def __getitem__(self, kind: ComponentKind) -> ComponentModel:
        return self.components[kind]

    def contextual_vector(self) -> np.ndarray:
        return np.array([float(self.contextual.get(k, 0.0)) for k in CONTEXTUAL_KINDS])

    def with_contextual(self, **values: float) -> ModelProfile:
        ctx = dict(self.contextual)
        for name, v in values.items():
            ctx[ComponentKind(name)] = float(v)
        return replace(self, contextual=ctx)


@dataclass(frozen=True)
class ComponentEstimate:
    kind: ComponentKind
    t: int
    display_value: float
    raw_value: float
    source: Source

    def to_dict(self) -> dict[str, Any]:
        return {"display": self.display_value, "raw": self.raw_value, "source": self.source.value}


# ------------------------------------------------------------------ loading


def _as_matrix(obj, rows: int, cols: int, what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim == 1 and arr.size == rows * cols:
        arr = arr.reshape(rows, cols)
    if arr.shape != (rows, cols):
        raise ProfileInvalid(f"{what}: expected shape ({rows}, {cols}), got {arr.shape}")
    return arr


def _as_vector(obj, n: int | None, what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim != 1 or (n is not None and arr.size != n):
        raise ProfileInvalid(f"{what}: expected vector of length {n}, got shape {arr.shape}")
    return arr


def _parse_estimator(kind: ComponentKind, doc: Mapping[str, Any] | None) -> Estimator | None:
    if doc is None:
        if kind is not C.VISUAL:
            raise ProfileInvalid(f"{kind.value}: estimator required")
        return None
    if kind is C.VISUAL:
        raise ProfileInvalid("visual is unsensed and takes no estimator")
    what = f"{kind.value} estimator"
    typ = doc.get("type")
    try:
        if typ == "network":
            layers = tuple(int(n) for n in doc["layers"])
            if len(layers) < 2 or layers[-1] != 1 or min(layers) < 1:
                raise ProfileInvalid(f"{what}: layers must run from input to a single output, got {layers}")
            raw_w, raw_b = doc["weights"], doc["biases"]
            if len(raw_w) != len(layers) - 1 or len(raw_b) != len(layers) - 1:
                raise ProfileInvalid(f"{what}: need {len(layers) - 1} weight matrices and bias vectors")
            weights = tuple(
                _as_matrix(w, layers[i], layers[i + 1], f"{what} layer {i} weights") for i, w in enumerate(raw_w)
            )
            biases = tuple(_as_vector(b, layers[i + 1], f"{what} layer {i} biases") for i, b in enumerate(raw_b))
            activation = doc.get("activation", "tanh")
            if activation not in ("tanh", "relu"):
                raise ProfileInvalid(f"{what}: activation must be tanh or relu, got {activation!r}")
            dim = layers[0]
            est: Estimator = NetworkWeights(layers, weights, biases, activation)
        elif typ == "linear":
            coef = _as_vector(doc["coefficients"], None, f"{what} coefficients")
            dim = coef.size
            est = LinearWeights(coef, float(doc.get("intercept", 0.0)))
        else:
            raise ProfileInvalid(f"{what}: unknown type {typ!r}")
    except KeyError as exc:
        raise ProfileInvalid(f"{what}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProfileInvalid):
            raise
        raise ProfileInvalid(f"{what}: {exc}") from None

    if dim not in allowed_input_widths(kind):
        raise ProfileInvalid(f"{what}: input dimension {dim}, expected one of {allowed_input_widths(kind)}")
    offset = doc.get("input_offset")
    scale = doc.get("input_scale")
    offset = None if offset is None else _as_vector(offset, dim, f"{what} input_offset")
    scale = None if scale is None else _as_vector(scale, dim, f"{what} input_scale")
    if scale is not None and np.any(scale == 0):
        raise ProfileInvalid(f"{what}: input_scale must be nonzero")
    return replace(est, input_offset=offset, input_scale=scale)


def profile_from_dict(doc: Mapping[str, Any]) -> ModelProfile:
    if not isinstance(doc, Mapping):
        raise ProfileInvalid("profile must be a JSON object")
    try:
        max_overall = float(doc.get("max_overall", MAX_OVERALL_WORKLOAD))
        entries = doc["components"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileInvalid(f"malformed profile: {exc}") from None
    comps: dict[ComponentKind, ComponentModel] = {}
    for entry in entries:
        try:
            kind = ComponentKind(entry["kind"])
            max_raw = float(entry["max_raw"])
            mid = float(entry["midpoint_raw"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProfileInvalid(f"malformed component entry: {exc}") from None
        if kind in comps:
            raise ProfileInvalid(f"duplicate component {kind.value}")
        if not (0.0 <= mid <= max_raw):
            raise ProfileInvalid(f"{kind.value}: need 0 <= midpoint_raw <= max_raw, got {mid}, {max_raw}")
        comps[kind] = ComponentModel(kind, max_raw, mid, _parse_estimator(kind, entry.get("estimator")))
    missing = set(ComponentKind) - set(comps)
    if missing:
        raise ProfileInvalid(f"profile lacks components {sorted(k.value for k in missing)}")
    total = sum(c.max_raw for c in comps.values())
    if abs(total - max_overall) > _SUM_TOL:
        raise ProfileInvalid(f"component max_raw sum {total} != max_overall {max_overall}")
    ctx_doc = doc.get("contextual_features") or {}
    contextual = {k: 0.0 for k in CONTEXTUAL_KINDS}
    for name, v in ctx_doc.items():
        try:
            k = ComponentKind(name)
        except ValueError:
            raise ProfileInvalid(f"unknown contextual feature {name!r}") from None
        if k not in CONTEXTUAL_KINDS:
            raise ProfileInvalid(f"{name} has no contextual feature")
        contextual[k] = float(v)
    return ModelProfile(comps, max_overall, contextual)


def load_profile(source: str | Path | Mapping[str, Any]) -> ModelProfile:
    """Load and validate a profile from a path, a JSON string, or a parsed dict."""
    if isinstance(source, Mapping):
        return profile_from_dict(source)
    text = str(source)
    try:
        if isinstance(source, Path) or not text.lstrip().startswith("{"):
            text = Path(source).read_text(encoding="utf-8")
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProfileInvalid(f"cannot read profile: {exc}") from None
    return profile_from_dict(doc)


def _estimator_to_dict(est: Estimator | None) -> dict[str, Any] | None:
    if est is None:
        return None
    if isinstance(est, NetworkWeights):
        doc: dict[str, Any] = {
            "type": "network",
            "layers": list(est.layers),
            "weights": [w.ravel().tolist() for w in est.weights],
            "biases": [b.tolist() for b in est.biases],
            "activation": est.activation,
        }
    else:
        doc = {"type": "linear", "coefficients": est.coefficients.tolist(), "intercept": est.intercept}
    if est.input_offset is not None:
        doc["input_offset"] = est.input_offset.tolist()
    if est.input_scale is not None:
        doc["input_scale"] = est.input_scale.tolist()
    return doc


def profile_to_dict(profile: ModelProfile) -> dict[str, Any]:
    return {
        "max_overall": profile.max_overall,
        "contextual_features": {k.value: float(profile.contextual.get(k, 0.0)) for k in CONTEXTUAL_KINDS},
        "components": [
            {
                "kind": k.value,
                "max_raw": profile[k].max_raw,
                "midpoint_raw": profile[k].midpoint_raw,
                "estimator": _estimator_to_dict(profile[k].estimator),
            }
            for k in ComponentKind
        ],
    }


# --------------------------------------------------------------- inference


def component_inputs(
    kind: ComponentKind, features: Mapping[MetricKind, FeatureVector], profile: ModelProfile
) -> np.ndarray:
    """Concatenated estimator input for one timestamp."""
    model = profile[kind]
    if model.estimator is None:
        raise ContractViolation(f"{kind.value} has no estimator")
    parts = []
    for m in component_metrics(kind):
        fv = features.get(m)
        if fv is None:
            raise MissingInput(f"{kind.value} needs {m.value} features")
        parts.append(fv.as_tuple())
    x = np.asarray(parts, dtype=np.float64).ravel()
    if model.estimator.input_dim > x.size:
        x = np.concatenate([x, profile.contextual_vector()])
    return x


def predict_display(kind: ComponentKind, inputs: np.ndarray, profile: ModelProfile) -> np.ndarray:
    """Display-scale values for a batch of feature rows (contextual appended here if used)."""
    est = profile[kind].estimator
    if est is None:
        raise ContractViolation(f"{kind.value} has no estimator")
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if est.input_dim == x.shape[1] + len(CONTEXTUAL_KINDS):
        ctx = np.broadcast_to(profile.contextual_vector(), (x.shape[0], len(CONTEXTUAL_KINDS)))
        x = np.hstack([x, ctx])
    if x.shape[1] != est.input_dim:
        raise ContractViolation(f"{kind.value}: input width {x.shape[1]} != {est.input_dim}")
    return 100.0 * _logistic(est.logit(x))


def _make_estimate(kind: ComponentKind, t: int, display: float, profile: ModelProfile, source: Source):
    return ComponentEstimate(kind, int(t), float(display), float(display) * profile[kind].max_raw / 100.0, source)


def estimate_component(
    kind: ComponentKind,
    features: Mapping[MetricKind, FeatureVector],
    profile: ModelProfile,
    t: int | None = None,
) -> ComponentEstimate:
    if kind is C.VISUAL:
        raise ContractViolation("visual workload is not sensed; use static_component_value")
    x = component_inputs(kind, features, profile)
    est = profile[kind].estimator
    display = float(100.0 * _logistic(est.logit(x))[0])
    if t is None:
        t = max(fv.window_end for fv in features.values())
    return _make_estimate(kind, t, display, profile, Source.SENSED)


def static_component_value(kind: ComponentKind, profile: ModelProfile, t: int = 0) -> ComponentEstimate:
    """Model midpoint standing in for a component that is not sensed."""
    model = profile[kind]
    display = 100.0 * model.midpoint_raw / model.max_raw if model.max_raw > 0 else 0.0
    return ComponentEstimate(kind, int(t), display, model.midpoint_raw, Source.STATIC_MODEL)


# ---------------------------------------------------------- shipped models

# Typical per-metric level and spread used to standardize estimator inputs.
# Levels follow the synthetic physiology defaults (resting HR about 80 bpm).
FEATURE_LEVELS: dict[MetricKind, tuple[float, float]] = {
    MetricKind.HEART_RATE: (80.0, 25.0),
    MetricKind.HRV: (50.0, 20.0),
    MetricKind.RESPIRATION_RATE: (16.0, 6.0),
    MetricKind.POSTURE_MAGNITUDE: (10.0, 15.0),
    MetricKind.SPEECH_RATE: (0.0, 4.0),
    MetricKind.VOICE_INTENSITY: (0.0, 60.0),
    MetricKind.VOICE_ACTIVITY: (0.0, 1.0),
    MetricKind.VOICE_PITCH: (0.0, 150.0),
    MetricKind.NOISE_LEVEL: (55.0, 10.0),
}


def _standardization(kind: ComponentKind, with_context: bool) -> tuple[np.ndarray, np.ndarray]:
    offset, scale = [], []
    for m in component_metrics(kind):
        level, spread = FEATURE_LEVELS[m]
        offset += [level, 0.0, 0.0, 0.0]
        scale += [spread, spread**2, spread / 10.0, spread / 10.0]
    if with_context:
        offset += [0.0] * len(CONTEXTUAL_KINDS)
        scale += [1.0] * len(CONTEXTUAL_KINDS)
    return np.array(offset), np.array(scale)


def _uniform_components(estimators: Mapping[ComponentKind, Estimator | None]) -> dict[ComponentKind, ComponentModel]:
    share = MAX_OVERALL_WORKLOAD / len(ComponentKind)
    return {k: ComponentModel(k, share, share / 2.0, estimators.get(k)) for k in ComponentKind}


def demo_profile(seed: int = 0, hidden: int = 8) -> ModelProfile:
    """Uniform-split profile with small seeded random tanh networks."""
    rng = np.random.default_rng(seed)
    ests: dict[ComponentKind, Estimator | None] = {C.VISUAL: None}
    for kind in SENSED_KINDS:
        ctx = kind in CONTEXTUAL_KINDS
        dim = feature_width(kind) + (len(CONTEXTUAL_KINDS) if ctx else 0)
        w1 = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, hidden))
        b1 = rng.normal(0.0, 0.1, size=hidden)
        w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, 1))
        b2 = np.zeros(1)
        off, sc = _standardization(kind, ctx)
        ests[kind] = NetworkWeights((dim, hidden, 1), (w1, w2), (b1, b2), "tanh", off, sc)
    return ModelProfile(_uniform_components(ests))


# Reference linear coefficient on each metric's standardized window mean.
# Sign follows the expected response to rising workload (HRV falls).
REFERENCE_MEAN_COEFFICIENTS: dict[MetricKind, float] = {
    MetricKind.HEART_RATE: 2.0,
    MetricKind.HRV: -2.0,
    MetricKind.RESPIRATION_RATE: 2.0,
    MetricKind.POSTURE_MAGNITUDE: 1.0,
    MetricKind.SPEECH_RATE: 0.0,
    MetricKind.VOICE_INTENSITY: 0.0,
    MetricKind.VOICE_ACTIVITY: 3.0,
    MetricKind.VOICE_PITCH: 0.0,
    MetricKind.NOISE_LEVEL: 2.0,
}


def reference_profile() -> ModelProfile:
    """Uniform-split profile with monotone linear estimators on window means.

    Each estimator is ``logistic(sum_m c_m * (mean_m - level_m) / spread_m)``
    with ``c_m`` from :data:`REFERENCE_MEAN_COEFFICIENTS`; variance, gradient
    and slope carry zero weight.  Used for end-to-end rank checks.
    """
    ests: dict[ComponentKind, Estimator | None] = {C.VISUAL: None}
    for kind in SENSED_KINDS:
        coef = []
        for m in component_metrics(kind):
            coef += [REFERENCE_MEAN_COEFFICIENTS[m], 0.0, 0.0, 0.0]
        off, sc = _standardization(kind, False)
        ests[kind] = LinearWeights(np.array(coef), 0.0, off, sc)
    return ModelProfile(_uniform_components(ests))


def default_profile() -> ModelProfile:
    return load_profile(DATA_DIR / "profiles" / "default.json")


FEATURE_LABELS = tuple(f"{m.value}.{f}" for m in MetricKind for f in FEATURE_NAMES)
