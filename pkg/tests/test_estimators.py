import copy
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmload.core import ComponentKind, MetricKind
from swarmload.errors import ContractViolation, MissingInput, ProfileInvalid
from swarmload.estimators import (
    DATA_DIR,
    FEATURE_LEVELS,
    REFERENCE_MEAN_COEFFICIENTS,
    Source,
    allowed_input_widths,
    demo_profile,
    estimate_component,
    feature_width,
    load_profile,
    predict_display,
    profile_to_dict,
    reference_profile,
    static_component_value,
)
from swarmload.features import FeatureVector

C, M = ComponentKind, MetricKind


def _features(level=None, t=30_000):
    out = {}
    for m in MetricKind:
        mean = FEATURE_LEVELS[m][0] if level is None else level.get(m, FEATURE_LEVELS[m][0])
        out[m] = FeatureVector(m, t, mean, 0.0, 0.0, 0.0)
    return out


def _zero_network_profile():
    doc = profile_to_dict(reference_profile())
    for entry in doc["components"]:
        if entry["estimator"] is None:
            continue
        dim = len(entry["estimator"]["coefficients"])
        entry["estimator"] = {
            "type": "network",
            "layers": [dim, 3, 1],
            "weights": [[0.0] * (dim * 3), [0.0] * 3],
            "biases": [[0.0] * 3, [0.0]],
            "activation": "relu",
        }
    return load_profile(doc)


def test_widths():
    assert [feature_width(k) for k in (C.COGNITIVE, C.PHYSICAL, C.AUDITORY, C.SPEECH)] == [12, 12, 4, 16]
    assert allowed_input_widths(C.COGNITIVE) == (12, 15)
    assert allowed_input_widths(C.SPEECH) == (16,)


def test_bundled_default_profile():
    p = load_profile(DATA_DIR / "profiles" / "default.json")
    assert p.max_overall == 70.4
    for k in ComponentKind:
        assert p[k].max_raw == pytest.approx(14.08) and p[k].midpoint_raw == pytest.approx(7.04)
    assert p[C.VISUAL].estimator is None


def test_profile_round_trip():
    p = demo_profile(3)
    q = load_profile(json.dumps(profile_to_dict(p)))
    x = np.random.default_rng(0).normal(size=(5, 15))
    assert np.array_equal(predict_display(C.COGNITIVE, x, p), predict_display(C.COGNITIVE, x, q))


def _doc():
    return profile_to_dict(reference_profile())


def _mutate(fn):
    doc = copy.deepcopy(_doc())
    fn(doc)
    return doc


@pytest.mark.parametrize(
    "mutation, message",
    [
        (lambda d: d["components"][0].update(max_raw=20.0), "sum"),
        (lambda d: d["components"][0]["estimator"].update(coefficients=[0.0] * 11), "input dimension 11"),
        (lambda d: d["components"][0].update(midpoint_raw=20.0), "midpoint"),
        (lambda d: d["components"].pop(), "lacks"),
        (lambda d: d["components"][3].update(estimator={"type": "linear", "coefficients": [0.0]}), "visual"),
        (lambda d: d["components"][1].update(estimator={"type": "forest"}), "unknown type"),
        (lambda d: d.update(contextual_features={"speech": 1.0}), "contextual"),
    ],
)
def test_invalid_profiles(mutation, message):
    with pytest.raises(ProfileInvalid, match=message):
        load_profile(_mutate(mutation))


def test_sum_must_hit_max_overall():
    def sixty(d):
        for c in d["components"]:
            c["max_raw"] = 12.0
            c["midpoint_raw"] = 6.0

    with pytest.raises(ProfileInvalid, match="sum"):
        load_profile(_mutate(sixty))


def test_network_shape_mismatch():
    doc = profile_to_dict(_zero_network_profile())
    doc["components"][0]["estimator"]["weights"][0] = [0.0] * 5
    with pytest.raises(ProfileInvalid, match="shape"):
        load_profile(doc)


def test_unreadable_profile(tmp_path):
    with pytest.raises(ProfileInvalid):
        load_profile(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ProfileInvalid):
        load_profile(bad)


def test_zero_network_gives_fifty():
    p = _zero_network_profile()
    for k in (C.COGNITIVE, C.SPEECH, C.AUDITORY, C.PHYSICAL):
        e = estimate_component(k, _features(), p)
        assert e.display_value == 50.0 and e.source is Source.SENSED
        assert e.raw_value == pytest.approx(7.04)


def test_reference_linear_hand_computed():
    # constant 82 bpm window, other cognitive inputs at their reference level
    hr_level, hr_spread = FEATURE_LEVELS[M.HEART_RATE]
    feats = _features({M.HEART_RATE: 82.0})
    e = estimate_component(C.COGNITIVE, feats, reference_profile())
    z = REFERENCE_MEAN_COEFFICIENTS[M.HEART_RATE] * (82.0 - hr_level) / hr_spread
    assert e.display_value == pytest.approx(100.0 / (1.0 + np.exp(-z)), rel=1e-12)
    assert e.t == 30_000


def test_missing_feeding_metric():
    feats = _features()
    del feats[M.HRV]
    with pytest.raises(MissingInput):
        estimate_component(C.COGNITIVE, feats, reference_profile())
    with pytest.raises(ContractViolation):
        estimate_component(C.VISUAL, feats, reference_profile())


def test_static_values():
    p = reference_profile()
    v = static_component_value(C.VISUAL, p, t=5000)
    assert (v.raw_value, v.display_value, v.source, v.t) == (pytest.approx(7.04), 50.0, Source.STATIC_MODEL, 5000)
    doc = _doc()
    doc["components"][3]["midpoint_raw"] = 0.0
    assert static_component_value(C.VISUAL, load_profile(doc)).display_value == 0.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=15, max_size=15))
def test_display_bounded_and_deterministic(row):
    p = demo_profile(1)
    a = predict_display(C.COGNITIVE, np.array([row]), p)
    assert 0.0 <= a[0] <= 100.0
    assert predict_display(C.COGNITIVE, np.array([row]), p).tobytes() == a.tobytes()


def test_contextual_features_touch_only_contextual_components():
    base = demo_profile(2)
    bumped = base.with_contextual(cognitive=1.0, physical=-1.0, auditory=0.5)
    feats = _features()
    for k in (C.COGNITIVE, C.PHYSICAL, C.AUDITORY):
        assert estimate_component(k, feats, base).display_value != estimate_component(k, feats, bumped).display_value
    assert estimate_component(C.SPEECH, feats, base) == estimate_component(C.SPEECH, feats, bumped)
    assert static_component_value(C.VISUAL, base) == static_component_value(C.VISUAL, bumped)


def test_reference_estimators_monotone_in_heart_rate():
    p = reference_profile()
    vals = [estimate_component(C.PHYSICAL, _features({M.HEART_RATE: hr}), p).display_value for hr in (60, 80, 100, 140)]
    assert vals == sorted(vals) and len(set(vals)) == 4
