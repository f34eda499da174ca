import io
import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import runs as oracle_runs
from oracles import spearman as oracle_spearman

from swarmload.analytics import (
    MINUTE_SERIES,
    build_shift_report,
    demand_rank_correlation,
    estimate_minute_means,
    minute_means,
    per_minute_series,
    shift_descriptives,
    state_frequencies,
    sustained_episodes,
    weighted_campaign_stats,
    write_minute_series_csv,
    write_states_csv,
)
from swarmload.core import WorkloadState
from swarmload.engine import OverallEstimate, classify, no_data_estimate
from swarmload.errors import EmptyInput, EmptyShift
from swarmload.subjective import InSituProbe

S = WorkloadState
_states = st.sampled_from(list(WorkloadState))


def _est(values, start=30_000):
    out = []
    for i, v in enumerate(values):
        t = start + 5000 * i
        out.append(no_data_estimate(t) if v is None else OverallEstimate(t, v, classify(v)))
    return out


def _labeled(states, start=30_000):
    return [(start + 5000 * i, s) for i, s in enumerate(states)]


def test_descriptives():
    d = shift_descriptives(_est([50.0] * 4))
    assert (d.mean, d.sd, d.min, d.max) == (50.0, 0.0, 50.0, 50.0)
    d = shift_descriptives(_est([30, 40, 50, 60, 70]))
    assert d.mean == 50 and d.sd == pytest.approx(math.sqrt(200)) and (d.min, d.max) == (30, 70)
    assert shift_descriptives(_est([30, None, 40, None])) == shift_descriptives(_est([30, 40]))
    with pytest.raises(EmptyShift):
        shift_descriptives(_est([None, None]))


def test_weighted_campaign_stats():
    assert weighted_campaign_stats([(46.58, 6.4, 100)]) == pytest.approx((46.58, 6.4))
    m, sd = weighted_campaign_stats([(40, 0, 1), (60, 0, 3)])
    assert m == 55 and sd == pytest.approx(math.sqrt(75))
    assert weighted_campaign_stats([(40, 3, 7), (60, 1, 7)])[0] == 50
    assert weighted_campaign_stats([(40, 0, 2), (40, 0, 9)]) == (40, 0)
    with pytest.raises(EmptyInput):
        weighted_campaign_stats([])
    with pytest.raises(EmptyInput):
        weighted_campaign_stats([(40, 0, 0)])


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 30), st.integers(1, 50)), min_size=1, max_size=6))
def test_weighted_stats_match_pooled_samples(shifts):
    # shifts built from two-point samples whose population mean/SD are (m, s)
    pooled = []
    for m, s, n in shifts:
        pooled += [m - s, m + s] * n
    m, sd = weighted_campaign_stats(shifts)
    assert m == pytest.approx(np.mean(pooled), abs=1e-9)
    assert sd == pytest.approx(np.std(pooled), abs=1e-6)


def test_frequencies():
    f = state_frequencies([S.NORMAL_LOAD] * 3 + [S.OVERLOAD, S.NO_DATA])
    assert (f.total, f.usable) == (5, 4)
    assert f.percent(S.OVERLOAD) == 25.0 and f.percent(S.NO_DATA) is None
    empty = state_frequencies([S.NO_DATA] * 3)
    assert empty.usable == 0 and empty.to_dict()["percent_of_usable"]["overload"] is None


@given(st.lists(_states))
def test_frequencies_match_tally(states):
    f = state_frequencies(states)
    assert dict(f.counts) == {s: Counter(states)[s] for s in WorkloadState}
    assert f.usable + f.counts[S.NO_DATA] == f.total == len(states)


@pytest.mark.parametrize("n, text", [(43, "3 min 35 s"), (51, "4 min 15 s"), (1, "0 min 5 s")])
def test_episode_durations(n, text):
    _, longest = sustained_episodes(_labeled([S.NORMAL_LOAD] + [S.OVERLOAD] * n + [S.UNDERLOAD]), S.OVERLOAD)
    assert longest.count == n and longest.describe() == text and longest.start == 35_000


def test_alternating_and_nodata_breaks():
    eps, _ = sustained_episodes(_labeled([S.OVERLOAD, S.NORMAL_LOAD] * 5), S.OVERLOAD)
    assert [e.count for e in eps] == [1] * 5
    eps, _ = sustained_episodes(_labeled([S.OVERLOAD, S.OVERLOAD, S.NO_DATA, S.OVERLOAD]), S.OVERLOAD)
    assert [e.count for e in eps] == [2, 1]
    # a missing tick also ends a run
    eps, _ = sustained_episodes([(0, S.OVERLOAD), (5000, S.OVERLOAD), (15_000, S.OVERLOAD)], S.OVERLOAD)
    assert [e.count for e in eps] == [2, 1]
    assert sustained_episodes([], S.OVERLOAD) == ([], None)


@given(st.lists(_states))
def test_episodes_match_run_oracle_and_frequencies(states):
    labeled = _labeled(states)
    freqs = state_frequencies(states)
    for target in (S.UNDERLOAD, S.NORMAL_LOAD, S.OVERLOAD):
        eps, longest = sustained_episodes(labeled, target)
        assert [e.count for e in eps] == oracle_runs(states, target)
        assert sum(e.count for e in eps) == freqs.counts[target]
        assert (longest is None) == (not eps)


FLEET = {
    "t_ms": 0,
    "type": "fleet",
    "vehicles": [
        {"id": 1, "kind": "UGV", "instantiation": "hardware"},
        {"id": 2, "kind": "UAV", "instantiation": "virtual"},
        {"id": 3, "kind": "UAV", "instantiation": "hardware"},
    ],
}


def test_per_minute_series():
    events = [FLEET]
    events += [{"t_ms": 0, "type": "tactic_issued", "origin": "plan", "classes": ["hardware_ugv"]} for _ in range(8)]
    events += [
        {"t_ms": 61_000, "type": "tactic_issued", "origin": "commander", "classes": ["virtual_uav", "hardware_uav"]},
        {"t_ms": 62_000, "type": "blocked", "vehicle": 1},
        {"t_ms": 130_000, "type": "telemetry", "vehicles": [1, 2, 3]},
        {"t_ms": 140_000, "type": "telemetry", "vehicles": [1]},
        {"t_ms": 150_000, "type": "swap", "new": 2},
        {"t_ms": 160_000, "type": "mystery"},
    ]
    series, warnings = per_minute_series(events)
    assert set(series) == set(MINUTE_SERIES)
    assert series["tactics_plan"].tolist() == [8, 0, 0]
    assert series["tactics_commander"].tolist() == [0, 1, 0]
    assert series["blockages"].tolist() == [0, 1, 0]
    assert series["tasked_hardware_ugv"].tolist() == [8, 0, 0]
    assert series["tasked_virtual_uav"].tolist() == [0, 1, 1]
    assert series["active_hardware"].tolist() == [0, 0, 2]
    assert len(warnings) == 1 and "mystery" in warnings[0]
    buf = io.StringIO()
    write_minute_series_csv(series, buf)
    assert buf.getvalue().splitlines()[:2] == ["minute,series,value", "0,tactics_plan,8"]


def test_per_minute_empty():
    series, warnings = per_minute_series([])
    assert all(v.size == 0 for v in series.values()) and not warnings


@given(st.lists(st.tuples(st.integers(0, 600_000), st.sampled_from(["blocked", "tactic_issued"]))))
def test_per_minute_matches_tally(raw):
    events = sorted(({"t_ms": t, "type": typ, "origin": "plan"} for t, typ in raw), key=lambda e: e["t_ms"])
    series, _ = per_minute_series(events)
    for name, typ in (("blockages", "blocked"), ("tactics_plan", "tactic_issued")):
        tally = Counter(t // 60_000 for t, ty in raw if ty == typ)
        assert series[name].tolist() == [tally[m] for m in range(series[name].size)]


def test_per_minute_concatenation():
    a = [{"t_ms": t, "type": "blocked"} for t in (0, 10_000, 70_000)]
    b = [{"t_ms": t, "type": "blocked"} for t in (180_000, 181_000)]
    whole, _ = per_minute_series(a + b)
    sa, _ = per_minute_series(a)
    sb, _ = per_minute_series([dict(e, t_ms=e["t_ms"]) for e in b])
    merged = np.zeros(whole["blockages"].size, np.int64)
    merged[: sa["blockages"].size] += sa["blockages"]
    merged[: sb["blockages"].size] += sb["blockages"]
    assert whole["blockages"].tolist() == merged.tolist()


def test_shift_report_sections():
    est = _est([20, 30, 61, 62, None] + [40] * 10)
    report = build_shift_report("x", est)
    doc = report.to_dict()
    assert (doc["estimate_count"], doc["usable_count"], doc["no_data_count"]) == (15, 14, 1)
    assert "per_minute" not in doc and "probes" not in doc
    assert doc["episodes"]["overload"]["longest"]["count"] == 2
    assert sum(doc["state_frequencies"]["counts"].values()) == 15
    json.dumps(doc)

    probes = [InSituProbe(40_000, "overall", 4), InSituProbe(900_000, "overall", 5)]
    full = build_shift_report("x", est, probes, [FLEET, {"t_ms": 30_000, "type": "blocked"}])
    assert len(full.probes) == 1 and full.probes[0].count == 5
    assert full.per_minute["blockages"].tolist() == [1]
    buf = io.StringIO()
    write_states_csv([full], buf)
    assert buf.getvalue().splitlines()[1] == "x,1,11,2,1,15,14,14.29"


def test_minute_means_and_estimate_binning():
    assert minute_means([0, 30_000, 60_000, 61_000], [1.0, 3.0, np.nan, 5.0]) == {0: 2.0, 1: 5.0}
    assert minute_means([0], [np.nan]) == {}
    # a window ending exactly on the minute belongs to the minute it covered
    est = _est([10.0] * 7, start=30_000) + _est([None, 90.0], start=65_000)
    assert estimate_minute_means(est) == {0: 10.0, 1: 90.0}


def test_rank_correlation_matches_oracle():
    rng = np.random.default_rng(1)
    t = np.arange(0, 1_200_000, 1000)
    demand = rng.random(t.size)
    est = _est(list(rng.uniform(0, 100, 235)), start=30_000)
    rho, minutes = demand_rank_correlation(t, demand, est)
    dm, em = minute_means(t, demand), estimate_minute_means(est)
    shared = sorted(set(dm) & set(em))
    assert minutes == len(shared) == 20
    assert rho == pytest.approx(oracle_spearman([dm[m] for m in shared], [em[m] for m in shared]), abs=1e-12)


def test_rank_correlation_degenerate():
    t = np.arange(0, 300_000, 1000)
    rho, n = demand_rank_correlation(t, np.zeros(t.size), _est(list(range(50))))
    assert math.isnan(rho) and n == 5
    rho, n = demand_rank_correlation(t[:60], np.ones(60), _est([1.0]))
    assert math.isnan(rho) and n == 1
