import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gaps as oracle_gaps

from swarmload.core import MetricKind
from swarmload.errors import ContractViolation, FormatError, NoValidReadings
from swarmload.ingest import (
    CAMPAIGN_NOISE_STATS,
    ChannelSeries,
    GapRecord,
    detect_gaps,
    flag_stuck_values,
    merge_gaps,
    parse_sensor_csv,
    repair_noise_channel,
    valid_stats,
    write_sensor_csv,
)

M = MetricKind
HEADER = "t_ms,metric,value,valid\n"


def _noise(values, valid=None, start=0):
    n = len(values)
    return ChannelSeries(M.NOISE_LEVEL, np.arange(n) * 1000 + start, values, np.ones(n, bool) if valid is None else valid)


def test_parse_rows():
    text = HEADER + "0,heart_rate,82.0,1\n5000,noise_level,60.75,0\nabc,heart_rate,x,1\n1000,heart_rate,83,1\n"
    series, errors = parse_sensor_csv(text)
    by = {s.metric: s for s in series}
    assert by[M.HEART_RATE].t_ms.tolist() == [0, 1000]
    assert by[M.HEART_RATE].values.tolist() == [82.0, 83.0]
    noise = by[M.NOISE_LEVEL]
    assert noise.values.tolist() == [60.75] and noise.valid.tolist() == [False]
    assert [e.line for e in errors] == [4]


def test_parse_row_errors_are_not_fatal():
    text = HEADER + "0,thermometer,1,1\n1,heart_rate,2,yes\n2,heart_rate\n-5,hrv,1,1\n3,hrv,nan,1\n4,hrv,1,1\n4,hrv,2,1\n"
    series, errors = parse_sensor_csv(text)
    assert [e.line for e in errors] == [2, 3, 4, 5, 6, 8]
    assert "unknown metric" in errors[0].message
    assert "duplicate" in errors[-1].message
    assert [(s.metric, len(s)) for s in series] == [(M.HRV, 1)]


@pytest.mark.parametrize("text", ["", "time,metric,value,valid\n0,hrv,1,1\n"])
def test_parse_requires_header(text):
    with pytest.raises(FormatError):
        parse_sensor_csv(text)


def test_csv_round_trip():
    rng = np.random.default_rng(3)
    a = ChannelSeries(M.HEART_RATE, [0, 1000, 2000], rng.normal(80, 3, 3), [True, False, True])
    b = _noise(rng.normal(60, 5, 4))
    buf = io.StringIO()
    write_sensor_csv([b, a], buf)
    series, errors = parse_sensor_csv(buf.getvalue())
    assert not errors
    assert series[0].same_as(a) and series[1].same_as(b)


def test_series_must_increase():
    with pytest.raises(ContractViolation):
        ChannelSeries(M.HRV, [0, 1000, 1000], [1, 2, 3], [True] * 3)


def test_gaps_examples():
    assert detect_gaps(_noise(np.zeros(10))) == []
    s = ChannelSeries(M.HRV, [0, 60_000], [1.0, 2.0], [True, True])
    assert detect_gaps(s, 5000) == [GapRecord(0, 60_000, frozenset({M.HRV}))]
    t = np.concatenate([np.arange(0, 10), np.arange(20, 30), np.arange(40, 50)]) * 1000
    s = ChannelSeries(M.HRV, t, np.zeros(t.size), np.ones(t.size, bool))
    assert [(g.start, g.end) for g in detect_gaps(s)] == [(9000, 20_000), (29_000, 40_000)]


@given(st.sets(st.integers(0, 200_000), min_size=0, max_size=60), st.integers(500, 20_000))
def test_gaps_match_pairwise_scan(ts, max_gap):
    t = sorted(ts)
    s = ChannelSeries(M.HRV, t, np.zeros(len(t)), np.ones(len(t), bool))
    assert [(g.start, g.end) for g in detect_gaps(s, max_gap)] == oracle_gaps(t, max_gap)


def test_merge_gaps_unions_metrics():
    merged = merge_gaps(
        [
            GapRecord(10, 20, frozenset({M.HRV})),
            GapRecord(0, 12, frozenset({M.HEART_RATE})),
            GapRecord(30, 40, frozenset({M.HRV})),
        ]
    )
    assert merged == [
        GapRecord(0, 20, frozenset({M.HRV, M.HEART_RATE})),
        GapRecord(30, 40, frozenset({M.HRV})),
    ]


def test_stuck_values_flagged():
    vals = np.concatenate([np.arange(10.0), np.full(40, 55.0), np.arange(10.0)])
    out = flag_stuck_values(_noise(vals), 30)
    assert out.valid.tolist() == [True] * 10 + [False] * 40 + [True] * 10
    short = _noise(np.concatenate([np.arange(10.0), np.full(29, 55.0)]))
    assert flag_stuck_values(short, 30) is short


def test_repair_all_valid_is_identity():
    s = _noise(np.random.default_rng(0).normal(60, 5, 100))
    out, stats = repair_noise_channel(s, seed=1)
    assert out is s and stats.n_imputed == 0 and stats.n_valid == 100


def test_repair_stats_and_clipping():
    rng = np.random.default_rng(5)
    vals = rng.normal(60, 6, 300)
    valid = rng.random(300) < 0.7
    s = _noise(vals, valid)
    out, stats = repair_noise_channel(s, seed=9)
    good = vals[valid]
    assert stats.mean == pytest.approx(good.mean()) and stats.sd == pytest.approx(good.std())
    assert np.array_equal(out.values[valid], vals[valid])
    filled = out.values[~valid]
    assert filled.min() >= good.min() and filled.max() <= good.max()
    assert out.valid.all() and np.array_equal(out.imputed, ~valid)
    again, _ = repair_noise_channel(s, seed=9)
    assert again.same_as(out)
    other, _ = repair_noise_channel(s, seed=10)
    assert not other.same_as(out)


def test_repair_idempotent_after_first_pass():
    s = _noise(np.linspace(50, 70, 50), np.arange(50) % 3 != 0)
    once, _ = repair_noise_channel(s, seed=2)
    twice, stats = repair_noise_channel(once, seed=3)
    assert twice is once and stats.n_imputed == 0


def test_repair_needs_valid_readings():
    s = _noise(np.zeros(5), np.zeros(5, bool))
    with pytest.raises(NoValidReadings):
        repair_noise_channel(s, seed=0)
    out, stats = repair_noise_channel(s, seed=0, stats=CAMPAIGN_NOISE_STATS)
    assert stats.mean == 60.75
    assert ((out.values >= 50.78) & (out.values <= 81.89)).all()


def test_repair_rejects_other_metrics():
    with pytest.raises(ContractViolation):
        repair_noise_channel(ChannelSeries(M.HRV, [0], [1.0], [False]), seed=0)


def test_valid_stats_duration_weighted():
    # a reading followed by a long hole still counts for one nominal period
    s = ChannelSeries(M.NOISE_LEVEL, [0, 1000, 60_000], [50.0, 60.0, 70.0], [True] * 3)
    assert valid_stats(s).mean == pytest.approx(60.0)


@settings(max_examples=50)
@given(st.lists(st.floats(30, 100), min_size=2, max_size=80), st.integers(0, 2**32 - 1))
def test_imputed_values_stay_within_valid_extrema(vals, seed):
    valid = np.array([i % 2 == 0 for i in range(len(vals))])
    s = _noise(np.array(vals), valid)
    out, stats = repair_noise_channel(s, seed)
    assert (out.values >= stats.min).all() and (out.values <= stats.max).all()
