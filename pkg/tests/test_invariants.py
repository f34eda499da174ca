import copy
import io

import pytest

from swarmload.events import events_to_jsonl, read_events_jsonl
from swarmload.sim import load_scenario, run_scenario
from swarmload.sim.invariants import CHECKS, check_log


@pytest.fixture(scope="module")
def log():
    return run_scenario(load_scenario("fx6-visitor-day")).events


def _first(events, pred):
    return next(k for k, e in enumerate(events) if pred(e))


def _fleet_ids(events, kind):
    return [v["id"] for v in events[0]["vehicles"] if v["kind"] == kind]


def test_clean_log_passes(log):
    report = check_log(log)
    assert report.ok, report.violations
    assert set(report.counts()) == set(CHECKS)


def test_clean_after_jsonl_round_trip(log):
    assert check_log(read_events_jsonl(io.StringIO(events_to_jsonl(log)))).ok


def _only(report, name):
    bad = {k for k, v in report.violations.items() if v}
    assert name in bad, report.violations
    return report.violations[name]


def test_issuing_to_incapable_vehicles_is_caught(log):
    ev = copy.deepcopy(log)
    k = _first(ev, lambda e: e["type"] == "tactic_issued" and e["kind"] == "Surveil")
    ugvs = _fleet_ids(ev, "UGV")
    ev[k]["vehicles"] = ugvs[: len(ev[k]["vehicles"])]
    msgs = _only(check_log(ev), "capability")
    assert ev[k]["tactic"] in msgs[0]


def test_missing_signal_is_caught(log):
    ev = [e for e in log if not (e["type"] == "signal" and e["name"] == "west")]
    msgs = _only(check_log(ev), "gating")
    assert all("west" in m for m in msgs) and len(msgs) >= 1


def test_early_successor_is_caught(log):
    ev = copy.deepcopy(log)
    chained = [e for e in ev if e["type"] == "tactic_created" and e.get("after")]
    if not chained:
        pytest.skip("fixture has no predecessor-gated node")
    tid = chained[0]["tactic"]
    k = _first(ev, lambda e: e["type"] == "tactic_issued" and e["tactic"] == tid)
    issue = ev.pop(k)
    c = _first(ev, lambda e: e["type"] == "tactic_created" and e["tactic"] == tid)
    ev.insert(c + 1, issue)
    # also forget the predecessor's completion
    pred = set(chained[0]["after"])
    ev = [e for e in ev if not (e["type"] == "tactic_completed" and _node_of(log, e["tactic"]) in pred)]
    assert any("completed" in m for m in _only(check_log(ev), "gating"))


def _node_of(events, tid):
    return next((e.get("node") for e in events if e["type"] == "tactic_created" and e["tactic"] == tid), None)


def test_progress_while_neutralized_is_caught(log):
    ev = copy.deepcopy(log)
    k = _first(ev, lambda e: e["type"] == "neutralized")
    vid = ev[k]["vehicle"]
    ev.insert(k + 1, {"t_ms": ev[k]["t_ms"], "type": "progress", "vehicle": vid, "tactic": "ghost"})
    msgs = _only(check_log(ev), "neutralized_progress")
    assert msgs == [f"t={ev[k]['t_ms']}: neutralized vehicle {vid} progressed tactic ghost"]


def test_issue_to_neutralized_is_caught(log):
    ev = copy.deepcopy(log)
    k = _first(ev, lambda e: e["type"] == "neutralized")
    vid = ev[k]["vehicle"]
    ev.insert(k + 1, {"t_ms": ev[k]["t_ms"], "type": "tactic_issued", "tactic": "x", "kind": "Goto", "origin": "commander", "vehicles": [vid], "classes": []})
    assert _only(check_log(ev), "neutralized_progress")


def test_telemetry_from_disconnected_vehicle_is_caught(log):
    ev = copy.deepcopy(log)
    k = _first(ev, lambda e: e["type"] == "comm_loss")
    vid = ev[k]["vehicles"][0]
    ev.insert(k + 1, {"t_ms": ev[k]["t_ms"], "type": "telemetry", "vehicles": [vid], "x": [0], "y": [0], "band": [0], "battery": [100]})
    assert _only(check_log(ev), "telemetry") == [f"t={ev[k]['t_ms']}: telemetry from disconnected vehicles [{vid}]"]


def test_dropped_comm_restore_is_caught(log):
    # forgetting a restore makes the vehicle's next telemetry row look like a ghost
    def reports_later(k):
        vids = set(log[k]["vehicles"])
        return any(e["type"] == "telemetry" and vids & set(e["vehicles"]) for e in log[k + 1 :])

    k = next(k for k, e in enumerate(log) if e["type"] == "comm_restore" and reports_later(k))
    assert _only(check_log(log[:k] + log[k + 1 :]), "telemetry")


def test_unresolved_swap_is_caught(log):
    ev = copy.deepcopy(log)
    ev.append({"t_ms": ev[-1]["t_ms"], "type": "swap_request", "request": "swap-99", "vehicle": 1, "tactic": "t"})
    assert _only(check_log(ev), "swap") == [f"t={ev[-1]['t_ms']}: swap request swap-99 never resolved"]
    ev.append({"t_ms": ev[-1]["t_ms"], "type": "allocation_failed", "tactic": "t", "reason": "swap", "request": "swap-99"})
    assert check_log(ev).ok


def test_swap_to_wrong_vehicle_kind_is_caught(log):
    ev = copy.deepcopy(log)
    ugv = _fleet_ids(ev, "UGV")[0]
    t = ev[-1]["t_ms"]
    ev += [
        {"t_ms": t, "type": "swap_request", "request": "swap-1", "vehicle": 1, "tactic": "t"},
        {"t_ms": t, "type": "swap", "request": "swap-1", "old": 1, "new": ugv, "tactic": "t", "slot": {"count": 1, "kind": "UAV"}},
    ]
    assert _only(check_log(ev), "capability")
    assert not check_log(ev).violations["swap"]
