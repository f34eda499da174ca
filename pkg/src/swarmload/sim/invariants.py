"""Post-hoc checks of a simulator event log.

Each checker replays the log and returns human-readable violation strings;
an empty list means the property held for the whole shift.  The checks only
use the log itself, so they also work on logs read back from JSONL.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from ..events import Event
from .allocate import match_slots
from .scenario import Requirement, VehicleSpec, _parse_fleet


def _fleet(events: Sequence[Event]) -> dict[int, VehicleSpec]:
    for ev in events:
        if ev["type"] == "fleet":
            return {v.id: v for v in _parse_fleet(ev["vehicles"])}
    return {}


def capability_violations(events: Sequence[Event]) -> list[str]:
    """Issued vehicle sets (and swap replacements) that cannot fill the tactic's requirements."""
    fleet = _fleet(events)
    reqs: dict[str, list[Requirement]] = {}
    out = []
    for ev in events:
        typ = ev["type"]
        if typ == "tactic_created":
            reqs[ev["tactic"]] = [Requirement.from_dict(r) for r in ev.get("requirements", ())]
        elif typ == "tactic_issued":
            slots = [r for r in reqs.get(ev["tactic"], ()) for _ in range(r.count)]
            specs = [fleet[v] for v in ev["vehicles"]]
            if slots and match_slots(specs, slots) is None:
                out.append(f"t={ev['t_ms']}: tactic {ev['tactic']} issued to {ev['vehicles']} lacking capabilities")
        elif typ == "swap":
            slot = Requirement.from_dict(ev.get("slot", {}))
            if not slot.matches(fleet[ev["new"]]):
                out.append(f"t={ev['t_ms']}: swap {ev['request']} replacement {ev['new']} does not fit its slot")
    return out


def gating_violations(events: Sequence[Event]) -> list[str]:
    """Plan tactics issued before their gating signals fired or predecessor nodes completed."""
    fired: set[str] = set()
    node_tactics: dict[str, list[str]] = {}
    completed: set[str] = set()
    gates: dict[str, tuple[list[str], list[str]]] = {}
    out = []
    for ev in events:
        typ = ev["type"]
        if typ == "signal":
            fired.add(ev["name"])
        elif typ == "tactic_completed":
            completed.add(ev["tactic"])
        elif typ == "tactic_created" and ev.get("node") is not None:
            node_tactics.setdefault(ev["node"], []).append(ev["tactic"])
            gates[ev["tactic"]] = (list(ev.get("gates", ())), list(ev.get("after", ())))
        elif typ == "tactic_issued" and ev["tactic"] in gates:
            signals, after = gates[ev["tactic"]]
            missing = [s for s in signals if s not in fired]
            if missing:
                out.append(f"t={ev['t_ms']}: tactic {ev['tactic']} issued before signal(s) {missing}")
            for node in after:
                undone = [t for t in node_tactics.get(node, [None]) if t not in completed]
                if undone:
                    out.append(f"t={ev['t_ms']}: tactic {ev['tactic']} issued before node {node} completed")
    return out


def neutralized_progress_violations(events: Sequence[Event]) -> list[str]:
    """Progress, tasking or swaps involving a vehicle between its neutralization and revival."""
    down: set[int] = set()
    out = []
    for ev in events:
        typ = ev["type"]
        if typ == "neutralized":
            down.add(ev["vehicle"])
        elif typ == "revived":
            down.discard(ev["vehicle"])
        elif typ == "progress" and ev["vehicle"] in down:
            out.append(f"t={ev['t_ms']}: neutralized vehicle {ev['vehicle']} progressed tactic {ev['tactic']}")
        elif typ == "tactic_issued":
            bad = sorted(down.intersection(ev["vehicles"]))
            if bad:
                out.append(f"t={ev['t_ms']}: tactic {ev['tactic']} issued to neutralized vehicles {bad}")
        elif typ == "swap" and ev["new"] in down:
            out.append(f"t={ev['t_ms']}: swap {ev['request']} handed to neutralized vehicle {ev['new']}")
    return out


def telemetry_violations(events: Sequence[Event]) -> list[str]:
    """Telemetry rows reported for vehicles whose link is down at that tick."""
    connected: set[int] = set()
    out = []
    for ev in events:
        typ = ev["type"]
        if typ == "fleet":
            connected = {v["id"] for v in ev["vehicles"]}
        elif typ == "comm_loss":
            connected.difference_update(ev["vehicles"])
        elif typ == "comm_restore":
            connected.update(ev["vehicles"])
        elif typ == "telemetry":
            ghosts = sorted(set(ev["vehicles"]) - connected)
            if ghosts:
                out.append(f"t={ev['t_ms']}: telemetry from disconnected vehicles {ghosts}")
    return out


def swap_violations(events: Sequence[Event]) -> list[str]:
    """Swap requests that neither hand off nor log an allocation failure."""
    pending: dict[str, int] = {}
    for ev in events:
        typ = ev["type"]
        if typ == "swap_request":
            pending[ev["request"]] = ev["t_ms"]
        elif typ == "swap" or (typ == "allocation_failed" and "request" in ev):
            pending.pop(ev["request"], None)
    return [f"t={t}: swap request {r} never resolved" for r, t in pending.items()]


CHECKS = {
    "capability": capability_violations,
    "gating": gating_violations,
    "neutralized_progress": neutralized_progress_violations,
    "telemetry": telemetry_violations,
    "swap": swap_violations,
}


@dataclass
class InvariantReport:
    violations: dict[str, list[str]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def counts(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.violations.items()}


def check_log(events: Iterable[Event]) -> InvariantReport:
    evs = list(events)
    return InvariantReport({name: fn(evs) for name, fn in CHECKS.items()})
