"""Simulator event-log vocabulary and JSONL helpers.

Every event is a flat JSON object with ``t_ms`` and a ``type`` discriminator.
Field layout per type:

=================  =========================================================
fleet              vehicles: [{id, kind, instantiation, camera, payload}]
signal             name
tactic_created     tactic, kind, origin, node
tactic_issued      tactic, kind, origin, vehicles: [id], classes: [class]
tactic_completed   tactic
tactic_failed      tactic, reason
tactic_cancelled   tactic
allocation_failed  tactic, reason, (request)
progress           vehicle, tactic          (vehicle reached its tactic goal)
blocked            vehicle, cell
replan             vehicle, ok
yield              vehicle, to, cell     (backed off a head-on standoff)
nudge              vehicle, band | cell
artifact_detected  artifact, artifact_type, vehicle
artifact_neutralized artifact, vehicles: [id]
neutralized        vehicle, artifact
rtl                vehicle, reason
medic_route        vehicle
revived            vehicle
swap_request       request, vehicle, tactic
swap               request, old, new, tactic
battery_low        vehicle, battery
comm_loss          vehicles: [id]        (all drops in this tick)
comm_restore       vehicles: [id]
telemetry          vehicles, x, y, band, battery: parallel lists over the
                   connected vehicles only (band 0 ground, 1 built-env,
                   2 enroute; battery in whole percent)
authoring_start    tactic
warning            message
=================  =========================================================

``class`` is one of ``hardware_ugv``, ``hardware_uav``, ``virtual_ugv``,
``virtual_uav``.
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from typing import Any, TextIO

from .errors import FormatError

EVENT_TYPES = frozenset(
    {
        "fleet",
        "signal",
        "tactic_created",
        "tactic_issued",
        "tactic_completed",
        "tactic_failed",
        "tactic_cancelled",
        "allocation_failed",
        "progress",
        "blocked",
        "replan",
        "yield",
        "nudge",
        "artifact_detected",
        "artifact_neutralized",
        "neutralized",
        "rtl",
        "medic_route",
        "revived",
        "swap_request",
        "swap",
        "battery_low",
        "comm_loss",
        "comm_restore",
        "telemetry",
        "authoring_start",
        "warning",
    }
)

VEHICLE_CLASSES = ("hardware_ugv", "hardware_uav", "virtual_ugv", "virtual_uav")

Event = dict[str, Any]


_ENCODER = json.JSONEncoder(separators=(",", ":"))


def dumps_event(event: Event) -> str:
    """Compact single-line JSON for one event."""
    return _ENCODER.encode(event)


def events_to_jsonl(events: Iterable[Event]) -> str:
    return "".join(_ENCODER.encode(e) + "\n" for e in events)


def write_events_jsonl(events: Iterable[Event], stream: TextIO) -> None:
    stream.write(events_to_jsonl(events))


def read_events_jsonl(stream: TextIO) -> list[Event]:
    out = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            ev = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"event line {lineno}: {exc}") from None
        if not isinstance(ev, dict) or "type" not in ev or "t_ms" not in ev:
            raise FormatError(f"event line {lineno}: need t_ms and type")
        out.append(ev)
    return out
