"""Seeded random scenario generator used for invariant sweeps and benchmarks."""

from __future__ import annotations

from typing import Any

import numpy as np

from .scenario import ScenarioScript, scenario_from_dict

_CAMERAS = ("forward", "downward", "both", "none")
_PAYLOADS = ("electronic", "anti-personnel", "none")


def _buildings(rng: np.random.Generator, width: int, height: int, n: int) -> list[dict[str, Any]]:
    out: list[dict[str, Any]] = []
    taken = np.zeros((height, width), dtype=bool)
    taken[:, :16] = True  # keep the launch strip clear
    attempts = 0
    while len(out) < n and attempts < 50 * n:
        attempts += 1
        w = int(rng.integers(3, 8))
        h = int(rng.integers(3, 7))
        x0 = int(rng.integers(16, width - w - 1))
        y0 = int(rng.integers(1, height - h - 1))
        # one-cell street margin around every building
        if taken[y0 - 1 : y0 + h + 1, x0 - 1 : x0 + w + 1].any():
            continue
        taken[y0 - 1 : y0 + h + 1, x0 - 1 : x0 + w + 1] = True
        out.append({"id": f"B{len(out) + 1}", "rect": [x0, y0, x0 + w - 1, y0 + h - 1]})
    return out


def _tactic(rng, tid: str, buildings, width: int, height: int) -> dict[str, Any]:
    kind = str(rng.choice(["Surveil", "Goto", "Explore", "Cordon"], p=[0.4, 0.3, 0.15, 0.15]))
    b = buildings[int(rng.integers(len(buildings)))]["id"]
    if kind == "Surveil":
        req = [{"count": int(rng.integers(1, 4)), "kind": "UAV", "camera": "forward"}]
        if rng.random() < 0.5:
            req.append({"count": 1, "kind": "UAV", "camera": "downward"})
        target: dict[str, Any] = {"building": b}
    elif kind == "Explore":
        req = [{"count": int(rng.integers(1, 3)), "kind": "UGV"}]
        target = {"building": b}
    elif kind == "Cordon":
        req = [{"count": int(rng.integers(2, 6)), "kind": str(rng.choice(["UAV", "UGV"]))}]
        target = {"building": b}
    else:
        r: dict[str, Any] = {"count": int(rng.integers(1, 5)), "kind": str(rng.choice(["UAV", "UGV"]))}
        if rng.random() < 0.3:
            r["payload"] = str(rng.choice(_PAYLOADS[:2]))
        req = [r]
        target = {"point": [int(rng.integers(16, width)), int(rng.integers(0, height))]}
    return {"id": tid, "kind": kind, "target": target, "requirements": req, "hold_s": int(rng.integers(0, 90))}


def random_scenario_dict(
    seed: int,
    *,
    n_vehicles: int = 200,
    duration_s: int = 1800,
    width: int = 120,
    height: int = 80,
) -> dict[str, Any]:
    """A valid scenario document drawn from ``seed``.

    The fleet is a UAV-heavy mix with random cameras and payloads, the plan
    has start nodes, signal-gated nodes and successor chains, and the
    commander script mixes authoring, signals, nudges, stops, RTLs and a
    medic deployment.
    """
    rng = np.random.default_rng(seed)
    buildings = _buildings(rng, width, height, int(rng.integers(10, 20)))
    n_uav = int(round(n_vehicles * rng.uniform(0.55, 0.8)))
    fleet = []
    for i in range(n_vehicles):
        uav = i < n_uav
        fleet.append(
            {
                "id": i + 1,
                "kind": "UAV" if uav else "UGV",
                "instantiation": str(rng.choice(["hardware", "virtual"])),
                "camera": str(rng.choice(_CAMERAS[:3] if uav else _CAMERAS)),
                "payload": str(rng.choice(_PAYLOADS)),
                **({"endurance_s": float(rng.uniform(600, 1200))} if uav else {}),
            }
        )

    signals = [f"sig{k}" for k in range(int(rng.integers(2, 5)))]
    nodes: list[dict[str, Any]] = []
    n_nodes = int(rng.integers(6, 14))
    tcount = 0
    for k in range(n_nodes):
        gate: dict[str, Any] = {}
        roll = rng.random()
        if k >= 3 and roll < 0.45:
            gate["signals"] = [str(rng.choice(signals))]
        if k >= 3 and rng.random() < 0.35:
            gate["after"] = [f"n{int(rng.integers(0, k))}"]
        tactics = []
        for _ in range(int(rng.integers(1, 3))):
            tactics.append(_tactic(rng, f"plan-t{tcount}", buildings, width, height))
            tcount += 1
        nodes.append({"id": f"n{k}", "gate": gate, "tactics": tactics})

    artifacts = []
    for k in range(int(rng.integers(8, 20))):
        typ = str(rng.choice(["intel", "hostile", "explosive", "high-value-target"], p=[0.3, 0.35, 0.25, 0.1]))
        doc: dict[str, Any] = {
            "id": f"a{k}",
            "type": typ,
            "position": [int(rng.integers(14, width)), int(rng.integers(0, height))],
            "threat_radius": int(rng.integers(1, 3)),
        }
        if typ in ("hostile", "explosive") and rng.random() < 0.5:
            doc["required"] = {"electronic": 1, "anti-personnel": 1}
        artifacts.append(doc)

    actions: list[dict[str, Any]] = [{"t_s": 0, "action": "load_plan"}]
    t = 0
    authored = 0
    pending_signals = list(signals)
    while True:
        t += int(rng.integers(20, 120))
        if t >= duration_s - 5:
            break
        roll = rng.random()
        if roll < 0.45:
            dur = int(rng.integers(5, 45))
            tid = f"sc-t{authored}"
            authored += 1
            actions.append(
                {"t_s": t, "action": "author_tactic", "duration_s": dur, "tactic": _tactic(rng, tid, buildings, width, height)}
            )
        elif roll < 0.6 and pending_signals:
            actions.append({"t_s": t, "action": "signal", "name": pending_signals.pop(0)})
        elif roll < 0.75:
            actions.append({"t_s": t, "action": "nudge", "vehicle": int(rng.integers(1, n_vehicles + 1))})
        elif roll < 0.82:
            vids = sorted({int(v) for v in rng.integers(1, n_vehicles + 1, size=3)})
            actions.append({"t_s": t, "action": str(rng.choice(["stop", "rtl"])), "vehicles": vids})
        elif roll < 0.85:
            actions.append({"t_s": t, "action": "deploy_medic", "position": [int(rng.integers(0, 14)), int(rng.integers(0, height))]})
        elif roll < 0.9 and len(pending_signals) < len(signals):
            # refiring an already-fired signal exercises the no-op path
            actions.append({"t_s": t, "action": "signal", "name": signals[0]})
    return {
        "name": f"random-{seed}",
        "duration_s": duration_s,
        "seed": seed,
        "world": {"width": width, "height": height, "launch_zone": [1, 25, 14, 54], "buildings": buildings},
        "fleet": fleet,
        "plan": {"signals": signals, "nodes": nodes},
        "artifacts": artifacts,
        "actions": actions,
        "comm": {
            "drop": float(rng.uniform(0.0, 0.01)),
            "restore": float(rng.uniform(0.1, 0.5)),
            "zones": [
                {
                    "rect": [int(width * 0.6), 0, width - 1, int(height * 0.5)],
                    "drop": float(rng.uniform(0.01, 0.1)),
                    "restore": float(rng.uniform(0.05, 0.3)),
                }
            ],
        },
    }


def random_scenario(seed: int, **kwargs) -> ScenarioScript:
    return scenario_from_dict(random_scenario_dict(seed, **kwargs))
