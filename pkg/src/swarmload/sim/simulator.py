"""Tick-stepped deterministic simulation of one commander's swarm deployment.

Vehicle state lives in parallel numpy arrays indexed by fleet position
(fleet sorted by vehicle id); tactics, plan gating and event emission are
plain Python.  Each 1 s tick runs, in order: tactic authoring completions,
commander actions, communications, movement and blockage handling, battery,
artifact interactions, tactic completion, revive/charge timers, telemetry
and the demand sample.
"""

from __future__ import annotations

import csv
import enum
import gc
import io
import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, TextIO

import numpy as np

from .. import kernels
from ..events import Event, events_to_jsonl
from .allocate import Allocation, AllocationFailed, VehicleSnapshot, allocate
from .plan import PlanState
from .scenario import (
    ArtifactSpec,
    ArtifactType,
    Camera,
    PlanNode,
    Requirement,
    ScenarioScript,
    TacticKind,
    TacticSpec,
    VehicleKind,
)
from .world import polygon_cells, spread

log = logging.getLogger(__name__)


class Status(enum.IntEnum):
    IDLE = 0
    TASKED = 1
    BLOCKED = 2
    NEUTRALIZED = 3
    RETURNING = 4
    AT_MEDIC = 5
    CHARGING = 6


class Band(enum.IntEnum):
    GROUND = 0
    BUILT_ENV = 1
    ENROUTE = 2


class TacticState(str, enum.Enum):
    CREATED = "Created"
    ISSUED = "Issued"
    EXECUTING = "Executing"
    COMPLETED = "Completed"
    FAILED = "Failed"
    CANCELLED = "Cancelled"


class ArtifactState(enum.IntEnum):
    HIDDEN = kernels.ART_HIDDEN
    DETECTED = 1
    NEUTRALIZED = kernels.ART_NEUTRALIZED


@dataclass
class Tactic:
    spec: TacticSpec
    origin: str
    node: str | None = None
    state: TacticState = TacticState.CREATED
    vehicles: list[int] = field(default_factory=list)
    arrived: set[int] = field(default_factory=set)
    hold: int = 0

    @property
    def id(self) -> str:
        return self.spec.id


@dataclass
class DemandTrace:
    t_ms: np.ndarray
    demand: np.ndarray

    def write_csv(self, stream: TextIO) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["t_ms", "demand"])
        for t, d in zip(self.t_ms.tolist(), self.demand.tolist()):
            w.writerow([t, repr(d)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, stream: TextIO) -> DemandTrace:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header != ["t_ms", "demand"]:
            raise ValueError(f"expected demand header t_ms,demand, got {header!r}")
        rows = [(int(r[0]), float(r[1])) for r in reader if r]
        return cls(np.array([r[0] for r in rows], dtype=np.int64), np.array([r[1] for r in rows], dtype=float))


@dataclass
class SimResult:
    events: list[Event]
    demand: DemandTrace

    def events_jsonl(self) -> str:
        return events_to_jsonl(self.events)

    def summary(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.events:
            counts[e["type"]] = counts.get(e["type"], 0) + 1
        return {
            "tactics_issued": counts.get("tactic_issued", 0),
            "tactics_completed": counts.get("tactic_completed", 0),
            "tactics_failed": counts.get("tactic_failed", 0),
            "neutralizations": counts.get("neutralized", 0),
            "blockages": counts.get("blocked", 0),
            "swaps": counts.get("swap", 0),
        }


_THREAT_TYPES = (ArtifactType.HOSTILE, ArtifactType.EXPLOSIVE, ArtifactType.HIGH_VALUE_TARGET)


def _status_mask(*members: Status) -> np.ndarray:
    """Lookup table so ``mask[status_array]`` replaces a membership test."""
    m = np.zeros(len(Status), dtype=bool)
    m[[int(s) for s in members]] = True
    return m


_MOVING = _status_mask(Status.TASKED, Status.BLOCKED, Status.NEUTRALIZED, Status.RETURNING)
_WORKING = _status_mask(Status.IDLE, Status.TASKED, Status.BLOCKED)
_ALIVE = ~_status_mask(Status.NEUTRALIZED, Status.AT_MEDIC, Status.CHARGING)
_PARKED = _status_mask(Status.AT_MEDIC, Status.CHARGING)
_S_IDLE = int(Status.IDLE)
_S_TASKED = int(Status.TASKED)
_S_BLOCKED = int(Status.BLOCKED)
_S_NEUTRALIZED = int(Status.NEUTRALIZED)
_S_RETURNING = int(Status.RETURNING)
_S_AT_MEDIC = int(Status.AT_MEDIC)
_S_CHARGING = int(Status.CHARGING)
_YIELD_CANDIDATES = 8  # refuge cells tried when backing off
_YIELD_PATIENCE = 60  # ticks a yielder waits before pressing on regardless

_B_GROUND = int(Band.GROUND)
_B_BUILT_ENV = int(Band.BUILT_ENV)
_B_ENROUTE = int(Band.ENROUTE)


class Simulation:
    def __init__(self, script: ScenarioScript):
        script.validate()
        self.script = script
        self.world = w = script.world
        self.p = script.params
        self.rng = np.random.default_rng(script.seed)
        self._k = kernels.tick_kernels()
        self.specs = sorted(script.fleet, key=lambda v: v.id)
        self.index = {v.id: i for i, v in enumerate(self.specs)}
        self.ids = np.array([v.id for v in self.specs], dtype=np.int64)
        n = len(self.specs)
        self.n = n
        self.is_uav = np.array([v.kind is VehicleKind.UAV for v in self.specs], dtype=bool)
        self.has_camera = np.array([v.camera is not Camera.NONE for v in self.specs], dtype=bool)
        endurance = np.array(
            [
                v.endurance_s
                if v.endurance_s is not None
                else (self.p.uav_endurance_s if v.kind is VehicleKind.UAV else self.p.ugv_endurance_s)
                for v in self.specs
            ],
            dtype=float,
        )
        self.drain = 1.0 / np.maximum(endurance, 1.0)

        launch = w.launch_cells
        self.cell = np.array([launch[i % launch.size] for i in range(n)], dtype=np.int64)
        self.band = np.zeros(n, dtype=np.int64)
        self.layer = np.zeros(n, dtype=np.int64)
        self.status = np.full(n, _S_IDLE, dtype=np.int64)
        self.resume = np.full(n, _S_TASKED, dtype=np.int64)
        self.battery = np.ones(n)
        self.connected = np.ones(n, dtype=bool)
        self.blocked = np.zeros(n, dtype=bool)
        self.paths = np.zeros((n, w.n_cells), dtype=np.int64)
        self.path_len = np.ones(n, dtype=np.int64)
        self.path_idx = np.zeros(n, dtype=np.int64)
        self.paths[:, 0] = self.cell
        self.wait = np.zeros(n, dtype=np.int64)
        self.replans = np.zeros(n, dtype=np.int64)
        self.timer = np.zeros(n, dtype=np.int64)
        self.goal = np.full(n, -1, dtype=np.int64)
        self.stranded = np.zeros(n, dtype=bool)
        self.tactic_of: list[str | None] = [None] * n
        self.slot_of: list[Requirement | None] = [None] * n
        self.indoor_ok: list[int] = [-1] * n  # building index a UGV may enter
        # vehicles parked aside for another: index -> [final goal, other index, ticks waited]
        self.yielding: dict[int, list[int]] = {}
        self.occ = np.zeros((2, w.n_cells), dtype=np.int64)
        np.add.at(self.occ[0], self.cell, 1)

        self._indoor = w.building_of >= 0
        self.drop_p = np.full(w.n_cells, script.comm.drop)
        self.restore_p = np.full(w.n_cells, script.comm.restore)
        for z in script.comm.zones:
            cells = z.rect.cells(w.width)
            self.drop_p[cells] = z.drop
            self.restore_p[cells] = z.restore

        self.art_specs: list[ArtifactSpec] = list(script.artifacts)
        self._init_artifact_arrays()
        self.medic_cell: int | None = None

        self.tactics: dict[str, Tactic] = {}
        self._executing: dict[str, Tactic] = {}
        self.plan = PlanState(script.plan)
        self.authoring: list[tuple[int, TacticSpec, bool]] = []
        self.explicit_issue = {a.args["tactic"] for a in script.actions if a.action == "issue_tactic"}
        self.actions = deque(script.actions)
        self.events: list[Event] = []
        self.tick = 0
        self.t_ms = 0
        self._swap_seq = 0
        self._issued_ticks: deque[int] = deque()
        self._neutral_ticks: deque[int] = deque()
        self._authoring_due: dict[int, list[tuple[TacticSpec, bool]]] = {}
        self._authoring_open = 0
        self._started = False
        self._next_tick = 0
        self.demand_samples: list[float] = []

    # ------------------------------------------------------------ helpers

    def _init_artifact_arrays(self):
        a = self.art_specs
        self.art_x = np.array([s.x for s in a], dtype=np.int64)
        self.art_y = np.array([s.y for s in a], dtype=np.int64)
        self.art_present = np.array([s.present for s in a], dtype=bool)
        self.art_state = np.zeros(len(a), dtype=np.int64)
        self.art_active = np.array([s.active for s in a], dtype=bool)
        self.art_radius = np.array([s.threat_radius for s in a], dtype=np.int64)
        self.art_threat = np.array([s.type in _THREAT_TYPES for s in a], dtype=bool)
        self.dwell = np.zeros((self.n, len(a)), dtype=np.int64)

    def emit(self, type_: str, **fields: Any) -> None:
        ev = {"t_ms": self.t_ms, "type": type_}
        ev.update(fields)
        self.events.append(ev)

    def vid(self, i: int) -> int:
        return self.specs[i].id

    def xy(self, i: int) -> tuple[int, int]:
        return self.world.xy(int(self.cell[i]))

    def _set_band(self, i: int, band: int) -> None:
        old = int(self.layer[i])
        new = band if self.is_uav[i] else 0
        if old < 2:
            self.occ[old, self.cell[i]] -= 1
        if new < 2:
            self.occ[new, self.cell[i]] += 1
        self.band[i] = band
        self.layer[i] = new

    def _passable(self, i: int) -> np.ndarray:
        w = self.world
        if self.is_uav[i]:
            return w.air_high if self.band[i] >= _B_ENROUTE else w.air_low
        b = self.indoor_ok[i]
        inside = w.building_of[self.cell[i]]
        if b < 0 and inside < 0:
            return w.ground
        mask = w.ground.copy()
        for k in (b, inside):
            if k >= 0:
                mask |= w.building_of == k
        return mask

    def _set_path(self, i: int, path: np.ndarray) -> None:
        self.paths[i, : path.size] = path
        self.path_len[i] = path.size
        self.path_idx[i] = 0
        self.wait[i] = 0

    def _halt(self, i: int) -> None:
        self.paths[i, 0] = self.cell[i]
        self.path_len[i] = 1
        self.path_idx[i] = 0
        self.wait[i] = 0
        self.blocked[i] = False

    def _plan_to(self, i: int, goal: int, avoid_occupied: bool = False) -> bool:
        mask = self._passable(i)
        if avoid_occupied and self.layer[i] < 2:
            blocked = (self.occ[self.layer[i]] > 0) & ~self.world.shared
            blocked[self.cell[i]] = False
            blocked[goal] = False
            mask = mask & ~blocked
        path = kernels.astar(mask, self.world.width, int(self.cell[i]), int(goal))
        if path.size == 0:
            return False
        self._set_path(i, path)
        return True

    def _nearest_launch(self, i: int) -> int:
        cells = self.world.launch_cells
        x, y = self.xy(i)
        d = np.abs(cells % self.world.width - x) + np.abs(cells // self.world.width - y)
        return int(cells[int(np.argmin(d))])

    def _snapshots(self, exclude: int | None = None, named: Sequence[int] = ()) -> list[VehicleSnapshot]:
        """Dispatcher view of the available vehicles plus any explicitly ``named`` ids."""
        available = (
            (self.status == _S_IDLE) & self.connected & (self.battery > self.p.rtl_battery + 0.05)
        )
        if exclude is not None:
            available[exclude] = False
        pick = set(available.nonzero()[0].tolist())
        pick.update(self.index[v] for v in named if v in self.index)
        w = self.world.width
        out = []
        for i in sorted(pick):
            c = int(self.cell[i])
            ok = bool(available[i])
            out.append(
                VehicleSnapshot(
                    self.specs[i],
                    c % w,
                    c // w,
                    idle=ok or self.status[i] == _S_IDLE,
                    connected=bool(self.connected[i]),
                    neutralized=self.status[i] == _S_NEUTRALIZED,
                    battery_ok=ok or self.battery[i] > self.p.rtl_battery + 0.05,
                )
            )
        return out

    # --------------------------------------------------------- geometry

    def _anchor(self, spec: TacticSpec) -> tuple[int, int]:
        tgt = spec.target or {}
        if "building" in tgt:
            r = self.world.building(str(tgt["building"])).rect
            return (r.x0 + r.x1) // 2, (r.y0 + r.y1) // 2
        if "point" in tgt:
            x, y = tgt["point"]
            return int(x), int(y)
        pts = np.asarray(tgt["polygon"], dtype=float)
        cx, cy = pts.mean(axis=0)
        return int(round(cx)), int(round(cy))

    def _goal_candidates(self, spec: TacticSpec, i: int, n: int, taken: set[int]) -> list[int]:
        w = self.world
        passable = self._passable(i)
        free = passable.copy()
        lay = int(self.layer[i])
        if lay < 2:
            free &= (self.occ[lay] == 0) | w.shared
        for c in taken:
            free[c] = False
        tgt = spec.target or {}
        cands: list[int] = []
        if "building" in tgt:
            b = w.building(str(tgt["building"]))
            if spec.kind is TacticKind.EXPLORE and not self.is_uav[i]:
                inside = [c for c in b.rect.cells(w.width).tolist() if c not in taken]
                cands = spread(inside, n)
            dist = 1
            while len(cands) < n and dist <= max(w.width, w.height):
                ring = [c for c in w.ring(b.rect, dist, free) if c not in cands]
                cands += spread(ring, n - len(cands))
                dist += 1
        elif "polygon" in tgt:
            inside = [c for c in polygon_cells(w, tgt["polygon"]) if free[c]]
            cands = spread(inside, n)
        if len(cands) < n:
            ax, ay = self._anchor(spec)
            ax = min(max(ax, 0), w.width - 1)
            ay = min(max(ay, 0), w.height - 1)
            cands += w.nearest_cells(w.cell(ax, ay), n - len(cands), free, exclude=set(cands))
        return cands

    def _assign_goals(self, tactic: Tactic, members: Sequence[int]) -> None:
        spec = tactic.spec
        taken = {int(g) for g in self.goal if g >= 0}
        w = self.world.width
        for i in members:
            if not self.is_uav[i] and spec.kind is TacticKind.EXPLORE and "building" in (spec.target or {}):
                self.indoor_ok[i] = int(self.world._bindex[str(spec.target["building"])])
            if self.is_uav[i] and self.band[i] == _B_GROUND:
                self._set_band(i, _B_BUILT_ENV)
            cands = self._goal_candidates(spec, i, 1 + len(members), taken)
            x, y = self.xy(i)
            if not cands:
                goal = int(self.cell[i])
            else:
                goal = min(cands, key=lambda c: (abs(c % w - x) + abs(c // w - y), c))
            taken.add(goal)
            self.goal[i] = goal
            self.status[i] = _S_TASKED
            self.replans[i] = 0
            if not self._plan_to(i, goal):
                self._halt(i)
                self._mark_blocked(i)
                self.emit("replan", vehicle=self.vid(i), ok=False)

    # ------------------------------------------------------------ tactics

    def _create(self, spec: TacticSpec, origin: str, node: PlanNode | None = None) -> Tactic:
        t = Tactic(spec, origin, None if node is None else node.id)
        self.tactics[spec.id] = t
        ev: dict[str, Any] = {
            "tactic": spec.id,
            "kind": spec.kind.value,
            "origin": origin,
            "node": t.node,
            "requirements": [r.to_dict() for r in spec.requirements],
        }
        if node is not None:
            ev["gates"] = list(node.signals)
            ev["after"] = list(node.after)
        if spec.vehicles is not None:
            ev["explicit"] = list(spec.vehicles)
        self.emit("tactic_created", **ev)
        return t

    def _issue(self, tactic: Tactic) -> None:
        try:
            alloc: Allocation = allocate(
                tactic.spec, self._snapshots(named=tactic.spec.vehicles or ()), self._anchor(tactic.spec)
            )
        except AllocationFailed as exc:
            tactic.state = TacticState.FAILED
            self.emit("allocation_failed", tactic=tactic.id, reason=str(exc))
            self.emit("tactic_failed", tactic=tactic.id, reason="allocation")
            return
        members = [self.index[v] for v in alloc.vehicle_ids]
        for i, slot in zip(members, alloc.slots):
            self.tactic_of[i] = tactic.id
            self.slot_of[i] = slot
        tactic.vehicles = list(members)
        tactic.state = TacticState.EXECUTING
        self._executing[tactic.id] = tactic
        self.emit(
            "tactic_issued",
            tactic=tactic.id,
            kind=tactic.spec.kind.value,
            origin=tactic.origin,
            vehicles=[self.vid(i) for i in members],
            classes=[self.specs[i].vclass for i in members],
        )
        self._issued_ticks.append(self.tick)
        self._assign_goals(tactic, members)

    def _release(self, nodes: Sequence[PlanNode]) -> None:
        for node in nodes:
            created = [self._create(spec, "plan", node) for spec in node.tactics]
            for t in created:
                self._issue(t)
            self._check_node(node.id)

    def _check_node(self, node_id: str) -> None:
        node = self.script.plan.node(node_id)
        if all(
            self.tactics.get(s.id) is not None and self.tactics[s.id].state is TacticState.COMPLETED
            for s in node.tactics
        ):
            self._release(self.plan.complete(node_id))

    def _detach(self, i: int) -> Tactic | None:
        self.yielding.pop(i, None)
        tid = self.tactic_of[i]
        self.tactic_of[i] = None
        self.slot_of[i] = None
        self.goal[i] = -1
        self.indoor_ok[i] = -1
        if tid is None:
            return None
        t = self.tactics[tid]
        if i in t.vehicles:
            t.vehicles.remove(i)
        t.arrived.discard(i)
        return t

    def _finish(self, t: Tactic, state: TacticState, **fields: Any) -> None:
        t.state = state
        self._executing.pop(t.id, None)
        self.emit(
            {
                TacticState.COMPLETED: "tactic_completed",
                TacticState.FAILED: "tactic_failed",
                TacticState.CANCELLED: "tactic_cancelled",
            }[state],
            tactic=t.id,
            **fields,
        )
        for i in list(t.vehicles):
            self._detach(i)
            if state is TacticState.COMPLETED and self.is_uav[i]:
                self._rtl(i, "complete")
            elif state is TacticState.COMPLETED and self.world.building_of[self.cell[i]] >= 0:
                self._rtl(i, "exit_building")
            else:
                self.status[i] = _S_IDLE
                self._halt(i)

    # ------------------------------------------------------ vehicle moves

    def _mark_blocked(self, i: int) -> None:
        if not self.blocked[i]:
            self.blocked[i] = True
            if self.status[i] in (_S_TASKED, _S_RETURNING):
                self.resume[i] = self.status[i]
                self.status[i] = _S_BLOCKED
            x, y = self.xy(i)
            self.emit("blocked", vehicle=self.vid(i), cell=[x, y])

    def _unblock(self, i: int) -> None:
        if self.blocked[i]:
            self.blocked[i] = False
            if self.status[i] == _S_BLOCKED:
                self.status[i] = self.resume[i]

    def _rtl(self, i: int, reason: str) -> None:
        self.yielding.pop(i, None)
        self._unblock(i)
        self.status[i] = _S_RETURNING
        if self.is_uav[i]:
            self._set_band(i, _B_ENROUTE)
        self.emit("rtl", vehicle=self.vid(i), reason=reason)
        if not self._plan_to(i, self._nearest_launch(i)):
            self._halt(i)
            self._mark_blocked(i)

    def _neutralize(self, i: int, artifact: str | None, reason: str = "artifact") -> None:
        t = self._detach(i)
        self._unblock(i)
        self.status[i] = _S_NEUTRALIZED
        self.emit("neutralized", vehicle=self.vid(i), artifact=artifact, reason=reason)
        self._neutral_ticks.append(self.tick)
        if t is not None and t.state is TacticState.EXECUTING and not t.vehicles:
            self._finish(t, TacticState.FAILED, reason="no_vehicles")
        if reason == "battery":
            self.stranded[i] = True
            self._halt(i)
            return
        if not self.is_uav[i] and self.medic_cell is not None:
            self.emit("medic_route", vehicle=self.vid(i))
            if self._plan_to(i, self.medic_cell):
                return
        if self.is_uav[i]:
            self._set_band(i, _B_ENROUTE)
        self.emit("rtl", vehicle=self.vid(i), reason="neutralized")
        if not self._plan_to(i, self._nearest_launch(i)):
            self._halt(i)

    def _replan_blocked(self, i: int) -> None:
        goal = int(self.paths[i, self.path_len[i] - 1])
        ok = self._plan_to(i, goal, avoid_occupied=True)
        if not ok and self.tactic_of[i] is not None and self.replans[i] >= self.p.max_replans:
            t = self.tactics[self.tactic_of[i]]
            taken = {int(g) for g in self.goal if g >= 0} - {int(self.goal[i])}
            cands = self._goal_candidates(t.spec, i, 1, taken | {goal})
            if cands:
                self.goal[i] = cands[0]
                ok = self._plan_to(i, cands[0], avoid_occupied=True)
        self.replans[i] += 1
        self.emit("replan", vehicle=self.vid(i), ok=bool(ok))
        if ok:
            self._unblock(i)
        elif self._yield(i):
            self._unblock(i)

    def _blocker(self, i: int) -> int | None:
        """Vehicle sitting on ``i``'s next cell, if that cell is exclusive."""
        k = self.path_idx[i] + 1
        if k >= self.path_len[i]:
            return None
        nxt = self.paths[i, k]
        if self.world.shared[nxt]:
            return None
        hit = ((self.cell == nxt) & (self.layer == self.layer[i])).nonzero()[0]
        return int(hit[0]) if hit.size else None

    def _contested(self, j: int) -> np.ndarray:
        rest = self.paths[j, self.path_idx[j] : self.path_len[j]]
        return rest[~self.world.shared[rest]]

    def _yield(self, i: int) -> bool:
        """Break a head-on standoff: the higher id backs off the other's route."""
        j = self._blocker(i)
        if j is None or self._blocker(j) != i or self.ids[j] > self.ids[i]:
            return False
        goal = int(self.paths[i, self.path_len[i] - 1])
        lay = self.layer[i]
        refuge = self._passable(i) & ((self.occ[lay] == 0) | self.world.shared)
        refuge[self._contested(j)] = False
        refuge[self.cell[i]] = False
        for c in self.world.nearest_cells(int(self.cell[i]), _YIELD_CANDIDATES, refuge):
            if self._plan_to(i, c, avoid_occupied=True):
                self.yielding[i] = [goal, j, 0]
                x, y = self.world.xy(c)
                self.emit("yield", vehicle=self.vid(i), to=self.vid(j), cell=[x, y])
                return True
        return False

    def _resume(self, i: int) -> None:
        """Send a parked yielder on once the other vehicle no longer needs its way."""
        goal, j, waited = self.yielding[i]
        if waited < _YIELD_PATIENCE and _MOVING[self.status[j]] and self.layer[j] == self.layer[i]:
            path = kernels.astar(self._passable(i), self.world.width, int(self.cell[i]), goal)
            if np.isin(path, self._contested(j)).any():
                self.yielding[i][2] += 1
                return
        del self.yielding[i]
        if not self._plan_to(i, goal):
            self._halt(i)
            self._mark_blocked(i)

    def _move(self) -> None:
        unblock, overdue, arrived = self._k.move(
            self.status,
            _MOVING,
            self.stranded,
            self.paths,
            self.path_len,
            self.path_idx,
            self.cell,
            self.layer,
            self.occ,
            self.wait,
            self.world.shared,
            self.is_uav,
            self.battery,
            self.drain,
            self.blocked,
            self.p.block_ticks,
        )
        for i in unblock.tolist():
            self._unblock(i)
        for i in overdue.tolist():
            if not self.blocked[i]:
                self._mark_blocked(i)
            self._replan_blocked(i)
        for i in arrived.tolist():
            self._arrive(i)
        for i in [i for i in self.yielding if self.path_idx[i] == self.path_len[i] - 1]:
            self._resume(i)

    def _arrive(self, i: int) -> None:
        if i in self.yielding:
            return
        st = int(self.status[i])
        if st == _S_TASKED:
            tid = self.tactic_of[i]
            if tid is not None:
                self.tactics[tid].arrived.add(i)
                self.emit("progress", vehicle=self.vid(i), tactic=tid)
        elif st == _S_RETURNING:
            if self.world.shared[self.cell[i]]:
                self._set_band(i, _B_GROUND)
                if self.is_uav[i] or self.battery[i] <= 0.5:
                    self.status[i] = _S_CHARGING
                    self.timer[i] = self.p.charge_ticks
                else:
                    self.status[i] = _S_IDLE
        elif st == _S_NEUTRALIZED:
            self._set_band(i, _B_GROUND)
            self.status[i] = _S_AT_MEDIC
            self.timer[i] = self.p.revive_ticks

    # -------------------------------------------------------- subsystems

    def _comm(self) -> None:
        r = self.rng.random(self.n)
        lost, back = self._k.comm(r, self.cell, self.connected, self.drop_p, self.restore_p, self._indoor)
        if lost.size:
            self.emit("comm_loss", vehicles=self.ids[lost].tolist())
        if back.size:
            self.emit("comm_restore", vehicles=self.ids[back].tolist())

    def _battery(self) -> None:
        low, dead = self._k.battery(
            self.battery, self.drain, self.is_uav, self.band, self.stranded, self.status, _WORKING, self.p.rtl_battery
        )
        for i in low.tolist():
            on_pad = self.world.shared[self.cell[i]] and self.band[i] == _B_GROUND
            if on_pad and self.status[i] == _S_IDLE:
                self.status[i] = _S_CHARGING
                self.timer[i] = self.p.charge_ticks
                continue
            self.emit("battery_low", vehicle=self.vid(i), battery=round(float(self.battery[i]), 4))
            if self.tactic_of[i] is not None:
                self._swap(i)
            self._detach(i)
            self._rtl(i, "battery")
        for i in dead.tolist():
            if self.status[i] != _S_NEUTRALIZED:
                self._neutralize(i, None, "battery")

    def _swap(self, i: int) -> None:
        tid = self.tactic_of[i]
        t = self.tactics[tid]
        self._swap_seq += 1
        req_id = f"swap-{self._swap_seq}"
        slot = self.slot_of[i] or Requirement(1, self.specs[i].kind)
        self.emit("swap_request", request=req_id, vehicle=self.vid(i), tactic=tid)
        goal = int(self.goal[i]) if self.goal[i] >= 0 else int(self.cell[i])
        gx, gy = self.world.xy(goal)
        spec = TacticSpec(f"{tid}/{req_id}", t.spec.kind, t.spec.target, (Requirement(1, slot.kind, slot.camera, slot.payload),))
        try:
            alloc = allocate(spec, self._snapshots(exclude=i), (gx, gy))
        except AllocationFailed as exc:
            self.emit("allocation_failed", tactic=tid, reason=f"swap: {exc}", request=req_id)
            return
        j = self.index[alloc.vehicle_ids[0]]
        self.tactic_of[j] = tid
        self.slot_of[j] = slot
        self.indoor_ok[j] = self.indoor_ok[i]
        t.vehicles.append(j)
        self.emit("swap", request=req_id, old=self.vid(i), new=self.vid(j), tactic=tid, slot=slot.to_dict())
        if self.is_uav[j] and self.band[j] == _B_GROUND:
            self._set_band(j, _B_BUILT_ENV)
        self.goal[i] = -1
        self.goal[j] = goal
        self.status[j] = _S_TASKED
        self.replans[j] = 0
        if not self._plan_to(j, goal):
            self._halt(j)
            self._mark_blocked(j)

    def _artifacts(self) -> None:
        seen, spotters, occupied, inside = self._k.artifact(
            self.cell,
            self.world.width,
            self.status,
            self.band,
            self.has_camera,
            _ALIVE,
            self.art_x,
            self.art_y,
            self.art_present,
            self.art_state,
            self.art_threat,
            self.art_radius,
            self.p.detect_radius,
            _B_BUILT_ENV,
            self.dwell,
        )
        for a, i in zip(seen.tolist(), spotters.tolist()):
            self._detect(a, i)
        for a in occupied.tolist():
            # vehicles neutralized earlier this tick drop out of later artifacts
            self._interact(a, inside[:, a] & _ALIVE[self.status])

    def _detect(self, a: int, i: int) -> None:
        spec = self.art_specs[a]
        self.art_state[a] = ArtifactState.DETECTED
        self.emit("artifact_detected", artifact=spec.id, artifact_type=spec.type.value, vehicle=self.vid(i))
        if spec.type is ArtifactType.MEDIC_MARKER:
            self.medic_cell = self._medic_target(spec)

    def resolve_artifact_interaction(self, a: int, inside: np.ndarray) -> None:
        """Apply one tick of artifact ``a`` against the vehicles flagged in ``inside``.

        A co-present set that satisfies the required payloads neutralizes the
        artifact at once; otherwise an active artifact neutralizes every
        vehicle that has now dwelt ``neutralize_dwell`` consecutive ticks.
        """
        spec = self.art_specs[a]
        members = inside.nonzero()[0]
        if members.size == 0:
            self.dwell[:, a] = 0
            return
        if self._satisfies(spec, members):
            self.art_state[a] = ArtifactState.NEUTRALIZED
            self.art_active[a] = False
            self.dwell[:, a] = 0
            self.emit("artifact_neutralized", artifact=spec.id, vehicles=[self.vid(i) for i in members.tolist()])
            return
        if not self.art_active[a]:
            return
        col = self.dwell[:, a]
        col[~inside] = 0
        col[inside] += 1
        for i in (col >= self.p.neutralize_dwell).nonzero()[0].tolist():
            self.dwell[i, :] = 0
            self._neutralize(i, spec.id)

    _interact = resolve_artifact_interaction

    def _satisfies(self, spec: ArtifactSpec, members: np.ndarray) -> bool:
        if members.size < spec.simultaneous:
            return False
        have: dict[Any, int] = {}
        for i in members.tolist():
            p = self.specs[i].payload
            have[p] = have.get(p, 0) + 1
        return all(have.get(p, 0) >= k for p, k in spec.required.items())

    def _medic_target(self, spec: ArtifactSpec) -> int:
        w = self.world
        near = w.nearest_cells(w.cell(spec.x, spec.y), 1, w.ground)
        return near[0] if near else w.cell(spec.x, spec.y)

    def _tactics_tick(self) -> None:
        for t in list(self._executing.values()):
            if t.state is not TacticState.EXECUTING:
                continue
            if not t.vehicles:
                self._finish(t, TacticState.FAILED, reason="no_vehicles")
                continue
            if all(i in t.arrived for i in t.vehicles):
                t.hold += 1
                hold_s = t.spec.hold_s if t.spec.hold_s is not None else self.p.hold_s.get(t.spec.kind.value, 0)
                if t.hold > hold_s:
                    self._finish(t, TacticState.COMPLETED)
                    if t.node is not None:
                        self._check_node(t.node)

    def _timers(self) -> None:
        busy = _PARKED[self.status].nonzero()[0]
        if busy.size == 0:
            return
        self.timer[busy] -= 1
        for i in busy[self.timer[busy] <= 0].tolist():
            if self.status[i] == _S_AT_MEDIC:
                self.emit("revived", vehicle=self.vid(i))
                if self.world.shared[self.cell[i]]:
                    self.battery[i] = 1.0
            else:
                self.battery[i] = 1.0
            self.status[i] = _S_IDLE
            self._halt(i)

    def _telemetry(self) -> None:
        on = self.connected.nonzero()[0]
        c = self.cell[on]
        w = self.world.width
        self.emit(
            "telemetry",
            vehicles=self.ids[on].tolist(),
            x=(c % w).tolist(),
            y=(c // w).tolist(),
            band=self.band[on].tolist(),
            battery=np.rint(self.battery[on] * 100.0).astype(np.int64).tolist(),
        )

    def _demand(self) -> float:
        win = self.script.demand.window_s
        for dq in (self._issued_ticks, self._neutral_ticks):
            while dq and dq[0] <= self.tick - win:
                dq.popleft()
        w1, w2, w3, w4 = self.script.demand.weights
        raw = w1 * (self._authoring_open > 0) + w2 * len(self._issued_ticks) + w3 * int(self.blocked.sum()) + w4 * len(self._neutral_ticks)
        return min(1.0, raw / self.script.demand.cap)

    # ------------------------------------------------------------ commands

    def _command_target(self, vid: int, what: str) -> int | None:
        i = self.index[vid]
        if not self.connected[i]:
            self.emit("warning", message=f"{what}: vehicle {vid} is out of communication")
            return None
        if self.status[i] == _S_NEUTRALIZED:
            self.emit("warning", message=f"{what}: vehicle {vid} is neutralized")
            return None
        return i

    def nudge(self, vid: int) -> None:
        i = self._command_target(vid, "nudge")
        if i is None:
            return
        self.yielding.pop(i, None)
        if self.status[i] not in (_S_BLOCKED, _S_TASKED):
            self.emit("warning", message=f"nudge: vehicle {vid} is not blocked or tasked")
            return
        w = self.world
        if self.is_uav[i]:
            if self.band[i] >= _B_ENROUTE:
                self.emit("warning", message=f"nudge: vehicle {vid} already at enroute altitude")
                return
            self._set_band(i, int(self.band[i]) + 1)
            self.emit("nudge", vehicle=vid, band=int(self.band[i]))
        else:
            x, y = self.xy(i)
            dx, dy = self.p.ugv_nudge
            nx = min(max(x + dx, 0), w.width - 1)
            ny = min(max(y + dy, 0), w.height - 1)
            c = w.cell(nx, ny)
            if self._passable(i)[c] and (self.occ[0, c] == 0 or w.shared[c]) and c != self.cell[i]:
                self.occ[0, self.cell[i]] -= 1
                self.occ[0, c] += 1
                self.cell[i] = c
            fx, fy = self.xy(i)
            self.emit("nudge", vehicle=vid, cell=[fx, fy])
        goal = int(self.goal[i]) if self.goal[i] >= 0 else int(self.paths[i, self.path_len[i] - 1])
        ok = self._plan_to(i, goal)
        if not ok:
            self._halt(i)
        self.emit("replan", vehicle=vid, ok=bool(ok))
        if ok:
            self._unblock(i)
            self.wait[i] = 0

    def _vehicles_for(self, args) -> list[int]:
        if args.get("all"):
            return [s.id for s in self.specs]
        vids = [int(v) for v in args.get("vehicles", ())]
        tid = args.get("tactic")
        if tid is not None and tid in self.tactics:
            vids += [self.vid(i) for i in self.tactics[tid].vehicles]
        return sorted(set(vids))

    def _do_action(self, a) -> None:
        act, args = a.action, a.args
        if act == "load_plan":
            self._release(self.plan.load())
        elif act == "signal":
            name = args["name"]
            if name in self.plan.fired:
                self.emit("warning", message=f"signal {name} already fired; ignored")
                return
            self.emit("signal", name=name)
            self._release(self.plan.issue_signal(name))
        elif act == "author_tactic":
            spec: TacticSpec = args["tactic"]
            auto = bool(args.get("issue", spec.id not in self.explicit_issue))
            self.emit("authoring_start", tactic=spec.id)
            end = self.tick + int(args["duration_s"])
            if end == self.tick:
                self._finish_authoring(spec, auto)
            else:
                self._authoring_due.setdefault(end, []).append((spec, auto))
                self._authoring_open += 1
        elif act == "issue_tactic":
            t = self.tactics.get(args["tactic"])
            if t is None or t.state is not TacticState.CREATED:
                self.emit("warning", message=f"issue_tactic: {args['tactic']} is not awaiting issue")
            else:
                self._issue(t)
        elif act == "nudge":
            self.nudge(int(args["vehicle"]))
        elif act in ("stop", "rtl"):
            tid = args.get("tactic")
            if act == "stop" and tid is not None and tid in self.tactics:
                t = self.tactics[tid]
                if t.state is TacticState.EXECUTING:
                    self._finish(t, TacticState.CANCELLED)
            for vid in self._vehicles_for(args):
                i = self._command_target(vid, act)
                if i is None:
                    continue
                t = self._detach(i)
                if act == "stop":
                    self._unblock(i)
                    if self.status[i] in (_S_TASKED, _S_RETURNING):
                        self.status[i] = _S_IDLE
                        self._halt(i)
                elif self.status[i] in (_S_IDLE, _S_TASKED, _S_BLOCKED):
                    self._rtl(i, "commander")
                if t is not None and t.state is TacticState.EXECUTING and not t.vehicles:
                    self._finish(t, TacticState.CANCELLED)
        elif act == "deploy_medic":
            x, y = (int(v) for v in args["position"])
            aid = str(args.get("id", "medic"))
            idx = next((k for k, s in enumerate(self.art_specs) if s.id == aid), None)
            spec = ArtifactSpec(aid, ArtifactType.MEDIC_MARKER, x, y, present=True)
            if idx is None:
                self.art_specs.append(spec)
                self._init_artifact_arrays_keep()
            else:
                self.art_specs[idx] = spec
                self.art_x[idx], self.art_y[idx] = x, y
                self.art_present[idx] = True
                self.art_state[idx] = ArtifactState.HIDDEN

    def _init_artifact_arrays_keep(self) -> None:
        state, active, dwell = self.art_state, self.art_active, self.dwell
        self._init_artifact_arrays()
        k = state.size
        self.art_state[:k] = state
        self.art_active[:k] = active
        self.dwell[:, :k] = dwell

    def _finish_authoring(self, spec: TacticSpec, auto: bool) -> None:
        t = self._create(spec, "commander")
        if auto:
            self._issue(t)

    # ---------------------------------------------------------------- run

    def start(self) -> None:
        """Emit the fleet roster and release start nodes (if no explicit load_plan)."""
        if self._started:
            return
        self._started = True
        self.emit("fleet", vehicles=[v.to_dict() for v in self.specs])
        if not any(a.action == "load_plan" for a in self.script.actions):
            self._release(self.plan.load())

    def step(self) -> float:
        """Advance one 1 s tick; returns that tick's demand sample."""
        self.start()
        tick = self.tick = self._next_tick
        self.t_ms = tick * 1000
        for spec, auto in self._authoring_due.pop(tick, ()):
            self._authoring_open -= 1
            self._finish_authoring(spec, auto)
        while self.actions and self.actions[0].t_ms <= self.t_ms:
            self._do_action(self.actions.popleft())
        self._comm()
        self._move()
        self._battery()
        self._artifacts()
        self._tactics_tick()
        self._timers()
        if tick % self.p.telemetry_period == 0:
            self._telemetry()
        self._next_tick = tick + 1
        d = self._demand()
        self.demand_samples.append(d)
        return d

    def run(self) -> SimResult:
        n_ticks = self.script.duration_s
        # the event log is a large acyclic structure; skip cyclic GC passes over it
        paused = gc.isenabled()
        gc.disable()
        try:
            while self._next_tick < n_ticks:
                self.step()
        finally:
            if paused:
                gc.enable()
        demand = np.array(self.demand_samples, dtype=float)
        return SimResult(self.events, DemandTrace(np.arange(demand.size, dtype=np.int64) * 1000, demand))


def run_scenario(script: ScenarioScript) -> SimResult:
    """Run ``script`` to completion; identical scripts give identical results."""
    return Simulation(script).run()
