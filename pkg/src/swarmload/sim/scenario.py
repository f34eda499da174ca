"""Scenario script types, JSON loading and pre-run validation."""

from __future__ import annotations

import enum
import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from ..errors import ScenarioError
from .world import Building, Rect, World

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "scenarios"


class VehicleKind(str, enum.Enum):
    UGV = "UGV"
    UAV = "UAV"


class Instantiation(str, enum.Enum):
    HARDWARE = "hardware"
    VIRTUAL = "virtual"


class Camera(str, enum.Enum):
    FORWARD = "forward"
    DOWNWARD = "downward"
    BOTH = "both"
    NONE = "none"


class Payload(str, enum.Enum):
    ELECTRONIC = "electronic"
    ANTI_PERSONNEL = "anti-personnel"
    NONE = "none"


class TacticKind(str, enum.Enum):
    SURVEIL = "Surveil"
    GOTO = "Goto"
    EXPLORE = "Explore"
    CORDON = "Cordon"
    NUDGE = "Nudge"
    STOP = "Stop"
    RTL = "RTL"


OBJECTIVE_TACTICS = (TacticKind.SURVEIL, TacticKind.GOTO, TacticKind.EXPLORE, TacticKind.CORDON)


class ArtifactType(str, enum.Enum):
    INTEL = "intel"
    HOSTILE = "hostile"
    EXPLOSIVE = "explosive"
    HIGH_VALUE_TARGET = "high-value-target"
    MEDIC_MARKER = "medic-marker"


def _enum(cls, value, what):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ScenarioError(f"{what}: {value!r} is not one of {allowed}") from None


@dataclass(frozen=True)
class VehicleSpec:
    id: int
    kind: VehicleKind
    instantiation: Instantiation = Instantiation.VIRTUAL
    camera: Camera = Camera.NONE
    payload: Payload = Payload.NONE
    endurance_s: float | None = None

    @property
    def vclass(self) -> str:
        return f"{self.instantiation.value}_{self.kind.value.lower()}"

    def has_camera(self, facing: str) -> bool:
        return self.camera is Camera.BOTH or self.camera.value == facing

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "instantiation": self.instantiation.value,
            "camera": self.camera.value,
            "payload": self.payload.value,
        }


@dataclass(frozen=True)
class Requirement:
    count: int = 1
    kind: VehicleKind | None = None
    camera: str | None = None  # "forward" | "downward"
    payload: Payload | None = None

    def matches(self, v: VehicleSpec) -> bool:
        if self.kind is not None and v.kind is not self.kind:
            return False
        if self.camera is not None and not v.has_camera(self.camera):
            return False
        if self.payload is not None and v.payload is not self.payload:
            return False
        return True

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"count": self.count}
        if self.kind is not None:
            d["kind"] = self.kind.value
        if self.camera is not None:
            d["camera"] = self.camera
        if self.payload is not None:
            d["payload"] = self.payload.value
        return d

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> Requirement:
        count = int(doc.get("count", 1))
        if count < 1:
            raise ScenarioError("requirement count must be >= 1")
        kind = doc.get("kind")
        camera = doc.get("camera")
        payload = doc.get("payload")
        if camera is not None and camera not in ("forward", "downward"):
            raise ScenarioError(f"requirement camera must be forward or downward, got {camera!r}")
        return cls(
            count,
            None if kind in (None, "any") else _enum(VehicleKind, kind, "requirement kind"),
            camera,
            None if payload in (None, "any") else _enum(Payload, payload, "requirement payload"),
        )


@dataclass(frozen=True)
class TacticSpec:
    id: str
    kind: TacticKind
    target: Mapping[str, Any] | None = None
    requirements: tuple[Requirement, ...] = ()
    vehicles: tuple[int, ...] | None = None
    hold_s: int | None = None

    @property
    def n_required(self) -> int:
        return sum(r.count for r in self.requirements)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> TacticSpec:
        try:
            tid = str(doc["id"])
            kind = _enum(TacticKind, doc["kind"], f"tactic {doc.get('id')}")
        except KeyError as exc:
            raise ScenarioError(f"tactic missing field {exc.args[0]!r}") from None
        if kind not in OBJECTIVE_TACTICS:
            raise ScenarioError(f"tactic {tid}: {kind.value} is a vehicle command, not an allocatable tactic")
        target = doc.get("target")
        if target is not None and not (set(target) & {"building", "point", "polygon"}):
            raise ScenarioError(f"tactic {tid}: target needs building, point or polygon")
        reqs = tuple(Requirement.from_dict(r) for r in doc.get("requirements", ()))
        vehicles = doc.get("vehicles")
        if not reqs and not vehicles:
            raise ScenarioError(f"tactic {tid}: needs requirements or an explicit vehicle list")
        if target is None:
            raise ScenarioError(f"tactic {tid}: target required")
        hold = doc.get("hold_s")
        return cls(
            tid,
            kind,
            dict(target),
            reqs,
            None if vehicles is None else tuple(int(v) for v in vehicles),
            None if hold is None else int(hold),
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "kind": self.kind.value, "target": dict(self.target or {})}
        if self.requirements:
            d["requirements"] = [r.to_dict() for r in self.requirements]
        if self.vehicles is not None:
            d["vehicles"] = list(self.vehicles)
        if self.hold_s is not None:
            d["hold_s"] = self.hold_s
        return d


@dataclass(frozen=True)
class PlanNode:
    id: str
    tactics: tuple[TacticSpec, ...]
    signals: tuple[str, ...] = ()
    after: tuple[str, ...] = ()


@dataclass(frozen=True)
class MissionPlan:
    nodes: tuple[PlanNode, ...] = ()
    signals: tuple[str, ...] = ()

    def node(self, nid: str) -> PlanNode:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise KeyError(nid)

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate mission-plan node ids")
        known = set(ids)
        declared = set(self.signals)
        for n in self.nodes:
            if not n.tactics:
                raise ScenarioError(f"plan node {n.id} has no tactics")
            for s in n.signals:
                if s not in declared:
                    raise ScenarioError(f"plan node {n.id} gated by unknown signal {s!r}")
            for p in n.after:
                if p not in known:
                    raise ScenarioError(f"plan node {n.id} follows unknown node {p!r}")
        # Kahn's algorithm for acyclicity
        indeg = {n.id: len(n.after) for n in self.nodes}
        children: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for p in n.after:
                children[p].append(n.id)
        ready = [nid for nid, d in indeg.items() if d == 0]
        seen = 0
        while ready:
            nid = ready.pop()
            seen += 1
            for c in children[nid]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if seen != len(self.nodes):
            raise ScenarioError("mission plan has a cycle")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any] | None) -> MissionPlan:
        if not doc:
            return cls()
        nodes = []
        for nd in doc.get("nodes", ()):
            try:
                nid = str(nd["id"])
                tactics = tuple(TacticSpec.from_dict(t) for t in nd["tactics"])
            except KeyError as exc:
                raise ScenarioError(f"plan node missing field {exc.args[0]!r}") from None
            gate = nd.get("gate", {})
            nodes.append(
                PlanNode(nid, tactics, tuple(gate.get("signals", ())), tuple(str(a) for a in gate.get("after", ())))
            )
        plan = cls(tuple(nodes), tuple(doc.get("signals", ())))
        plan.validate()
        return plan

    def to_dict(self) -> dict[str, Any]:
        return {
            "signals": list(self.signals),
            "nodes": [
                {
                    "id": n.id,
                    "gate": {"signals": list(n.signals), "after": list(n.after)},
                    "tactics": [t.to_dict() for t in n.tactics],
                }
                for n in self.nodes
            ],
        }


_DEFAULT_INTERACTION = {
    ArtifactType.HOSTILE: {Payload.ANTI_PERSONNEL: 1},
    ArtifactType.EXPLOSIVE: {Payload.ELECTRONIC: 1},
    ArtifactType.HIGH_VALUE_TARGET: {Payload.ANTI_PERSONNEL: 1},
}


@dataclass(frozen=True)
class ArtifactSpec:
    id: str
    type: ArtifactType
    x: int
    y: int
    active: bool = False
    threat_radius: int = 1
    required: Mapping[Payload, int] = field(default_factory=dict)
    simultaneous: int = 1
    present: bool = True

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> ArtifactSpec:
        try:
            aid = str(doc["id"])
            typ = _enum(ArtifactType, doc["type"], f"artifact {doc.get('id')}")
            x, y = (int(v) for v in doc["position"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed artifact: {exc}") from None
        threat = typ in (ArtifactType.HOSTILE, ArtifactType.EXPLOSIVE)
        if "required" in doc:
            required = {
                _enum(Payload, k, f"artifact {aid} payload"): int(v) for k, v in doc["required"].items()
            }
        else:
            required = dict(_DEFAULT_INTERACTION.get(typ, {}))
        return cls(
            aid,
            typ,
            x,
            y,
            bool(doc.get("active", threat)),
            int(doc.get("threat_radius", 1)),
            required,
            int(doc.get("simultaneous", max(1, sum(required.values())))),
            bool(doc.get("present", True)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "type": self.type.value,
            "position": [self.x, self.y],
            "active": self.active,
            "threat_radius": self.threat_radius,
            "required": {k.value: v for k, v in self.required.items()},
            "simultaneous": self.simultaneous,
            "present": self.present,
        }


@dataclass(frozen=True)
class CommZone:
    rect: Rect
    drop: float
    restore: float


@dataclass(frozen=True)
class CommModel:
    drop: float = 0.0
    restore: float = 0.25
    zones: tuple[CommZone, ...] = ()

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any] | None) -> CommModel:
        if not doc:
            return cls()
        zones = tuple(
            CommZone(Rect.parse(z["rect"]), float(z.get("drop", 0.0)), float(z.get("restore", 0.25)))
            for z in doc.get("zones", ())
        )
        model = cls(float(doc.get("drop", 0.0)), float(doc.get("restore", 0.25)), zones)
        for p in [model.drop, model.restore] + [v for z in zones for v in (z.drop, z.restore)]:
            if not 0.0 <= p <= 1.0:
                raise ScenarioError(f"comm probability {p} outside [0, 1]")
        return model

    def to_dict(self) -> dict[str, Any]:
        return {
            "drop": self.drop,
            "restore": self.restore,
            "zones": [{"rect": z.rect.to_list(), "drop": z.drop, "restore": z.restore} for z in self.zones],
        }


@dataclass(frozen=True)
class SimParams:
    """Behaviour knobs with their defaults (all times in 1 s ticks)."""

    block_ticks: int = 5
    neutralize_dwell: int = 3
    rtl_battery: float = 0.2
    detect_radius: int = 3
    revive_ticks: int = 30
    charge_ticks: int = 60
    telemetry_period: int = 10
    uav_endurance_s: float = 900.0
    ugv_endurance_s: float = 7200.0
    ugv_nudge: tuple[int, int] = (0, 1)
    max_replans: int = 3
    hold_s: Mapping[str, int] = field(
        default_factory=lambda: {"Goto": 0, "Surveil": 60, "Explore": 30, "Cordon": 120}
    )

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any] | None) -> SimParams:
        if not doc:
            return cls()
        base = cls()
        kwargs = {}
        for name in (
            "block_ticks",
            "neutralize_dwell",
            "revive_ticks",
            "charge_ticks",
            "telemetry_period",
            "detect_radius",
            "max_replans",
        ):
            if name in doc:
                kwargs[name] = int(doc[name])
        for name in ("rtl_battery", "uav_endurance_s", "ugv_endurance_s"):
            if name in doc:
                kwargs[name] = float(doc[name])
        if "ugv_nudge" in doc:
            kwargs["ugv_nudge"] = tuple(int(v) for v in doc["ugv_nudge"])
        if "hold_s" in doc:
            kwargs["hold_s"] = {**base.hold_s, **{k: int(v) for k, v in doc["hold_s"].items()}}
        params = cls(**kwargs)
        if params.telemetry_period < 1 or params.block_ticks < 1 or params.neutralize_dwell < 1:
            raise ScenarioError("tick-count parameters must be >= 1")
        return params

    def to_dict(self) -> dict[str, Any]:
        return {
            "block_ticks": self.block_ticks,
            "neutralize_dwell": self.neutralize_dwell,
            "rtl_battery": self.rtl_battery,
            "detect_radius": self.detect_radius,
            "revive_ticks": self.revive_ticks,
            "charge_ticks": self.charge_ticks,
            "telemetry_period": self.telemetry_period,
            "uav_endurance_s": self.uav_endurance_s,
            "ugv_endurance_s": self.ugv_endurance_s,
            "ugv_nudge": list(self.ugv_nudge),
            "max_replans": self.max_replans,
            "hold_s": dict(self.hold_s),
        }


@dataclass(frozen=True)
class DemandConfig:
    """Commander task-demand weights: authoring, recent issues, blocked now, recent neutralizations."""

    weights: tuple[float, float, float, float] = (3.0, 1.0, 0.5, 1.0)
    cap: float = 20.0
    window_s: int = 60

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any] | None) -> DemandConfig:
        if not doc:
            return cls()
        w = tuple(float(v) for v in doc.get("weights", cls.weights))
        if len(w) != 4 or any(v < 0 for v in w):
            raise ScenarioError("demand weights must be four non-negative numbers")
        cap = float(doc.get("cap", cls.cap))
        if cap <= 0:
            raise ScenarioError("demand cap must be positive")
        return cls(w, cap, int(doc.get("window_s", cls.window_s)))  # type: ignore[arg-type]

    def to_dict(self) -> dict[str, Any]:
        return {"weights": list(self.weights), "cap": self.cap, "window_s": self.window_s}


ACTIONS = frozenset(
    {"load_plan", "signal", "author_tactic", "issue_tactic", "nudge", "stop", "rtl", "deploy_medic"}
)


@dataclass(frozen=True)
class CommanderAction:
    t_ms: int
    action: str
    args: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> CommanderAction:
        if "t_ms" in doc:
            t = int(doc["t_ms"])
        elif "t_s" in doc:
            t = int(round(float(doc["t_s"]) * 1000))
        else:
            raise ScenarioError(f"commander action without time: {doc!r}")
        action = doc.get("action")
        if action not in ACTIONS:
            raise ScenarioError(f"unknown commander action {action!r}")
        args = {k: v for k, v in doc.items() if k not in ("t_ms", "t_s", "action")}
        if action == "author_tactic":
            args["tactic"] = TacticSpec.from_dict(args.get("tactic") or {})
            args["duration_s"] = int(args.get("duration_s", 30))
            if args["duration_s"] < 0:
                raise ScenarioError("authoring duration must be >= 0")
        return cls(t, action, args)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"t_ms": self.t_ms, "action": self.action}
        for k, v in self.args.items():
            d[k] = v.to_dict() if isinstance(v, TacticSpec) else v
        return d


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    duration_s: int
    world: World
    fleet: tuple[VehicleSpec, ...]
    plan: MissionPlan = MissionPlan()
    artifacts: tuple[ArtifactSpec, ...] = ()
    actions: tuple[CommanderAction, ...] = ()
    comm: CommModel = CommModel()
    params: SimParams = SimParams()
    demand: DemandConfig = DemandConfig()
    seed: int = 0

    def with_seed(self, seed: int) -> ScenarioScript:
        return replace(self, seed=int(seed))

    def validate(self) -> None:
        if self.duration_s < 1:
            raise ScenarioError("duration_s must be >= 1")
        ids = [v.id for v in self.fleet]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate vehicle ids")
        vids = set(ids)
        self.plan.validate()
        signals = set(self.plan.signals)
        tactics: dict[str, TacticSpec] = {}

        def add_tactic(spec: TacticSpec):
            if spec.id in tactics:
                raise ScenarioError(f"duplicate tactic id {spec.id!r}")
            tactics[spec.id] = spec
            self._check_target(spec)
            for v in spec.vehicles or ():
                if v not in vids:
                    raise ScenarioError(f"tactic {spec.id} names unknown vehicle {v}")

        for n in self.plan.nodes:
            for t in n.tactics:
                add_tactic(t)
        for a in self.artifacts:
            if not self.world.in_bounds(a.x, a.y):
                raise ScenarioError(f"artifact {a.id} outside map")
        authored_end: dict[str, int] = {}
        prev = 0
        end_ms = self.duration_s * 1000
        for a in self.actions:
            if a.t_ms < prev:
                raise ScenarioError(f"commander action times must be non-decreasing (at {a.t_ms} ms)")
            if a.t_ms >= end_ms:
                raise ScenarioError(f"commander action at {a.t_ms} ms is after the shift ends")
            prev = a.t_ms
            if a.action == "signal":
                name = a.args.get("name")
                if name not in signals:
                    raise ScenarioError(f"unknown signal {name!r}")
            elif a.action == "author_tactic":
                spec = a.args["tactic"]
                add_tactic(spec)
                authored_end[spec.id] = a.t_ms + 1000 * a.args["duration_s"]
            elif a.action == "issue_tactic":
                tid = a.args.get("tactic")
                if tid not in authored_end:
                    raise ScenarioError(f"issue_tactic references unauthored tactic {tid!r}")
                if a.t_ms < authored_end[tid]:
                    raise ScenarioError(f"tactic {tid} issued before its authoring finishes")
            elif a.action in ("nudge",):
                if int(a.args.get("vehicle", -1)) not in vids:
                    raise ScenarioError(f"nudge names unknown vehicle {a.args.get('vehicle')!r}")
            elif a.action in ("stop", "rtl"):
                for v in a.args.get("vehicles", ()):
                    if int(v) not in vids:
                        raise ScenarioError(f"{a.action} names unknown vehicle {v}")
                tid = a.args.get("tactic")
                if tid is not None and tid not in tactics:
                    raise ScenarioError(f"{a.action} names unknown tactic {tid!r}")
            elif a.action == "deploy_medic":
                x, y = (int(v) for v in a.args.get("position", (-1, -1)))
                if not self.world.in_bounds(x, y):
                    raise ScenarioError("deploy_medic position outside map")

    def _check_target(self, spec: TacticSpec) -> None:
        tgt = spec.target or {}
        if "building" in tgt:
            self.world.building(str(tgt["building"]))
        if "point" in tgt:
            x, y = (int(v) for v in tgt["point"])
            if not self.world.in_bounds(x, y):
                raise ScenarioError(f"tactic {spec.id}: point outside map")

    def to_dict(self) -> dict[str, Any]:
        w = self.world
        return {
            "name": self.name,
            "duration_s": self.duration_s,
            "seed": self.seed,
            "world": {
                "width": w.width,
                "height": w.height,
                "launch_zone": w.launch.to_list(),
                "buildings": [{"id": b.id, "rect": b.rect.to_list()} for b in w.buildings],
            },
            "fleet": [
                {**v.to_dict(), **({} if v.endurance_s is None else {"endurance_s": v.endurance_s})}
                for v in self.fleet
            ],
            "plan": self.plan.to_dict(),
            "artifacts": [a.to_dict() for a in self.artifacts],
            "actions": [a.to_dict() for a in self.actions],
            "comm": self.comm.to_dict(),
            "params": self.params.to_dict(),
            "demand": self.demand.to_dict(),
        }


def _parse_fleet(entries: Sequence[Mapping[str, Any]]) -> tuple[VehicleSpec, ...]:
    fleet: list[VehicleSpec] = []
    next_id = 1
    for e in entries:
        count = int(e.get("count", 1))
        for _ in range(count):
            vid = int(e["id"]) if "id" in e and count == 1 else next_id
            end = e.get("endurance_s")
            fleet.append(
                VehicleSpec(
                    vid,
                    _enum(VehicleKind, e.get("kind"), "vehicle kind"),
                    _enum(Instantiation, e.get("instantiation", "virtual"), "vehicle instantiation"),
                    _enum(Camera, e.get("camera", "none"), "vehicle camera"),
                    _enum(Payload, e.get("payload", "none"), "vehicle payload"),
                    None if end is None else float(end),
                )
            )
            next_id = max(next_id, vid) + 1
    return tuple(fleet)


def scenario_from_dict(doc: Mapping[str, Any]) -> ScenarioScript:
    try:
        wd = doc["world"]
        world = World(
            int(wd["width"]),
            int(wd["height"]),
            tuple(Building(str(b["id"]), Rect.parse(b["rect"])) for b in wd.get("buildings", ())),
            Rect.parse(wd["launch_zone"]),
        )
        fleet = _parse_fleet(doc["fleet"])
        script = ScenarioScript(
            name=str(doc.get("name", "scenario")),
            duration_s=int(doc["duration_s"]),
            world=world,
            fleet=fleet,
            plan=MissionPlan.from_dict(doc.get("plan")),
            artifacts=tuple(ArtifactSpec.from_dict(a) for a in doc.get("artifacts", ())),
            actions=tuple(CommanderAction.from_dict(a) for a in doc.get("actions", ())),
            comm=CommModel.from_dict(doc.get("comm")),
            params=SimParams.from_dict(doc.get("params")),
            demand=DemandConfig.from_dict(doc.get("demand")),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc}") from None
    script.validate()
    return script


def load_scenario(source: str | Path | Mapping[str, Any]) -> ScenarioScript:
    if isinstance(source, Mapping):
        return scenario_from_dict(source)
    path = Path(source)
    if not path.exists() and (DATA_DIR / f"{source}.json").exists():
        path = DATA_DIR / f"{source}.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {source}: {exc}") from None
    return scenario_from_dict(doc)


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("*.json"))
