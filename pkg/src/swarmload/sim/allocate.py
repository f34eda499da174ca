"""Dispatcher: pick nearby capable vehicles for a tactic."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..errors import SwarmloadError
from .scenario import Requirement, TacticSpec, VehicleSpec


class AllocationFailed(SwarmloadError):
    pass


@dataclass(frozen=True)
class VehicleSnapshot:
    """What the dispatcher can see of one vehicle at allocation time."""

    spec: VehicleSpec
    x: int
    y: int
    idle: bool = True
    connected: bool = True
    neutralized: bool = False
    battery_ok: bool = True

    @property
    def available(self) -> bool:
        return self.idle and self.connected and not self.neutralized and self.battery_ok


def expand_slots(requirements: Sequence[Requirement]) -> list[Requirement]:
    return [r for r in requirements for _ in range(r.count)]


def match_slots(vehicles: Sequence[VehicleSpec], slots: Sequence[Requirement]) -> dict[int, int] | None:
    """Fill every slot, preferring vehicles earlier in ``vehicles``.

    Vehicles are offered one at a time in order and kept once matched
    (augmenting paths only reshuffle slots), so the chosen set is the earliest
    feasible prefix choice.  Returns ``{slot index: vehicle index}`` or
    ``None`` when the slots cannot all be filled.
    """
    slot_owner: dict[int, int] = {}
    adj = [[s for s, req in enumerate(slots) if req.matches(v)] for v in vehicles]

    def augment(vi: int, seen: set[int]) -> bool:
        for s in adj[vi]:
            if s in seen:
                continue
            seen.add(s)
            if s not in slot_owner or augment(slot_owner[s], seen):
                slot_owner[s] = vi
                return True
        return False

    for vi in range(len(vehicles)):
        if len(slot_owner) == len(slots):
            break
        if adj[vi]:
            augment(vi, set())
    return slot_owner if len(slot_owner) == len(slots) else None


@dataclass(frozen=True)
class Allocation:
    vehicle_ids: tuple[int, ...]
    slots: tuple[Requirement | None, ...]


def allocate(spec: TacticSpec, fleet: Sequence[VehicleSnapshot], goal: tuple[int, int]) -> Allocation:
    """Assign vehicles to ``spec`` or raise :class:`AllocationFailed`.

    Without an explicit vehicle list the dispatcher keeps available vehicles
    that match some requirement, orders them by Manhattan distance to ``goal``
    (then id) and takes the nearest set that fills every requirement.  An
    explicit list skips the distance ordering but every listed vehicle must be
    available and together they must still satisfy the requirements.
    """
    slots = expand_slots(spec.requirements)
    if spec.vehicles is not None:
        by_id = {s.spec.id: s for s in fleet}
        chosen = []
        for vid in spec.vehicles:
            snap = by_id.get(vid)
            if snap is None:
                raise AllocationFailed(f"tactic {spec.id}: unknown vehicle {vid}")
            if not snap.available:
                raise AllocationFailed(f"tactic {spec.id}: vehicle {vid} is not available")
            chosen.append(snap)
        if not slots:
            return Allocation(tuple(spec.vehicles), (None,) * len(chosen))
        if len(chosen) < len(slots):
            raise AllocationFailed(f"tactic {spec.id}: {len(chosen)} vehicles listed, {len(slots)} required")
        m = match_slots([c.spec for c in chosen], slots)
        if m is None:
            raise AllocationFailed(f"tactic {spec.id}: listed vehicles lack required capabilities")
        owned = {vi: slots[s] for s, vi in m.items()}
        return Allocation(tuple(spec.vehicles), tuple(owned.get(i) for i in range(len(chosen))))

    gx, gy = goal
    pool = [s for s in fleet if s.available and any(r.matches(s.spec) for r in spec.requirements)]
    pool.sort(key=lambda s: (abs(s.x - gx) + abs(s.y - gy), s.spec.id))
    m = match_slots([s.spec for s in pool], slots)
    if m is None:
        raise AllocationFailed(
            f"tactic {spec.id}: {len(pool)} qualifying vehicles cannot fill {len(slots)} required slots"
        )
    pairs = sorted(((vi, slots[s]) for s, vi in m.items()), key=lambda p: p[0])
    return Allocation(tuple(pool[vi].spec.id for vi, _ in pairs), tuple(req for _, req in pairs))
