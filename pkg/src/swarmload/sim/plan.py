"""Mission-plan gating: which nodes are released by signals and completed predecessors."""

from __future__ import annotations

import logging

from ..errors import ScenarioError
from .scenario import MissionPlan, PlanNode

log = logging.getLogger(__name__)


class PlanState:
    """Tracks fired signals, completed nodes and released nodes for one plan.

    A node is released once the plan is loaded, every gating signal has fired
    and every predecessor node has completed.  Each node is released at most
    once.
    """

    def __init__(self, plan: MissionPlan):
        self.plan = plan
        self.loaded = False
        self.fired: set[str] = set()
        self.completed: set[str] = set()
        self.released: set[str] = set()

    def _ready(self, node: PlanNode) -> bool:
        return (
            self.loaded
            and node.id not in self.released
            and all(s in self.fired for s in node.signals)
            and all(p in self.completed for p in node.after)
        )

    def _sweep(self) -> list[PlanNode]:
        out = [n for n in self.plan.nodes if self._ready(n)]
        self.released.update(n.id for n in out)
        return out

    def load(self) -> list[PlanNode]:
        if self.loaded:
            log.warning("mission plan already loaded")
            return []
        self.loaded = True
        return self._sweep()

    def issue_signal(self, name: str) -> list[PlanNode]:
        """Fire ``name``; returns the nodes this newly releases."""
        if name not in self.plan.signals:
            raise ScenarioError(f"unknown signal {name!r}")
        if name in self.fired:
            log.warning("signal %s already fired; ignoring", name)
            return []
        self.fired.add(name)
        return self._sweep()

    def complete(self, node_id: str) -> list[PlanNode]:
        if node_id in self.completed:
            return []
        self.completed.add(node_id)
        return self._sweep()


def issue_signal(state: PlanState, name: str) -> list[PlanNode]:
    return state.issue_signal(name)
