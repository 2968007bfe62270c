"""Event logs for mechanism runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from cadetmatch.core import Allocation, Cost


@dataclass(frozen=True)
class TraceEvent:
    step: int
    kind: str  # propose | apply | hold | reject | charge
    cadet: str
    branch: str
    cost: Optional[Cost] = None
    note: str = ""

    def to_json(self) -> dict:
        out = {"step": self.step, "kind": self.kind, "cadet": self.cadet, "branch": self.branch}
        if self.cost is not None:
            out["cost"] = self.cost.value
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class MechanismTrace:
    mechanism: str
    events: List[TraceEvent] = field(default_factory=list)

    def log(self, step: int, kind: str, cadet: str, branch: str, cost: Optional[Cost] = None, note: str = "") -> None:
        self.events.append(TraceEvent(step, kind, cadet, branch, cost, note))

    def replay(self) -> Allocation:
        """Rebuild the final allocation from hold, reject and charge events."""
        held: dict = {}
        for e in self.events:
            if e.kind == "hold":
                held[e.cadet] = (e.branch, e.cost or Cost.BASE)
            elif e.kind == "reject":
                cur = held.get(e.cadet)
                if cur is not None and cur[0] == e.branch and (e.cost is None or cur[1] is e.cost):
                    del held[e.cadet]
            elif e.kind == "charge":
                held[e.cadet] = (e.branch, e.cost)
        return Allocation.from_assignments(held)

    def to_json(self) -> dict:
        return {"mechanism": self.mechanism, "events": [e.to_json() for e in self.events]}

    def __len__(self) -> int:
        return len(self.events)
