"""Serial dictatorship and cadet-proposing deferred acceptance."""

from __future__ import annotations

from typing import Dict, Mapping, Optional, Sequence, Union

from cadetmatch.core import Allocation, BaselinePriority, Cost, Economy, QuasiStrategy
from cadetmatch.mechanisms.trace import MechanismTrace

BranchOrders = Mapping[str, Union[Sequence[str], QuasiStrategy]]


def branch_order(pref) -> tuple:
    if isinstance(pref, QuasiStrategy):
        return pref.branch_order
    return tuple(pref)


def serial_dictatorship(econ: Economy, prefs: BranchOrders) -> Allocation:
    """Each cadet in OML order takes her best branch with a free position, at base cost."""
    left = {b: econ.quotas[b].total for b in econ.branches}
    out = {}
    for i in econ.cadets:
        for b in branch_order(prefs.get(i, ())):
            if left.get(b, 0) > 0:
                left[b] -= 1
                out[i] = (b, Cost.BASE)
                break
    return Allocation.from_assignments(out)


def deferred_acceptance(
    prefs: BranchOrders,
    priorities: Mapping[str, Union[BaselinePriority, Sequence[str]]],
    quotas: Mapping[str, int],
    trace: Optional[MechanismTrace] = None,
) -> Dict[str, Optional[str]]:
    """Cadet-proposing deferred acceptance with simultaneous applications.

    Returns a map from every cadet in ``prefs`` to her branch or ``None``.
    """
    rank = {}
    for b, p in priorities.items():
        ranking = p.ranking if isinstance(p, BaselinePriority) else tuple(p)
        rank[b] = {c: r for r, c in enumerate(ranking)}
    orders = {i: branch_order(p) for i, p in prefs.items()}
    cursor = {i: 0 for i in orders}
    held: Dict[str, list] = {b: [] for b in quotas}
    applying = [i for i in orders]
    step = 0
    while applying:
        step += 1
        proposals: Dict[str, list] = {}
        for i in applying:
            while cursor[i] < len(orders[i]) and orders[i][cursor[i]] not in quotas:
                cursor[i] += 1
            if cursor[i] < len(orders[i]):
                b = orders[i][cursor[i]]
                proposals.setdefault(b, []).append(i)
                if trace is not None:
                    trace.log(step, "apply", i, b)
        applying = []
        for b, new in proposals.items():
            pool = sorted(held[b] + new, key=rank[b].__getitem__)
            keep, drop = pool[: quotas[b]], pool[quotas[b] :]
            if trace is not None:
                for i in new:
                    if i in keep:
                        trace.log(step, "hold", i, b)
                for i in drop:
                    trace.log(step, "reject", i, b)
            held[b] = keep
            for i in drop:
                cursor[i] += 1
                applying.append(i)
    out: Dict[str, Optional[str]] = {i: None for i in orders}
    for b, cadets in held.items():
        for i in cadets:
            out[i] = b
    return out
