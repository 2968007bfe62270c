"""The two quasi-direct mechanisms: USMA-2006 and USMA-2020.

Strategies are :class:`QuasiStrategy` values. Cadets missing from the
strategy profile are treated as ranking no branch.
"""

from __future__ import annotations

import heapq
from typing import Collection, Dict, Mapping, Tuple

from cadetmatch.core import Allocation, BaselinePriority, Cost, Economy, QuasiStrategy
from cadetmatch.mechanisms.classic import deferred_acceptance
from cadetmatch.mechanisms.trace import MechanismTrace
from cadetmatch.policies import BradsoPolicy, ultimate_policy

Strategies = Mapping[str, QuasiStrategy]


class RegimeError(ValueError):
    """The economy does not fit the regime a mechanism was defined for."""


def adjusted_priority(policy: BradsoPolicy, willing: Collection[str]) -> BaselinePriority:
    """Priority over cadets after applying ``policy`` to declared willingness.

    Cadets with equal willingness keep their baseline order; a willing cadet
    ``i`` and an unwilling ``j`` are ordered as ``(i, t+)`` against ``(j, t0)``.
    Both cases reduce to sorting each cadet by the policy rank of the pair she
    effectively brings.
    """
    willing = set(willing)

    def key(i: str) -> int:
        return policy.rank(i, Cost.INCREASED if i in willing else Cost.BASE)

    return BaselinePriority(policy.branch, tuple(sorted(policy.priority.ranking, key=key)))


def _willing_at(strategies: Strategies, b: str) -> set:
    return {i for i, s in strategies.items() if b in s.bradso_set}


def usma2006(econ: Economy, strategies: Strategies) -> Tuple[Allocation, MechanismTrace]:
    """Sequential OML-ordered procedure with primary and BRADSO-eligible slots.

    Each time a branch receives an application it recomputes its holds from
    scratch over all current applicants: the ``q0`` best by OML take primary
    slots, then the ``q+`` best of the rest by the adjusted priority take
    BRADSO-eligible slots. Holders of BRADSO-eligible slots who declared
    willingness for the branch pay the increased cost.
    """
    if not econ.has_common_priority():
        raise RegimeError("USMA-2006 is only defined when every branch ranks cadets by the OML")
    trace = MechanismTrace("usma2006")
    oml = {i: r for r, i in enumerate(econ.cadets)}
    adj_rank = {}
    for b in econ.branches:
        adj = adjusted_priority(ultimate_policy(econ.priorities[b]), _willing_at(strategies, b))
        adj_rank[b] = {i: r for r, i in enumerate(adj.ranking)}
    orders = {i: tuple(x for x in strategies[i].branch_order if x in econ.quotas) if i in strategies else ()
              for i in econ.cadets}
    cursor = {i: 0 for i in econ.cadets}
    primary: Dict[str, list] = {b: [] for b in econ.branches}
    eligible: Dict[str, list] = {b: [] for b in econ.branches}
    free = [(oml[i], i) for i in econ.cadets if orders[i]]
    heapq.heapify(free)
    step = 0
    while free:
        _, i = heapq.heappop(free)
        if cursor[i] >= len(orders[i]):
            continue
        step += 1
        b = orders[i][cursor[i]]
        trace.log(step, "apply", i, b)
        q = econ.quotas[b]
        applicants = sorted(primary[b] + eligible[b] + [i], key=oml.__getitem__)
        new_primary = applicants[: q.base_only]
        rest = sorted(applicants[q.base_only :], key=adj_rank[b].__getitem__)
        new_eligible, rejected = rest[: q.bradso_cap], rest[q.bradso_cap :]
        for c in new_primary:
            if c == i or c not in primary[b]:
                trace.log(step, "hold", c, b, note="primary")
        for c in new_eligible:
            if c == i or c not in eligible[b]:
                trace.log(step, "hold", c, b, note="bradso-eligible")
        primary[b], eligible[b] = new_primary, new_eligible
        for c in rejected:
            trace.log(step, "reject", c, b)
            cursor[c] += 1
            if cursor[c] < len(orders[c]):
                heapq.heappush(free, (oml[c], c))
    out = {}
    for b in econ.branches:
        for c in primary[b]:
            out[c] = (b, Cost.BASE)
        for c in eligible[b]:
            out[c] = (b, Cost.INCREASED if b in strategies[c].bradso_set else Cost.BASE)
    for c in sorted(out, key=oml.__getitem__):
        trace.log(step + 1, "charge", c, out[c][0], out[c][1])
    return Allocation.from_assignments(out), trace


def usma2020(econ: Economy, strategies: Strategies) -> Tuple[Allocation, MechanismTrace]:
    """Deferred acceptance under adjusted priorities, then reverse-priority charging.

    At each branch the willing assignees are charged the increased cost from
    the lowest baseline priority upwards until ``q+`` of them are charged.
    """
    trace = MechanismTrace("usma2020")
    adjusted = {
        b: adjusted_priority(econ.policies[b], _willing_at(strategies, b)) for b in econ.branches
    }
    prefs = {i: strategies[i] if i in strategies else () for i in econ.cadets}
    mu = deferred_acceptance(
        prefs, adjusted, {b: econ.quotas[b].total for b in econ.branches}, trace
    )
    step = max((e.step for e in trace.events), default=0) + 1
    out = {}
    for b in econ.branches:
        pri = econ.priorities[b]
        assigned = [i for i in econ.cadets if mu[i] == b]
        willing = [i for i in assigned if b in strategies[i].bradso_set]
        charged = set(sorted(willing, key=pri.rank, reverse=True)[: econ.quotas[b].bradso_cap])
        for i in assigned:
            lower_willing = sum(1 for j in willing if pri.prefers(i, j))
            literal = i in willing and lower_willing < econ.quotas[b].bradso_cap
            assert literal == (i in charged), f"cost rules disagree for {i} at {b}"
            out[i] = (b, Cost.INCREASED if i in charged else Cost.BASE)
    for i in econ.cadets:
        if i in out:
            trace.log(step, "charge", i, out[i][0], out[i][1])
    return Allocation.from_assignments(out), trace
