"""The two-step branch choice rule and the cumulative offer process built on it."""

from __future__ import annotations

import heapq
from bisect import bisect_left
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from cadetmatch.core import Allocation, BranchQuota, Contract, ContractPreference, Cost, Economy
from cadetmatch.mechanisms.trace import MechanismTrace
from cadetmatch.policies import BradsoPolicy, NativeOrder, native_order


class ViabilityError(ValueError):
    """An increased-cost contract is offered without its base-cost version."""


def check_viable(branch: str, pool: Iterable[Contract]) -> None:
    pool = set(pool)
    for x in pool:
        if x.branch != branch:
            raise ViabilityError(f"contract {x} does not involve branch {branch}")
        if x.cost is Cost.INCREASED and Contract(x.cadet, branch, Cost.BASE) not in pool:
            raise ViabilityError(f"pool holds {x} without its base-cost version")


def _take_distinct(ordered: Iterable[Contract], k: int, skip: set) -> List[Contract]:
    out, seen = [], set(skip)
    if k <= 0:
        return out
    for x in ordered:
        if x.cadet not in seen:
            seen.add(x.cadet)
            out.append(x)
            if len(out) == k:
                break
    return out


def _choose(
    q: BranchQuota,
    by_native: Sequence[Contract],
    by_policy: Sequence[Contract],
    n_cadets: Optional[int] = None,
) -> FrozenSet[Contract]:
    """Choice over a viable pool given in native-rank and policy-rank order.

    ``n_cadets`` is the number of distinct cadets in the pool, if known.
    """
    if n_cadets is None:
        n_cadets = len({x.cadet for x in by_native})
    if n_cadets < q.base_only:
        return frozenset(x for x in by_native if x.cost is Cost.BASE)
    first = _take_distinct(by_native, q.base_only, set())
    taken = {x.cadet for x in first}
    if n_cadets - len(taken) < q.bradso_cap:
        return frozenset(first).union(x for x in by_policy if x.cadet not in taken and x.cost is Cost.BASE)
    return frozenset(first).union(_take_distinct(by_policy, q.bradso_cap, taken))


def choice_rule_br(
    branch: str,
    quota: BranchQuota,
    native: NativeOrder,
    policy: BradsoPolicy,
    pool: Iterable[Contract],
) -> FrozenSet[Contract]:
    """Pick ``q0`` contracts by native order, then ``q+`` of the remaining
    cadets' contracts by the BRADSO policy, always one contract per cadet.
    """
    pool = list(set(pool))
    check_viable(branch, pool)
    by_native = sorted(pool, key=lambda x: native.rank(x.cadet, x.cost))
    by_policy = sorted(pool, key=lambda x: policy.rank(x.cadet, x.cost))
    return _choose(quota, by_native, by_policy)


class _BranchState:
    __slots__ = ("quota", "native", "policy", "native_keys", "by_native", "policy_keys", "by_policy",
                 "held", "offered", "cadets")

    def __init__(self, quota: BranchQuota, native: NativeOrder, policy: BradsoPolicy) -> None:
        self.quota = quota
        self.native = native
        self.policy = policy
        # parallel sorted lists: keys for bisection, contracts for scanning
        self.native_keys: List[int] = []
        self.by_native: List[Contract] = []
        self.policy_keys: List[int] = []
        self.by_policy: List[Contract] = []
        self.held: FrozenSet[Contract] = frozenset()
        self.offered: set = set()
        self.cadets: set = set()

    def offer(self, x: Contract) -> FrozenSet[Contract]:
        if x.cost is Cost.INCREASED and Contract(x.cadet, x.branch, Cost.BASE) not in self.offered:
            raise ViabilityError(f"pool would hold {x} without its base-cost version")
        self.offered.add(x)
        self.cadets.add(x.cadet)
        k = self.native.rank(x.cadet, x.cost)
        n = bisect_left(self.native_keys, k)
        self.native_keys.insert(n, k)
        self.by_native.insert(n, x)
        k = self.policy.rank(x.cadet, x.cost)
        n = bisect_left(self.policy_keys, k)
        self.policy_keys.insert(n, k)
        self.by_policy.insert(n, x)
        self.held = _choose(self.quota, self.by_native, self.by_policy, len(self.cadets))
        return self.held

    def pool(self) -> List[Contract]:
        return list(self.by_native)


def com_bradso(
    econ: Economy,
    prefs: Mapping[str, ContractPreference],
    proposal_order: Optional[Sequence[str]] = None,
) -> Tuple[Allocation, MechanismTrace]:
    """Cumulative offer process where every branch chooses with :func:`choice_rule_br`.

    One proposal per step: the highest cadet in ``proposal_order`` (default
    OML) without a held contract offers her best acceptable contract not yet
    offered. The receiving branch re-chooses from everything it has ever
    been offered.
    """
    order = tuple(proposal_order) if proposal_order is not None else econ.cadets
    if sorted(order) != sorted(econ.cadets):
        raise ValueError("proposal_order must be a permutation of the cadets")
    pos = {i: n for n, i in enumerate(order)}
    states: Dict[str, _BranchState] = {
        b: _BranchState(econ.quotas[b], native_order(econ.priorities[b]), econ.policies[b])
        for b in econ.branches
    }
    lists = {
        i: tuple(x for x in prefs[i].acceptable_contracts() if x.branch in states) if i in prefs else ()
        for i in econ.cadets
    }
    cursor = {i: 0 for i in econ.cadets}
    holder: Dict[str, Contract] = {}
    free = [(pos[i], i) for i in econ.cadets if lists[i]]
    heapq.heapify(free)
    trace = MechanismTrace("com_bradso")
    step = 0
    while free:
        _, i = heapq.heappop(free)
        if i in holder or cursor[i] >= len(lists[i]):
            continue
        step += 1
        x = lists[i][cursor[i]]
        cursor[i] += 1
        trace.log(step, "propose", i, x.branch, x.cost)
        st = states[x.branch]
        before = st.held
        after = st.offer(x)
        for c in sorted(before - after, key=lambda c: pos[c.cadet]):
            trace.log(step, "reject", c.cadet, c.branch, c.cost)
            del holder[c.cadet]
            heapq.heappush(free, (pos[c.cadet], c.cadet))
        if x not in after:
            trace.log(step, "reject", x.cadet, x.branch, x.cost)
            heapq.heappush(free, (pos[i], i))
        for c in sorted(after - before, key=lambda c: pos[c.cadet]):
            if c.cadet in holder and holder[c.cadet] != c:
                raise RuntimeError(f"cadet {c.cadet} held at two branches")
            holder[c.cadet] = c
            trace.log(step, "hold", c.cadet, c.branch, c.cost)
    return Allocation(frozenset(holder.values())), trace
