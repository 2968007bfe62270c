"""BRADSO policies, the native priority order, and tier assignments.

Policies are materialized as explicit rankings over the ``2 * |I|``
cadet-cost pairs. Constructors validate the defining conditions instead of
trusting their input.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from cadetmatch.core import BaselinePriority, BranchId, CadetId, Cost

Pair = Tuple[CadetId, Cost]

TIER_NAMES = {"HIGH": 1, "MEDIUM": 2, "MIDDLE": 2, "LOW": 3}


class PolicyError(ValueError):
    """A pair ranking violates the conditions of its policy family."""


@dataclass(frozen=True)
class _PairOrder:
    branch: BranchId
    priority: BaselinePriority
    order: Tuple[Pair, ...]
    name: str = "custom"
    _rank: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        order = tuple((i, Cost(t)) for i, t in self.order)
        object.__setattr__(self, "order", order)
        rank = {p: n for n, p in enumerate(order)}
        known = self.priority._rank
        if (len(rank) != len(order) or len(order) != 2 * len(known)
                or any(i not in known for i, _ in order)):
            raise PolicyError(f"{self.name} order at {self.branch} is not a ranking of all cadet-cost pairs")
        object.__setattr__(self, "_rank", rank)
        self._validate()

    def _validate(self) -> None:  # pragma: no cover - overridden
        raise NotImplementedError

    def rank(self, cadet: CadetId, cost: Cost) -> int:
        """0-based position; smaller means higher priority."""
        return self._rank[(cadet, cost)]

    def precedes(self, a: Pair, b: Pair) -> bool:
        return self._rank[a] < self._rank[b]

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class BradsoPolicy(_PairOrder):
    """Linear order on cadet-cost pairs used for BRADSO-eligible positions."""

    def _validate(self) -> None:
        for t in Cost:
            last = -1
            for i in self.priority.ranking:
                r = self._rank[(i, t)]
                if r < last:
                    raise PolicyError(
                        f"policy at {self.branch}: pairs at cost {t.value} do not follow the baseline priority"
                    )
                last = r
        for i in self.priority.ranking:
            if self._rank[(i, Cost.INCREASED)] > self._rank[(i, Cost.BASE)]:
                raise PolicyError(f"policy at {self.branch}: ({i}, BRADSO) must precede ({i}, BASE)")
        base_after = [0] * (len(self.order) + 1)
        for n in range(len(self.order) - 1, -1, -1):
            base_after[n] = base_after[n + 1] + (self.order[n][1] is Cost.BASE)
        object.__setattr__(self, "_base_after", base_after)

    def boosts(self, i: CadetId, j: CadetId) -> bool:
        """True iff ``(i, t+)`` has higher priority than ``(j, t0)``."""
        return self._rank[(i, Cost.INCREASED)] < self._rank[(j, Cost.BASE)]

    def boost_reach(self, i: CadetId) -> int:
        """Number of base-cost pairs ranked below ``(i, t+)``."""
        return self._base_after[self._rank[(i, Cost.INCREASED)] + 1]

    @classmethod
    def from_pairs(
        cls, priority: BaselinePriority, order: Sequence[Pair], name: str = "custom"
    ) -> "BradsoPolicy":
        return cls(priority.branch, priority, tuple(order), name)


@dataclass(frozen=True)
class NativeOrder(_PairOrder):
    """Baseline priority with each cadet's base-cost pair ahead of her increased one."""

    name: str = "native"

    def _validate(self) -> None:
        expected = native_pairs(self.priority)
        if self.order != expected:
            raise PolicyError(f"native order at {self.branch} does not mirror the baseline priority")


def native_pairs(priority: BaselinePriority) -> Tuple[Pair, ...]:
    return tuple((i, t) for i in priority.ranking for t in (Cost.BASE, Cost.INCREASED))


class TierVariant(enum.Enum):
    TIER2020 = "tier2020"
    TIER2021 = "tier2021"


@dataclass(frozen=True)
class TierAssignment:
    """Tier of every cadet at one branch; tier 1 is the best of ``n_tiers``."""

    branch: BranchId
    tier: Dict[CadetId, int]
    n_tiers: Optional[int] = None

    def __post_init__(self) -> None:
        tiers = {i: _parse_tier(t) for i, t in self.tier.items()}
        object.__setattr__(self, "tier", tiers)
        n = self.n_tiers if self.n_tiers is not None else max(tiers.values(), default=1)
        object.__setattr__(self, "n_tiers", n)
        bad = [i for i, t in tiers.items() if not 1 <= t <= n]
        if bad:
            raise ValueError(f"tiers at {self.branch} outside 1..{n} for {bad[:5]}")

    def check_consistent(self, priority: BaselinePriority) -> None:
        """Raise unless better tiers hold strictly higher-priority cadets."""
        missing = set(priority.ranking) - set(self.tier)
        if missing:
            raise ValueError(f"tiers at {self.branch} miss cadets {sorted(missing)[:5]}")
        prev = 1
        for i in priority.ranking:
            t = self.tier[i]
            if t < prev:
                raise ValueError(
                    f"tiers at {self.branch} inconsistent with priority: {i} in tier {t} ranks below a tier-{prev} cadet"
                )
            prev = t


def _parse_tier(value) -> int:
    if isinstance(value, int):
        return value
    text = str(value).strip().upper()
    if text in TIER_NAMES:
        return TIER_NAMES[text]
    return int(text)


def ultimate_policy(priority: BaselinePriority) -> BradsoPolicy:
    """Willingness to pay the increased cost overrides every priority difference."""
    order = [(i, Cost.INCREASED) for i in priority.ranking]
    order += [(i, Cost.BASE) for i in priority.ranking]
    return BradsoPolicy(priority.branch, priority, tuple(order), "ultimate")


def tiered_policy(
    priority: BaselinePriority, tiers: TierAssignment, variant: TierVariant
) -> BradsoPolicy:
    """Tiered BRADSO policy.

    ``TIER2020`` boosts volunteers only within their own tier. ``TIER2021``
    boosts volunteers of every tier except the last one above all base-cost
    pairs; volunteers in the last tier are boosted only within it.
    """
    variant = TierVariant(variant)
    tiers.check_consistent(priority)
    n = tiers.n_tiers

    def block(i: CadetId) -> int:
        t = tiers.tier[i]
        if variant is TierVariant.TIER2021:
            return 0 if t < n else 1
        return t

    def key(pair: Pair) -> tuple:
        i, t = pair
        return (block(i), 0 if t is Cost.INCREASED else 1, priority.rank(i))

    order = sorted(((i, t) for i in priority.ranking for t in Cost), key=key)
    return BradsoPolicy(priority.branch, priority, tuple(order), variant.value)


@lru_cache(maxsize=256)
def native_order(priority: BaselinePriority) -> NativeOrder:
    return NativeOrder(priority.branch, priority, native_pairs(priority))


class Effectiveness(enum.Enum):
    FIRST = "first_more_effective"
    SECOND = "second_more_effective"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def weakly_more_effective(a: BradsoPolicy, b: BradsoPolicy) -> Effectiveness:
    """Compare two policies of the same branch by how far they boost volunteers.

    ``a`` is weakly more effective than ``b`` when every boost
    ``(i, t+)`` over ``(j, t0)`` granted by ``b`` is also granted by ``a``.
    Because base-cost pairs follow the baseline priority, the cadets ``i``
    overtakes form a suffix of that priority, so comparing suffix lengths per
    cadet decides the implication for every pair.
    """
    if a.branch != b.branch or a.priority != b.priority:
        raise ValueError("policies must share branch and baseline priority")
    a_ge = b_ge = True
    for i in a.priority.ranking:
        ra, rb = a.boost_reach(i), b.boost_reach(i)
        if ra < rb:
            a_ge = False
        if rb < ra:
            b_ge = False
    if a_ge and b_ge:
        return Effectiveness.EQUAL
    if a_ge:
        return Effectiveness.FIRST
    if b_ge:
        return Effectiveness.SECOND
    return Effectiveness.INCOMPARABLE


def build_policies(
    priorities: Mapping[BranchId, BaselinePriority],
    spec,
    tiers: Mapping[BranchId, TierAssignment],
) -> Dict[BranchId, BradsoPolicy]:
    """Policies for every branch from a variant name or an explicit mapping."""
    if isinstance(spec, Mapping):
        return {b: spec[b] for b in priorities}
    name = str(spec).lower()
    if name == "ultimate":
        return {b: ultimate_policy(p) for b, p in priorities.items()}
    variant = TierVariant(name)
    if not tiers:
        raise ValueError(f"policy {name} needs tier assignments")
    return {b: tiered_policy(p, tiers[b], variant) for b, p in priorities.items()}


def policies_for(
    priorities: Mapping[BranchId, BaselinePriority],
    names: Iterable[str],
    tiers: Mapping[BranchId, TierAssignment],
) -> Dict[str, Dict[BranchId, BradsoPolicy]]:
    return {n: build_policies(priorities, n, tiers) for n in names}
