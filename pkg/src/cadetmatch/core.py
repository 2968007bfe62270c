"""Domain types: economies, preferences, priorities, contracts and allocations.

Cadet and branch identifiers are plain strings. Everything here is immutable
after construction; mechanisms and auditors never mutate their inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Mapping, NamedTuple, Optional, Sequence, Tuple

if TYPE_CHECKING:
    from cadetmatch.policies import BradsoPolicy, TierAssignment


class Cost(enum.Enum):
    """Length of service attached to a position."""

    BASE = "BASE"
    INCREASED = "BRADSO"

    @property
    def order(self) -> int:
        return 0 if self is Cost.BASE else 1

    @classmethod
    def parse(cls, text: str) -> "Cost":
        key = text.strip().upper()
        if key in ("BASE", "T0"):
            return cls.BASE
        if key in ("BRADSO", "INCREASED", "T+", "TPLUS"):
            return cls.INCREASED
        raise ValueError(f"unknown cost {text!r}")

    def __lt__(self, other: "Cost") -> bool:
        return self.order < other.order


CadetId = str
BranchId = str
#: ``(branch, cost)`` or ``None`` for unmatched.
Assignment = Optional[Tuple[BranchId, Cost]]
UNMATCHED: Assignment = None


class UnknownIdError(LookupError):
    """A cadet or branch id does not resolve in the economy."""


class BudgetExceeded(RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""

    def __init__(self, what: str, needed: int, budget: int) -> None:
        super().__init__(f"{what} needs {needed} evaluations, budget is {budget}")
        self.needed = needed
        self.budget = budget


#: Default cap on exhaustive enumerations (profiles, deviations, strategy rules).
DEFAULT_BUDGET = 2**20


class Contract(NamedTuple):
    cadet: CadetId
    branch: BranchId
    cost: Cost

    @property
    def assignment(self) -> Tuple[BranchId, Cost]:
        return (self.branch, self.cost)

    def __str__(self) -> str:
        return f"({self.cadet}, {self.branch}, {self.cost.value})"


@dataclass(frozen=True)
class BranchQuota:
    total: int
    bradso_cap: int

    def __post_init__(self) -> None:
        if self.total < 0 or not 0 <= self.bradso_cap <= self.total:
            raise ValueError(
                f"need 0 <= bradso_cap <= total, got total={self.total}, bradso_cap={self.bradso_cap}"
            )

    @property
    def base_only(self) -> int:
        return self.total - self.bradso_cap


@dataclass(frozen=True)
class BaselinePriority:
    """Strict ranking of all cadets at one branch; ``ranking[0]`` has rank 1."""

    branch: BranchId
    ranking: Tuple[CadetId, ...]
    _rank: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranking", tuple(self.ranking))
        rank = {c: r for r, c in enumerate(self.ranking, start=1)}
        if len(rank) != len(self.ranking):
            raise ValueError(f"priority at {self.branch} ranks a cadet twice")
        object.__setattr__(self, "_rank", rank)

    def rank(self, cadet: CadetId) -> int:
        try:
            return self._rank[cadet]
        except KeyError:
            raise UnknownIdError(f"cadet {cadet!r} not ranked at branch {self.branch!r}") from None

    def prefers(self, i: CadetId, j: CadetId) -> bool:
        """True iff ``i`` has strictly higher priority than ``j``."""
        return self.rank(i) < self.rank(j)

    def sort(self, cadets: Iterable[CadetId]) -> list:
        return sorted(cadets, key=self.rank)

    def __len__(self) -> int:
        return len(self.ranking)


def _check_q_domain(cadet: CadetId, order: Sequence[Tuple[BranchId, Cost]]) -> None:
    seen = set()
    for pos, (b, t) in enumerate(order):
        if (b, t) in seen:
            raise ValueError(f"preference of {cadet!r} lists {(b, t.value)} twice")
        seen.add((b, t))
        if t is Cost.INCREASED and (b, Cost.BASE) not in seen:
            raise ValueError(
                f"preference of {cadet!r} must rank ({b}, BASE) strictly above ({b}, BRADSO)"
            )


@dataclass(frozen=True)
class ContractPreference:
    """Strict preference over branch-cost pairs and remaining unmatched.

    ``acceptable`` lists pairs ranked above unmatched (best first) and
    ``unacceptable`` pairs ranked explicitly below it. Pairs omitted from both
    lists are unacceptable and sit below every listed pair.
    """

    cadet: CadetId
    acceptable: Tuple[Tuple[BranchId, Cost], ...]
    unacceptable: Tuple[Tuple[BranchId, Cost], ...] = ()
    _key: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        acc = tuple((b, Cost(t)) for b, t in self.acceptable)
        unacc = tuple((b, Cost(t)) for b, t in self.unacceptable)
        object.__setattr__(self, "acceptable", acc)
        object.__setattr__(self, "unacceptable", unacc)
        _check_q_domain(self.cadet, acc + unacc)
        key = {pair: (0, n) for n, pair in enumerate(acc)}
        key.update({pair: (2, n) for n, pair in enumerate(unacc)})
        object.__setattr__(self, "_key", key)

    @classmethod
    def from_ranking(cls, cadet: CadetId, ranking: Sequence[Assignment]) -> "ContractPreference":
        """Build from a full ranking where ``None`` marks the unmatched position."""
        ranking = list(ranking)
        if ranking.count(None) != 1:
            raise ValueError("ranking must contain the unmatched sentinel exactly once")
        cut = ranking.index(None)
        return cls(cadet, tuple(ranking[:cut]), tuple(ranking[cut + 1 :]))

    @classmethod
    def single_branch(
        cls, cadet: CadetId, branch: BranchId, increased_acceptable: bool
    ) -> "ContractPreference":
        if increased_acceptable:
            return cls(cadet, ((branch, Cost.BASE), (branch, Cost.INCREASED)))
        return cls(cadet, ((branch, Cost.BASE),), ((branch, Cost.INCREASED),))

    def key(self, assignment: Assignment) -> tuple:
        """Sort key: smaller is better."""
        if assignment is None:
            return (1, 0)
        b, t = assignment
        k = self._key.get((b, t))
        if k is not None:
            return k
        return (3, b, t.order)

    def prefers(self, a: Assignment, b: Assignment) -> bool:
        """True iff ``a`` is strictly preferred to ``b``."""
        return self.key(a) < self.key(b)

    def is_acceptable(self, assignment: Assignment) -> bool:
        return assignment is not None and self.key(assignment)[0] == 0

    def acceptable_contracts(self) -> Tuple[Contract, ...]:
        return tuple(Contract(self.cadet, b, t) for b, t in self.acceptable)

    def branches_above(
        self, assignment: Assignment, branches: Iterable[BranchId] = ()
    ) -> Tuple[Tuple[BranchId, Cost], ...]:
        """Pairs strictly preferred to ``assignment``, best first.

        Only acceptable pairs can beat an acceptable assignment. When the
        assignment ranks below unmatched, listed unacceptable pairs and the
        unlisted pairs of ``branches`` may beat it too.
        """
        k = self.key(assignment)
        out = [p for p in self.acceptable if self._key[p] < k]
        if k[0] > 1:
            out.extend(p for p in self.unacceptable if self._key[p] < k)
            unlisted = [(b, t) for b in branches for t in Cost if (b, t) not in self._key]
            out.extend(sorted((p for p in unlisted if self.key(p) < k), key=self.key))
        return tuple(out)


def compare_assignments(pref: ContractPreference, a: Assignment, b: Assignment) -> int:
    """Return 1 if ``a`` is preferred, -1 if ``b`` is preferred, 0 if equal."""
    ka, kb = pref.key(a), pref.key(b)
    return (ka < kb) - (ka > kb)


@dataclass(frozen=True)
class QuasiStrategy:
    """Branch-only ranking (acceptable branches, best first) plus willingness set."""

    cadet: CadetId
    branch_order: Tuple[BranchId, ...]
    bradso_set: frozenset = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "branch_order", tuple(self.branch_order))
        object.__setattr__(self, "bradso_set", frozenset(self.bradso_set))
        if len(set(self.branch_order)) != len(self.branch_order):
            raise ValueError(f"strategy of {self.cadet!r} ranks a branch twice")

    def ranks_above(self, b: BranchId, other: Optional[BranchId]) -> bool:
        """``b P_i other`` where ``other=None`` is remaining unmatched."""
        if b not in self.branch_order:
            return False
        if other is None or other not in self.branch_order:
            return True
        return self.branch_order.index(b) < self.branch_order.index(other)

    def without(self, b: BranchId) -> "QuasiStrategy":
        return replace(self, bradso_set=self.bradso_set - {b})

    @property
    def unranked_bradso(self) -> frozenset:
        """Willingness entries for branches the cadet did not rank (ignored by mechanisms)."""
        return self.bradso_set - set(self.branch_order)


@dataclass(frozen=True)
class Allocation:
    contracts: frozenset
    _by_cadet: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        contracts = frozenset(Contract(c.cadet, c.branch, Cost(c.cost)) for c in self.contracts)
        object.__setattr__(self, "contracts", contracts)
        by_cadet: dict = {}
        for c in contracts:
            by_cadet.setdefault(c.cadet, []).append(c)
        object.__setattr__(self, "_by_cadet", by_cadet)

    @classmethod
    def from_assignments(cls, assignments: Mapping[CadetId, Assignment]) -> "Allocation":
        return cls(
            frozenset(Contract(i, a[0], a[1]) for i, a in assignments.items() if a is not None)
        )

    @classmethod
    def empty(cls) -> "Allocation":
        return cls(frozenset())

    def assignment(self, cadet: CadetId) -> Assignment:
        held = self._by_cadet.get(cadet)
        if not held:
            return None
        if len(held) > 1:
            raise ValueError(f"cadet {cadet!r} appears in {len(held)} contracts")
        return held[0].assignment

    def branch_of(self, cadet: CadetId) -> Optional[BranchId]:
        a = self.assignment(cadet)
        return None if a is None else a[0]

    def count(self, branch: BranchId, cost: Optional[Cost] = None) -> int:
        return sum(1 for c in self.contracts if c.branch == branch and (cost is None or c.cost is cost))

    def cadets_at(self, branch: BranchId, cost: Optional[Cost] = None) -> list:
        return [c.cadet for c in self.contracts if c.branch == branch and (cost is None or c.cost is cost)]

    def as_dict(self, cadets: Iterable[CadetId]) -> dict:
        return {i: self.assignment(i) for i in cadets}

    def __len__(self) -> int:
        return len(self.contracts)


@dataclass(frozen=True)
class Economy:
    """Immutable problem instance.

    ``cadets`` is in OML order. ``policies`` holds one BRADSO policy per
    branch; ``tiers`` is only present when tiered policies were requested.
    """

    cadets: Tuple[CadetId, ...]
    branches: Tuple[BranchId, ...]
    quotas: Mapping[BranchId, BranchQuota]
    priorities: Mapping[BranchId, BaselinePriority]
    policies: Mapping[BranchId, "BradsoPolicy"]
    tiers: Mapping[BranchId, "TierAssignment"] = field(default_factory=dict)
    names: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "cadets", tuple(self.cadets))
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(set(self.cadets)) != len(self.cadets):
            raise ValueError("duplicate cadet id")
        if len(set(self.branches)) != len(self.branches):
            raise ValueError("duplicate branch id")
        if not self.cadets:
            raise ValueError("economy needs at least one cadet")
        if sum(self.quotas[b].total for b in self.branches) <= 0:
            raise ValueError("economy needs at least one position")
        cadet_set = set(self.cadets)
        for b in self.branches:
            for what, table in (("quota", self.quotas), ("priority", self.priorities), ("policy", self.policies)):
                if b not in table:
                    raise ValueError(f"branch {b!r} has no {what}")
            if set(self.priorities[b].ranking) != cadet_set:
                raise ValueError(f"priority at {b!r} is not a permutation of the cadets")
            if self.policies[b].priority != self.priorities[b]:
                raise ValueError(f"policy at {b!r} was built from a different priority")
        extra = (set(self.quotas) | set(self.priorities) | set(self.policies)) - set(self.branches)
        if extra:
            raise ValueError(f"tables mention undeclared branches {sorted(extra)}")

    @classmethod
    def build(
        cls,
        cadets: Sequence[CadetId],
        quotas: Mapping[BranchId, "BranchQuota | Tuple[int, int]"],
        priorities: Optional[Mapping[BranchId, Sequence[CadetId]]] = None,
        policy: "str | Mapping[BranchId, BradsoPolicy]" = "ultimate",
        tiers: Optional[Mapping[BranchId, Mapping[CadetId, int]]] = None,
        n_tiers: Optional[int] = None,
        names: Optional[Mapping[str, str]] = None,
    ) -> "Economy":
        """Convenience constructor.

        ``priorities`` defaults to the OML (``cadets`` order) at every branch.
        ``policy`` is ``"ultimate"``, ``"tier2020"``, ``"tier2021"`` or an
        explicit mapping of policies.
        """
        from cadetmatch import policies as pol

        branches = tuple(quotas)
        qs = {b: q if isinstance(q, BranchQuota) else BranchQuota(*q) for b, q in quotas.items()}
        pri = {
            b: BaselinePriority(b, tuple(priorities[b]) if priorities else tuple(cadets))
            for b in branches
        }
        tier_map = {}
        if tiers is not None:
            tier_map = {b: pol.TierAssignment(b, dict(tiers[b]), n_tiers) for b in branches}
        return cls(
            tuple(cadets),
            branches,
            qs,
            pri,
            pol.build_policies(pri, policy, tier_map),
            tier_map,
            dict(names or {}),
        )

    def quota(self, branch: BranchId) -> BranchQuota:
        try:
            return self.quotas[branch]
        except KeyError:
            raise UnknownIdError(f"unknown branch {branch!r}") from None

    def priority(self, branch: BranchId) -> BaselinePriority:
        try:
            return self.priorities[branch]
        except KeyError:
            raise UnknownIdError(f"unknown branch {branch!r}") from None

    def policy(self, branch: BranchId) -> "BradsoPolicy":
        try:
            return self.policies[branch]
        except KeyError:
            raise UnknownIdError(f"unknown branch {branch!r}") from None

    @property
    def is_single_branch(self) -> bool:
        return len(self.branches) == 1

    def check_cadet(self, cadet: CadetId) -> None:
        if cadet not in self.priorities[self.branches[0]]._rank:
            raise UnknownIdError(f"unknown cadet {cadet!r}")

    def check_branch(self, branch: BranchId) -> None:
        if branch not in self.quotas:
            raise UnknownIdError(f"unknown branch {branch!r}")

    def with_quotas(self, quotas: Mapping[BranchId, BranchQuota]) -> "Economy":
        return replace(self, quotas={**self.quotas, **quotas})

    def with_policies(self, policies: Mapping[BranchId, "BradsoPolicy"]) -> "Economy":
        return replace(self, policies={**self.policies, **policies})

    def has_common_priority(self) -> bool:
        """True when every branch ranks cadets by the OML."""
        return all(self.priorities[b].ranking == self.cadets for b in self.branches)


@dataclass(frozen=True)
class Violation:
    condition: int
    branch: Optional[BranchId]
    cadet: Optional[CadetId]
    detail: str


@dataclass(frozen=True)
class ValidityReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_allocation(econ: Economy, alloc: Allocation) -> ValidityReport:
    """Check the three feasibility conditions of an allocation.

    Raises :class:`UnknownIdError` if a contract names an id outside ``econ``.
    """
    for c in alloc.contracts:
        econ.check_cadet(c.cadet)
        econ.check_branch(c.branch)
    violations = []
    per_cadet: dict = {}
    for c in alloc.contracts:
        per_cadet.setdefault(c.cadet, []).append(c)
    for i in econ.cadets:
        held = per_cadet.get(i, [])
        if len(held) > 1:
            violations.append(
                Violation(1, None, i, f"cadet {i} appears in {len(held)} contracts: "
                          + ", ".join(sorted(map(str, held))))
            )
    for b in econ.branches:
        q = econ.quotas[b]
        n = alloc.count(b)
        if n > q.total:
            violations.append(Violation(2, b, None, f"branch {b} has {n} contracts > q_b={q.total}"))
        n_plus = alloc.count(b, Cost.INCREASED)
        if n_plus > q.bradso_cap:
            violations.append(
                Violation(3, b, None, f"branch {b} has {n_plus} increased-cost contracts > q_b+={q.bradso_cap}")
            )
    return ValidityReport(tuple(violations))
