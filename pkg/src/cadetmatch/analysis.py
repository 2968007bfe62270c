"""Outcome metrics, comparative statics of the choice rule, and cap/policy sweeps."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from cadetmatch.axioms import (
    Witness,
    check_bradso_ic,
    check_detectable_priority_reversals,
    check_priority_reversals,
)
from cadetmatch.core import (
    Allocation,
    BaselinePriority,
    BranchQuota,
    Contract,
    ContractPreference,
    Cost,
    Economy,
    QuasiStrategy,
)
from cadetmatch.mechanisms import COM_BRADSO, USMA2006, USMA2020, Mechanism, choice_rule_br, truthful_strategy
from cadetmatch.policies import (
    BradsoPolicy,
    Effectiveness,
    build_policies,
    native_order,
    weakly_more_effective,
)


def project_truthful(prefs: Mapping[str, ContractPreference]) -> Dict[str, QuasiStrategy]:
    """Quasi-strategy a cadet would report if truthful: branches in the order of
    their base-cost pairs, willing wherever the increased cost is acceptable."""
    return {i: truthful_strategy(p) for i, p in prefs.items()}


def strategic_bradso_metric(
    mech: Mechanism, econ: Economy, strategies: Mapping[str, QuasiStrategy], alloc: Allocation
) -> List[Witness]:
    """Cadets holding ``(b, BASE)`` with ``b`` in their willingness set who would
    keep ``(b, BASE)`` after withdrawing it: the willingness made no difference.

    This is the field metric. The axiom checker
    :func:`~cadetmatch.axioms.check_strategic_bradso` flags the opposite case.
    """
    out = []
    for c in sorted(alloc.contracts):
        s = strategies.get(c.cadet)
        if c.cost is not Cost.BASE or s is None or c.branch not in s.bradso_set:
            continue
        alt = dict(strategies)
        alt[c.cadet] = s.without(c.branch)
        if mech(econ, alt).assignment(c.cadet) == (c.branch, Cost.BASE):
            out.append(Witness(
                (c.cadet,), c.branch, (c,),
                f"{c.cadet} declared willingness for {c.branch} and holds ({c.branch}, BASE) with or without it",
            ))
    return out


METRICS = ("strategic_bradso", "bradso_ic_failures", "detectable_priority_reversals", "priority_reversals")


@dataclass(frozen=True)
class MetricsSummary:
    """Counts of field metrics. ``None`` marks a metric that does not apply."""

    mechanism: str
    bradso_charged_total: int
    strategic_bradso: Optional[int] = None
    bradso_ic_failures: Optional[int] = None
    detectable_priority_reversals: Optional[int] = None
    priority_reversals: Optional[int] = None
    per_branch: Mapping[str, Mapping[str, Optional[int]]] = field(default_factory=dict)
    witnesses: Mapping[str, Tuple[Witness, ...]] = field(default_factory=dict, repr=False)
    partial: bool = False
    notes: Tuple[str, ...] = ()

    def to_json(self, with_witnesses: bool = False) -> dict:
        out = {
            "mechanism": self.mechanism,
            "bradso_charged_total": self.bradso_charged_total,
            **{m: ("N/A" if getattr(self, m) is None else getattr(self, m)) for m in METRICS},
            "per_branch": {b: {k: ("N/A" if v is None else v) for k, v in d.items()}
                           for b, d in self.per_branch.items()},
            "partial": self.partial,
            "notes": list(self.notes),
        }
        if with_witnesses:
            out["witnesses"] = {m: [w.to_json() for w in ws] for m, ws in self.witnesses.items()}
        return out


def compute_metrics(
    mech: Mechanism,
    econ: Economy,
    strategies: Optional[Mapping[str, QuasiStrategy]] = None,
    prefs: Optional[Mapping[str, ContractPreference]] = None,
    alloc: Optional[Allocation] = None,
) -> MetricsSummary:
    """Field metrics for one run.

    Quasi-direct mechanisms need ``strategies`` (projected from ``prefs`` when
    absent); direct mechanisms need ``prefs``. Full priority reversals need
    contract preferences; without them the summary is flagged ``partial``.
    Counterfactual metrics are ``None`` for direct mechanisms.
    """
    if strategies is None and prefs is not None:
        strategies = project_truthful(prefs)
    if mech.is_direct:
        if prefs is None:
            raise ValueError(f"{mech.name} is direct and needs contract preferences")
        profile = prefs
    else:
        if strategies is None:
            raise ValueError(f"{mech.name} is quasi-direct and needs strategies or preferences")
        profile = strategies
    alloc = mech(econ, profile) if alloc is None else alloc

    found: Dict[str, Optional[List[Witness]]] = dict.fromkeys(METRICS)
    notes = []
    if not mech.is_direct:
        found["strategic_bradso"] = strategic_bradso_metric(mech, econ, strategies, alloc)
        found["bradso_ic_failures"] = list(check_bradso_ic(mech, econ, strategies, alloc).witnesses)
    else:
        notes.append("strategic_bradso and bradso_ic_failures are not defined for a direct mechanism")
    if strategies is not None:
        found["detectable_priority_reversals"] = list(
            check_detectable_priority_reversals(econ, strategies, alloc).witnesses
        )
    partial = prefs is None
    if prefs is not None:
        found["priority_reversals"] = list(check_priority_reversals(econ, prefs, alloc).witnesses)
    else:
        notes.append("priority_reversals needs contract preferences; result is partial")

    per_branch = {}
    for b in econ.branches:
        row: Dict[str, Optional[int]] = {"bradso_charged": alloc.count(b, Cost.INCREASED)}
        for m, ws in found.items():
            row[m] = None if ws is None else sum(1 for w in ws if w.branch == b)
        per_branch[b] = row

    def count(m: str) -> Optional[int]:
        return None if found[m] is None else len(found[m])

    return MetricsSummary(
        mechanism=mech.name,
        bradso_charged_total=sum(1 for c in alloc.contracts if c.cost is Cost.INCREASED),
        strategic_bradso=count("strategic_bradso"),
        bradso_ic_failures=count("bradso_ic_failures"),
        detectable_priority_reversals=count("detectable_priority_reversals"),
        priority_reversals=count("priority_reversals"),
        per_branch=per_branch,
        witnesses={m: tuple(ws) for m, ws in found.items() if ws is not None},
        partial=partial,
        notes=tuple(notes),
    )


REGIMES: Dict[str, Mechanism] = {"USMA2006": USMA2006, "USMA2020": USMA2020, "COMBRADSO": COM_BRADSO}


def simulate_regime(
    econ: Economy, prefs: Mapping[str, ContractPreference], regime: str
) -> Tuple[Allocation, MetricsSummary]:
    """Run a regime on truthful behaviour, measuring against the contract preferences."""
    key = regime.upper().replace("-", "").replace("_", "")
    if key not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; choose from {sorted(REGIMES)}")
    mech = REGIMES[key]
    profile = prefs if mech.is_direct else project_truthful(prefs)
    alloc = mech(econ, profile)
    return alloc, compute_metrics(mech, econ, prefs=prefs, alloc=alloc)


# comparative statics of the choice rule ------------------------------------


@dataclass(frozen=True)
class MonotonicityVerdict:
    holds: bool
    counts: Tuple[Tuple[int, ...], ...]
    clause: Optional[int] = None
    detail: str = ""


def _increased_chosen(
    branch: str, total: int, cap: int, priority: BaselinePriority, policy: BradsoPolicy, pool
) -> int:
    chosen = choice_rule_br(branch, BranchQuota(total, cap), native_order(priority), policy, pool)
    return sum(1 for x in chosen if x.cost is Cost.INCREASED)


def bradso_monotonicity_check(
    priority: BaselinePriority,
    total: int,
    pool: Iterable[Contract],
    caps: Sequence[int],
    policies: Sequence[BradsoPolicy],
) -> MonotonicityVerdict:
    """Increased-cost contracts chosen from ``pool`` as the cap grows and as the policy gets more effective.

    ``caps`` must be ascending and ``policies`` ordered from least to most
    effective. ``counts[p][k]`` is the number chosen under ``policies[p]``
    with cap ``caps[k]`` and ``total - caps[k]`` base-only positions.
    Clause 1 asks each row to be weakly increasing, clause 2 each column.
    """
    pool = list(pool)
    caps = list(caps)
    if caps != sorted(caps) or any(not 0 <= c <= total for c in caps):
        raise ValueError("caps must be ascending and within [0, total]")
    for a, b in zip(policies, policies[1:]):
        if weakly_more_effective(b, a) not in (Effectiveness.FIRST, Effectiveness.EQUAL):
            raise ValueError(f"policy {b.name} is not weakly more effective than {a.name}")
    branch = priority.branch
    counts = tuple(
        tuple(_increased_chosen(branch, total, c, priority, pol, pool) for c in caps) for pol in policies
    )
    for p, row in enumerate(counts):
        for k in range(1, len(row)):
            if row[k] < row[k - 1]:
                return MonotonicityVerdict(False, counts, 1, (
                    f"policy {policies[p].name}: cap {caps[k - 1]} -> {caps[k]} lowers the count "
                    f"{row[k - 1]} -> {row[k]}"))
    for k, c in enumerate(caps):
        for p in range(1, len(policies)):
            if counts[p][k] < counts[p - 1][k]:
                return MonotonicityVerdict(False, counts, 2, (
                    f"cap {c}: {policies[p - 1].name} -> {policies[p].name} lowers the count "
                    f"{counts[p - 1][k]} -> {counts[p][k]}"))
    return MonotonicityVerdict(True, counts)


# sweeps ---------------------------------------------------------------------

ROUNDING: Dict[str, Callable[[Fraction], int]] = {
    "floor": floor,
    "ceil": ceil,
    "nearest": lambda x: floor(x + Fraction(1, 2)),
}

#: Least to most effective; the order used for cross-policy monotonicity.
POLICY_CHAIN = ("tier2020", "tier2021", "ultimate")


def _fraction(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class SweepGrid:
    fractions: Tuple[Fraction, ...]
    policies: Tuple[str, ...] = POLICY_CHAIN
    rounding: str = "floor"

    def __post_init__(self) -> None:
        fr = tuple(sorted(_fraction(f) for f in self.fractions))
        if any(not 0 <= f <= 1 for f in fr):
            raise ValueError("cap fractions must lie in [0, 1]")
        object.__setattr__(self, "fractions", fr)
        object.__setattr__(self, "policies", tuple(self.policies))
        if self.rounding not in ROUNDING:
            raise ValueError(f"rounding must be one of {sorted(ROUNDING)}")

    @classmethod
    def percent_range(cls, lo: int, hi: int, step: int, **kw) -> "SweepGrid":
        return cls(tuple(Fraction(p, 100) for p in range(lo, hi + 1, step)), **kw)

    def cap(self, fraction: Fraction, total: int) -> int:
        q = ROUNDING[self.rounding](fraction * total)
        if q > total:
            warnings.warn(f"cap {q} exceeds total {total}; clamped", RuntimeWarning, stacklevel=2)
            q = total
        return max(q, 0)


@dataclass(frozen=True)
class SweepRow:
    cap_fraction: Fraction
    policy: str
    branch_id: str
    bradso_charged: int
    bradso_cap: int
    priority_reversals: Optional[int]
    detectable_priority_reversals: Optional[int]

    def to_csv(self) -> List[str]:
        def na(v):
            return "N/A" if v is None else str(v)

        return [
            f"{float(self.cap_fraction):g}", self.policy, self.branch_id, str(self.bradso_charged),
            str(self.bradso_cap), na(self.priority_reversals), na(self.detectable_priority_reversals),
        ]


SWEEP_COLUMNS = (
    "cap_fraction", "policy", "branch_id", "bradso_charged", "bradso_cap",
    "priority_reversals", "detectable_priority_reversals",
)


def _cell(args) -> List[SweepRow]:
    econ, prefs, grid, fraction, policy = args
    quotas = {b: BranchQuota(q.total, grid.cap(fraction, q.total)) for b, q in econ.quotas.items()}
    cell = econ.with_quotas(quotas).with_policies(build_policies(econ.priorities, policy, econ.tiers))
    alloc = COM_BRADSO(cell, prefs)
    m = compute_metrics(COM_BRADSO, cell, prefs=prefs, alloc=alloc)
    rows = [
        SweepRow(fraction, policy, b, m.per_branch[b]["bradso_charged"], quotas[b].bradso_cap,
                 m.per_branch[b]["priority_reversals"], m.per_branch[b]["detectable_priority_reversals"])
        for b in econ.branches
    ]
    rows.append(SweepRow(fraction, policy, "ALL", m.bradso_charged_total,
                         sum(q.bradso_cap for q in quotas.values()),
                         m.priority_reversals, m.detectable_priority_reversals))
    return rows


def sweep(
    econ: Economy, prefs: Mapping[str, ContractPreference], grid: SweepGrid, workers: int = 1
) -> List[SweepRow]:
    """Run COM-BRADSO for every (cap fraction, policy) cell, keeping branch totals fixed.

    Rows come out ordered by cap fraction, then policy (grid order), then
    branch (economy order, ``ALL`` last) however many workers are used.
    """
    for p in grid.policies:
        if p != "ultimate" and not econ.tiers:
            raise ValueError(f"policy {p} needs tier assignments in the economy")
    jobs = [(econ, prefs, grid, f, p) for f in grid.fractions for p in grid.policies]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]
    return [row for rows in results for row in rows]


@dataclass(frozen=True)
class SweepViolation:
    branch_id: str
    kind: str
    detail: str


def sweep_monotonicity(
    rows: Sequence[SweepRow], chain: Sequence[str] = POLICY_CHAIN, include_aggregate: bool = False
) -> List[SweepViolation]:
    """Per-branch weak monotonicity of charged counts across caps and along ``chain``.

    The aggregate ``ALL`` row is skipped unless ``include_aggregate``: the
    per-branch property is the one the choice rule guarantees.
    """
    table: Dict[Tuple[str, str], Dict[Fraction, int]] = {}
    for r in rows:
        if r.branch_id == "ALL" and not include_aggregate:
            continue
        table.setdefault((r.branch_id, r.policy), {})[r.cap_fraction] = r.bradso_charged
    out = []
    for (b, p), by_cap in sorted(table.items()):
        caps = sorted(by_cap)
        for lo, hi in zip(caps, caps[1:]):
            if by_cap[hi] < by_cap[lo]:
                out.append(SweepViolation(b, "cap", f"{p}: cap {float(lo):g} -> {float(hi):g} "
                                                    f"lowers charged {by_cap[lo]} -> {by_cap[hi]}"))
    branches = sorted({b for b, _ in table})
    present = [p for p in chain if any((b, p) in table for b in branches)]
    for b in branches:
        for lo, hi in zip(present, present[1:]):
            for f in sorted(table.get((b, lo), {})):
                a, c = table[(b, lo)][f], table.get((b, hi), {}).get(f)
                if c is not None and c < a:
                    out.append(SweepViolation(b, "policy", f"cap {float(f):g}: {lo} -> {hi} lowers charged {a} -> {c}"))
    return out


def plot_data(rows: Sequence[SweepRow]) -> dict:
    """Series of total charged per policy over the cap fractions, plus per-branch series."""
    caps = sorted({r.cap_fraction for r in rows})
    policies = list(dict.fromkeys(r.policy for r in rows))
    branches = list(dict.fromkeys(r.branch_id for r in rows))
    look = {(r.cap_fraction, r.policy, r.branch_id): r.bradso_charged for r in rows}
    return {
        "x": [float(c) for c in caps],
        "series": {p: [look[(c, p, "ALL")] for c in caps] for p in policies},
        "per_branch": {
            b: {p: [look[(c, p, b)] for c in caps] for p in policies} for b in branches if b != "ALL"
        },
    }
