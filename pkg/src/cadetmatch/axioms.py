"""Auditors for allocation-level and mechanism-level axioms.

Each checker returns an :class:`AxiomReport` whose witnesses can be
re-checked by hand. Allocation-level checkers scan the allocation;
mechanism-level checkers re-run a :class:`~cadetmatch.mechanisms.Mechanism`
handle on counterfactual profiles.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from cadetmatch.core import (
    DEFAULT_BUDGET,
    Allocation,
    Assignment,
    BudgetExceeded,
    Contract,
    ContractPreference,
    Cost,
    Economy,
    QuasiStrategy,
    validate_allocation,
)
from cadetmatch.mechanisms.handles import Mechanism

HOLDS = "holds"
VIOLATED = "violated"


def format_assignment(a: Assignment) -> str:
    if a is None:
        return "UNMATCHED"
    return f"({a[0]}, {a[1].value})"


@dataclass(frozen=True)
class Witness:
    cadets: Tuple[str, ...]
    branch: Optional[str]
    contracts: Tuple[Contract, ...]
    explanation: str
    details: Mapping = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cadets": list(self.cadets),
            "branch": self.branch,
            "contracts": [
                {"cadet_id": c.cadet, "branch_id": c.branch, "cost": c.cost.value} for c in self.contracts
            ],
            "explanation": self.explanation,
            "details": dict(self.details),
        }


@dataclass(frozen=True)
class AxiomReport:
    axiom: str
    witnesses: Tuple[Witness, ...] = ()
    notes: Tuple[str, ...] = ()

    @property
    def verdict(self) -> str:
        return VIOLATED if self.witnesses else HOLDS

    @property
    def holds(self) -> bool:
        return not self.witnesses

    def __bool__(self) -> bool:
        return self.holds

    def cadets(self, position: int = 0) -> List[str]:
        """Cadet at ``position`` of every witness, in report order."""
        return [w.cadets[position] for w in self.witnesses]

    def to_json(self) -> dict:
        out = {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "witnesses": [w.to_json() for w in self.witnesses],
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _report(econ: Economy, axiom: str, witnesses: List[Witness], notes: Sequence[str] = ()) -> AxiomReport:
    oml = {i: n for n, i in enumerate(econ.cadets)}
    border = {b: n for n, b in enumerate(econ.branches)}

    def key(w: Witness) -> tuple:
        return (
            tuple(oml.get(i, len(oml)) for i in w.cadets),
            border.get(w.branch, -1),
            w.explanation,
        )

    return AxiomReport(axiom, tuple(sorted(witnesses, key=key)), tuple(notes))


def _require_valid(econ: Economy, alloc: Allocation) -> None:
    report = validate_allocation(econ, alloc)
    if not report.ok:
        raise ValueError("allocation is not valid: " + "; ".join(v.detail for v in report.violations))


def _contract(cadet: str, a: Assignment) -> Tuple[Contract, ...]:
    return () if a is None else (Contract(cadet, a[0], a[1]),)


def _pref(prefs: Mapping[str, ContractPreference], i: str) -> ContractPreference:
    return prefs[i] if i in prefs else ContractPreference(i, ())


# allocation-level axioms ---------------------------------------------------


def check_individual_rationality(
    econ: Economy, prefs: Mapping[str, ContractPreference], alloc: Allocation
) -> AxiomReport:
    """Nobody holds an assignment ranked below remaining unmatched."""
    _require_valid(econ, alloc)
    out = []
    for i in econ.cadets:
        a = alloc.assignment(i)
        if a is not None and _pref(prefs, i).prefers(None, a):
            out.append(Witness((i,), a[0], _contract(i, a),
                               f"{i} ranks UNMATCHED above {format_assignment(a)}"))
    return _report(econ, "individual_rationality", out)


def check_non_wastefulness(
    econ: Economy, prefs: Mapping[str, ContractPreference], alloc: Allocation
) -> AxiomReport:
    """No branch leaves a position empty while an unmatched cadet wants it at base cost."""
    _require_valid(econ, alloc)
    out = []
    for b in econ.branches:
        spare = econ.quotas[b].total - alloc.count(b)
        if spare <= 0:
            continue
        for i in econ.cadets:
            if alloc.assignment(i) is None and _pref(prefs, i).is_acceptable((b, Cost.BASE)):
                out.append(Witness((i,), b, (),
                                   f"{b} has {spare} empty position(s) and unmatched {i} accepts ({b}, BASE)"))
    return _report(econ, "non_wastefulness", out)


def _holders_by_rank(econ: Economy, alloc: Allocation) -> Dict[Tuple[str, Cost], List[str]]:
    """Holders of each (branch, cost), lowest baseline priority first."""
    held: Dict[Tuple[str, Cost], List[str]] = {}
    for c in alloc.contracts:
        held.setdefault((c.branch, c.cost), []).append(c.cadet)
    for (b, _), cadets in held.items():
        cadets.sort(key=econ.priorities[b].rank, reverse=True)
    return held


def check_priority_reversals(
    econ: Economy, prefs: Mapping[str, ContractPreference], alloc: Allocation
) -> AxiomReport:
    """Lists every triple ``(i, j, b)`` where ``i`` envies ``j``'s contract at ``b`` and ``i`` has higher priority at ``b``.

    For each cadet only the pairs above her own assignment are inspected, and
    holders of each pair are visited from the lowest priority upward, so the
    work is proportional to the preference lengths plus the witness count.
    """
    _require_valid(econ, alloc)
    held = _holders_by_rank(econ, alloc)
    out = []
    for i in econ.cadets:
        xi = alloc.assignment(i)
        for b, t in _pref(prefs, i).branches_above(xi, econ.branches):
            if (b, t) not in held:
                continue
            pri = econ.priorities[b]
            ri = pri.rank(i)
            for j in held.get((b, t), ()):
                if pri.rank(j) <= ri:
                    break
                out.append(Witness(
                    (i, j), b, _contract(i, xi) + (Contract(j, b, t),),
                    f"{i} prefers {j}'s ({b}, {t.value}) to {format_assignment(xi)} "
                    f"and has higher priority at {b}",
                ))
    return _report(econ, "no_priority_reversals", out)


def check_bradso_enforcement(
    econ: Economy, prefs: Mapping[str, ContractPreference], alloc: Allocation
) -> AxiomReport:
    """Both clauses of BRADSO policy enforcement.

    Clause 1: whoever is charged the increased cost at ``b`` must be ranked
    by the policy above every cadet who would rather have ``(b, BASE)``.
    Clause 2: if a cadet the policy favours over a base-cost holder at ``b``
    would rather pay the increased cost there, the increased-cost cap of
    ``b`` must be exhausted.
    """
    _require_valid(econ, alloc)
    wants: Dict[Tuple[str, Cost], List[str]] = {}
    for j in econ.cadets:
        for pair in _pref(prefs, j).branches_above(alloc.assignment(j), econ.branches):
            wants.setdefault(pair, []).append(j)
    held = _holders_by_rank(econ, alloc)
    out = []
    for b in econ.branches:
        pol = econ.policies[b]
        for i in held.get((b, Cost.INCREASED), ()):
            for j in wants.get((b, Cost.BASE), ()):
                if not pol.boosts(i, j):
                    out.append(Witness(
                        (i, j), b, (Contract(i, b, Cost.INCREASED),) + _contract(j, alloc.assignment(j)),
                        f"clause 1: {i} is charged at {b} although {j} prefers ({b}, BASE) "
                        f"to {format_assignment(alloc.assignment(j))} and ({i}, BRADSO) does not "
                        f"precede ({j}, BASE) in the policy",
                        {"clause": 1},
                    ))
        n_plus = alloc.count(b, Cost.INCREASED)
        if n_plus >= econ.quotas[b].bradso_cap:
            continue
        for i in wants.get((b, Cost.INCREASED), ()):
            for j in held.get((b, Cost.BASE), ()):
                if pol.boosts(i, j):
                    out.append(Witness(
                        (i, j), b, _contract(i, alloc.assignment(i)) + (Contract(j, b, Cost.BASE),),
                        f"clause 2: {i} prefers ({b}, BRADSO) to {format_assignment(alloc.assignment(i))}, "
                        f"({i}, BRADSO) precedes ({j}, BASE) in the policy, and only {n_plus} of "
                        f"{econ.quotas[b].bradso_cap} increased-cost positions are used",
                        {"clause": 2},
                    ))
    return _report(econ, "bradso_enforcement", out)


# quasi-direct axioms -------------------------------------------------------


def _strategy(strategies: Mapping[str, QuasiStrategy], i: str) -> QuasiStrategy:
    return strategies[i] if i in strategies else QuasiStrategy(i, ())


def unranked_willingness_notes(strategies: Mapping[str, QuasiStrategy]) -> List[str]:
    """Flag willingness declared for branches the cadet did not rank; mechanisms ignore them."""
    notes = []
    for i in sorted(strategies):
        extra = strategies[i].unranked_bradso
        if extra:
            notes.append(f"{i} declared willingness for unranked branch(es) {sorted(extra)}; ignored")
    return notes


def check_detectable_priority_reversals(
    econ: Economy, strategies: Mapping[str, QuasiStrategy], alloc: Allocation
) -> AxiomReport:
    """Reversals visible from branch rankings and willingness sets alone.

    ``j`` holds ``(b, BASE)``, ``i`` has higher priority at ``b`` and either
    pays the increased cost at ``b`` or ranks ``b`` above the branch she got.
    """
    _require_valid(econ, alloc)
    base = _holders_by_rank(econ, alloc)
    out = []
    for i in econ.cadets:
        xi = alloc.assignment(i)
        s = _strategy(strategies, i)
        mine = xi[0] if xi else None
        visible = [b for b in s.branch_order if b in econ.quotas and s.ranks_above(b, mine)]
        if xi is not None and xi[1] is Cost.INCREASED:
            visible.append(xi[0])
        for b in visible:
            pri = econ.priorities[b]
            ri = pri.rank(i)
            for j in base.get((b, Cost.BASE), ()):
                if pri.rank(j) <= ri:
                    break
                why = (f"{i} is charged the increased cost at {b}" if mine == b
                       else f"{i} ranks {b} above {mine or 'UNMATCHED'}")
                out.append(Witness(
                    (i, j), b, _contract(i, xi) + (Contract(j, b, Cost.BASE),),
                    f"{why} while lower-priority {j} holds ({b}, BASE)",
                ))
    return _report(econ, "no_detectable_priority_reversals", out, unranked_willingness_notes(strategies))


def _require_quasi(mech: Mechanism) -> None:
    if mech.is_direct:
        raise TypeError(f"{mech.name} is a direct mechanism; this audit needs a quasi-direct one")


def _drop_rerun(
    mech: Mechanism, econ: Economy, strategies: Mapping[str, QuasiStrategy], i: str, b: str
) -> Assignment:
    alt = dict(strategies)
    alt[i] = _strategy(strategies, i).without(b)
    return mech(econ, alt).assignment(i)


def check_bradso_ic(
    mech: Mechanism,
    econ: Economy,
    strategies: Mapping[str, QuasiStrategy],
    alloc: Optional[Allocation] = None,
) -> AxiomReport:
    """Nobody charged the increased cost at ``b`` would get ``(b, BASE)`` by withdrawing willingness for ``b``."""
    _require_quasi(mech)
    alloc = mech(econ, strategies) if alloc is None else alloc
    out = []
    for c in sorted(alloc.contracts):
        if c.cost is not Cost.INCREASED:
            continue
        alt = _drop_rerun(mech, econ, strategies, c.cadet, c.branch)
        if alt == (c.branch, Cost.BASE):
            out.append(Witness(
                (c.cadet,), c.branch, (c,),
                f"{c.cadet} is charged at {c.branch} but would receive ({c.branch}, BASE) "
                f"without declaring willingness for it",
                {"reported": format_assignment(c.assignment), "counterfactual": format_assignment(alt)},
            ))
    return _report(econ, "bradso_ic", out, unranked_willingness_notes(strategies))


def check_strategic_bradso(
    mech: Mechanism,
    econ: Economy,
    strategies: Mapping[str, QuasiStrategy],
    alloc: Optional[Allocation] = None,
) -> AxiomReport:
    """Willingness never serves only to win a branch at base cost.

    A cadet holding ``(b, BASE)`` with ``b`` in her willingness set is a
    witness when withdrawing ``b`` from that set loses her ``(b, BASE)``.
    """
    _require_quasi(mech)
    alloc = mech(econ, strategies) if alloc is None else alloc
    out = []
    for c in sorted(alloc.contracts):
        if c.cost is not Cost.BASE or c.branch not in _strategy(strategies, c.cadet).bradso_set:
            continue
        alt = _drop_rerun(mech, econ, strategies, c.cadet, c.branch)
        if alt != (c.branch, Cost.BASE):
            out.append(Witness(
                (c.cadet,), c.branch, (c,),
                f"{c.cadet} holds ({c.branch}, BASE) only because of declared willingness; "
                f"without it the outcome is {format_assignment(alt)}",
                {"reported": format_assignment(c.assignment), "counterfactual": format_assignment(alt)},
            ))
    return _report(econ, "strategic_bradso", out, unranked_willingness_notes(strategies))


# strategy-proofness --------------------------------------------------------


def count_q_preferences(n_branches: int) -> int:
    """Number of acceptable lists over ``n_branches`` branches in which every
    increased-cost pair follows its base-cost pair.

    Choose ``a`` branches listed at base cost only and ``c`` listed at both
    costs; the ``a + 2c`` pairs can be arranged in ``(a + 2c)! / 2^c`` ways.
    """
    total = 0
    for a in range(n_branches + 1):
        for c in range(n_branches - a + 1):
            ways = math.comb(n_branches, a) * math.comb(n_branches - a, c)
            total += ways * math.factorial(a + 2 * c) // 2**c
    return total


def q_preferences(cadet: str, branches: Sequence[str]) -> Iterator[ContractPreference]:
    """Every acceptable list over ``branches`` in the restricted domain."""
    for mask in itertools.product((0, 1, 2), repeat=len(branches)):
        pairs = []
        for b, m in zip(branches, mask):
            if m >= 1:
                pairs.append((b, Cost.BASE))
            if m == 2:
                pairs.append((b, Cost.INCREASED))
        for perm in itertools.permutations(pairs):
            seen = set()
            ok = True
            for b, t in perm:
                if t is Cost.INCREASED and b not in seen:
                    ok = False
                    break
                seen.add(b)
            if ok:
                yield ContractPreference(cadet, perm)


def check_strategy_proofness(
    mech: Mechanism,
    econ: Economy,
    prefs: Mapping[str, ContractPreference],
    budget: int = DEFAULT_BUDGET,
) -> AxiomReport:
    """Exhaustive single-cadet deviation scan for a direct mechanism.

    Each cadet tries every acceptable list over the economy's branches (the
    order of unacceptable pairs does not influence any mechanism here). The
    number of mechanism runs is checked against ``budget`` before starting.
    """
    if not mech.is_direct:
        raise TypeError(f"{mech.name} is quasi-direct; wrap it with as_quasi_direct/as_direct first")
    needed = len(econ.cadets) * count_q_preferences(len(econ.branches))
    if needed > budget:
        raise BudgetExceeded("strategy-proofness scan", needed, budget)
    truth = mech(econ, prefs)
    out = []
    for i in econ.cadets:
        pi = _pref(prefs, i)
        xi = truth.assignment(i)
        for lie in q_preferences(i, econ.branches):
            alt = dict(prefs)
            alt[i] = lie
            yi = mech(econ, alt).assignment(i)
            if pi.prefers(yi, xi):
                listed = ", ".join(format_assignment(p) for p in lie.acceptable) or "nothing"
                out.append(Witness(
                    (i,), yi[0] if yi else None, _contract(i, yi),
                    f"{i} gets {format_assignment(yi)} instead of {format_assignment(xi)} by reporting [{listed}]",
                    {"truthful": format_assignment(xi), "deviation": format_assignment(yi),
                     "report": [format_assignment(p) for p in lie.acceptable]},
                ))
                break
    return _report(econ, "strategy_proofness", out)


ALLOCATION_AXIOMS: Dict[str, Callable[[Economy, Mapping, Allocation], AxiomReport]] = {
    "individual_rationality": check_individual_rationality,
    "non_wastefulness": check_non_wastefulness,
    "no_priority_reversals": check_priority_reversals,
    "bradso_enforcement": check_bradso_enforcement,
}


def audit_allocation(
    econ: Economy, prefs: Mapping[str, ContractPreference], alloc: Allocation, axioms: Sequence[str] = ()
) -> List[AxiomReport]:
    names = list(axioms) or list(ALLOCATION_AXIOMS)
    unknown = [n for n in names if n not in ALLOCATION_AXIOMS]
    if unknown:
        raise ValueError(f"unknown axioms {unknown}; choose from {sorted(ALLOCATION_AXIOMS)}")
    return [ALLOCATION_AXIOMS[n](econ, prefs, alloc) for n in names]
