"""Pure-strategy equilibria of the single-branch USMA-2020 game.

With one branch every cadet ranks it, and the only choice is whether to
declare willingness to pay the increased cost. Profiles are encoded as
bitmasks over ``econ.cadets`` (bit ``k`` set means cadet ``k`` is willing).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Sequence, Tuple

from cadetmatch.core import (
    DEFAULT_BUDGET,
    Allocation,
    Assignment,
    BudgetExceeded,
    ContractPreference,
    Cost,
    Economy,
    QuasiStrategy,
)
from cadetmatch.mechanisms.quasi_direct import usma2020
from cadetmatch.mechanisms.single_branch import phi_br

WILLING = "b"
UNWILLING = "none"


def _branch(econ: Economy) -> str:
    if not econ.is_single_branch:
        raise ValueError("the game is defined for single-branch economies only")
    return econ.branches[0]


def profile_strategies(econ: Economy, willing: Sequence[bool]) -> Dict[str, QuasiStrategy]:
    b = _branch(econ)
    return {
        i: QuasiStrategy(i, (b,), {b} if w else frozenset()) for i, w in zip(econ.cadets, willing)
    }


def play(econ: Economy, willing: Sequence[bool]) -> Allocation:
    """USMA-2020 outcome when cadet ``k`` declares willingness iff ``willing[k]``."""
    return usma2020(econ, profile_strategies(econ, willing))[0]


def _bits(mask: int, n: int) -> Tuple[bool, ...]:
    return tuple(bool(mask >> k & 1) for k in range(n))


@dataclass(frozen=True)
class SingleBranchGame:
    """Complete-information game: ``increased_ok[i]`` says whether ``i`` prefers
    ``(b, BRADSO)`` to remaining unmatched. Everyone prefers ``(b, BASE)`` most.
    """

    econ: Economy
    increased_ok: Mapping[str, bool]

    def __post_init__(self) -> None:
        _branch(self.econ)
        missing = set(self.econ.cadets) - set(self.increased_ok)
        if missing:
            raise ValueError(f"no preference for cadets {sorted(missing)}")

    @classmethod
    def from_preferences(cls, econ: Economy, prefs: Mapping[str, ContractPreference]) -> "SingleBranchGame":
        b = _branch(econ)
        for i in econ.cadets:
            if not prefs[i].prefers((b, Cost.BASE), None):
                raise ValueError(f"{i} must find ({b}, BASE) acceptable in this game")
        return cls(econ, {i: prefs[i].is_acceptable((b, Cost.INCREASED)) for i in econ.cadets})

    @property
    def n_profiles(self) -> int:
        return 2 ** len(self.econ.cadets)

    def preference(self, i: str) -> ContractPreference:
        return ContractPreference.single_branch(i, _branch(self.econ), self.increased_ok[i])

    def preferences(self) -> Dict[str, ContractPreference]:
        return {i: self.preference(i) for i in self.econ.cadets}

    def truthful_profile(self) -> Tuple[bool, ...]:
        return tuple(self.increased_ok[i] for i in self.econ.cadets)


@dataclass(frozen=True)
class NashEquilibrium:
    profile: Tuple[bool, ...]
    outcome: Allocation

    def strategies(self, cadets: Sequence[str]) -> Dict[str, str]:
        return {i: WILLING if w else UNWILLING for i, w in zip(cadets, self.profile)}


@dataclass(frozen=True)
class NashResult:
    game: SingleBranchGame
    equilibria: Tuple[NashEquilibrium, ...]

    @property
    def profiles(self) -> List[Tuple[bool, ...]]:
        return [e.profile for e in self.equilibria]

    @property
    def outcomes(self) -> FrozenSet[Allocation]:
        return frozenset(e.outcome for e in self.equilibria)

    def to_json(self) -> dict:
        cadets = self.game.econ.cadets

        def assignment(a: Allocation, i: str):
            x = a.assignment(i)
            return None if x is None else {"branch_id": x[0], "cost": x[1].value}

        return {
            "cadets": list(cadets),
            "equilibria": [
                {
                    "strategies": e.strategies(cadets),
                    "outcome": {i: assignment(e.outcome, i) for i in cadets},
                }
                for e in self.equilibria
            ],
            "distinct_outcomes": len(self.outcomes),
        }


def enumerate_nash(game: SingleBranchGame, budget: int = DEFAULT_BUDGET) -> NashResult:
    """All pure-strategy Nash equilibria, in increasing profile-mask order.

    Each profile's outcome is computed once; a profile is an equilibrium when
    flipping any single cadet's bit gives that cadet nothing strictly better
    under its true preference.
    """
    econ = game.econ
    n = len(econ.cadets)
    if game.n_profiles > budget:
        raise BudgetExceeded("Nash enumeration", game.n_profiles, budget)
    outcomes = [play(econ, _bits(m, n)) for m in range(game.n_profiles)]
    prefs = [game.preference(i) for i in econ.cadets]
    found = []
    for m, out in enumerate(outcomes):
        stable = True
        for k, i in enumerate(econ.cadets):
            if prefs[k].prefers(outcomes[m ^ (1 << k)].assignment(i), out.assignment(i)):
                stable = False
                break
        if stable:
            found.append(NashEquilibrium(_bits(m, n), out))
    return NashResult(game, tuple(found))


def is_nash(game: SingleBranchGame, profile: Sequence[bool]) -> bool:
    """Best-response check that re-runs the mechanism for every deviation."""
    econ = game.econ
    base = play(econ, profile)
    for k, i in enumerate(econ.cadets):
        pref = game.preference(i)
        current = base.assignment(i)
        for alt in (False, True):
            if alt == profile[k]:
                continue
            dev = list(profile)
            dev[k] = alt
            if pref.prefers(play(econ, dev).assignment(i), current):
                return False
    return True


@dataclass(frozen=True)
class Prop1Verdict:
    holds: bool
    outcomes: FrozenSet[Allocation]
    reference: Allocation
    n_equilibria: int


def verify_prop1(
    econ: Economy, prefs: Mapping[str, ContractPreference], budget: int = DEFAULT_BUDGET
) -> Prop1Verdict:
    """Whether the Nash outcome set is exactly ``{phi_br(prefs)}``."""
    game = SingleBranchGame.from_preferences(econ, prefs)
    result = enumerate_nash(game, budget)
    reference = phi_br(econ, game.preferences())
    return Prop1Verdict(result.outcomes == {reference}, result.outcomes, reference, len(result.equilibria))


# incomplete information ----------------------------------------------------


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class TypeSpec:
    """One possible utility function of a cadet, with its probability."""

    probability: Fraction
    base: Fraction
    increased: Fraction
    unmatched: Fraction
    name: str = ""

    def __post_init__(self) -> None:
        for f in ("probability", "base", "increased", "unmatched"):
            object.__setattr__(self, f, _frac(getattr(self, f)))
        if not 0 <= self.probability <= 1:
            raise ValueError(f"type probability {self.probability} outside [0, 1]")

    def utility(self, a: Assignment) -> Fraction:
        if a is None:
            return self.unmatched
        return self.base if a[1] is Cost.BASE else self.increased

    @property
    def truthful_action(self) -> bool:
        """Declare willingness iff the increased cost beats remaining unmatched."""
        return self.increased > self.unmatched


@dataclass(frozen=True)
class BayesianGame:
    econ: Economy
    types: Mapping[str, Tuple[TypeSpec, ...]]

    def __post_init__(self) -> None:
        _branch(self.econ)
        object.__setattr__(self, "types", {i: tuple(self.types[i]) for i in self.econ.cadets})
        for i, ts in self.types.items():
            if not ts:
                raise ValueError(f"cadet {i} has no types")
            total = sum(t.probability for t in ts)
            if total != 1:
                raise ValueError(f"type probabilities of {i} sum to {total}, not 1")

    @property
    def n_rules(self) -> int:
        """Number of pure strategy rules after fixing zero-probability types."""
        free = sum(1 for ts in self.types.values() for t in ts if t.probability > 0)
        return 2**free


#: ``rule[i][k]`` is the willingness declared by cadet ``i`` when of type ``k``.
StrategyRule = Mapping[str, Tuple[bool, ...]]


def truthful_rule(game: BayesianGame) -> Dict[str, Tuple[bool, ...]]:
    return {i: tuple(t.truthful_action for t in ts) for i, ts in game.types.items()}


class _Evaluator:
    """Caches outcomes by action profile; all arithmetic is exact."""

    def __init__(self, game: BayesianGame) -> None:
        self.game = game
        self.cadets = game.econ.cadets
        self.cache: Dict[Tuple[bool, ...], Allocation] = {}

    def outcome(self, actions: Tuple[bool, ...]) -> Allocation:
        out = self.cache.get(actions)
        if out is None:
            out = self.cache[actions] = play(self.game.econ, actions)
        return out

    def interim(self, rule: StrategyRule, k: int, type_idx: int, action: bool) -> Fraction:
        """Expected utility of cadet ``k`` of type ``type_idx`` playing ``action`` against ``rule``."""
        me = self.cadets[k]
        my_type = self.game.types[me][type_idx]
        others = [j for n, j in enumerate(self.cadets) if n != k]
        total = Fraction(0)
        for combo in itertools.product(*(range(len(self.game.types[j])) for j in others)):
            p = Fraction(1)
            for j, t in zip(others, combo):
                p *= self.game.types[j][t].probability
            if p == 0:
                continue
            actions = []
            it = iter(zip(others, combo))
            for n, j in enumerate(self.cadets):
                if n == k:
                    actions.append(action)
                else:
                    jj, t = next(it)
                    actions.append(rule[jj][t])
            total += p * my_type.utility(self.outcome(tuple(actions)).assignment(me))
        return total


def bayes_expected_utilities(game: BayesianGame, rule: StrategyRule) -> Dict[str, Fraction]:
    """Ex-ante expected utility of every cadet when everyone follows ``rule``."""
    ev = _Evaluator(game)
    cadets = game.econ.cadets
    totals = {i: Fraction(0) for i in cadets}
    mass = Fraction(0)
    for combo in itertools.product(*(range(len(game.types[i])) for i in cadets)):
        p = Fraction(1)
        for i, t in zip(cadets, combo):
            p *= game.types[i][t].probability
        mass += p
        if p == 0:
            continue
        out = ev.outcome(tuple(rule[i][t] for i, t in zip(cadets, combo)))
        for i, t in zip(cadets, combo):
            totals[i] += p * game.types[i][t].utility(out.assignment(i))
    assert mass == 1, f"type-profile probabilities sum to {mass}"
    return totals


def _is_bne(ev: _Evaluator, rule: StrategyRule) -> bool:
    for k, i in enumerate(ev.cadets):
        for ti, t in enumerate(ev.game.types[i]):
            if t.probability == 0:
                continue
            mine = ev.interim(rule, k, ti, rule[i][ti])
            if ev.interim(rule, k, ti, not rule[i][ti]) > mine:
                return False
    return True


def is_bne(game: BayesianGame, rule: StrategyRule) -> bool:
    return _is_bne(_Evaluator(game), rule)


def find_bne(game: BayesianGame, budget: int = DEFAULT_BUDGET) -> List[Dict[str, Tuple[bool, ...]]]:
    """Every pure Bayesian Nash equilibrium rule.

    Zero-probability types always play their truthful action, so rules that
    differ only on such types are reported once.
    """
    if game.n_rules > budget:
        raise BudgetExceeded("Bayesian equilibrium scan", game.n_rules, budget)
    cadets = game.econ.cadets
    choices = []
    for i in cadets:
        options = [(t.truthful_action,) if t.probability == 0 else (False, True) for t in game.types[i]]
        choices.append(list(itertools.product(*options)))
    ev = _Evaluator(game)
    found = []
    for combo in itertools.product(*choices):
        rule = dict(zip(cadets, combo))
        if _is_bne(ev, rule):
            found.append(rule)
    return found
