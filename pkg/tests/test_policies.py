from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cadetmatch import BaselinePriority, BradsoPolicy, Cost, TierAssignment, TierVariant
from cadetmatch.policies import (
    Effectiveness,
    NativeOrder,
    PolicyError,
    native_order,
    tiered_policy,
    ultimate_policy,
    weakly_more_effective,
)

PRI = BaselinePriority("b", ("a", "b", "c", "d"))
P, Z = Cost.INCREASED, Cost.BASE


def names(policy):
    return [f"{i}{'+' if t is P else '0'}" for i, t in policy.order]


def test_ultimate_order():
    assert names(ultimate_policy(PRI)) == ["a+", "b+", "c+", "d+", "a0", "b0", "c0", "d0"]


def test_tier2020_boosts_within_tiers():
    tiers = TierAssignment("b", {"a": 1, "b": 1, "c": 2, "d": 2})
    pol = tiered_policy(PRI, tiers, TierVariant.TIER2020)
    assert names(pol) == ["a+", "b+", "a0", "b0", "c+", "d+", "c0", "d0"]


def test_tier2021_merges_all_but_last_tier():
    tiers = TierAssignment("b", {"a": 1, "b": 2, "c": 3, "d": 3})
    pol = tiered_policy(PRI, tiers, TierVariant.TIER2021)
    assert names(pol) == ["a+", "b+", "a0", "b0", "c+", "d+", "c0", "d0"]


def test_single_tier_equals_ultimate():
    tiers = TierAssignment("b", dict.fromkeys(PRI.ranking, 1))
    for v in TierVariant:
        assert tiered_policy(PRI, tiers, v).order == ultimate_policy(PRI).order


def test_tier_names_parse():
    tiers = TierAssignment("b", {"a": "HIGH", "b": "MEDIUM", "c": "LOW", "d": "3"})
    assert [tiers.tier[i] for i in "abcd"] == [1, 2, 3, 3]


def test_inconsistent_tiers_rejected():
    with pytest.raises(ValueError):
        tiered_policy(PRI, TierAssignment("b", {"a": 2, "b": 1, "c": 2, "d": 2}), TierVariant.TIER2020)


def test_policy_conditions_enforced():
    with pytest.raises(PolicyError):  # base pairs out of priority order
        BradsoPolicy.from_pairs(PRI, [("a", P), ("b", P), ("c", P), ("d", P),
                                      ("b", Z), ("a", Z), ("c", Z), ("d", Z)])
    with pytest.raises(PolicyError):  # base before increased for the same cadet
        BradsoPolicy.from_pairs(PRI, [("a", Z), ("a", P), ("b", P), ("c", P),
                                      ("d", P), ("b", Z), ("c", Z), ("d", Z)])
    with pytest.raises(PolicyError):  # missing pairs
        BradsoPolicy.from_pairs(PRI, [("a", P), ("a", Z)])


def test_native_order_mirrors_priority():
    assert names(native_order(PRI)) == ["a0", "a+", "b0", "b+", "c0", "c+", "d0", "d+"]
    with pytest.raises(PolicyError):
        NativeOrder("b", PRI, tuple(ultimate_policy(PRI).order))


def all_policies(priority):
    """Every valid policy: interleavings of the two cost chains with (i,+) before (i,0)."""
    n = len(priority.ranking)
    for slots in itertools.combinations(range(2 * n), n):
        order, plus, base = [], iter(priority.ranking), iter(priority.ranking)
        for k in range(2 * n):
            order.append((next(plus), P) if k in slots else (next(base), Z))
        try:
            yield BradsoPolicy.from_pairs(priority, order)
        except PolicyError:
            continue


def brute_effective(a, b):
    """``a`` grants every boost ``b`` grants, pair by pair."""
    cadets = a.priority.ranking
    return all(a.boosts(i, j) for i in cadets for j in cadets if b.boosts(i, j))


def test_every_valid_policy_is_enumerated():
    # catalan-style count for 3 cadets: interleavings where each (i,+) precedes (i,0)
    assert len(list(all_policies(BaselinePriority("b", ("x", "y", "z"))))) == 5


def test_effectiveness_matches_pairwise_definition_exhaustively():
    pri = BaselinePriority("b", ("w", "x", "y", "z"))
    pols = list(all_policies(pri))
    for a, b in itertools.product(pols, repeat=2):
        fwd, back = brute_effective(a, b), brute_effective(b, a)
        expected = {(True, True): Effectiveness.EQUAL, (True, False): Effectiveness.FIRST,
                    (False, True): Effectiveness.SECOND, (False, False): Effectiveness.INCOMPARABLE}
        assert weakly_more_effective(a, b) is expected[(fwd, back)]


@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_tier_chain_is_ordered_by_effectiveness(n, n_tiers, seed):
    rng = random.Random(seed)
    cadets = tuple(f"c{k}" for k in range(n))
    pri = BaselinePriority("b", cadets)
    tiers = TierAssignment("b", dict(zip(cadets, sorted(rng.randint(1, n_tiers) for _ in cadets))), n_tiers)
    t20 = tiered_policy(pri, tiers, TierVariant.TIER2020)
    t21 = tiered_policy(pri, tiers, TierVariant.TIER2021)
    ult = ultimate_policy(pri)
    for weak, strong in ((t20, t21), (t21, ult), (t20, ult)):
        assert weakly_more_effective(strong, weak) in (Effectiveness.FIRST, Effectiveness.EQUAL)
        assert brute_effective(strong, weak)


def test_boost_reach_counts_base_pairs_below():
    tiers = TierAssignment("b", {"a": 1, "b": 1, "c": 2, "d": 2})
    pol = tiered_policy(PRI, tiers, TierVariant.TIER2020)
    for i in PRI.ranking:
        assert pol.boost_reach(i) == sum(1 for j in PRI.ranking if pol.boosts(i, j))


def test_effectiveness_requires_same_branch():
    other = BaselinePriority("c", PRI.ranking)
    with pytest.raises(ValueError):
        weakly_more_effective(ultimate_policy(PRI), ultimate_policy(other))
