"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import json
import random
import time
import timeit
from contextlib import contextmanager

from cadetmatch import BaselinePriority, BranchQuota, ContractPreference, Cost, Economy
from cadetmatch.analysis import bradso_monotonicity_check, project_truthful, strategic_bradso_metric
from cadetmatch.axioms import (
    check_bradso_enforcement,
    check_bradso_ic,
    check_detectable_priority_reversals,
    check_individual_rationality,
    check_non_wastefulness,
    check_priority_reversals,
    check_strategy_proofness,
    q_preferences,
)
from cadetmatch.cli import EXIT_CHECK_FAILED, main as cli_main
from cadetmatch.equilibrium import (
    enumerate_nash,
    find_bne,
    play,
    profile_strategies,
    truthful_rule,
    verify_prop1,
)
from cadetmatch.mechanisms import com_bradso, phi_br
from cadetmatch.mechanisms.handles import COM_BRADSO, USMA2020
from cadetmatch.policies import TierAssignment, TierVariant, native_order, tiered_policy, ultimate_policy

from tests.cases import (
    EIGHT,
    EIGHT_EXPECTED,
    SCENARIO_ONE,
    SCENARIO_ONE_NE,
    SCENARIO_ONE_TABLE,
    SCENARIO_TWO,
    SCENARIO_TWO_NE,
    SCENARIO_TWO_TABLE,
    THREE,
    eight_cadet_economy,
    eight_cadet_prefs,
    profile_of,
    scenario_game,
    three_cadet_bayesian_game,
)
from tests.instances import random_economy, random_prefs, random_single_branch, random_viable_pool
from tests.test_mechanisms import literal_choice

RESULTS: list = []


@contextmanager
def criterion(number: int, title: str):
    """Collect failures inside the block, then print and record one verdict line."""
    state = {"problems": [], "notes": []}
    start = time.perf_counter()
    yield state
    elapsed = time.perf_counter() - start
    ok = not state["problems"]
    detail = "; ".join(state["problems"] or state["notes"])
    line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'} [{elapsed:6.2f}s] {title}" + (
        f" :: {detail}" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def table_of(alloc, cadets=EIGHT):
    return {i: alloc.assignment(i) for i in cadets}


def test_criterion_01_single_branch_example():
    with criterion(1, "example allocation from phi_br and com_bradso") as st:
        econ, prefs = eight_cadet_economy(), eight_cadet_prefs()
        for name, run in (("phi_br", lambda: phi_br(econ, prefs)), ("com_bradso", lambda: com_bradso(econ, prefs)[0])):
            got = table_of(run())
            if got != EIGHT_EXPECTED:
                st["problems"].append(f"{name} gave {got}")
            best = min(timeit.repeat(run, number=1, repeat=20))
            if best >= 1e-3:
                st["problems"].append(f"{name} took {best * 1e3:.2f} ms")
            st["notes"].append(f"{name} {best * 1e6:.0f} us")


def test_criterion_02_nash_scenarios():
    with criterion(2, "NE outcome sets are singletons matching both tables") as st:
        for label, willing, ne, expected in (("scenario 1", SCENARIO_ONE, SCENARIO_ONE_NE, SCENARIO_ONE_TABLE),
                                             ("scenario 2", SCENARIO_TWO, SCENARIO_TWO_NE, SCENARIO_TWO_TABLE)):
            t = time.perf_counter()
            result = enumerate_nash(scenario_game(willing))
            elapsed = time.perf_counter() - t
            outcomes = [table_of(o) for o in result.outcomes]
            if profile_of(ne) not in result.profiles:
                st["problems"].append(f"{label}: stated profile is not an equilibrium")
            if expected not in outcomes:
                st["problems"].append(f"{label}: stated table is not an equilibrium outcome")
            if len(outcomes) != 1:
                extra = [sorted(i for i, w in zip(EIGHT, p) if w) for p in result.profiles
                         if table_of(play(scenario_game(willing).econ, p)) != expected]
                st["problems"].append(f"{label}: {len(outcomes)} distinct NE outcomes "
                                      f"(other outcome from willing sets {extra})")
            if elapsed >= 1:
                st["problems"].append(f"{label}: {elapsed:.2f}s")
            st["notes"].append(f"{label}: {len(result.profiles)} NE profiles, {len(outcomes)} outcome")


def test_criterion_03_bayesian_truthful_rule():
    with criterion(3, "unique BNE is truthful; type realizations give detectable reversals") as st:
        game = three_cadet_bayesian_game()
        rules = find_bne(game)
        if rules != [truthful_rule(game)]:
            st["problems"].append(f"BNE set {rules}")
        spec = {t.name: t for t in game.types["c1"]}
        for names in (("type1", "type2", "type2"), ("type2", "type1", "type1")):
            chosen = [spec[n] for n in names]
            willing = tuple(t.truthful_action for t in chosen)
            alloc = play(game.econ, willing)
            prefs = {i: ContractPreference.single_branch(i, "b", t.truthful_action) for i, t in zip(THREE, chosen)}
            full = {(w.cadets, w.branch) for w in check_priority_reversals(game.econ, prefs, alloc).witnesses}
            detect = {(w.cadets, w.branch) for w in check_detectable_priority_reversals(
                game.econ, profile_strategies(game.econ, willing), alloc).witnesses}
            if (("c1", "c2"), "b") not in full or (("c1", "c2"), "b") not in detect:
                st["problems"].append(f"{names}: reversals {full}, detectable {detect}")
        st["notes"].append("one BNE, both realizations reversed at (c1, c2)")


def single_branch_grid(n: int):
    cadets = [f"c{k}" for k in range(n)]
    policies = [("ultimate", None)]
    for split in range(n + 1):
        labels = dict(zip(cadets, [1] * split + [2] * (n - split)))
        policies += [(v, {"b": labels}) for v in ("tier2020", "tier2021")]
    for total in range(1, 6):
        for cap in range(total + 1):
            for policy, tiers in policies:
                yield Economy.build(cadets, {"b": (total, cap)}, policy=policy, tiers=tiers,
                                    n_tiers=2 if tiers else None)


def test_criterion_04_cumulative_offer_equals_phi_br():
    with criterion(4, "com_bradso == phi_br over every single-branch profile, n <= 5") as st:
        runs = mismatches = 0
        start = time.perf_counter()
        for n in range(1, 6):
            domain = [list(q_preferences(f"c{k}", ["b"])) for k in range(n)]
            for econ in single_branch_grid(n):
                for profile in itertools.product(*domain):
                    prefs = dict(zip(econ.cadets, profile))
                    runs += 1
                    if com_bradso(econ, prefs)[0] != phi_br(econ, prefs):
                        mismatches += 1
        if mismatches:
            st["problems"].append(f"{mismatches} of {runs} profiles differ")
        if time.perf_counter() - start >= 60:
            st["problems"].append("over one minute")
        st["notes"].append(f"{runs} runs (full 3^n domain per cadet), 0 mismatches")


def test_criterion_05_axiom_suite():
    with criterion(5, "com_bradso passes the allocation axioms; strategy-proof on small economies") as st:
        rng = random.Random(20240501)
        checks = (check_individual_rationality, check_non_wastefulness, check_priority_reversals,
                  check_bradso_enforcement)
        violations, sp_checked = [], 0
        for k in range(500):
            econ = random_economy(rng, rng.randint(1, 8), rng.randint(1, 3))
            prefs = random_prefs(rng, econ)
            alloc = com_bradso(econ, prefs)[0]
            for check in checks:
                report = check(econ, prefs, alloc)
                if not report.holds:
                    violations.append(f"instance {k}: {report.axiom}")
            if len(econ.cadets) <= 3 and len(econ.branches) <= 2:
                sp_checked += 1
                report = check_strategy_proofness(COM_BRADSO, econ, prefs)
                if not report.holds:
                    violations.append(f"instance {k}: strategy-proofness")
        # dedicated small batch so the exhaustive scan is not left to chance
        for k in range(100):
            econ = random_economy(rng, rng.randint(1, 3), rng.randint(1, 2))
            prefs = random_prefs(rng, econ)
            sp_checked += 1
            if not check_strategy_proofness(COM_BRADSO, econ, prefs).holds:
                violations.append(f"small instance {k}: strategy-proofness")
        st["problems"].extend(violations[:5])
        st["notes"].append(f"500 instances x 4 axioms, {sp_checked} exhaustive deviation scans, 0 violations")


def test_criterion_06_increased_count_monotone():
    with criterion(6, "increased-cost counts monotone in cap and along the policy chain") as st:
        rng = random.Random(6)
        bad = disagree = 0
        for _ in range(500):
            cadets = tuple(f"c{k}" for k in range(rng.randint(1, 9)))
            pri = BaselinePriority("b", cadets)
            tiers = TierAssignment("b", dict(zip(cadets, sorted(rng.randint(1, 3) for _ in cadets))), 3)
            chain = [tiered_policy(pri, tiers, TierVariant.TIER2020),
                     tiered_policy(pri, tiers, TierVariant.TIER2021), ultimate_policy(pri)]
            total = rng.randint(1, len(cadets))
            pool = random_viable_pool(rng, cadets, "b")
            verdict = bradso_monotonicity_check(pri, total, pool, range(total + 1), chain)
            bad += not verdict.holds
            oracle = tuple(
                tuple(sum(1 for x in literal_choice(BranchQuota(total, c), native_order(pri), pol, pool)
                          if x.cost is Cost.INCREASED) for c in range(total + 1))
                for pol in chain)
            disagree += oracle != verdict.counts
        if bad:
            st["problems"].append(f"{bad} pools not monotone")
        if disagree:
            st["problems"].append(f"{disagree} pools disagree with the literal choice oracle")
        st["notes"].append("500 pools, 3 policies, every cap; 0 violations")


def test_criterion_07_nash_outcome_is_phi_br():
    with criterion(7, "NE outcome set is the singleton {phi_br} on random single-branch economies") as st:
        rng = random.Random(7)
        start = time.perf_counter()
        multi = missing = 0
        first = None
        for k in range(200):
            econ, prefs = random_single_branch(rng, 6)
            verdict = verify_prop1(econ, prefs)
            if verdict.reference not in verdict.outcomes:
                missing += 1
            if not verdict.holds:
                multi += 1
                if first is None:
                    first = (k, len(econ.cadets), econ.quotas["b"], len(verdict.outcomes))
        if missing:
            st["problems"].append(f"phi_br outcome missing from the NE outcomes in {missing} instances")
        if multi:
            k, n, q, m = first
            st["problems"].append(f"{multi}/200 instances have more than one NE outcome "
                                  f"(first: #{k}, {n} cadets, quota {q.total}/{q.bradso_cap}, {m} outcomes); "
                                  f"phi_br is always among them")
        if time.perf_counter() - start >= 60:
            st["problems"].append("over one minute")


def test_criterion_08_usma2020_pathologies():
    with criterion(8, "incentive failure for i3, strategic BRADSO for i5, detectable reversals for i4/i6") as st:
        econ = eight_cadet_economy()
        truthful = project_truthful(eight_cadet_prefs(SCENARIO_ONE))
        ic = check_bradso_ic(USMA2020, econ, truthful)
        if ic.cadets() != ["i3"]:
            st["problems"].append(f"incentive witnesses {ic.cadets()}")
        metric = strategic_bradso_metric(USMA2020, econ, truthful, USMA2020(econ, truthful))
        if [w.cadets for w in metric] != [("i5",)]:
            st["problems"].append(f"strategic BRADSO metric {[w.cadets for w in metric]}")
        for deviator, victims in (("i4", {"i3"}), ("i6", {"i3", "i4", "i5"})):
            s = profile_strategies(econ, profile_of(SCENARIO_TWO_NE - {deviator}))
            report = check_detectable_priority_reversals(econ, s, USMA2020(econ, s))
            found = {w.cadets for w in report.witnesses}
            if found != {(deviator, j) for j in victims}:
                st["problems"].append(f"{deviator} deviation: {sorted(found)}")
        st["notes"].append("witnesses i3; i5; (i4,i3); (i6,i3),(i6,i4),(i6,i5)")


def test_criterion_09_order_independence():
    with criterion(9, "com_bradso output identical under every proposal order") as st:
        rng = random.Random(9)
        perms = 0
        for k in range(50):
            econ = random_economy(rng, rng.randint(2, 6), rng.randint(1, 3))
            prefs = random_prefs(rng, econ)
            reference = com_bradso(econ, prefs)[0]
            for order in itertools.permutations(econ.cadets):
                perms += 1
                if com_bradso(econ, prefs, order)[0] != reference:
                    st["problems"].append(f"instance {k} differs under order {order}")
                    break
        st["notes"].append(f"50 instances, {perms} orders")


def test_criterion_10_synthetic_sweep_monotone(tmp_path, capsys):
    with criterion(10, "sweep on a synthetic 1000-cadet bundle: no per-branch monotonicity violations") as st:
        bundle, out = tmp_path / "bundle", tmp_path / "sweep"
        assert cli_main(["generate", "--cadets", "1000", "--branches", "18", "--seed", "0",
                         "--policy", "tier2020", "--out", str(bundle)]) == 0
        code = cli_main(["sweep", "--bundle", str(bundle), "--caps", "5:75:5", "--check", "--out", str(out)])
        capsys.readouterr()
        summary = json.loads((out / "monotonicity.json").read_text())
        per_branch = summary["per_branch_violations"]
        if per_branch or code == EXIT_CHECK_FAILED:
            kinds = {k: sum(1 for v in per_branch if v["kind"] == k) for k in ("cap", "policy")}
            branches = len({v["branch_id"] for v in per_branch})
            st["problems"].append(f"{len(per_branch)} per-branch violations ({kinds['cap']} across caps, "
                                  f"{kinds['policy']} across policies, {branches} branches); aggregate "
                                  f"violations {len(summary['aggregate_violations'])}")


if __name__ == "__main__":
    import sys
    import pytest

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
