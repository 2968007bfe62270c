"""Command-line interface: ``cadetmatch <command> ...``.

Every command writes its artifacts atomically into the output directory
(``--out``, else ``$CADETMATCH_OUT``, else ``./cadetmatch-out``). Failures
print a JSON object to stderr and exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from cadetmatch import __version__
from cadetmatch.analysis import (
    POLICY_CHAIN,
    SWEEP_COLUMNS,
    SweepGrid,
    plot_data,
    project_truthful,
    sweep,
    sweep_monotonicity,
)
from cadetmatch.axioms import (
    ALLOCATION_AXIOMS,
    check_bradso_ic,
    check_detectable_priority_reversals,
    check_strategic_bradso,
    check_strategy_proofness,
)
from cadetmatch.bundle import (
    GeneratorConfig,
    InstanceBundle,
    ParseError,
    csv_text,
    allocation_csv,
    allocation_json,
    bundle_files,
    generate,
    parse_bundle,
    parse_game,
    read_allocation,
    write_outputs,
)
from cadetmatch.core import DEFAULT_BUDGET, BudgetExceeded
from cadetmatch.equilibrium import (
    BayesianGame,
    enumerate_nash,
    find_bne,
    is_bne,
    truthful_rule,
)
from cadetmatch.mechanisms import com_bradso, usma2006, usma2020
from cadetmatch.mechanisms.handles import get as get_mechanism

OUT_ENV = "CADETMATCH_OUT"
EXIT_ERROR = 2
EXIT_CHECK_FAILED = 3
GLOBAL_DEFAULTS = {"seed": 0, "format": "csv", "budget": DEFAULT_BUDGET, "out": None}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "cadetmatch-out")


def _profile(bundle: InstanceBundle, mech):
    """Profile in the mechanism's strategy space, projecting contract preferences if needed."""
    if mech.is_direct:
        if bundle.prefs is None:
            raise ValueError(f"{mech.name} is direct; the bundle needs contract_prefs.csv")
        return bundle.prefs
    if bundle.strategies is not None:
        return bundle.strategies
    if bundle.prefs is not None:
        return project_truthful(bundle.prefs)
    raise ValueError("the bundle has neither strategies nor contract preferences")


def _run_with_trace(name: str, econ, profile):
    key = name.lower()
    if key == "com-bradso":
        return com_bradso(econ, profile)
    if key == "usma2006":
        return usma2006(econ, profile)
    if key == "usma2020":
        return usma2020(econ, profile)
    return get_mechanism(name)(econ, profile), None


def cmd_run(args) -> int:
    bundle = parse_bundle(args.bundle, args.policy)
    mech = get_mechanism(args.mechanism)
    alloc, trace = _run_with_trace(args.mechanism, bundle.econ, _profile(bundle, mech))
    files = {}
    if args.format == "json":
        files["allocation.json"] = _dumps(allocation_json(bundle.econ, alloc))
    else:
        files["allocation.csv"] = allocation_csv(bundle.econ, alloc)
    if trace is not None:
        files["trace.json"] = _dumps(trace.to_json())
    write_outputs(_out_dir(args), files)
    sys.stdout.write(_dumps({"mechanism": mech.name, "outputs": sorted(files),
                             "matched": len(alloc), "bradso_charged": sum(
                                 1 for c in alloc.contracts if c.cost.value == "BRADSO")}))
    return 0


QUASI_AXIOMS = ("bradso_ic", "strategic_bradso", "no_detectable_priority_reversals")


def cmd_audit(args) -> int:
    bundle = parse_bundle(args.bundle, args.policy)
    econ = bundle.econ
    alloc = read_allocation(args.allocation, econ)
    wanted = [a.strip() for a in args.axioms.split(",")] if args.axioms != "all" else None
    mech = get_mechanism(args.mechanism) if args.mechanism else None
    reports = []

    def want(name: str) -> bool:
        return wanted is None or name in wanted

    known = set(ALLOCATION_AXIOMS) | set(QUASI_AXIOMS) | {"strategy_proofness"}
    if wanted:
        unknown = sorted(set(wanted) - known)
        if unknown:
            raise ValueError(f"unknown axioms {unknown}; choose from {sorted(known)}")
    if bundle.prefs is not None:
        for name, check in ALLOCATION_AXIOMS.items():
            if want(name):
                reports.append(check(econ, bundle.prefs, alloc))
    elif wanted and set(wanted) & set(ALLOCATION_AXIOMS):
        raise ValueError("allocation axioms need contract_prefs.csv in the bundle")
    strategies = bundle.strategies
    if strategies is None and bundle.prefs is not None:
        strategies = project_truthful(bundle.prefs)
    if strategies is not None and want("no_detectable_priority_reversals"):
        reports.append(check_detectable_priority_reversals(econ, strategies, alloc))
    if mech is not None and not mech.is_direct and strategies is not None:
        if want("bradso_ic"):
            reports.append(check_bradso_ic(mech, econ, strategies, alloc))
        if want("strategic_bradso"):
            reports.append(check_strategic_bradso(mech, econ, strategies, alloc))
    if mech is not None and mech.is_direct and bundle.prefs is not None and (
        wanted is not None and "strategy_proofness" in wanted
    ):
        reports.append(check_strategy_proofness(mech, econ, bundle.prefs, args.budget))
    payload = {"reports": [r.to_json() for r in reports],
               "all_hold": all(r.holds for r in reports)}
    write_outputs(_out_dir(args), {"audit.json": _dumps(payload)})
    sys.stdout.write(_dumps({"verdicts": {r.axiom: r.verdict for r in reports}, "all_hold": payload["all_hold"]}))
    return EXIT_CHECK_FAILED if args.strict and not payload["all_hold"] else 0


def _rule_json(game: BayesianGame, rule) -> dict:
    return {
        i: {(t.name or f"type{k + 1}"): ("b" if a else "none") for k, (t, a) in enumerate(zip(game.types[i], rule[i]))}
        for i in game.econ.cadets
    }


def cmd_equilibrium(args) -> int:
    game = parse_game(args.game)
    if isinstance(game, BayesianGame):
        rules = find_bne(game, args.budget)
        truthful = truthful_rule(game)
        payload = {
            "kind": "bayesian",
            "equilibria": [_rule_json(game, r) for r in rules],
            "truthful_is_equilibrium": is_bne(game, truthful),
            "unique": len(rules) == 1,
        }
        name = "bne.json"
    else:
        result = enumerate_nash(game, args.budget)
        payload = {"kind": "nash", **result.to_json()}
        name = "nash.json"
    write_outputs(_out_dir(args), {name: _dumps(payload)})
    sys.stdout.write(_dumps(payload))
    return 0


def _parse_caps(text: str) -> List[Fraction]:
    """``5:75:5`` (percent range) or a comma list of percentages."""
    if ":" in text:
        lo, hi, step = (int(x) for x in text.split(":"))
        return [Fraction(p, 100) for p in range(lo, hi + 1, step)]
    return [Fraction(x.strip()) / 100 for x in text.split(",") if x.strip()]


def cmd_sweep(args) -> int:
    bundle = parse_bundle(args.bundle)
    if bundle.prefs is None:
        raise ValueError("sweep needs contract_prefs.csv in the bundle")
    grid = SweepGrid(tuple(_parse_caps(args.caps)), tuple(p.strip() for p in args.policies.split(",")),
                     args.rounding)
    rows = sweep(bundle.econ, bundle.prefs, grid, workers=args.workers)
    violations = sweep_monotonicity(rows, [p for p in POLICY_CHAIN if p in grid.policies])
    aggregate = sweep_monotonicity(rows, [p for p in POLICY_CHAIN if p in grid.policies], include_aggregate=True)
    aggregate = [v for v in aggregate if v.branch_id == "ALL"]
    summary = {
        "cells": len(grid.fractions) * len(grid.policies),
        "per_branch_violations": [v.__dict__ for v in violations],
        "aggregate_violations": [v.__dict__ for v in aggregate],
    }
    files = {"plot.json": _dumps(plot_data(rows)), "monotonicity.json": _dumps(summary)}
    if args.format == "json":
        files["sweep.json"] = _dumps([dict(zip(SWEEP_COLUMNS, r.to_csv())) for r in rows])
    else:
        files["sweep.csv"] = csv_text(SWEEP_COLUMNS, (r.to_csv() for r in rows))
    write_outputs(_out_dir(args), files)
    sys.stdout.write(_dumps({"cells": summary["cells"], "per_branch_violations": len(violations),
                             "aggregate_violations": len(aggregate), "outputs": sorted(files)}))
    return EXIT_CHECK_FAILED if args.check and violations else 0


def cmd_project(args) -> int:
    bundle = parse_bundle(args.bundle)
    if bundle.prefs is None:
        raise ValueError("project needs contract_prefs.csv in the bundle")
    strategies = project_truthful(bundle.prefs)
    econ = bundle.econ
    if args.format == "json":
        files = {"strategies.json": _dumps({
            i: {"branches": list(strategies[i].branch_order), "willing": sorted(strategies[i].bradso_set)}
            for i in econ.cadets if i in strategies})}
    else:
        files = bundle_files(InstanceBundle(econ, None, strategies, {}))
        files = {k: files[k] for k in ("strategies.csv", "willing.csv")}
    write_outputs(_out_dir(args), files)
    sys.stdout.write(_dumps({"cadets": len(strategies), "outputs": sorted(files)}))
    return 0


def cmd_generate(args) -> int:
    config = GeneratorConfig(
        n_cadets=args.cadets,
        n_branches=args.branches,
        quota_range=(args.quota_min, args.quota_max),
        tier_shares=tuple(float(x) for x in args.tier_shares.split(",")),
        pref_length=(args.pref_min, args.pref_max),
        willingness_rate=args.willingness,
        initial_cap_fraction=args.cap_fraction,
        common_priority=not args.heterogeneous,
        policy=args.policy,
        seed=args.seed,
    )
    bundle = generate(config)
    files = bundle_files(bundle)
    write_outputs(_out_dir(args), files)
    sys.stdout.write(_dumps({"outputs": sorted(files), "hash": json.loads(files["manifest.json"])["hash"]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the command; defaults are
    # filled in after parsing so a subcommand cannot reset a value given earlier
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="random seed (used by generate)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    common.add_argument("--budget", type=int, help="cap on exhaustive enumerations (default 2^20)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./cadetmatch-out)")

    p = argparse.ArgumentParser(prog="cadetmatch", description="Cadet-branch matching with BRADSO contracts.",
                                parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run a mechanism on a bundle")
    r.add_argument("--bundle", required=True)
    r.add_argument("--mechanism", required=True,
                   help="com-bradso, phi-br, usma2006, usma2020 or sd")
    r.add_argument("--policy", help="override the bundle policy (ultimate, tier2020, tier2021)")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", parents=[common], help="check axioms on an allocation")
    a.add_argument("--bundle", required=True)
    a.add_argument("--allocation", required=True)
    a.add_argument("--axioms", default="all", help="'all' or a comma list of axiom names")
    a.add_argument("--mechanism", help="mechanism for counterfactual axioms")
    a.add_argument("--policy")
    a.add_argument("--strict", action="store_true", help=f"exit {EXIT_CHECK_FAILED} if any axiom is violated")
    a.set_defaults(func=cmd_audit)

    e = sub.add_parser("equilibrium", parents=[common], help="Nash or Bayesian equilibria of a game spec")
    e.add_argument("--game", required=True)
    e.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("sweep", parents=[common], help="COM-BRADSO over cap fractions and policies")
    s.add_argument("--bundle", required=True)
    s.add_argument("--caps", default="5:75:5", help="percent range lo:hi:step or comma list")
    s.add_argument("--policies", default=",".join(POLICY_CHAIN))
    s.add_argument("--rounding", choices=("floor", "ceil", "nearest"), default="floor")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--check", action="store_true",
                   help=f"exit {EXIT_CHECK_FAILED} on a per-branch monotonicity violation")
    s.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("project", parents=[common], help="truthful quasi-strategies from contract preferences")
    pr.add_argument("--bundle", required=True)
    pr.set_defaults(func=cmd_project)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic bundle")
    g.add_argument("--cadets", type=int, default=1000)
    g.add_argument("--branches", type=int, default=18)
    g.add_argument("--quota-min", type=int, default=20)
    g.add_argument("--quota-max", type=int, default=120)
    g.add_argument("--tier-shares", default="0.25,0.5,0.25")
    g.add_argument("--pref-min", type=int, default=3)
    g.add_argument("--pref-max", type=int, default=10)
    g.add_argument("--willingness", type=float, default=0.3)
    g.add_argument("--cap-fraction", type=float, default=0.25)
    g.add_argument("--heterogeneous", action="store_true", help="noisy per-branch priorities instead of the OML")
    g.add_argument("--policy", default="ultimate")
    g.set_defaults(func=cmd_generate)
    return p


def _error_payload(exc: BaseException) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        out.update(exc.to_json())
        out["message"] = exc.message
    if isinstance(exc, BudgetExceeded):
        out.update({"needed": exc.needed, "budget": exc.budget})
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        return args.func(args)
    except Exception as exc:  # every failure becomes machine-readable
        sys.stderr.write(json.dumps(_error_payload(exc), sort_keys=True) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
