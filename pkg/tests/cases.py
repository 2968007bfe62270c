"""Small worked instances shared by the test modules."""

from __future__ import annotations

from fractions import Fraction

from cadetmatch import ContractPreference, Cost, Economy
from cadetmatch.equilibrium import BayesianGame, SingleBranchGame, TypeSpec

B = "b"
BASE = (B, Cost.BASE)
PLUS = (B, Cost.INCREASED)

EIGHT = ("i6", "i5", "i4", "i3", "i2", "i1", "j1", "j2")
EIGHT_WILLING = {"i1", "i3", "i5", "j1"}


def eight_cadet_economy(policy: str = "ultimate") -> Economy:
    """One branch, three base-only and three BRADSO-eligible positions."""
    return Economy.build(EIGHT, {B: (6, 3)}, policy=policy)


def eight_cadet_prefs(willing=EIGHT_WILLING) -> dict:
    return {i: ContractPreference.single_branch(i, B, i in willing) for i in EIGHT}


EIGHT_EXPECTED = {
    "i1": PLUS, "i2": None, "i3": BASE, "i4": BASE,
    "i5": BASE, "i6": BASE, "j1": PLUS, "j2": None,
}

# two willingness scenarios: the second adds j2 to the willing cadets
SCENARIO_ONE = EIGHT_WILLING
SCENARIO_TWO = EIGHT_WILLING | {"j2"}
SCENARIO_ONE_NE = {"i1", "j1"}
SCENARIO_TWO_NE = {"i1", "i3", "i4", "i5", "i6", "j1", "j2"}
SCENARIO_ONE_TABLE = EIGHT_EXPECTED
SCENARIO_TWO_TABLE = {
    "i1": PLUS, "i2": None, "i3": PLUS, "i4": BASE,
    "i5": BASE, "i6": BASE, "j1": PLUS, "j2": None,
}


def scenario_game(willing) -> SingleBranchGame:
    return SingleBranchGame(eight_cadet_economy(), {i: i in willing for i in EIGHT})


def profile_of(willing, cadets=EIGHT):
    return tuple(i in willing for i in cadets)


THREE = ("c1", "c2", "c3")


def three_cadet_bayesian_game(p=Fraction(1, 2)) -> BayesianGame:
    econ = Economy.build(THREE, {B: (2, 1)})
    stay_out = TypeSpec(p, 10, 0, 8, "type1")
    volunteer = TypeSpec(1 - p, 10, 8, 0, "type2")
    return BayesianGame(econ, {i: (stay_out, volunteer) for i in THREE})


def example_one_csv() -> dict:
    """The eight-cadet economy written out by hand as a CSV bundle."""
    cadets = "cadet_id,oml_rank\n" + "".join(f"{i},{n}\n" for n, i in enumerate(EIGHT, start=1))
    prefs = ["cadet_id,rank,branch_id,cost"]
    for i in EIGHT:
        rows = ["b,BASE"] + (["b,BRADSO"] if i in EIGHT_WILLING else []) + [",UNMATCHED"]
        prefs += [f"{i},{n},{r}" for n, r in enumerate(rows, start=1)]
    return {
        "branches.csv": "branch_id,total,bradso_cap\nb,6,3\n",
        "cadets.csv": cadets,
        "contract_prefs.csv": "\n".join(prefs) + "\n",
    }


def write_files(root, files: dict):
    root.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (root / name).write_text(text, encoding="utf-8")
    return root
