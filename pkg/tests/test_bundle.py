from __future__ import annotations

import csv
import io
import json
from collections import Counter

import pytest

from cadetmatch import Cost
from cadetmatch.bundle import (
    GeneratorConfig,
    InstanceBundle,
    ParseError,
    allocation_csv,
    allocation_json,
    bundle_files,
    generate,
    parse_bundle,
    parse_game,
    read_allocation,
    write_bundle,
    write_outputs,
)
from cadetmatch.equilibrium import BayesianGame, SingleBranchGame
from cadetmatch.mechanisms import com_bradso, phi_br

from tests.cases import EIGHT, EIGHT_EXPECTED, example_one_csv, write_files

MINIMAL = {
    "branches.csv": "branch_id,total,bradso_cap\nx,1,0\n",
    "cadets.csv": "cadet_id,oml_rank\nsolo,1\n",
}


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))[1:]


def test_minimal_bundle_parses(tmp_path):
    b = parse_bundle(write_files(tmp_path / "m", MINIMAL))
    assert b.econ.cadets == ("solo",)
    assert b.econ.quotas["x"].total == 1
    assert b.prefs is None and b.strategies is None


def test_hand_written_example_reproduces_allocation(tmp_path):
    b = parse_bundle(write_files(tmp_path / "ex", example_one_csv()))
    alloc = phi_br(b.econ, b.prefs)
    assert {i: alloc.assignment(i) for i in EIGHT} == EIGHT_EXPECTED
    com, _ = com_bradso(b.econ, b.prefs)
    assert com == alloc


def test_round_trip_through_writer(tmp_path):
    b = parse_bundle(write_files(tmp_path / "ex", example_one_csv()))
    write_bundle(b, tmp_path / "copy")
    again = parse_bundle(tmp_path / "copy")
    assert again.econ.cadets == b.econ.cadets
    assert again.prefs == b.prefs
    assert phi_br(again.econ, again.prefs) == phi_br(b.econ, b.prefs)


def test_duplicate_cadet_names_the_row(tmp_path):
    files = dict(MINIMAL, **{"cadets.csv": "cadet_id,oml_rank\na,1\nb,2\na,3\n"})
    with pytest.raises(ParseError) as e:
        parse_bundle(write_files(tmp_path / "d", files))
    assert (e.value.file, e.value.line, e.value.column) == ("cadets.csv", 4, 1)
    assert "duplicate" in e.value.message


@pytest.mark.parametrize(
    "name, text, line, column",
    [
        ("branches.csv", "branch,total,bradso_cap\nx,1,0\n", 1, None),
        ("branches.csv", "branch_id,total,bradso_cap\nx,1\n", 2, 3),
        ("branches.csv", "branch_id,total,bradso_cap\nx,one,0\n", 2, 2),
        ("branches.csv", "branch_id,total,bradso_cap\nx,1,2\n", 2, 3),
        ("cadets.csv", "cadet_id,oml_rank\nsolo,2\n", 2, 2),
        ("cadets.csv", "cadet_id,oml_rank\n,1\n", 2, 1),
    ],
)
def test_schema_errors_are_located(tmp_path, name, text, line, column):
    files = dict(MINIMAL, **{name: text})
    with pytest.raises(ParseError) as e:
        parse_bundle(write_files(tmp_path / "bad", files))
    assert e.value.file == name
    assert e.value.line == line
    assert e.value.column == column


def test_missing_required_file(tmp_path):
    with pytest.raises(ParseError, match="required"):
        parse_bundle(write_files(tmp_path / "x", {"branches.csv": MINIMAL["branches.csv"]}))


def prefs_bundle(tmp_path, prefs_text):
    files = dict(MINIMAL, **{"contract_prefs.csv": "cadet_id,rank,branch_id,cost\n" + prefs_text})
    return write_files(tmp_path / "p", files)


@pytest.mark.parametrize(
    "text, column, fragment",
    [
        ("solo,1,x,BASE\n", 4, "UNMATCHED"),
        ("solo,1,x,BASE\nsolo,3,,UNMATCHED\n", 2, "ranks"),
        ("solo,1,y,BASE\nsolo,2,,UNMATCHED\n", 3, "unknown branch"),
        ("ghost,1,x,BASE\nghost,2,,UNMATCHED\n", 1, "unknown cadet"),
        ("solo,1,x,CHEAP\nsolo,2,,UNMATCHED\n", 4, "cost"),
        ("solo,1,x,BASE\nsolo,2,x,UNMATCHED\n", 3, "UNMATCHED"),
        # increased cost listed above the base cost of the same branch
        ("solo,1,x,BRADSO\nsolo,2,x,BASE\nsolo,3,,UNMATCHED\n", 4, ""),
    ],
)
def test_contract_preference_errors(tmp_path, text, column, fragment):
    with pytest.raises(ParseError) as e:
        parse_bundle(prefs_bundle(tmp_path, text))
    assert e.value.file == "contract_prefs.csv"
    assert e.value.column == column
    assert fragment in e.value.message


def test_unmatched_sentinel_sets_cutoff(tmp_path):
    b = parse_bundle(prefs_bundle(tmp_path, "solo,1,x,BASE\nsolo,2,,UNMATCHED\nsolo,3,x,BRADSO\n"))
    p = b.prefs["solo"]
    assert p.acceptable == (("x", Cost.BASE),)
    assert p.unacceptable == (("x", Cost.INCREASED),)


def test_priorities_must_be_permutations(tmp_path):
    files = {
        "branches.csv": "branch_id,total,bradso_cap\nx,1,0\n",
        "cadets.csv": "cadet_id,oml_rank\na,1\nb,2\n",
        "priorities.csv": "branch_id,cadet_id,rank\nx,a,1\n",
    }
    with pytest.raises(ParseError, match="permutation"):
        parse_bundle(write_files(tmp_path / "pr", files))
    files["priorities.csv"] = "branch_id,cadet_id,rank\nx,b,1\nx,a,2\n"
    assert parse_bundle(write_files(tmp_path / "ok", files)).econ.priorities["x"].ranking == ("b", "a")


def test_strategies_and_willingness(tmp_path):
    files = {
        "branches.csv": "branch_id,total,bradso_cap\nx,1,1\ny,1,0\n",
        "cadets.csv": "cadet_id,oml_rank\na,1\nb,2\n",
        "strategies.csv": "cadet_id,rank,branch_id\na,1,y\na,2,x\nb,1,x\n",
        "willing.csv": "cadet_id,branch_id\nb,x\n",
    }
    s = parse_bundle(write_files(tmp_path / "s", files)).strategies
    assert s["a"].branch_order == ("y", "x") and not s["a"].bradso_set
    assert s["b"].branch_order == ("x",) and s["b"].bradso_set == {"x"}
    files["willing.csv"] += "b,x\n"
    with pytest.raises(ParseError) as e:
        parse_bundle(write_files(tmp_path / "dup", files))
    assert e.value.line == 3


def test_manifest_detects_tampering(tmp_path):
    root = tmp_path / "g"
    write_bundle(generate(GeneratorConfig(n_cadets=30, n_branches=3, quota_range=(5, 10))), root)
    parse_bundle(root)
    with open(root / "cadets.csv", "a", encoding="utf-8") as fh:
        fh.write("\n")  # blank line: still valid CSV, different bytes
    with pytest.raises(ParseError, match="digest of cadets.csv"):
        parse_bundle(root)


def test_manifest_rejects_uncovered_and_missing_files(tmp_path):
    root = tmp_path / "g"
    files = bundle_files(InstanceBundle(parse_bundle(write_files(tmp_path / "m", MINIMAL)).econ))
    write_outputs(root, files)
    (root / "willing.csv").write_text("cadet_id,branch_id\n", encoding="utf-8")
    with pytest.raises(ParseError, match="not covered"):
        parse_bundle(root)
    (root / "willing.csv").unlink()
    (root / "cadets.csv").unlink()
    with pytest.raises(ParseError, match="does not exist"):
        parse_bundle(root)


SMALL = GeneratorConfig(n_cadets=60, n_branches=4, quota_range=(5, 20), seed=11)


def test_generator_is_byte_deterministic():
    assert bundle_files(generate(SMALL)) == bundle_files(generate(SMALL))
    other = GeneratorConfig(**{**SMALL.__dict__, "seed": 12})
    assert bundle_files(generate(other)) != bundle_files(generate(SMALL))


def test_zero_willingness_gives_no_increased_entries():
    cfg = GeneratorConfig(**{**SMALL.__dict__, "willingness_rate": 0.0})
    files = bundle_files(generate(cfg))
    assert all(row[3] != "BRADSO" for row in rows_of(files["contract_prefs.csv"]))
    assert any(row[3] == "BRADSO" for row in rows_of(bundle_files(generate(SMALL))["contract_prefs.csv"]))


def test_generated_preferences_list_base_first():
    for p in generate(SMALL).prefs.values():
        seen = set()
        for b, t in p.acceptable:
            if t is Cost.INCREASED:
                assert b in seen
            seen.add(b)


def test_tier_counts_recounted_from_files(tmp_path):
    cfg = GeneratorConfig(n_cadets=1000, n_branches=18, tier_shares=(0.25, 0.5, 0.25), seed=3,
                          policy="tier2020")
    root = tmp_path / "big"
    write_bundle(generate(cfg), root)
    manifest = json.loads((root / "manifest.json").read_text())
    recount = {}
    for b, _, tier in rows_of((root / "tiers.csv").read_text()):
        recount.setdefault(b, Counter())[int(tier)] += 1
    assert set(recount) == set(manifest["tier_counts"])
    for b, counts in manifest["tier_counts"].items():
        assert [recount[b][t] for t in (1, 2, 3)] == counts
        assert sum(counts) == 1000
    # tiers never increase in priority order (the parser would reject it otherwise)
    econ = parse_bundle(root).econ
    for b in econ.branches:
        tiers = [econ.tiers[b].tier[i] for i in econ.priorities[b].ranking]
        assert tiers == sorted(tiers)


def test_generator_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(tier_shares=(0.5, 0.6))
    with pytest.raises(ValueError):
        GeneratorConfig(willingness_rate=1.5)
    with pytest.raises(ValueError):
        GeneratorConfig(pref_length=(4, 2))


def test_heterogeneous_priorities_round_trip(tmp_path):
    cfg = GeneratorConfig(**{**SMALL.__dict__, "common_priority": False})
    bundle = generate(cfg)
    write_bundle(bundle, tmp_path / "h")
    econ = parse_bundle(tmp_path / "h").econ
    assert not econ.has_common_priority()
    assert {b: econ.priorities[b].ranking for b in econ.branches} == {
        b: bundle.econ.priorities[b].ranking for b in bundle.econ.branches}


@pytest.mark.parametrize("seed", range(5))
def test_written_allocation_revalidates(tmp_path, seed):
    cfg = GeneratorConfig(**{**SMALL.__dict__, "seed": seed})
    bundle = generate(cfg)
    alloc, _ = com_bradso(bundle.econ, bundle.prefs)
    write_outputs(tmp_path, {"a.csv": allocation_csv(bundle.econ, alloc),
                             "a.json": json.dumps(allocation_json(bundle.econ, alloc))})
    assert read_allocation(tmp_path / "a.csv", bundle.econ) == alloc
    assert read_allocation(tmp_path / "a.json", bundle.econ) == alloc


def test_allocation_csv_uses_sentinels(tmp_path):
    b = parse_bundle(write_files(tmp_path / "ex", example_one_csv()))
    text = allocation_csv(b.econ, phi_br(b.econ, b.prefs))
    rows = {r[0]: (r[1], r[2]) for r in rows_of(text)}
    assert rows["i2"] == ("UNMATCHED", "-")
    assert rows["i1"] == ("b", "BRADSO")
    assert rows["i6"] == ("b", "BASE")


def test_invalid_allocation_rejected(tmp_path):
    b = parse_bundle(write_files(tmp_path / "ex", example_one_csv()))
    # seven cadets at a six-seat branch
    body = "".join(f"{i},b,BASE\n" for i in EIGHT[:7]) + f"{EIGHT[7]},UNMATCHED,-\n"
    (tmp_path / "over.csv").write_text("cadet_id,branch_id,cost\n" + body)
    with pytest.raises(ParseError, match="invalid allocation"):
        read_allocation(tmp_path / "over.csv", b.econ)
    (tmp_path / "ghost.csv").write_text("cadet_id,branch_id,cost\nzz,b,BASE\n")
    with pytest.raises(ParseError) as e:
        read_allocation(tmp_path / "ghost.csv", b.econ)
    assert (e.value.line, e.value.column) == (2, 1)


def test_write_outputs_leaves_nothing_on_failure(tmp_path):
    files = {"a.txt": "fine", "b.txt": None}  # writing None raises mid-way
    with pytest.raises(TypeError):
        write_outputs(tmp_path / "o", files)
    assert list((tmp_path / "o").iterdir()) == []


def test_game_specs(tmp_path):
    nash = {"cadets": ["p", "q"], "quota": {"total": 1, "bradso_cap": 1},
            "preferences": {"p": False, "q": True}}
    (tmp_path / "n.json").write_text(json.dumps(nash))
    assert isinstance(parse_game(tmp_path / "n.json"), SingleBranchGame)
    bayes = {"cadets": ["p"], "quota": {"total": 1, "bradso_cap": 1},
             "types": {"p": [{"probability": "1", "utility": {"BASE": 3, "BRADSO": 2, "UNMATCHED": 0}}]}}
    (tmp_path / "b.json").write_text(json.dumps(bayes))
    assert isinstance(parse_game(tmp_path / "b.json"), BayesianGame)
    del nash["quota"]
    (tmp_path / "bad.json").write_text(json.dumps(nash))
    with pytest.raises(ParseError, match="quota"):
        parse_game(tmp_path / "bad.json")
    (tmp_path / "broken.json").write_text("{\n  nope")
    with pytest.raises(ParseError) as e:
        parse_game(tmp_path / "broken.json")
    assert e.value.line == 2
