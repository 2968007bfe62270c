"""CSV instance bundles, allocation files, game specs, and the synthetic generator.

A bundle is a directory::

    branches.csv        branch_id,total,bradso_cap
    cadets.csv          cadet_id,oml_rank
    priorities.csv      branch_id,cadet_id,rank          (optional, default OML)
    tiers.csv           branch_id,cadet_id,tier          (optional)
    contract_prefs.csv  cadet_id,rank,branch_id,cost     (optional)
    strategies.csv      cadet_id,rank,branch_id          (optional)
    willing.csv         cadet_id,branch_id               (optional)
    manifest.json

In ``contract_prefs.csv`` one row per cadet with ``cost=UNMATCHED`` marks
where remaining unmatched sits in the ranking.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import random
import shutil
import tempfile
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from cadetmatch.core import (
    Allocation,
    BranchQuota,
    ContractPreference,
    Cost,
    Economy,
    QuasiStrategy,
    validate_allocation,
)
from cadetmatch.policies import TierAssignment

FORMAT_VERSION = 1
UNMATCHED = "UNMATCHED"
NO_COST = "-"

SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "branches.csv": ("branch_id", "total", "bradso_cap"),
    "cadets.csv": ("cadet_id", "oml_rank"),
    "priorities.csv": ("branch_id", "cadet_id", "rank"),
    "tiers.csv": ("branch_id", "cadet_id", "tier"),
    "contract_prefs.csv": ("cadet_id", "rank", "branch_id", "cost"),
    "strategies.csv": ("cadet_id", "rank", "branch_id"),
    "willing.csv": ("cadet_id", "branch_id"),
    "allocation.csv": ("cadet_id", "branch_id", "cost"),
}
DATA_FILES = tuple(n for n in SCHEMAS if n != "allocation.csv")


class ParseError(ValueError):
    """Malformed input, located by file, line and column (both 1-based)."""

    def __init__(self, file: str, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = file + (f":{line}" if line else "") + (f":{column}" if column else "")
        super().__init__(f"{where}: {message}")
        self.file = file
        self.line = line
        self.column = column
        self.message = message

    def to_json(self) -> dict:
        return {"file": self.file, "line": self.line, "column": self.column, "message": self.message}


# reading -------------------------------------------------------------------


@dataclass
class _Row:
    file: str
    line: int
    values: Dict[str, str]
    columns: Tuple[str, ...]

    def get(self, name: str) -> str:
        return self.values[name]

    def error(self, name: str, message: str) -> ParseError:
        return ParseError(self.file, message, self.line, self.columns.index(name) + 1)

    def int(self, name: str) -> int:
        text = self.values[name]
        try:
            return int(text)
        except ValueError:
            raise self.error(name, f"{name} must be an integer, got {text!r}") from None


def _read_rows(path: Path, schema: Optional[str] = None) -> List[_Row]:
    name = path.name
    schema = schema or name
    expected = SCHEMAS[schema]
    try:
        text = path.read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as e:
        raise ParseError(name, f"not UTF-8: {e}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ParseError(name, "empty file, header required", 1)
    header = tuple(h.strip() for h in header)
    if header != expected:
        missing = [c for c in expected if c not in header]
        col = header.index(missing[0]) + 1 if missing and missing[0] in header else None
        raise ParseError(name, f"header must be {','.join(expected)}, got {','.join(header)}", 1, col)
    rows = []
    for values in reader:
        line = reader.line_num
        if not values or all(not v.strip() for v in values):
            continue
        if len(values) != len(expected):
            raise ParseError(name, f"expected {len(expected)} fields, got {len(values)}", line,
                             min(len(values), len(expected)) + 1)
        vals = {c: v.strip() for c, v in zip(expected, values)}
        for n, c in enumerate(expected):
            if vals[c] == "" and not (schema == "contract_prefs.csv" and c == "branch_id"):
                raise ParseError(name, f"{c} is empty", line, n + 1)
        rows.append(_Row(name, line, vals, expected))
    return rows


@dataclass
class InstanceBundle:
    econ: Economy
    prefs: Optional[Dict[str, ContractPreference]] = None
    strategies: Optional[Dict[str, QuasiStrategy]] = None
    manifest: Dict = field(default_factory=dict)


def _file_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def bundle_hash(files: Mapping[str, str]) -> str:
    """Hash of the per-file digests, independent of file order."""
    h = hashlib.sha256()
    for name in sorted(files):
        h.update(f"{name}\0{files[name]}\n".encode())
    return h.hexdigest()


def _check_manifest(root: Path, manifest: dict) -> None:
    files = manifest.get("files")
    if not files:
        return
    for name, digest in files.items():
        p = root / name
        if not p.exists():
            raise ParseError("manifest.json", f"lists {name} which does not exist")
        if _file_digest(p.read_bytes()) != digest:
            raise ParseError("manifest.json", f"digest of {name} does not match its contents")
    present = {n for n in DATA_FILES if (root / n).exists()}
    extra = present - set(files)
    if extra:
        raise ParseError("manifest.json", f"files {sorted(extra)} are not covered by the manifest")
    if "hash" in manifest and manifest["hash"] != bundle_hash(files):
        raise ParseError("manifest.json", "bundle hash does not match file digests")


def _ranked(rows: List[_Row], group: str, item: str, file: str) -> Dict[str, List[Tuple[int, str, _Row]]]:
    out: Dict[str, List[Tuple[int, str, _Row]]] = {}
    for r in rows:
        out.setdefault(r.get(group), []).append((r.int("rank"), r.get(item), r))
    for key, items in out.items():
        items.sort(key=lambda t: t[0])
        ranks = [t[0] for t in items]
        if ranks != list(range(1, len(items) + 1)):
            bad = next(t[2] for n, t in enumerate(items) if t[0] != n + 1)
            raise bad.error("rank", f"ranks for {group}={key} must be 1..{len(items)} without gaps or repeats")
    return out


def parse_economy(root, policy: Optional[str] = None) -> Economy:
    """Read and validate the economy part of a bundle."""
    return parse_bundle(root, policy).econ


def parse_bundle(root, policy: Optional[str] = None) -> InstanceBundle:
    root = Path(root)
    if not root.is_dir():
        raise ParseError(str(root), "bundle directory does not exist")
    manifest = {}
    mpath = root / "manifest.json"
    if mpath.exists():
        try:
            manifest = json.loads(mpath.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError("manifest.json", e.msg, e.lineno, e.colno) from None
        _check_manifest(root, manifest)
    for required in ("branches.csv", "cadets.csv"):
        if not (root / required).exists():
            raise ParseError(required, "required file missing")

    quotas: Dict[str, BranchQuota] = {}
    for r in _read_rows(root / "branches.csv"):
        b = r.get("branch_id")
        if b in quotas:
            raise r.error("branch_id", f"duplicate branch id {b!r}")
        try:
            quotas[b] = BranchQuota(r.int("total"), r.int("bradso_cap"))
        except ValueError as e:
            if isinstance(e, ParseError):
                raise
            raise r.error("bradso_cap", str(e)) from None
    if not quotas:
        raise ParseError("branches.csv", "no branches")

    oml: Dict[str, Tuple[int, _Row]] = {}
    for r in _read_rows(root / "cadets.csv"):
        i = r.get("cadet_id")
        if i in oml:
            raise r.error("cadet_id", f"duplicate cadet id {i!r}")
        oml[i] = (r.int("oml_rank"), r)
    if not oml:
        raise ParseError("cadets.csv", "no cadets")
    by_rank = sorted(oml.items(), key=lambda kv: kv[1][0])
    for n, (i, (rank, row)) in enumerate(by_rank, start=1):
        if rank != n:
            raise row.error("oml_rank", f"oml_rank values must be 1..{len(oml)} without gaps or repeats")
    cadets = tuple(i for i, _ in by_rank)

    def known_cadet(r: _Row, col: str = "cadet_id") -> str:
        i = r.get(col)
        if i not in oml:
            raise r.error(col, f"unknown cadet id {i!r}")
        return i

    def known_branch(r: _Row, col: str = "branch_id") -> str:
        b = r.get(col)
        if b not in quotas:
            raise r.error(col, f"unknown branch id {b!r}")
        return b

    priorities = {b: cadets for b in quotas}
    if (root / "priorities.csv").exists():
        rows = _read_rows(root / "priorities.csv")
        for r in rows:
            known_branch(r)
            known_cadet(r)
        for b, items in _ranked(rows, "branch_id", "cadet_id", "priorities.csv").items():
            ranking = tuple(i for _, i, _ in items)
            if len(set(ranking)) != len(ranking) or set(ranking) != set(cadets):
                raise ParseError("priorities.csv", f"priority at branch {b!r} is not a permutation of the cadets "
                                 f"(invariant: every branch ranks every cadet exactly once)", items[0][2].line)
            priorities[b] = ranking

    tiers = None
    n_tiers = manifest.get("n_tiers")
    if (root / "tiers.csv").exists():
        tiers = {b: {} for b in quotas}
        for r in _read_rows(root / "tiers.csv"):
            b, i = known_branch(r), known_cadet(r)
            if i in tiers[b]:
                raise r.error("cadet_id", f"cadet {i!r} has two tiers at {b!r}")
            try:
                tiers[b][i] = TierAssignment(b, {i: r.get("tier")}).tier[i]
            except ValueError:
                raise r.error("tier", f"unknown tier {r.get('tier')!r}") from None
        for b in quotas:
            if set(tiers[b]) != set(cadets):
                raise ParseError("tiers.csv", f"tiers at branch {b!r} do not cover every cadet")

    policy = policy or manifest.get("policy", "ultimate")
    try:
        econ = Economy.build(cadets, quotas, priorities, policy=policy, tiers=tiers, n_tiers=n_tiers)
    except ValueError as e:
        raise ParseError(str(root), f"invariant violated: {e}") from None

    prefs = None
    if (root / "contract_prefs.csv").exists():
        prefs = _parse_contract_prefs(_read_rows(root / "contract_prefs.csv"), known_cadet, quotas)
    strategies = None
    if (root / "strategies.csv").exists() or (root / "willing.csv").exists():
        strategies = _parse_strategies(root, known_cadet, known_branch)
    return InstanceBundle(econ, prefs, strategies, manifest)


def _parse_contract_prefs(rows, known_cadet, quotas) -> Dict[str, ContractPreference]:
    grouped = _ranked(rows, "cadet_id", "branch_id", "contract_prefs.csv")
    prefs = {}
    for i, items in grouped.items():
        known_cadet(items[0][2])
        ranking = []
        for _, b, r in items:
            cost = r.get("cost").upper()
            if cost == UNMATCHED:
                if b not in ("", UNMATCHED):
                    raise r.error("branch_id", "the UNMATCHED row must leave branch_id empty or UNMATCHED")
                ranking.append(None)
                continue
            if b not in quotas:
                raise r.error("branch_id", f"unknown branch id {b!r}")
            try:
                ranking.append((b, Cost.parse(cost)))
            except ValueError:
                raise r.error("cost", f"cost must be BASE, BRADSO or UNMATCHED, got {cost!r}") from None
        if ranking.count(None) != 1:
            raise items[0][2].error("cost", f"cadet {i!r} needs exactly one UNMATCHED row")
        try:
            prefs[i] = ContractPreference.from_ranking(i, ranking)
        except ValueError as e:
            raise items[0][2].error("cost", str(e)) from None
    return prefs


def _parse_strategies(root: Path, known_cadet, known_branch) -> Dict[str, QuasiStrategy]:
    orders: Dict[str, Tuple[str, ...]] = {}
    if (root / "strategies.csv").exists():
        rows = _read_rows(root / "strategies.csv")
        for r in rows:
            known_cadet(r)
            known_branch(r)
        for i, items in _ranked(rows, "cadet_id", "branch_id", "strategies.csv").items():
            order = tuple(b for _, b, _ in items)
            if len(set(order)) != len(order):
                raise items[0][2].error("branch_id", f"cadet {i!r} ranks a branch twice")
            orders[i] = order
    willing: Dict[str, set] = {}
    if (root / "willing.csv").exists():
        for r in _read_rows(root / "willing.csv"):
            i, b = known_cadet(r), known_branch(r)
            if b in willing.setdefault(i, set()):
                raise r.error("branch_id", f"duplicate willingness row for {i!r}")
            willing[i].add(b)
    return {
        i: QuasiStrategy(i, orders.get(i, ()), frozenset(willing.get(i, ())))
        for i in sorted(set(orders) | set(willing))
    }


def read_allocation(path, econ: Economy) -> Allocation:
    """Read an allocation CSV (or JSON) and check it against ``econ``."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        rows = [(d["cadet_id"], d.get("branch_id"), d.get("cost")) for d in data["assignments"]]
        located = [(None, r) for r in rows]
    else:
        parsed = _read_rows(path, "allocation.csv")
        located = [(r, (r.get("cadet_id"), r.get("branch_id"), r.get("cost"))) for r in parsed]
    out = {}
    known = set(econ.cadets)
    for r, (i, b, t) in located:
        if i not in known:
            raise _loc(path, r, "cadet_id", f"unknown cadet id {i!r}")
        if i in out:
            raise _loc(path, r, "cadet_id", f"cadet {i!r} listed twice")
        if b in (None, "", UNMATCHED):
            out[i] = None
            continue
        if b not in econ.quotas:
            raise _loc(path, r, "branch_id", f"unknown branch id {b!r}")
        try:
            out[i] = (b, Cost.parse(t))
        except (ValueError, AttributeError):
            raise _loc(path, r, "cost", f"cost must be BASE or BRADSO, got {t!r}") from None
    alloc = Allocation.from_assignments(out)
    report = validate_allocation(econ, alloc)
    if not report.ok:
        raise ParseError(path.name, "invalid allocation: " + "; ".join(v.detail for v in report.violations))
    return alloc


def _loc(path: Path, row: Optional[_Row], col: str, msg: str) -> ParseError:
    if row is None:
        return ParseError(path.name, msg)
    return row.error(col, msg)


# writing -------------------------------------------------------------------


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def allocation_rows(econ: Economy, alloc: Allocation) -> List[Tuple[str, str, str]]:
    rows = []
    for i in econ.cadets:
        a = alloc.assignment(i)
        rows.append((i, UNMATCHED, NO_COST) if a is None else (i, a[0], a[1].value))
    return rows


def allocation_csv(econ: Economy, alloc: Allocation) -> str:
    return csv_text(SCHEMAS["allocation.csv"], allocation_rows(econ, alloc))


def allocation_json(econ: Economy, alloc: Allocation) -> dict:
    return {
        "assignments": [
            {"cadet_id": i, "branch_id": None if b == UNMATCHED else b, "cost": None if t == NO_COST else t}
            for i, b, t in allocation_rows(econ, alloc)
        ]
    }


def policy_csv(econ: Economy) -> str:
    rows = []
    for b in econ.branches:
        for n, (i, t) in enumerate(econ.policies[b].order, start=1):
            rows.append((b, i, t.value, n))
    return csv_text(("branch_id", "cadet_id", "cost", "rank"), rows)


def bundle_files(bundle: InstanceBundle) -> Dict[str, str]:
    """Text of every file in the bundle, manifest included."""
    econ = bundle.econ
    files = {
        "branches.csv": csv_text(SCHEMAS["branches.csv"], (
            (b, econ.quotas[b].total, econ.quotas[b].bradso_cap) for b in econ.branches)),
        "cadets.csv": csv_text(SCHEMAS["cadets.csv"], ((i, n) for n, i in enumerate(econ.cadets, start=1))),
    }
    if not econ.has_common_priority():
        files["priorities.csv"] = csv_text(SCHEMAS["priorities.csv"], (
            (b, i, n) for b in econ.branches for n, i in enumerate(econ.priorities[b].ranking, start=1)))
    if econ.tiers:
        files["tiers.csv"] = csv_text(SCHEMAS["tiers.csv"], (
            (b, i, econ.tiers[b].tier[i]) for b in econ.branches for i in econ.priorities[b].ranking))
    if bundle.prefs is not None:
        rows = []
        for i in econ.cadets:
            p = bundle.prefs.get(i)
            if p is None:
                continue
            ranking = list(p.acceptable) + [None] + list(p.unacceptable)
            for n, a in enumerate(ranking, start=1):
                rows.append((i, n, "", UNMATCHED) if a is None else (i, n, a[0], a[1].value))
        files["contract_prefs.csv"] = csv_text(SCHEMAS["contract_prefs.csv"], rows)
    if bundle.strategies is not None:
        strat = bundle.strategies
        files["strategies.csv"] = csv_text(SCHEMAS["strategies.csv"], (
            (i, n, b) for i in econ.cadets if i in strat
            for n, b in enumerate(strat[i].branch_order, start=1)))
        files["willing.csv"] = csv_text(SCHEMAS["willing.csv"], (
            (i, b) for i in econ.cadets if i in strat for b in sorted(strat[i].bradso_set)))
    digests = {n: _file_digest(t.encode("utf-8")) for n, t in files.items()}
    manifest = {k: v for k, v in bundle.manifest.items() if k not in ("files", "hash")}
    manifest.setdefault("format_version", FORMAT_VERSION)
    manifest["files"] = digests
    manifest["hash"] = bundle_hash(digests)
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    return files


def write_outputs(directory, files: Mapping[str, str]) -> List[Path]:
    """Write every file or none: stage in a temp dir, then rename into place."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=directory))
    try:
        for name, text in files.items():
            with open(staging / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        out = []
        for name in files:
            os.replace(staging / name, directory / name)
            out.append(directory / name)
        return out
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def write_bundle(bundle: InstanceBundle, directory) -> List[Path]:
    return write_outputs(directory, bundle_files(bundle))


# game specs ----------------------------------------------------------------


def parse_game(path):
    """Load a single-branch game spec; returns a SingleBranchGame or BayesianGame."""
    from cadetmatch.equilibrium import BayesianGame, SingleBranchGame, TypeSpec

    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(path.name, e.msg, e.lineno, e.colno) from None
    try:
        cadets = list(spec["cadets"])
        branch = spec.get("branch", "b")
        q = spec["quota"]
        quota = (int(q["total"]), int(q["bradso_cap"]))
        pol = spec.get("policy", "ultimate")
        tiers = n_tiers = None
        if isinstance(pol, dict):
            tiers = {branch: pol["tiers"]}
            n_tiers = pol.get("n_tiers")
            pol = pol["variant"]
        econ = Economy.build(cadets, {branch: quota}, policy=pol, tiers=tiers, n_tiers=n_tiers)
        if "types" in spec:
            types = {}
            for i in cadets:
                ts = []
                for t in spec["types"][i]:
                    u = t["utility"]
                    ts.append(TypeSpec(Fraction(str(t["probability"])), Fraction(str(u["BASE"])),
                                       Fraction(str(u["BRADSO"])), Fraction(str(u["UNMATCHED"])),
                                       t.get("name", "")))
                types[i] = tuple(ts)
            return BayesianGame(econ, types)
        return SingleBranchGame(econ, {i: bool(spec["preferences"][i]) for i in cadets})
    except KeyError as e:
        raise ParseError(path.name, f"missing key {e}") from None
    except (TypeError, ValueError) as e:
        raise ParseError(path.name, str(e)) from None


# synthetic data ------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    n_cadets: int = 1000
    n_branches: int = 18
    #: Inclusive range of per-branch totals before scaling to the seat count.
    quota_range: Tuple[int, int] = (20, 120)
    #: Total positions as a fraction of cadets.
    seat_ratio: float = 0.95
    tier_shares: Tuple[float, ...] = (0.25, 0.5, 0.25)
    pref_length: Tuple[int, int] = (3, 10)
    willingness_rate: float = 0.3
    initial_cap_fraction: float = 0.25
    common_priority: bool = True
    policy: str = "ultimate"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_cadets < 1 or self.n_branches < 1:
            raise ValueError("need at least one cadet and one branch")
        if abs(sum(self.tier_shares) - 1) > 1e-9 or any(s < 0 for s in self.tier_shares):
            raise ValueError("tier shares must be non-negative and sum to 1")
        lo, hi = self.pref_length
        if not 1 <= lo <= hi:
            raise ValueError("pref_length must satisfy 1 <= lo <= hi")
        if not 1 <= self.quota_range[0] <= self.quota_range[1]:
            raise ValueError("quota_range must satisfy 1 <= lo <= hi")
        if not 0 <= self.willingness_rate <= 1 or not 0 <= self.initial_cap_fraction <= 1:
            raise ValueError("rates must lie in [0, 1]")


def _weighted_sample(rng: random.Random, items: Sequence[str], weights: Sequence[float], k: int) -> List[str]:
    """``k`` distinct items, each draw proportional to weight (exponential keys)."""
    keyed = sorted(((rng.expovariate(1.0) / w, x) for x, w in zip(items, weights)))
    return [x for _, x in keyed[:k]]


def generate(config: GeneratorConfig) -> InstanceBundle:
    """Synthetic bundle; identical configs give identical bundles."""
    rng = random.Random(config.seed)
    cadets = tuple(f"C{n:04d}" for n in range(1, config.n_cadets + 1))
    branches = tuple(f"BR{n:02d}" for n in range(1, config.n_branches + 1))

    raw = [rng.randint(*config.quota_range) for _ in branches]
    seats = max(config.n_branches, round(config.seat_ratio * config.n_cadets))
    scale = seats / sum(raw)
    totals = [max(1, round(r * scale)) for r in raw]
    quotas = {
        b: BranchQuota(t, int(Fraction(str(config.initial_cap_fraction)) * t))
        for b, t in zip(branches, totals)
    }

    if config.common_priority:
        priorities = {b: cadets for b in branches}
    else:
        priorities = {}
        sd = config.n_cadets / 20
        for b in branches:
            score = {i: n + rng.gauss(0, sd) for n, i in enumerate(cadets)}
            priorities[b] = tuple(sorted(cadets, key=score.__getitem__))

    tiers = tier_counts = None
    if len(config.tier_shares) > 1:
        tiers, tier_counts = {}, {}
        for b in branches:
            draws = Counter(rng.choices(range(1, len(config.tier_shares) + 1),
                                        weights=config.tier_shares, k=config.n_cadets))
            counts = [draws.get(t, 0) for t in range(1, len(config.tier_shares) + 1)]
            tier_counts[b] = counts
            labels = [t for t, c in enumerate(counts, start=1) for _ in range(c)]
            tiers[b] = dict(zip(priorities[b], labels))

    popularity = [rng.lognormvariate(0, 0.75) for _ in branches]
    prefs = {}
    for i in cadets:
        k = min(rng.randint(*config.pref_length), len(branches))
        chosen = _weighted_sample(rng, branches, popularity, k)
        ranking: List = [(b, Cost.BASE) for b in chosen]
        for b in chosen:
            if rng.random() < config.willingness_rate:
                pos = ranking.index((b, Cost.BASE))
                ranking.insert(rng.randint(pos + 1, len(ranking)), (b, Cost.INCREASED))
        prefs[i] = ContractPreference(i, tuple(ranking))

    n_tiers = len(config.tier_shares) if tiers else None
    policy = config.policy if tiers else "ultimate"
    econ = Economy.build(cadets, quotas, priorities, policy=policy, tiers=tiers, n_tiers=n_tiers)
    cfg = asdict(config)
    manifest = {
        "format_version": FORMAT_VERSION,
        "regime": "synthetic",
        "policy": policy,
        "seed": config.seed,
        "generator": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()},
    }
    if tiers:
        manifest["n_tiers"] = n_tiers
        manifest["tier_counts"] = tier_counts
    return InstanceBundle(econ, prefs, None, manifest)
