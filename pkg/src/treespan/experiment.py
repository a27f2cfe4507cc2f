"""Batch experiment driver.

A flat key = value config names a host model, a tree source, run
parameters, and an output directory.  run_experiment executes the
trials, verifies every claimed embedding, and writes one CSV row per
trial plus a JSON aggregate.  Reports are byte-identical for the same
config and seed; wall-clock timing is off by default for that reason
and the millis column reads 0 until it is switched on.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidSpec, PreconditionViolated, StageFailure, TreespanError
from .hosts import generate_host
from .pipeline import DESK, ROUTE_CHAINS, PipelineParams, embed_spanning_tree
from .trees import (
    Tree,
    binary_tree,
    caterpillar_tree,
    path_tree,
    random_bounded_tree,
    read_parent_array,
    star_tree,
)

CSV_COLUMNS = ("trial", "seed", "case", "n", "d", "delta", "success", "verified", "millis")

HOST_KINDS = ("gnp", "regular", "file")
TREE_KINDS = ("random", "family", "file")
FAMILIES = ("path", "star", "caterpillar", "binary")

# field order of the config file; also the full key set
_FIELDS = (
    ("host", str), ("host_n", int), ("host_d", int), ("host_p", float),
    ("host_path", str),
    ("tree", str), ("tree_n", int), ("tree_delta", int), ("tree_count", int),
    ("tree_family", str), ("tree_path", str),
    ("mode", str), ("theorem", str), ("trials", int), ("seed", int),
    ("out", str), ("timing", bool), ("workers", int),
    ("beta", float), ("gamma", float), ("retries", int),
)


@dataclass
class ExperimentConfig:
    """Everything one batch run needs, round-trippable through text."""

    host: str = "gnp"
    host_n: int = 200
    host_d: int = 0
    host_p: float = 0.35
    host_path: str = ""
    tree: str = "random"
    tree_n: int = 200
    tree_delta: int = 3
    tree_count: int = 1
    tree_family: str = "path"
    tree_path: str = ""
    mode: str = DESK
    theorem: str = ROUTE_CHAINS
    trials: int = 1
    seed: int = 0
    out: str = ""
    timing: bool = False
    workers: int = 1
    beta: float = 0.25
    gamma: float = 1.0 / 128.0
    retries: int = 4

    def validate(self):
        if self.host not in HOST_KINDS:
            raise InvalidSpec(f"host must be one of {HOST_KINDS}, got {self.host!r}")
        if self.tree not in TREE_KINDS:
            raise InvalidSpec(f"tree must be one of {TREE_KINDS}, got {self.tree!r}")
        if self.tree == "family" and self.tree_family not in FAMILIES:
            raise InvalidSpec(f"tree_family must be one of {FAMILIES}")
        if self.mode not in ("desk", "strict"):
            raise InvalidSpec(f"mode must be desk or strict, got {self.mode!r}")
        if self.theorem not in ("th1", "th2"):
            raise InvalidSpec(f"theorem must be th1 or th2, got {self.theorem!r}")
        if self.trials < 0:
            raise InvalidSpec("trials must be nonnegative")
        if self.workers < 1:
            raise InvalidSpec("workers must be at least 1")
        if self.host != "file" and self.tree != "file" and self.host_n != self.tree_n:
            raise InvalidSpec(
                f"host order {self.host_n} and tree order {self.tree_n} differ"
            )
        return self

    def to_text(self) -> str:
        lines = []
        for name, kind in _FIELDS:
            v = getattr(self, name)
            if kind is bool:
                v = "on" if v else "off"
            elif kind is float:
                v = repr(v)
            lines.append(f"{name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text) -> "ExperimentConfig":
        types = dict(_FIELDS)
        got = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidSpec(f"line {ln}: expected key = value, got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise InvalidSpec(f"line {ln}: unknown key {key!r}")
            kind = types[key]
            try:
                if kind is bool:
                    if val not in ("on", "off"):
                        raise ValueError("expected on or off")
                    got[key] = val == "on"
                else:
                    got[key] = kind(val)
            except ValueError as exc:
                raise InvalidSpec(f"line {ln}: bad value for {key}: {exc}") from exc
        return cls(**got)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())


class RunReport:
    """Per-trial rows plus the aggregate; serializes to CSV and JSON."""

    def __init__(self, config, rows):
        self.config = config
        self.rows = rows
        cases = {}
        refused = {}
        for r in rows:
            cases[r["case"]] = cases.get(r["case"], 0) + 1
            if r.get("refused_by"):
                refused[r["refused_by"]] = refused.get(r["refused_by"], 0) + 1
        self.aggregate = {
            "trials": len(rows),
            "successes": sum(r["success"] for r in rows),
            "verified": sum(r["verified"] for r in rows),
            "cases": cases,
            "refused": refused,
            "mode": config.mode,
            "theorem": config.theorem,
            "seed": config.seed,
        }

    @property
    def ok(self):
        return all(r["verified"] for r in self.rows)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r[c] for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json_text(self) -> str:
        body = dict(self.aggregate)
        body["ok"] = self.ok
        return json.dumps(body, sort_keys=True, indent=2) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.to_csv_text())
        (out / "report.json").write_text(self.to_json_text())
        return out / "report.csv", out / "report.json"


def _host_spec(config):
    if config.host == "gnp":
        return {"kind": "gnp", "n": config.host_n, "p": config.host_p}
    if config.host == "regular":
        return {"kind": "regular", "n": config.host_n, "d": config.host_d}
    return {"kind": "file", "path": config.host_path}


def _family_tree(config) -> Tree:
    n, fam = config.tree_n, config.tree_family
    if fam == "path":
        return path_tree(n)
    if fam == "star":
        return star_tree(n)
    if fam == "binary":
        return binary_tree(n)
    spine = (n + 2) // 2
    if 2 * spine - 2 != n:
        raise InvalidSpec(f"caterpillar family needs even order, got {n}")
    return caterpillar_tree(spine)


def _trial_tree(config, index) -> Tree:
    if config.tree == "file":
        return read_parent_array(config.tree_path)
    if config.tree == "family":
        return _family_tree(config)
    cycle = index % max(1, config.tree_count)
    return random_bounded_tree(config.tree_n, config.tree_delta, seed=config.seed + 7919 * cycle)


def _run_trial(config, host_fixed, index):
    trial_seed = config.seed + 1_000_003 * index
    started = time.perf_counter() if config.timing else 0.0
    row = {
        "trial": index, "seed": trial_seed, "case": "error",
        "n": 0, "d": 0.0, "delta": 0,
        "success": 0, "verified": 0, "millis": 0,
        "refused_by": "", "certs": (), "error": "",
    }
    try:
        g = host_fixed if host_fixed is not None else generate_host(_host_spec(config), trial_seed)
        t = _trial_tree(config, index)
        params = PipelineParams(
            n=g.n, delta=max(2, t.max_degree()), mode=config.mode,
            theorem=config.theorem, beta=config.beta, gamma=config.gamma,
            retries=config.retries, seed=trial_seed,
        )
        row.update(n=g.n, d=round(params.cert_degree(), 3), delta=params.delta)
        result = embed_spanning_tree(g, t, params)
        certs = tuple(
            c for ph in result.phases if ph.get("phase") == "partition"
            for c in ph.get("certs", ())
        )
        row.update(case=result.case, success=1, verified=int(result.verified), certs=certs)
    except PreconditionViolated as exc:
        row.update(case="refused", refused_by=exc.name, error=str(exc))
    except StageFailure as exc:
        row.update(case=exc.case, error=str(exc))
    except TreespanError as exc:
        row.update(error=f"{type(exc).__name__}: {exc}")
    if config.timing:
        row["millis"] = int((time.perf_counter() - started) * 1000)
    return row


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run all trials and return the report, writing files when out is set."""
    config.validate()
    host_fixed = generate_host(_host_spec(config), config.seed) if config.host == "file" else None
    indices = range(config.trials)
    if config.workers > 1 and config.trials > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(lambda i: _run_trial(config, host_fixed, i), indices))
    else:
        rows = [_run_trial(config, host_fixed, i) for i in indices]
    report = RunReport(config, rows)
    if config.out:
        report.write(config.out)
    return report
