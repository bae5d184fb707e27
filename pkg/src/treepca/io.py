"""Line-delimited JSON data set files and the seeded synthetic generator.

One record per line::

    {"covariates": {"age": 41.0}, "id": "t000001", "nodes": ["r", "r.0", "r.1"]}

Canonical output sorts records by id, nodes by label and JSON keys
alphabetically, so equal data sets always serialize to equal bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .tree_core import (
    DataSet,
    LabeledTree,
    NodeId,
    Record,
    TreeError,
    validate,
)

__all__ = [
    "DatasetFormatError",
    "dumps_dataset",
    "loads_dataset",
    "read_dataset",
    "write_dataset",
    "read_node_list",
    "GeneratorConfig",
    "template_nodes",
    "generate",
]


class DatasetFormatError(TreeError):
    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


def _record_line(rec: Record) -> str:
    payload = {
        "covariates": {k: float(v) for k, v in sorted(rec.covariates.items())},
        "id": rec.id,
        "nodes": [str(v) for v in rec.tree.sorted_nodes()],
    }
    return json.dumps(payload, sort_keys=True, separators=(", ", ": "), allow_nan=False)


def dumps_dataset(ds: DataSet) -> str:
    return "".join(_record_line(rec) + "\n" for rec in sorted(ds.records, key=lambda r: r.id))


def write_dataset(ds: DataSet, path: str | Path) -> None:
    Path(path).write_text(dumps_dataset(ds), encoding="utf-8")


def _parse_record(text: str, lineno: int) -> Record:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(exc.msg, lineno, exc.colno) from None
    if not isinstance(obj, dict):
        raise DatasetFormatError("record must be a JSON object", lineno)
    missing = {"id", "nodes"} - obj.keys()
    if missing:
        raise DatasetFormatError(f"missing field(s) {sorted(missing)}", lineno)
    rec_id = obj["id"]
    if not isinstance(rec_id, str) or not rec_id:
        raise DatasetFormatError("id must be a non-empty string", lineno)
    covs = obj.get("covariates", {})
    if not isinstance(covs, dict):
        raise DatasetFormatError("covariates must be an object", lineno)
    for name, value in covs.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DatasetFormatError(f"covariate {name!r} is not a number", lineno)
    labels = obj["nodes"]
    if not isinstance(labels, list):
        raise DatasetFormatError("nodes must be a list", lineno)
    try:
        nodes = [NodeId.parse(s) for s in labels]
    except TreeError as exc:
        raise DatasetFormatError(f"tree {rec_id!r}: {exc}", lineno) from None
    problems = validate(nodes)
    if problems:
        detail = "; ".join(p.message for p in problems)
        raise DatasetFormatError(f"tree {rec_id!r}: {detail}", lineno)
    tree = LabeledTree(nodes, check=False)
    return Record(rec_id, tree, {k: float(v) for k, v in covs.items()})


def loads_dataset(text: str) -> DataSet:
    records = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rec = _parse_record(line, lineno)
        if rec.id in seen:
            raise DatasetFormatError(
                f"duplicate id {rec.id!r} (first on line {seen[rec.id]})", lineno
            )
        seen[rec.id] = lineno
        records.append(rec)
    return DataSet(records)


def read_dataset(path: str | Path) -> DataSet:
    return loads_dataset(Path(path).read_text(encoding="utf-8"))


def read_node_list(path: str | Path) -> LabeledTree:
    """Read a tree given as node labels separated by whitespace or commas."""
    text = Path(path).read_text(encoding="utf-8")
    return LabeledTree.from_strings(text.replace(",", " ").split())


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the synthetic pruning model.

    Each tree gets a covariate drawn uniformly from ``covariate_range``. A
    non-root template node survives with probability
    ``clamp(base_keep - covariate_effect * u, 0.01, 1)``, ``u`` being the
    covariate rescaled to [0, 1], provided its parent survived.
    """

    seed: int = 0
    tree_count: int = 50
    max_depth: int = 5
    max_arity: int = 3
    base_keep: float = 0.9
    covariate_effect: float = 0.0
    covariate_range: tuple[float, float] = (18.0, 72.0)
    covariate_name: str = "age"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.tree_count < 1:
            raise ValueError("tree_count must be positive")
        if self.max_depth < 0 or self.max_arity < 1:
            raise ValueError("max_depth must be >= 0 and max_arity >= 1")
        if not 0 < self.base_keep <= 1:
            raise ValueError("base_keep must lie in (0, 1]")
        if not math.isfinite(self.covariate_effect):
            raise ValueError("covariate_effect must be finite")
        lo, hi = self.covariate_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("covariate_range must be finite with lo < hi")


def template_nodes(max_depth: int, max_arity: int) -> tuple[list[NodeId], np.ndarray]:
    """Full template tree in breadth-first order with parent indices."""
    nodes = [NodeId()]
    parents = [-1]
    level = [0]
    for _ in range(max_depth):
        nxt = []
        for i in level:
            for s in range(max_arity):
                nodes.append(NodeId(nodes[i] + (s,)))
                parents.append(i)
                nxt.append(len(nodes) - 1)
        level = nxt
    return nodes, np.asarray(parents, dtype=np.int64)


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    # one independent substream per tree index
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def generate(cfg: GeneratorConfig, template: tuple[list[NodeId], np.ndarray] | None = None) -> DataSet:
    nodes, parents = template or template_nodes(cfg.max_depth, cfg.max_arity)
    lo, hi = cfg.covariate_range
    width = max(6, len(str(cfg.tree_count)))
    records = []
    for i in range(cfg.tree_count):
        rng = _tree_rng(cfg.seed, i)
        u = rng.random()
        covariate = lo + (hi - lo) * u
        p_keep = min(1.0, max(0.01, cfg.base_keep - cfg.covariate_effect * u))
        keep = rng.random(len(nodes)) < p_keep
        keep[0] = True
        # each pass pushes removals one level further down
        for _ in range(cfg.max_depth):
            keep[1:] &= keep[parents[1:]]
        tree = LabeledTree([nodes[j] for j in np.flatnonzero(keep)], check=False)
        records.append(Record(f"t{i:0{width}d}", tree, {cfg.covariate_name: float(covariate)}))
    return DataSet(records)
