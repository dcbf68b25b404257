"""Row-reduction search that turns a self-dual CSS code into a layered CNOT encoder.

The reduction matrix has one row per qubit and one column per Z check, followed
by the logical column. A row operation ``s -> t`` adds row ``s`` into row ``t``
(a CNOT with control ``s`` and target ``t`` acting on the X-type supports).
The goal is a matrix whose every column has weight one on distinct rows; the
ops taken in reverse then form the encoding circuit.

The search is an iterative-deepening depth-first search over layers of
disjoint row operations. Candidates inside a layer are scored by weight gain,
then by the weight of the columns they touch, then by how close the new row
lands to an existing row. Near the leaves every maximal layer is tried; higher
up only the best-ranked layer is. Column operations that add a settled check
column into the logical column are applied eagerly since they leave the
circuit unchanged.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.codes.css import CssCode
from src.exceptions import BudgetExhaustedError, MalformedMatrixError, SynthesisError

logger = logging.getLogger(__name__)

__all__ = [
    "ColumnOp",
    "ReductionMatrix",
    "ReductionResult",
    "RowOp",
    "RowOpSequence",
    "SearchSettings",
    "gaussian_reduction",
    "reduce",
    "replay",
]


@dataclass(frozen=True, order=True)
class RowOp:
    source: int
    target: int

    def __str__(self) -> str:
        return f"{self.source}->{self.target}"

    @classmethod
    def parse(cls, text: str) -> RowOp:
        source, _, target = text.replace("→", "->").partition("->")
        return cls(int(source), int(target))


@dataclass(frozen=True)
class ColumnOp:
    """Check column ``source`` added into logical column ``target`` (indices into the matrix)."""

    source: int
    target: int


@dataclass(frozen=True)
class RowOpSequence:
    layers: tuple[tuple[RowOp, ...], ...] = ()

    def __post_init__(self) -> None:
        for index, layer in enumerate(self.layers):
            rows = [row for op in layer for row in (op.source, op.target)]
            if len(rows) != len(set(rows)):
                raise MalformedMatrixError(f"Layer {index} uses a row twice")

    @classmethod
    def from_ops(cls, ops: Sequence[RowOp]) -> RowOpSequence:
        """Pack ordered ops into the earliest layer that keeps per-row order."""

        last: dict[int, int] = {}
        layers: list[list[RowOp]] = []
        for op in ops:
            if op.source == op.target:
                raise MalformedMatrixError(f"Row op {op} adds a row to itself")
            layer = 1 + max(last.get(op.source, -1), last.get(op.target, -1))
            if layer == len(layers):
                layers.append([])
            layers[layer].append(op)
            last[op.source] = last[op.target] = layer
        return cls(tuple(tuple(layer) for layer in layers))

    @classmethod
    def parse(cls, text: str) -> RowOpSequence:
        """Parse ``"0->1, 3->2"``; ``|`` separates explicit layers."""

        if "|" in text:
            return cls(
                tuple(
                    tuple(RowOp.parse(item) for item in chunk.split(",") if item.strip())
                    for chunk in text.split("|")
                )
            )
        return cls.from_ops([RowOp.parse(item) for item in text.split(",") if item.strip()])

    @property
    def ops(self) -> list[RowOp]:
        return [op for layer in self.layers for op in layer]

    @property
    def depth(self) -> int:
        return len(self.layers)

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def __str__(self) -> str:
        return " | ".join(", ".join(str(op) for op in layer) for layer in self.layers)


@dataclass
class ReductionMatrix:
    entries: np.ndarray
    n_checks: int

    @classmethod
    def from_code(cls, code: CssCode) -> ReductionMatrix:
        if not code.is_self_dual():
            raise SynthesisError("Row-reduction synthesis needs a self-dual CSS code")
        columns = np.vstack([code.z_checks, code.logical_z]).T.astype(np.uint8)
        return cls(columns.copy(), code.z_checks.shape[0])

    @property
    def n_rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def column_roles(self) -> list[str]:
        return ["check"] * self.n_checks + ["logical"] * (self.entries.shape[1] - self.n_checks)

    def copy(self) -> ReductionMatrix:
        return ReductionMatrix(self.entries.copy(), self.n_checks)

    def column_weights(self) -> np.ndarray:
        return self.entries.sum(axis=0, dtype=np.int64)

    def apply(self, op: RowOp) -> None:
        self.entries[op.target] ^= self.entries[op.source]

    def is_reduced(self) -> bool:
        if np.any(self.column_weights() != 1):
            return False
        hosts = self.hosts()
        return len(set(hosts)) == len(hosts)

    def hosts(self) -> list[int]:
        """Row holding each column's single 1 (requires weight-one columns)."""

        return [int(np.flatnonzero(col)[0]) for col in self.entries.T]

    def check_hosts(self) -> list[int]:
        return self.hosts()[: self.n_checks]

    def logical_hosts(self) -> list[int]:
        return self.hosts()[self.n_checks :]

    def lower_bound(self) -> int:
        """Layers still needed: a layer can at most halve the heaviest column."""

        heaviest = max(1, int(self.column_weights().max(initial=1)))
        return math.ceil(math.log2(heaviest))

    def settle_logicals(self) -> list[ColumnOp]:
        """Add weight-one check columns into logical columns while that lowers their weight."""

        applied: list[ColumnOp] = []
        entries = self.entries
        changed = True
        while changed:
            changed = False
            for check in range(self.n_checks):
                if entries[:, check].sum() != 1:
                    continue
                for logical in range(self.n_checks, entries.shape[1]):
                    before = int(entries[:, logical].sum())
                    after = int((entries[:, logical] ^ entries[:, check]).sum())
                    if after < before:
                        entries[:, logical] ^= entries[:, check]
                        applied.append(ColumnOp(check, logical))
                        changed = True
        return applied


@dataclass(frozen=True)
class SearchSettings:
    node_budget: int = 100_000
    max_layers: int = 12
    backtrack_depth: int = 3
    branch_width: int = 16
    allow_fallback: bool = True


@dataclass
class ReductionResult:
    sequence: RowOpSequence
    column_ops: list[ColumnOp]
    initial: ReductionMatrix
    final: ReductionMatrix
    method: str = "search"
    nodes: int = 0
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def injected_row(self) -> int:
        return self.final.logical_hosts()[0]


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def replay(
    initial: ReductionMatrix, sequence: RowOpSequence
) -> tuple[ReductionMatrix, list[ColumnOp]]:
    """Apply a layered sequence, settling logical columns before and after every layer."""

    matrix = initial.copy()
    for op in sequence.ops:
        if not (0 <= op.source < matrix.n_rows and 0 <= op.target < matrix.n_rows):
            raise MalformedMatrixError(f"Row op {op} is outside the {matrix.n_rows}-row matrix")
    column_ops = matrix.settle_logicals()
    for layer in sequence.layers:
        for op in layer:
            matrix.apply(op)
        column_ops.extend(matrix.settle_logicals())
    return matrix, column_ops


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Candidate:
    source: int
    target: int


def _ranked_candidates(entries: np.ndarray) -> list[_Candidate]:
    n = entries.shape[0]
    row_w = entries.sum(axis=1, dtype=np.int64)
    col_w = entries.sum(axis=0, dtype=np.int64)
    # merged[s, t] is row t after adding row s into it.
    merged = entries[:, None, :] ^ entries[None, :, :]
    gain = row_w[None, :] - merged.sum(axis=2, dtype=np.int64)
    weighted = entries.astype(np.int64) * col_w
    priority = weighted @ entries.T.astype(np.int64)  # symmetric overlap score
    distance = (merged[:, :, None, :] ^ entries[None, None, :, :]).sum(axis=3, dtype=np.int64)
    idx = np.arange(n)
    distance[:, idx, idx] = np.iinfo(np.int64).max
    closeness = distance.min(axis=2)

    source, target = np.meshgrid(idx, idx, indexing="ij")
    valid = (source != target) & (row_w[:, None] > 0) & (gain >= 0)
    s = source[valid]
    t = target[valid]
    order = np.lexsort((t, s, closeness[valid], -priority[valid], -gain[valid]))
    return [_Candidate(int(s[i]), int(t[i])) for i in order]


def _layer_sets(candidates: list[_Candidate], n_rows: int) -> Iterator[list[_Candidate]]:
    """Maximal sets of row-disjoint candidates, best-ranked first."""

    chosen: list[_Candidate] = []
    used = [False] * n_rows

    def extend(start: int) -> Iterator[list[_Candidate]]:
        extended = False
        for k in range(start, len(candidates)):
            cand = candidates[k]
            if used[cand.source] or used[cand.target]:
                continue
            extended = True
            used[cand.source] = used[cand.target] = True
            chosen.append(cand)
            yield from extend(k + 1)
            chosen.pop()
            used[cand.source] = used[cand.target] = False
        if not extended and chosen and all(used[c.source] or used[c.target] for c in candidates):
            yield list(chosen)

    yield from extend(0)


class _LayerSearch:
    def __init__(self, settings: SearchSettings) -> None:
        self.settings = settings
        self.nodes = 0

    def run(self, matrix: ReductionMatrix, left: int) -> list[list[RowOp]] | None:
        self.nodes += 1
        if self.nodes > self.settings.node_budget:
            raise BudgetExhaustedError(self.nodes, self.settings.max_layers)
        work = matrix.copy()
        work.settle_logicals()
        if work.is_reduced():
            return []
        if left == 0 or work.lower_bound() > left:
            return None
        exhaustive = left <= self.settings.backtrack_depth
        tried = 0
        for layer in _layer_sets(_ranked_candidates(work.entries), work.n_rows):
            child = work.copy()
            ops = [RowOp(c.source, c.target) for c in layer]
            for op in ops:
                child.apply(op)
            rest = self.run(child, left - 1)
            if rest is not None:
                return [ops, *rest]
            tried += 1
            if not exhaustive or tried >= self.settings.branch_width:
                break
        return None


def gaussian_reduction(initial: ReductionMatrix) -> RowOpSequence:
    """Plain Gauss-Jordan elimination; always succeeds on independent columns."""

    matrix = initial.copy()
    entries = matrix.entries
    ops: list[RowOp] = []
    pivots: list[int] = []

    def eliminate(column: int) -> None:
        free = [int(r) for r in np.flatnonzero(entries[:, column]) if int(r) not in pivots]
        if not free:
            raise MalformedMatrixError(f"Column {column} depends on earlier columns")
        pivot = free[0]
        for row in np.flatnonzero(entries[:, column]):
            if int(row) != pivot:
                op = RowOp(pivot, int(row))
                matrix.apply(op)
                ops.append(op)
        pivots.append(pivot)

    for check in range(matrix.n_checks):
        eliminate(check)
    for logical in range(matrix.n_checks, entries.shape[1]):
        for check, host in enumerate(pivots[: matrix.n_checks]):
            if entries[host, logical]:
                entries[:, logical] ^= entries[:, check]
        eliminate(logical)
    return RowOpSequence.from_ops(ops)


def reduce(code: CssCode, settings: SearchSettings | None = None) -> ReductionResult:
    """Find a shallow layered row-op sequence that fully reduces the code's matrix."""

    settings = settings or SearchSettings()
    initial = ReductionMatrix.from_code(code)
    search = _LayerSearch(settings)
    layers: list[list[RowOp]] | None = None
    try:
        for depth in range(initial.lower_bound(), settings.max_layers + 1):
            layers = search.run(initial, depth)
            if layers is not None:
                break
    except BudgetExhaustedError:
        if not settings.allow_fallback:
            raise
        logger.warning(
            "Layer search for %s exhausted %d nodes; falling back to elimination",
            code.label,
            settings.node_budget,
        )
        layers = None

    if layers is None:
        if not settings.allow_fallback:
            raise BudgetExhaustedError(search.nodes, settings.max_layers)
        sequence = gaussian_reduction(initial)
        method = "gaussian"
    else:
        sequence = RowOpSequence(tuple(tuple(layer) for layer in layers))
        method = "search"

    final, column_ops = replay(initial, sequence)
    if not final.is_reduced():
        raise SynthesisError(f"Sequence for {code.label} does not reduce the matrix")
    logger.debug(
        "Reduced %s with %d ops in %d layers (%s, %d nodes)",
        code.label,
        len(sequence),
        sequence.depth,
        method,
        search.nodes,
    )
    return ReductionResult(
        sequence=sequence,
        column_ops=column_ops,
        initial=initial,
        final=final,
        method=method,
        nodes=search.nodes,
        stats={"ops": len(sequence), "layers": sequence.depth},
    )
