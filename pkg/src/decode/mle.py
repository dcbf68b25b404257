"""Exact most-likely-error decoding by depth-first branch and bound.

For a syndrome ``s`` the decoder finds ``e`` minimizing ``sum_j w_j e_j`` with
``w_j = log((1 - p_j) / p_j)`` subject to ``D e = s`` over GF(2), which is the
most probable error consistent with ``s``. Mechanisms and constraints are kept
as Python integer bitmasks.

Branching picks the violated constraint with the fewest free mechanisms
(a single candidate is a forced assignment) and tries its candidates in
order of weight; candidate ``i`` is included while candidates ``0..i-1`` are
excluded, so every mechanism set is visited at most once. The lower bound
charges each violated constraint the cheapest ``w_j / deg_j`` among its free
mechanisms, which never exceeds the cost of any completion.

Among equal-weight optima the lexicographically smallest mechanism set wins.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from src.circuit.detectors import DetectorModel
from src.decode.results import DecodeResult, bits_to_int, int_to_bits
from src.exceptions import DecodingError, InfeasibleSyndromeError

logger = logging.getLogger(__name__)

__all__ = ["MleDecoder", "MleProblem", "MleSolver", "mle_solve", "smle_gap"]

_TIE_TOLERANCE = 1e-9
# Keeps every weight strictly positive when merged mechanisms reach p = 1/2.
_MAX_PROBABILITY = 0.5 - 1e-12


def _left_null_space(rows: Sequence[int]) -> list[int]:
    """Basis of ``{y : y A = 0}`` for ``A`` given as row bitmasks; each ``y`` is a row mask."""

    pivots: dict[int, tuple[int, int]] = {}
    null: list[int] = []
    for index, row in enumerate(rows):
        combo = 1 << index
        while row:
            top = row.bit_length() - 1
            if top not in pivots:
                pivots[top] = (row, combo)
                break
            pivot_row, pivot_combo = pivots[top]
            row ^= pivot_row
            combo ^= pivot_combo
        if row == 0:
            null.append(combo)
    return null


@dataclass(frozen=True)
class _Tables:
    masks: list[int]
    weights: list[float]
    ratios: list[float]
    supports: list[int]
    by_weight: list[list[int]]
    by_ratio: list[list[int]]


@dataclass(frozen=True)
class _Solution:
    weight: float
    mechanisms: tuple[int, ...]
    observables: int


@dataclass
class _SearchState:
    limit: float
    best: _Solution | None = None
    nodes: int = 0


class MleSolver:
    """Preprocessed constraint system for one detector model."""

    def __init__(self, model: DetectorModel) -> None:
        self.model = model
        self.k = model.n_detectors
        self.l = model.n_observables
        self.m = model.m
        check = model.check_dense()
        logicals = model.logicals_dense()
        probabilities = np.minimum(model.probabilities, _MAX_PROBABILITY)
        self.weights = [float(w) for w in np.log((1 - probabilities) / probabilities)]
        self._det_masks = [bits_to_int(check[:, j]) for j in range(self.m)]
        self._obs_masks = [bits_to_int(logicals[:, j]) for j in range(self.m)]
        det_rows = [bits_to_int(check[i]) for i in range(self.k)]
        obs_rows = [bits_to_int(logicals[i]) for i in range(self.l)]
        self._null_detectors = _left_null_space(det_rows)
        self._null_full = _left_null_space(det_rows + obs_rows)
        self._tables = {False: self._build(False), True: self._build(True)}

    def _build(self, constrained: bool) -> _Tables:
        rows = self.k + (self.l if constrained else 0)
        masks = [
            det | (obs << self.k) if constrained else det
            for det, obs in zip(self._det_masks, self._obs_masks, strict=True)
        ]
        ratios = [
            w / mask.bit_count() if mask else math.inf
            for w, mask in zip(self.weights, masks, strict=True)
        ]
        members: list[list[int]] = [[] for _ in range(rows)]
        for j, mask in enumerate(masks):
            while mask:
                low = mask & -mask
                members[low.bit_length() - 1].append(j)
                mask ^= low
        return _Tables(
            masks=masks,
            weights=self.weights,
            ratios=ratios,
            supports=[sum(1 << j for j in group) for group in members],
            by_weight=[sorted(group, key=lambda j: (self.weights[j], j)) for group in members],
            by_ratio=[sorted(group, key=lambda j: (ratios[j], j)) for group in members],
        )

    def feasible(self, syndrome: int, target_class: int | None = None) -> bool:
        """Whether some error reproduces ``syndrome`` (and ``target_class``, if given)."""

        if target_class is None:
            return all((y & syndrome).bit_count() % 2 == 0 for y in self._null_detectors)
        vector = syndrome | (target_class << self.k)
        return all((y & vector).bit_count() % 2 == 0 for y in self._null_full)

    def solve(
        self, syndrome: int, target_class: int | None = None, cutoff: float = math.inf
    ) -> _Solution | None:
        """Cheapest error for ``syndrome`` weighing at most ``cutoff``, or ``None``."""

        if not self.feasible(syndrome, target_class):
            return None
        constrained = target_class is not None
        tables = self._tables[constrained]
        target = syndrome | ((target_class or 0) << self.k if constrained else 0)
        state = _SearchState(limit=cutoff)
        self._descend(tables, target, (1 << self.m) - 1, 0.0, (), state)
        logger.debug(
            "MLE search for syndrome %#x (class %s): %d nodes", syndrome, target_class, state.nodes
        )
        return state.best

    def _offer(self, state: _SearchState, weight: float, chosen: tuple[int, ...]) -> None:
        mechanisms = tuple(sorted(chosen))
        best = state.best
        if best is not None:
            if weight > best.weight + _TIE_TOLERANCE:
                return
            if abs(weight - best.weight) <= _TIE_TOLERANCE and mechanisms >= best.mechanisms:
                return
        observables = 0
        for j in mechanisms:
            observables ^= self._obs_masks[j]
        state.best = _Solution(weight, mechanisms, observables)
        state.limit = min(state.limit, weight)

    def _descend(
        self,
        tables: _Tables,
        residual: int,
        free: int,
        weight: float,
        chosen: tuple[int, ...],
        state: _SearchState,
    ) -> None:
        state.nodes += 1
        if residual == 0:
            self._offer(state, weight, chosen)
            return

        bound = 0.0
        branch = -1
        branch_count = -1
        remaining = residual
        while remaining:
            low = remaining & -remaining
            constraint = low.bit_length() - 1
            remaining ^= low
            cheapest = next((j for j in tables.by_ratio[constraint] if free >> j & 1), None)
            if cheapest is None:
                return
            bound += tables.ratios[cheapest]
            count = (tables.supports[constraint] & free).bit_count()
            if branch_count < 0 or count < branch_count:
                branch, branch_count = constraint, count
        if weight + bound > state.limit + _TIE_TOLERANCE:
            return

        excluded = 0
        for j in tables.by_weight[branch]:
            if not free >> j & 1:
                continue
            if weight + tables.weights[j] > state.limit + _TIE_TOLERANCE:
                break
            self._descend(
                tables,
                residual ^ tables.masks[j],
                free & ~(1 << j) & ~excluded,
                weight + tables.weights[j],
                (*chosen, j),
                state,
            )
            excluded |= 1 << j


# ---------------------------------------------------------------------------
# Problem-level API
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class MleProblem:
    """A syndrome to decode against ``model``, optionally pinned to one logical class."""

    model: DetectorModel
    syndrome: Sequence[int] | np.ndarray
    class_constraint: Sequence[int] | np.ndarray | None = None
    solver: MleSolver | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.syndrome) != self.model.n_detectors:
            raise DecodingError(
                f"Syndrome has {len(self.syndrome)} bits, model has {self.model.n_detectors}"
            )
        if self.class_constraint is not None and (
            len(self.class_constraint) != self.model.n_observables
        ):
            raise DecodingError("Class constraint must give one bit per observable")
        if self.solver is None:
            self.solver = MleSolver(self.model)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self._solver.weights)

    @property
    def syndrome_key(self) -> int:
        return bits_to_int(self.syndrome)

    @property
    def class_key(self) -> int | None:
        return None if self.class_constraint is None else bits_to_int(self.class_constraint)

    @property
    def _solver(self) -> MleSolver:
        assert self.solver is not None
        return self.solver


def _result(problem: MleProblem, solution: _Solution | None) -> DecodeResult:
    if solution is None:
        return DecodeResult.infeasible(
            problem.syndrome_key, problem.model.n_detectors, problem.model.n_observables
        )
    return DecodeResult(
        syndrome=problem.syndrome_key,
        n_detectors=problem.model.n_detectors,
        logical_flips=tuple(
            int(b) for b in int_to_bits(solution.observables, problem.model.n_observables)
        ),
        weight=solution.weight,
        mechanisms=solution.mechanisms,
    )


def mle_solve(problem: MleProblem) -> DecodeResult:
    """Most likely error for the syndrome; an unreachable one gives ``feasible=False``."""

    return _result(problem, problem._solver.solve(problem.syndrome_key, problem.class_key))


def smle_gap(problem: MleProblem) -> tuple[DecodeResult, float]:
    """MLE plus the weight gap to the best error in any other logical class.

    Every class over the model's observables is resolved with the running
    second-best weight as cutoff. The gap is ``math.inf`` when the MLE class is
    the only achievable one.
    """

    solver = problem._solver
    key = problem.syndrome_key
    best = solver.solve(key)
    result = _result(problem, best)
    if best is None:
        return result, math.inf
    second = math.inf
    for target in range(1 << solver.l):
        if target == best.observables or not solver.feasible(key, target):
            continue
        candidate = solver.solve(key, target, cutoff=second)
        if candidate is not None and candidate.weight < second:
            second = candidate.weight
    gap = max(0.0, second - best.weight) if math.isfinite(second) else math.inf
    return (
        DecodeResult(
            syndrome=result.syndrome,
            n_detectors=result.n_detectors,
            logical_flips=result.logical_flips,
            weight=result.weight,
            gap=gap,
            mechanisms=result.mechanisms,
        ),
        gap,
    )


class MleDecoder:
    """Caching decoder around one model; safe to call from several threads."""

    def __init__(self, model: DetectorModel, *, with_gap: bool = False, strict: bool = False):
        self.model = model
        self.with_gap = with_gap
        self.strict = strict
        self.solver = MleSolver(model)
        self._cache: dict[int, DecodeResult] = {}
        self._lock = threading.Lock()

    @property
    def n_detectors(self) -> int:
        return self.model.n_detectors

    @property
    def n_observables(self) -> int:
        return self.model.n_observables

    def decode_key(self, syndrome: int) -> DecodeResult:
        cached = self._cache.get(syndrome)
        if cached is not None:
            return cached
        problem = MleProblem(
            self.model, int_to_bits(syndrome, self.n_detectors), solver=self.solver
        )
        result = smle_gap(problem)[0] if self.with_gap else mle_solve(problem)
        if not result.feasible:
            if self.strict:
                raise InfeasibleSyndromeError(result.syndrome_hex())
            logger.warning("Syndrome %s is infeasible for this model", result.syndrome_hex())
        with self._lock:
            self._cache[syndrome] = result
        return result

    def decode(self, detectors: Sequence[int] | np.ndarray) -> DecodeResult:
        if len(detectors) != self.n_detectors:
            raise DecodingError(f"Expected {self.n_detectors} detector bits, got {len(detectors)}")
        return self.decode_key(bits_to_int(detectors))

    def cache_size(self) -> int:
        return len(self._cache)
