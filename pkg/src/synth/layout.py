"""Linear atom-order constraints for parallel CZ layers.

With atoms on a line, a layer of CZ gates can be executed in parallel only if
no gate is nested inside another: for two gates at sorted positions ``(i, j)``
and ``(k, l)`` with ``i < k`` we need ``j < l``.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "EXHAUSTIVE_MAX_QUBITS",
    "check_order",
    "layout_summary",
    "order_violations",
    "search_order",
]

EXHAUSTIVE_MAX_QUBITS = 8
SEARCH_MAX_QUBITS = 20

Layers = Sequence[Sequence[tuple[int, int]]]


def order_violations(layers: Layers, order: Sequence[int]) -> int:
    """Number of nested gate pairs when qubit ``q`` sits at position ``order[q]``."""

    violations = 0
    for layer in layers:
        spans = sorted(tuple(sorted((order[a], order[b]))) for a, b in layer)
        for (_, j), (_, l) in itertools.combinations(spans, 2):
            if j > l:
                violations += 1
    return violations


def check_order(layers: Layers, order: Sequence[int]) -> bool:
    return order_violations(layers, order) == 0


def _displacement(order: Sequence[int]) -> int:
    return sum(abs(position - qubit) for qubit, position in enumerate(order))


def search_order(
    layers: Layers,
    n: int,
    *,
    seed: int = 0,
    restarts: int = 20,
    steps: int = 2_000,
) -> list[int] | None:
    """Valid qubit order with the least total displacement, or ``None``.

    Exhaustive up to :data:`EXHAUSTIVE_MAX_QUBITS` qubits, seeded swap-move
    local search with restarts above that.
    """

    if n > SEARCH_MAX_QUBITS:
        raise ValueError(f"Order search supports at most {SEARCH_MAX_QUBITS} qubits")
    identity = list(range(n))
    if not any(layers) or check_order(layers, identity):
        return identity

    if n <= EXHAUSTIVE_MAX_QUBITS:
        best: list[int] | None = None
        best_cost = None
        for perm in itertools.permutations(range(n)):
            if not check_order(layers, perm):
                continue
            cost = _displacement(perm)
            if best_cost is None or cost < best_cost:
                best, best_cost = list(perm), cost
        return best

    rng = np.random.default_rng(seed)
    best = None
    best_cost = None
    for restart in range(restarts):
        order = identity.copy() if restart == 0 else [int(v) for v in rng.permutation(n)]
        score = (order_violations(layers, order), _displacement(order))
        for _ in range(steps):
            a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
            order[a], order[b] = order[b], order[a]
            trial = (order_violations(layers, order), _displacement(order))
            if trial <= score:
                score = trial
            else:
                order[a], order[b] = order[b], order[a]
        if score[0] == 0 and (best_cost is None or score[1] < best_cost):
            best, best_cost = order.copy(), score[1]
    if best is None:
        logger.debug("No valid order found for %d qubits after %d restarts", n, restarts)
    return best


def layout_summary(layers: Layers, n: int) -> dict[str, object]:
    """Gate and layer counts plus the best order found, for reports."""

    order = search_order(layers, n)
    return {
        "layers": len(layers),
        "two_qubit_gates": sum(len(layer) for layer in layers),
        "order": order,
        "displacement": _displacement(order) if order is not None else None,
    }
