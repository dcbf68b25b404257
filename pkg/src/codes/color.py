"""Triangular 2D color codes at distance 3 and 5, plus the bare qubit as distance 1.

Qubit indexing follows the injection layouts used by the published encoding
sequences, so replaying those sequences against these checks is exact.
"""

from __future__ import annotations

from functools import cache

from src.codes.css import CssCode
from src.exceptions import UnsupportedDistanceError

__all__ = ["SUPPORTED_DISTANCES", "color_code"]

SUPPORTED_DISTANCES = (1, 3, 5)

_PLAQUETTES: dict[int, tuple[tuple[int, ...], ...]] = {
    1: (),
    3: (
        (0, 1, 2, 3),
        (1, 2, 4, 5),
        (2, 3, 4, 6),
    ),
    5: (
        (0, 2, 4, 5),
        (0, 1, 2, 3),
        (4, 5, 6, 7),
        (2, 3, 5, 6, 8, 10, 11, 13),
        (6, 7, 8, 9),
        (10, 11, 12, 14),
        (12, 14, 15, 16),
        (11, 13, 14, 16),
    ),
}

_LOGICAL: dict[int, tuple[int, ...]] = {
    1: (0,),
    3: (0, 1, 5),
    5: (6, 7, 10, 11, 13),
}

_QUBITS = {1: 1, 3: 7, 5: 17}


@cache
def color_code(distance: int) -> CssCode:
    """Self-dual ``[[7,1,3]]`` or ``[[17,1,5]]`` color code; X and Z checks share plaquettes.

    Distance 1 is an unencoded qubit with no checks, used for small-system cross-checks.
    """

    if distance not in SUPPORTED_DISTANCES:
        raise UnsupportedDistanceError(distance)
    plaquettes = _PLAQUETTES[distance]
    logical = _LOGICAL[distance]
    return CssCode.from_supports(
        n=_QUBITS[distance],
        d=distance,
        x_checks=plaquettes,
        z_checks=plaquettes,
        logical_x=[logical],
        logical_z=[logical],
        label=f"color-d{distance}",
    )
