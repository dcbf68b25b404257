"""CSS code container, GF(2) helpers, validation and transversal measurement specs."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.exceptions import CodeError, CodeValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "CodeReport",
    "CssCode",
    "MeasurementSpec",
    "gf2_rank",
    "in_row_space",
    "measurement_spec",
    "support_matrix",
    "validate_code",
]

# Brute-force distance checks are exact up to this many physical qubits.
BRUTE_FORCE_MAX_QUBITS = 20


# ---------------------------------------------------------------------------
# GF(2) helpers
# ---------------------------------------------------------------------------


def support_matrix(supports: Iterable[Iterable[int]], n: int) -> np.ndarray:
    rows = [list(s) for s in supports]
    matrix = np.zeros((len(rows), n), dtype=np.uint8)
    for i, support in enumerate(rows):
        matrix[i, support] = 1
    return matrix


def gf2_rank(matrix: np.ndarray) -> int:
    work = (np.asarray(matrix, dtype=np.uint8) & 1).copy()
    if work.size == 0:
        return 0
    rank = 0
    rows, cols = work.shape
    for col in range(cols):
        pivots = np.nonzero(work[rank:, col])[0]
        if pivots.size == 0:
            continue
        pivot = rank + int(pivots[0])
        if pivot != rank:
            work[[rank, pivot]] = work[[pivot, rank]]
        others = np.nonzero(work[:, col])[0]
        others = others[others != rank]
        work[others] ^= work[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def in_row_space(matrix: np.ndarray, vector: np.ndarray) -> bool:
    return gf2_rank(np.vstack([matrix, vector])) == gf2_rank(matrix)


def _support(row: np.ndarray) -> tuple[int, ...]:
    return tuple(int(q) for q in np.nonzero(row)[0])


# ---------------------------------------------------------------------------
# Code container
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CssCode:
    """A CSS code given by its X/Z check matrices and paired logical operators."""

    n: int
    k: int
    d: int
    x_checks: np.ndarray
    z_checks: np.ndarray
    logical_x: np.ndarray
    logical_z: np.ndarray
    label: str = ""

    @classmethod
    def from_supports(
        cls,
        n: int,
        d: int,
        x_checks: Sequence[Iterable[int]],
        z_checks: Sequence[Iterable[int]],
        logical_x: Sequence[Iterable[int]],
        logical_z: Sequence[Iterable[int]],
        label: str = "",
    ) -> CssCode:
        return cls(
            n=n,
            k=len(logical_x),
            d=d,
            x_checks=support_matrix(x_checks, n),
            z_checks=support_matrix(z_checks, n),
            logical_x=support_matrix(logical_x, n),
            logical_z=support_matrix(logical_z, n),
            label=label,
        )

    def x_supports(self) -> list[tuple[int, ...]]:
        return [_support(row) for row in self.x_checks]

    def z_supports(self) -> list[tuple[int, ...]]:
        return [_support(row) for row in self.z_checks]

    def logical_x_support(self, index: int = 0) -> tuple[int, ...]:
        return _support(self.logical_x[index])

    def logical_z_support(self, index: int = 0) -> tuple[int, ...]:
        return _support(self.logical_z[index])

    def is_self_dual(self) -> bool:
        return bool(np.array_equal(self.x_checks, self.z_checks))

    def permuted(self, order: Sequence[int]) -> CssCode:
        """Relabel physical qubits so that old qubit ``q`` becomes ``order[q]``."""

        if sorted(order) != list(range(self.n)):
            raise CodeError("Qubit relabelling must be a permutation")
        inverse = np.argsort(np.asarray(order))

        def move(matrix: np.ndarray) -> np.ndarray:
            return matrix[:, inverse].copy()

        return CssCode(
            n=self.n,
            k=self.k,
            d=self.d,
            x_checks=move(self.x_checks),
            z_checks=move(self.z_checks),
            logical_x=move(self.logical_x),
            logical_z=move(self.logical_z),
            label=f"{self.label}-permuted" if self.label else "permuted",
        )

    def with_check_bit_flipped(self, basis: str, check: int, qubit: int) -> CssCode:
        x_checks = self.x_checks.copy()
        z_checks = self.z_checks.copy()
        target = x_checks if basis == "X" else z_checks
        target[check, qubit] ^= 1
        return CssCode(
            n=self.n,
            k=self.k,
            d=self.d,
            x_checks=x_checks,
            z_checks=z_checks,
            logical_x=self.logical_x.copy(),
            logical_z=self.logical_z.copy(),
            label=self.label,
        )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class CodeReport:
    label: str
    violations: list[tuple[str, str]] = field(default_factory=list)
    distance: int | None = None

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> tuple[str, str] | None:
        return self.violations[0] if self.violations else None

    def raise_if_invalid(self) -> None:
        if self.violations:
            invariant, detail = self.violations[0]
            raise CodeValidationError(invariant, detail)


def _min_logical_weight(
    detecting: np.ndarray, stabilizers: np.ndarray, limit: int
) -> int | None:
    """Smallest weight of a vector in ``ker(detecting)`` outside ``rowspace(stabilizers)``."""

    n = detecting.shape[1]
    base_rank = gf2_rank(stabilizers)
    for weight in range(1, limit + 1):
        combos = np.array(list(itertools.combinations(range(n), weight)), dtype=np.intp)
        if combos.size == 0:
            return None
        vectors = np.zeros((combos.shape[0], n), dtype=np.uint8)
        np.put_along_axis(vectors, combos, 1, axis=1)
        syndromes = (vectors.astype(np.int64) @ detecting.T.astype(np.int64)) % 2
        for vector in vectors[~syndromes.any(axis=1)]:
            if gf2_rank(np.vstack([stabilizers, vector])) > base_rank:
                return weight
    return None


def code_distance(code: CssCode, limit: int | None = None) -> int | None:
    """Exact distance by enumerating X- and Z-type errors up to ``limit`` (default ``code.d``)."""

    bound = limit if limit is not None else code.d
    weights = [
        w
        for w in (
            _min_logical_weight(code.z_checks, code.x_checks, bound),
            _min_logical_weight(code.x_checks, code.z_checks, bound),
        )
        if w is not None
    ]
    return min(weights) if weights else None


def validate_code(code: CssCode, *, check_distance: bool = True) -> CodeReport:
    """Check the CSS invariants of ``code`` and collect every violation found."""

    report = CodeReport(label=code.label)
    n = code.n
    shapes_ok = all(
        m.ndim == 2 and m.shape[1] == n
        for m in (code.x_checks, code.z_checks, code.logical_x, code.logical_z)
    )
    if not shapes_ok:
        report.violations.append(("shape", f"every matrix needs {n} columns"))
        return report
    if any(np.any(m > 1) for m in (code.x_checks, code.z_checks, code.logical_x, code.logical_z)):
        report.violations.append(("binary", "matrices must be 0/1"))
        return report

    hx = code.x_checks.astype(np.int64)
    hz = code.z_checks.astype(np.int64)
    lx = code.logical_x.astype(np.int64)
    lz = code.logical_z.astype(np.int64)

    if np.any((hx @ hz.T) % 2):
        i, j = np.argwhere((hx @ hz.T) % 2)[0]
        report.violations.append(("css_commutation", f"X check {i} anticommutes with Z check {j}"))
    if np.any((lx @ hz.T) % 2):
        report.violations.append(("logical_x_commutation", "logical X anticommutes with a Z check"))
    if np.any((lz @ hx.T) % 2):
        report.violations.append(("logical_z_commutation", "logical Z anticommutes with X check"))
    pairing = (lx @ lz.T) % 2
    if not np.array_equal(pairing, np.eye(code.k, dtype=np.int64)):
        report.violations.append(("logical_pairing", "logical X_i must anticommute only with Z_i"))
    expected_k = n - gf2_rank(code.x_checks) - gf2_rank(code.z_checks)
    if expected_k != code.k:
        report.violations.append(("rank", f"k={code.k} but rank condition gives {expected_k}"))

    if report.valid and check_distance and n <= BRUTE_FORCE_MAX_QUBITS:
        distance = code_distance(code)
        report.distance = distance
        if distance != code.d:
            report.violations.append(("distance", f"declared d={code.d}, found {distance}"))
    if report.violations:
        logger.debug("Code %s failed validation: %s", code.label, report.violations[0])
    return report


# ---------------------------------------------------------------------------
# Transversal measurement specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementSpec:
    """Detectors and logical readable after measuring every qubit in ``basis``.

    ``detector_offsets`` and ``logical_offset`` give the parity of the
    single-qubit outcomes in the noiseless code state; they are nonzero only for
    Y readout, where the product of physical ``Y`` picks up a sign.
    """

    basis: str
    detector_checks: tuple[int, ...]
    detector_supports: tuple[tuple[int, ...], ...]
    detector_offsets: tuple[int, ...]
    logical: tuple[int, ...]
    logical_offset: int = 0


def measurement_spec(code: CssCode, basis: str) -> MeasurementSpec:
    if basis not in ("X", "Y", "Z"):
        raise CodeError(f"Unknown measurement basis {basis!r}")
    if basis == "Z":
        supports = code.z_supports()
        return MeasurementSpec(
            "Z", tuple(range(len(supports))), tuple(supports), (0,) * len(supports),
            code.logical_z_support(),
        )
    if basis == "X":
        supports = code.x_supports()
        return MeasurementSpec(
            "X", tuple(range(len(supports))), tuple(supports), (0,) * len(supports),
            code.logical_x_support(),
        )
    if not code.is_self_dual():
        raise CodeError("Transversal Y readout needs matching X and Z checks")
    if code.logical_x_support() != code.logical_z_support():
        raise CodeError("Transversal Y readout needs matching logical supports")
    supports = code.z_supports()
    # prod_q Y_q = i**w * (prod X)(prod Z); the paired check product reads (-1)**(w/2).
    offsets = tuple((len(s) // 2) % 2 for s in supports)
    logical = code.logical_z_support()
    # prod_q Y_q over the logical support = i**(|L|-1) * logical Y.
    logical_offset = ((len(logical) - 1) // 2) % 2
    return MeasurementSpec(
        "Y", tuple(range(len(supports))), tuple(supports), offsets, logical, logical_offset
    )
