"""The cyclic ``[[5,1,3]]`` perfect code used as the distillation code."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cache

from src.pauli.pauli import PauliString, commutes

__all__ = ["StabilizerCode", "perfect_code_513"]


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    generators: tuple[PauliString, ...]
    logical_x: PauliString
    logical_z: PauliString
    label: str = ""

    def generators_commute(self) -> bool:
        return all(commutes(a, b) for a, b in itertools.combinations(self.generators, 2))

    def is_logical(self, pauli: PauliString) -> bool:
        """True for Paulis that commute with the stabilizer but act nontrivially on the code."""

        if not all(commutes(pauli, g) for g in self.generators):
            return False
        return not (commutes(pauli, self.logical_x) and commutes(pauli, self.logical_z))

    def distance(self) -> int:
        """Minimum weight of a nontrivial logical operator, enumerating all ``4**n`` Paulis."""

        letters = "IXYZ"
        best = self.n
        for word in itertools.product(letters, repeat=self.n):
            weight = sum(letter != "I" for letter in word)
            if weight == 0 or weight >= best:
                continue
            if self.is_logical(PauliString.from_label("".join(word))):
                best = weight
        return best


@cache
def perfect_code_513() -> StabilizerCode:
    shifts = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
    return StabilizerCode(
        n=5,
        generators=tuple(PauliString.from_label(label) for label in shifts),
        logical_x=PauliString.from_label("XXXXX"),
        logical_z=PauliString.from_label("ZZZZZ"),
        label="perfect-513",
    )
