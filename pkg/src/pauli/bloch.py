"""Single-qubit Bloch vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.exceptions import BlochNormError

__all__ = ["BlochVector"]

_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = self.norm
        if norm > 1 + _NORM_TOLERANCE:
            raise BlochNormError(norm)

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    @classmethod
    def magic(cls) -> BlochVector:
        c = 1 / math.sqrt(3)
        return cls(c, c, c)

    @classmethod
    def from_array(cls, values: np.ndarray | tuple[float, float, float]) -> BlochVector:
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def component(self, basis: str) -> float:
        return {"X": self.x, "Y": self.y, "Z": self.z}[basis]

    def rotated_z(self, theta: float) -> BlochVector:
        """Bloch vector after ``RZ(theta)``."""

        c, s = math.cos(theta), math.sin(theta)
        return BlochVector(c * self.x - s * self.y, s * self.x + c * self.y, self.z)

    def scaled(self, factors: tuple[float, float, float]) -> BlochVector:
        return BlochVector(self.x * factors[0], self.y * factors[1], self.z * factors[2])
