from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Design:
    """Approximate design: atoms ``x_i`` (rows) carrying weights ``w_i``."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.atoms.shape[0] != self.weights.shape[0]:
            raise ValueError(f"{self.atoms.shape[0]} atoms but {self.weights.shape[0]} weights")

    @classmethod
    def uniform(cls, atoms) -> "Design":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        return cls(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))

    @property
    def n(self) -> int:
        return self.atoms.shape[1]

    def __len__(self):
        return self.atoms.shape[0]

    def on_simplex(self, tol: float = 1e-8) -> bool:
        return bool(np.all(self.weights >= -1e-9) and abs(self.weights.sum() - 1.0) <= tol)

    def sorted(self) -> "Design":
        order = np.lexsort(self.atoms.T[::-1])
        return Design(self.atoms[order], self.weights[order])

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Design":
        return cls(np.array(data["atoms"], dtype=float), np.array(data["weights"], dtype=float))
