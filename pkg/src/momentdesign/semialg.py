"""Design spaces ``X = {x : g_j(x) >= 0}`` and the built-in example sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, sqrt

import numpy as np

from .algebra import MultiIndex, Polynomial, poly_eval
from .errors import DimensionMismatch, MissingBallCertificate


@dataclass(frozen=True)
class Constraint:
    """One inequality ``g(x) >= 0`` with its degree and half-degree."""

    g: Polynomial

    @property
    def degree(self) -> int:
        return self.g.degree

    @property
    def half_degree(self) -> int:
        return ceil(self.g.degree / 2)


def ball_radius(g: Polynomial) -> float | None:
    """Return ``R`` if ``g`` is a positive multiple of ``R^2 - |x|^2``, else None."""
    n = g.n
    if g.degree != 2:
        return None
    zero = MultiIndex((0,) * n)
    lead = None
    for i in range(n):
        sq = MultiIndex(tuple(2 if k == i else 0 for k in range(n)))
        c = g.coefficient(sq)
        if c >= 0:
            return None
        if lead is None:
            lead = c
        elif abs(c - lead) > 1e-12 * abs(lead):
            return None
    expected = {zero} | {MultiIndex(tuple(2 if k == i else 0 for k in range(n))) for i in range(n)}
    if set(g.terms) - expected:
        return None
    r2 = g.coefficient(zero) / -lead
    if r2 <= 0:
        return None
    return sqrt(r2)


def equality_to_inequalities(g: Polynomial) -> tuple[Constraint, Constraint]:
    """Encode ``g = 0`` as the pair ``g >= 0``, ``-g >= 0``."""
    return Constraint(g), Constraint(-g)


@dataclass(frozen=True)
class SemiAlgebraicSet:
    n: int
    constraints: tuple[Constraint, ...]
    name: str = ""
    sampling: str = "ball"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        cons = tuple(c if isinstance(c, Constraint) else Constraint(c) for c in self.constraints)
        for c in cons:
            if c.g.n != self.n:
                raise DimensionMismatch(f"constraint in {c.g.n} variables for a set in R^{self.n}")
        object.__setattr__(self, "constraints", cons)
        if self.sampling not in ("ball", "sphere"):
            raise ValueError(f"unknown sampling hook {self.sampling!r}")

    @classmethod
    def from_polynomials(cls, n, inequalities=(), equalities=(), **kw) -> "SemiAlgebraicSet":
        cons = [Constraint(g) for g in inequalities]
        for h in equalities:
            cons.extend(equality_to_inequalities(h))
        return cls(n, tuple(cons), **kw)

    @property
    def has_ball_certificate(self) -> bool:
        return self.radius is not None

    @property
    def radius(self) -> float | None:
        radii = [r for r in (ball_radius(c.g) for c in self.constraints) if r is not None]
        return min(radii) if radii else None

    @property
    def max_half_degree(self) -> int:
        return max((c.half_degree for c in self.constraints), default=0)

    def equality_pairs(self) -> list[tuple[int, int]]:
        """Index pairs ``(i, j)`` with ``g_j = -g_i``: equality constraints."""
        pairs = []
        used = set()
        for i, ci in enumerate(self.constraints):
            if i in used:
                continue
            for j in range(i + 1, len(self.constraints)):
                if j not in used and (ci.g + self.constraints[j].g).is_zero():
                    pairs.append((i, j))
                    used.update((i, j))
                    break
        return pairs

    def equality_polynomials(self) -> list[Polynomial]:
        return [self.constraints[i].g for i, _ in self.equality_pairs()]

    def inequality_constraints(self) -> list[Constraint]:
        """Constraints not part of an equality pair."""
        paired = {k for pair in self.equality_pairs() for k in pair}
        return [c for k, c in enumerate(self.constraints) if k not in paired]

    def membership(self, x, tol: float = 1e-9):
        """True iff every ``g_j(x) >= -tol``; vectorised over rows of ``x``."""
        pts = np.asarray(x, dtype=float)
        single = pts.ndim <= 1
        pts2 = np.atleast_2d(pts.reshape(1, -1) if single else pts)
        if pts2.shape[1] != self.n:
            raise DimensionMismatch(f"point of dimension {pts2.shape[1]} for a set in R^{self.n}")
        ok = np.ones(pts2.shape[0], dtype=bool)
        for c in self.constraints:
            ok &= poly_eval(c.g, pts2) >= -tol
        return bool(ok[0]) if single else ok


@dataclass
class ValidationReport:
    valid: bool
    radius: float | None
    degrees: list[int]
    half_degrees: list[int]
    equality_pairs: list[tuple[int, int]]

    def __str__(self):
        lines = [f"valid: {self.valid}", f"ball radius: {self.radius}"]
        for j, (dj, vj) in enumerate(zip(self.degrees, self.half_degrees)):
            lines.append(f"  g_{j + 1}: degree {dj}, half-degree {vj}")
        return "\n".join(lines)


def validate(X: SemiAlgebraicSet) -> ValidationReport:
    report = ValidationReport(
        valid=X.has_ball_certificate,
        radius=X.radius,
        degrees=[c.degree for c in X.constraints],
        half_degrees=[c.half_degree for c in X.constraints],
        equality_pairs=X.equality_pairs(),
    )
    if not report.valid:
        raise MissingBallCertificate(
            "no constraint of the form R^2 - sum x_i^2 >= 0; add a redundant ball constraint"
        )
    return report


def membership(X: SemiAlgebraicSet, x, tol: float = 1e-9):
    return X.membership(x, tol)


# Built-in design spaces


def interval_set() -> SemiAlgebraicSet:
    x = Polynomial.variable(1, 0)
    return SemiAlgebraicSet.from_polynomials(1, [1 - x * x], name="interval")


def polygon_set(with_ball: bool = True) -> SemiAlgebraicSet:
    """Wynn's polygon with vertices (-1,-1), (-1,1), (1,-1), (2,2) scaled into the unit disk."""
    x1 = Polynomial.variable(2, 0)
    x2 = Polynomial.variable(2, 1)
    s = sqrt(2.0)
    ineqs = [
        x1 + s / 4,
        x2 + s / 4,
        (x2 + s) * (1 / 3) - x1,
        (x1 + s) * (1 / 3) - x2,
    ]
    if with_ball:
        ineqs.append(1 - x1 * x1 - x2 * x2)
    return SemiAlgebraicSet.from_polynomials(2, ineqs, name="polygon")


def polygon_vertices() -> np.ndarray:
    """Vertices of the scaled polygon, from intersecting adjacent active lines."""
    s = sqrt(2.0)
    a = -s / 4
    # x1 = a with x2 = (x1 + s)/3 ; symmetric counterpart ; both lower lines ; both upper lines
    return np.array([
        [a, a],
        [a, (a + s) / 3],
        [(a + s) / 3, a],
        [s / 2, s / 2],
    ])


def sphere_set() -> SemiAlgebraicSet:
    xs = [Polynomial.variable(3, i) for i in range(3)]
    g = 1 - sum((x * x for x in xs), Polynomial.constant(3, 0.0))
    return SemiAlgebraicSet.from_polynomials(3, equalities=[g], name="sphere", sampling="sphere")


BUILTIN_SETS = {
    "interval": interval_set,
    "polygon": polygon_set,
    "sphere": sphere_set,
}
