"""Multi-indices, graded-lex monomial bases and sparse polynomials.

Monomials of equal degree are ordered lexicographically with ``x1``
taking precedence over ``x2`` and so on, so for ``n = 2, d = 2`` the
basis reads ``1, x1, x2, x1^2, x1 x2, x2^2``.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch

ZERO_TOL = 1e-14


class MultiIndex(tuple):
    """Exponent vector ``alpha``; ``+`` is componentwise, not concatenation."""

    __slots__ = ()

    def __new__(cls, exponents: Iterable[int]):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        return super().__new__(cls, exps)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def degree(self) -> int:
        return sum(self)

    def __add__(self, other):
        return multi_index_add(self, other)

    def __radd__(self, other):
        return multi_index_add(other, self)

    def __repr__(self):
        return f"MultiIndex{tuple(self)}"


def multi_index_add(a: Iterable[int], b: Iterable[int]) -> MultiIndex:
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b):
        raise DimensionMismatch(f"cannot add multi-indices of length {len(a)} and {len(b)}")
    return MultiIndex(x + y for x, y in zip(a, b))


def _degree_block(n: int, k: int) -> list[MultiIndex]:
    # lexicographically decreasing compositions of k into n parts
    if n == 1:
        return [MultiIndex((k,))]
    out = []
    for first in range(k, -1, -1):
        for rest in _degree_block(n - 1, k - first):
            out.append(MultiIndex((first,) + tuple(rest)))
    return out


class MonomialBasis:
    """Graded-lex enumeration of all ``alpha`` with ``|alpha| <= d``."""

    def __init__(self, n: int, d: int):
        if n < 1 or d < 0:
            raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
        self.n = n
        self.d = d
        ordering: list[MultiIndex] = []
        for k in range(d + 1):
            ordering.extend(_degree_block(n, k))
        self.ordering = ordering
        self._index = {alpha: i for i, alpha in enumerate(ordering)}
        self.exponents = np.array(ordering, dtype=np.int64).reshape(len(ordering), n)
        self.degrees = self.exponents.sum(axis=1)

    def __len__(self):
        return len(self.ordering)

    def __iter__(self):
        return iter(self.ordering)

    def __getitem__(self, k):
        return self.ordering[k]

    def __contains__(self, alpha):
        return tuple(alpha) in self._index

    def __repr__(self):
        return f"MonomialBasis(n={self.n}, d={self.d})"

    def index_of(self, alpha: Iterable[int]) -> int:
        alpha = tuple(alpha)
        try:
            return self._index[alpha]
        except KeyError:
            if len(alpha) != self.n:
                raise DimensionMismatch(f"multi-index {alpha} is not {self.n}-dimensional") from None
            raise KeyError(f"{alpha} has degree above {self.d}") from None

    def size_up_to(self, k: int) -> int:
        """Length of the prefix holding all monomials of degree <= k."""
        return comb(self.n + k, self.n) if k >= 0 else 0

    def sum_table(self, k: int) -> np.ndarray:
        """``T[a, b] = index_of(ordering[a] + ordering[b])`` for rows/cols of degree <= k.

        Requires ``2k <= d``.
        """
        return _sum_table(self.n, self.d, k)


@lru_cache(maxsize=None)
def enumerate_basis(n: int, d: int) -> MonomialBasis:
    return MonomialBasis(n, d)


@lru_cache(maxsize=None)
def _sum_table(n: int, d: int, k: int) -> np.ndarray:
    if 2 * k > d:
        raise ValueError(f"sum table of order {k} needs basis degree >= {2 * k}, have {d}")
    basis = enumerate_basis(n, d)
    size = basis.size_up_to(k)
    exps = basis.exponents[:size]
    table = np.empty((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(a, size):
            idx = basis.index_of(exps[a] + exps[b])
            table[a, b] = idx
            table[b, a] = idx
    table.setflags(write=False)
    return table


def eval_monomial_vector(basis: MonomialBasis, x) -> np.ndarray:
    """``v_d(x)``; accepts a single point or an ``(m, n)`` array of points."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim <= 1
    pts = np.atleast_2d(pts.reshape(1, -1) if single else pts)
    if pts.shape[1] != basis.n:
        raise DimensionMismatch(f"point of dimension {pts.shape[1]} for a basis in {basis.n} variables")
    # powers[m, i, k] = x_i^k
    powers = pts[:, :, None] ** np.arange(basis.d + 1)[None, None, :]
    out = np.ones((pts.shape[0], len(basis)))
    for i in range(basis.n):
        out *= powers[:, i, basis.exponents[:, i]]
    return out[0] if single else out


class Polynomial:
    """Sparse real polynomial in ``n`` variables.

    Coefficients with magnitude below ``1e-14`` are dropped on construction.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping | Iterable = ()):
        self.n = int(n)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[MultiIndex, float] = {}
        for alpha, c in items:
            alpha = MultiIndex(alpha)
            if len(alpha) != self.n:
                raise DimensionMismatch(f"term {tuple(alpha)} in a polynomial of {self.n} variables")
            acc[alpha] = acc.get(alpha, 0.0) + float(c)
        self.terms = {a: c for a, c in acc.items() if abs(c) >= ZERO_TOL}

    @classmethod
    def constant(cls, n: int, c: float) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, alpha, c: float = 1.0) -> "Polynomial":
        alpha = tuple(alpha)
        return cls(len(alpha), {alpha: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        return cls.monomial(tuple(int(k == i) for k in range(n)))

    @classmethod
    def from_vector(cls, basis: MonomialBasis, coeffs) -> "Polynomial":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(basis.n, zip(basis.ordering[: len(coeffs)], coeffs))

    @property
    def degree(self) -> int:
        return max((a.degree for a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, alpha) -> float:
        return self.terms.get(tuple(alpha), 0.0)

    def to_vector(self, basis: MonomialBasis) -> np.ndarray:
        if basis.n != self.n:
            raise DimensionMismatch("basis and polynomial dimensions differ")
        v = np.zeros(len(basis))
        for alpha, c in self.terms.items():
            v[basis.index_of(alpha)] = c
        return v

    def __call__(self, x):
        return poly_eval(self, x)

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise DimensionMismatch("polynomials in different numbers of variables")
            return other
        return Polynomial.constant(self.n, float(other))

    def __add__(self, other):
        other = self._coerce(other)
        return Polynomial(self.n, itertools.chain(self.terms.items(), other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.n, {a: c * float(other) for a, c in self.terms.items()})
        other = self._coerce(other)
        prods = ((a + b, ca * cb) for a, ca in self.terms.items() for b, cb in other.terms.items())
        return Polynomial(self.n, prods)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.constant(self.n, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def allclose(self, other: "Polynomial", tol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= tol for c in diff.terms.values())

    def __repr__(self):
        if not self.terms:
            return f"Polynomial({self.n}, 0)"
        parts = []
        for alpha, c in sorted(self.terms.items(), key=lambda t: (t[0].degree, [-e for e in t[0]])):
            mono = "*".join(f"x{i + 1}^{e}" if e > 1 else f"x{i + 1}" for i, e in enumerate(alpha) if e)
            parts.append(f"{c:+g}" + (f"*{mono}" if mono else ""))
        return f"Polynomial({self.n}, {' '.join(parts)})"

    def to_terms(self) -> list[dict]:
        """JSON-friendly ``[{exponents, coefficient}]`` list in graded-lex order."""
        items = sorted(self.terms.items(), key=lambda t: (t[0].degree, [-e for e in t[0]]))
        return [{"exponents": list(a), "coefficient": c} for a, c in items]

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[Mapping]) -> "Polynomial":
        return cls(n, ((t["exponents"], t["coefficient"]) for t in terms))


def poly_eval(p: Polynomial, x):
    """Evaluate at a point (returns float) or at an ``(m, n)`` array of points."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim <= 1
    pts2 = np.atleast_2d(pts.reshape(1, -1) if single else pts)
    if pts2.shape[1] != p.n:
        raise DimensionMismatch(f"point of dimension {pts2.shape[1]} for a polynomial in {p.n} variables")
    total = np.zeros(pts2.shape[0])
    for alpha, c in p.terms.items():
        total += c * np.prod(pts2 ** np.asarray(alpha), axis=1)
    return float(total[0]) if single else total
