"""Exact integer linear algebra and fixed-point decimal accumulation.

Rationals are :class:`fractions.Fraction` values throughout the public API.
Hot loops elsewhere use ``gmpy2`` integers, which convert losslessly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction
IntVector = tuple[int, ...]
IntMatrix = Sequence[Sequence[int]]

__all__ = [
    "Rational",
    "SingularMatrix",
    "DualBasis",
    "FixedPointAccumulator",
    "accumulate_truncated",
    "adjugate",
    "decimal_expansion",
    "det_fraction_free",
    "dual_basis_rows",
    "format_rational",
    "gcd_reduce",
    "integer_rank",
    "lattice_kernel_basis",
    "solve_fraction_free",
    "truncate_scaled",
]


class SingularMatrix(ValueError):
    """Raised when a matrix that must be invertible has determinant zero."""


def gcd_reduce(v: Iterable[int]) -> IntVector:
    """Divide an integer vector by the gcd of its entries (zero stays zero)."""
    t = tuple(int(x) for x in v)
    g = math.gcd(*t) if t else 0
    if g <= 1:
        return t
    return tuple(x // g for x in t)


def det_fraction_free(m: IntMatrix) -> int:
    """Determinant by Bareiss elimination; every division is exact."""
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("determinant requires a square matrix")
    if n == 0:
        return 1
    a = [list(map(int, row)) for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        row_k = a[k]
        for i in range(k + 1, n):
            row_i = a[i]
            aik = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def _gauss_jordan(aug: list[list[int]], n: int) -> tuple[int, int]:
    """Fraction-free Gauss-Jordan on the first ``n`` columns, in place.

    Returns ``(d, sign)`` where every pivot ends equal to ``d`` and
    ``det`` of the left block is ``sign * d``.  ``d == 0`` means singular.
    """
    prev = 1
    sign = 1
    for k in range(n):
        p = next((i for i in range(k, n) if aug[i][k] != 0), None)
        if p is None:
            return 0, sign
        if p != k:
            aug[k], aug[p] = aug[p], aug[k]
            sign = -sign
        row_k = aug[k]
        akk = row_k[k]
        for i in range(n):
            if i == k:
                continue
            row_i = aug[i]
            aik = row_i[k]
            if aik == 0 and prev == akk:
                continue
            aug[i] = [(akk * x - aik * y) // prev for x, y in zip(row_i, row_k)]
        prev = akk
    return prev, sign


def adjugate(m: IntMatrix) -> tuple[int, list[list[int]]]:
    """Return ``(det(m), adj(m))`` with ``adj(m) @ m == det(m) * I``.

    Raises :class:`SingularMatrix` when the determinant vanishes.
    """
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("adjugate requires a square matrix")
    if n == 0:
        return 1, []
    aug = [list(map(int, row)) + [int(i == j) for j in range(n)] for i, row in enumerate(m)]
    d, sign = _gauss_jordan(aug, n)
    if d == 0:
        raise SingularMatrix("matrix is singular")
    adj = [[sign * x for x in row[n:]] for row in aug]
    return sign * d, adj


def solve_fraction_free(a: IntMatrix, b: Sequence[int]) -> tuple[int, list[int]]:
    """Solve ``a x = b`` exactly, returning ``(det(a), det(a) * x)``."""
    n = len(a)
    aug = [list(map(int, row)) + [int(b[i])] for i, row in enumerate(a)]
    d, sign = _gauss_jordan(aug, n)
    if d == 0:
        raise SingularMatrix("matrix is singular")
    # left block is d*I and right column is d*x; rescale to det(a)
    return sign * d, [sign * row[n] for row in aug]


@dataclass(frozen=True)
class DualBasis:
    """Integer forms dual to the rows of a square matrix.

    ``forms[i]`` vanishes on every row ``j != i`` and ``pairings[i]`` is its
    (positive) value on row ``i``.  ``det`` is the determinant of the input.
    """

    forms: tuple[IntVector, ...]
    pairings: tuple[int, ...]
    det: int


def dual_basis_rows(m: IntMatrix) -> DualBasis:
    """Columns of the adjugate, gcd-reduced and oriented positively against their row."""
    det, adj = adjugate(m)
    n = len(m)
    forms = []
    pairings = []
    for i in range(n):
        col = gcd_reduce(adj[r][i] for r in range(n))
        value = sum(x * y for x, y in zip(m[i], col))
        if value < 0:
            col = tuple(-x for x in col)
            value = -value
        forms.append(col)
        pairings.append(value)
    return DualBasis(tuple(forms), tuple(pairings), det)


def integer_rank(vectors: Iterable[Sequence[int]]) -> int:
    """Rank of a family of integer vectors (fraction-free row reduction)."""
    basis: list[tuple[int, list[int]]] = []  # (pivot column, reduced row)
    for v in vectors:
        row = [int(x) for x in v]
        for pc, b in basis:
            if row[pc]:
                f, g = b[pc], row[pc]
                row = [f * x - g * y for x, y in zip(row, b)]
        pivot = next((k for k, x in enumerate(row) if x), None)
        if pivot is not None:
            row = list(gcd_reduce(row))
            basis.append((pivot, row))
    return len(basis)


def lattice_kernel_basis(rows: IntMatrix, dim: int) -> list[IntVector]:
    """A basis of the integer lattice ``{x in Z^dim : rows @ x = 0}``.

    Column operations reduce ``rows`` to echelon form while the same
    unimodular operations are recorded in ``u``; columns of ``u`` past the
    rank span the saturated kernel.
    """
    a = [list(map(int, r)) for r in rows]
    if any(len(r) != dim for r in a):
        raise ValueError("equation rows must have length dim")
    u = [[int(i == j) for j in range(dim)] for i in range(dim)]

    def col_op(dst: int, src: int, q: int) -> None:
        # column dst -= q * column src
        for mat in (a, u):
            for r in mat:
                r[dst] -= q * r[src]

    def col_swap(i: int, j: int) -> None:
        for mat in (a, u):
            for r in mat:
                r[i], r[j] = r[j], r[i]

    rank = 0
    for row in a:
        if rank == dim:
            break
        while True:
            nz = [k for k in range(rank, dim) if row[k] != 0]
            if not nz:
                break
            k = min(nz, key=lambda c: abs(row[c]))
            if k != rank:
                col_swap(k, rank)
            if len(nz) == 1:
                rank += 1
                break
            for c in range(rank + 1, dim):
                if row[c]:
                    col_op(c, rank, row[c] // row[rank])
    return [tuple(u[i][j] for i in range(dim)) for j in range(rank, dim)]


def truncate_scaled(x: Fraction, scale: int) -> int:
    """``trunc(x * 10**scale)`` rounded toward zero."""
    num = x.numerator * 10**scale
    q = abs(num) // x.denominator
    return q if num >= 0 else -q


@dataclass(frozen=True)
class FixedPointAccumulator:
    """Sum of terms, each truncated toward zero at ``scale`` decimal digits.

    ``value * 10**-scale`` differs from the exact sum by at most
    ``terms * 10**-scale``.
    """

    scale: int = 100
    value: int = 0
    terms: int = 0

    def add(self, x: Fraction, sign: int = 1) -> FixedPointAccumulator:
        t = truncate_scaled(Fraction(x), self.scale)
        return FixedPointAccumulator(self.scale, self.value + (t if sign >= 0 else -t), self.terms + 1)

    def merge(self, other: FixedPointAccumulator) -> FixedPointAccumulator:
        if other.scale != self.scale:
            raise ValueError(f"cannot merge accumulators of scale {self.scale} and {other.scale}")
        return FixedPointAccumulator(self.scale, self.value + other.value, self.terms + other.terms)

    @property
    def error_bound(self) -> Fraction:
        return Fraction(self.terms, 10**self.scale)

    def as_fraction(self) -> Fraction:
        return Fraction(self.value, 10**self.scale)

    def decimal(self) -> str:
        return decimal_expansion(self.as_fraction(), self.scale)


def accumulate_truncated(acc: FixedPointAccumulator, x: Fraction, sign: int) -> FixedPointAccumulator:
    """Add ``sign * trunc_p(x)`` to ``acc``; the free-function form of ``acc.add``."""
    return acc.add(x, sign)


def decimal_expansion(x: Fraction, digits: int, rounded: bool = False) -> str:
    """Decimal expansion of ``x`` with ``digits`` places.

    Truncated toward zero by default; ``rounded`` rounds half away from zero.
    """
    x = Fraction(x)
    if rounded:
        scaled = (abs(x.numerator) * 10**digits * 2 + x.denominator) // (2 * x.denominator)
    else:
        scaled = abs(truncate_scaled(x, digits))
    int_part, frac_part = divmod(scaled, 10**digits)
    sign = "-" if x < 0 and scaled else ""
    if digits == 0:
        return f"{sign}{int_part}"
    return f"{sign}{int_part}.{frac_part:0{digits}d}"


def format_rational(x: Fraction) -> str:
    """``num/den`` text, or just ``num`` for integers."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
