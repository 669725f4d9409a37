"""Cones over polytopes, their dual generators and the text input format.

A :class:`ConeSystem` describes ``C = {x : λ_j(x) >= 0}`` together with a
grading ``γ``; the polytope is ``P = C ∩ {γ = 1}``.  Volumes are
lattice-normalized: the unit simplex has volume 1.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .exact import (
    IntVector,
    det_fraction_free,
    SingularMatrix,
    gcd_reduce,
    lattice_kernel_basis,
    solve_fraction_free,
)

__all__ = [
    "ConeError",
    "ZeroGrading",
    "DimensionMismatch",
    "EmptyPolytope",
    "GradingVanishes",
    "GradingNotPrimitive",
    "InputFormatError",
    "ConeSystem",
    "DualGenerators",
    "FullDimensionality",
    "ReducedSystem",
    "ConeInput",
    "EuclideanVolume",
    "build_cone",
    "check_full_dimensional",
    "eliminate_equations",
    "euclidean_volume",
    "format_input",
    "parse_input",
    "polytope_vertices",
    "vertex_denominator_lcm",
]


class ConeError(ValueError):
    """Base class for invalid cone descriptions."""


class ZeroGrading(ConeError):
    pass


class DimensionMismatch(ConeError):
    pass


class EmptyPolytope(ConeError):
    pass


class GradingVanishes(ConeError):
    pass


class GradingNotPrimitive(ConeError):
    """The grading must have coprime entries so the slice lattice is well defined."""


class InputFormatError(ConeError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class DualGenerators:
    """Generators of the dual cone, sign forms first, then inequality rows.

    ``provenance[i]`` is ``("sign", k)`` for the form ``x_k`` or
    ``("row", j)`` for inequality ``j`` of the cone.
    """

    vectors: tuple[IntVector, ...]
    provenance: tuple[tuple[str, int], ...]

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class ConeSystem:
    dim: int
    inequalities: tuple[IntVector, ...]
    grading: IntVector
    nonnegative: bool = False

    def dual_generators(self) -> DualGenerators:
        vectors: list[IntVector] = []
        prov: list[tuple[str, int]] = []
        seen: set[IntVector] = set()
        if self.nonnegative:
            for k in range(self.dim):
                e = tuple(int(i == k) for i in range(self.dim))
                vectors.append(e)
                prov.append(("sign", k))
                seen.add(e)
        for j, row in enumerate(self.inequalities):
            if row not in seen:
                seen.add(row)
                vectors.append(row)
                prov.append(("row", j))
        return DualGenerators(tuple(vectors), tuple(prov))

    def constraint_rows(self) -> tuple[IntVector, ...]:
        """All inequality forms including the sign forms."""
        return self.dual_generators().vectors

    def contains(self, x: Sequence[Fraction | int]) -> bool:
        """Membership of ``x`` in the cone (the grading is not checked)."""
        if self.nonnegative and any(v < 0 for v in x):
            return False
        return all(sum(a * v for a, v in zip(row, x)) >= 0 for row in self.inequalities)

    def degree(self, x: Sequence[Fraction | int]) -> Fraction:
        return Fraction(sum(g * v for g, v in zip(self.grading, x)))


def _as_row(v: Iterable[int], dim: int, what: str) -> IntVector:
    row = tuple(int(x) for x in v)
    if len(row) != dim:
        raise DimensionMismatch(f"{what} has length {len(row)}, expected {dim}")
    return row


def build_cone(
    dim: int,
    inequalities: Iterable[Iterable[int]],
    grading: Iterable[int],
    nonnegative: bool = False,
) -> ConeSystem:
    """Normalize rows (gcd-reduced, zero and duplicate rows dropped) into a cone."""
    if dim < 2:
        raise DimensionMismatch("ambient dimension must be at least 2")
    g = _as_row(grading, dim, "grading")
    if not any(g):
        raise ZeroGrading("grading is identically zero")
    if math.gcd(*g) != 1:
        raise GradingNotPrimitive(f"grading entries have common factor {math.gcd(*g)}")
    rows: list[IntVector] = []
    seen: set[IntVector] = set()
    for r in inequalities:
        row = gcd_reduce(_as_row(r, dim, "inequality row"))
        if any(row) and row not in seen:
            seen.add(row)
            rows.append(row)
    return ConeSystem(dim, tuple(rows), g, bool(nonnegative))


def _dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def polytope_vertices(c: ConeSystem, max_subsets: int | None = None) -> list[tuple[Fraction, ...]]:
    """All vertices of ``P`` by solving every ``(D-1)``-subset of constraints with ``γ = 1``.

    Meaningful only when ``P`` is bounded.  Returns vertices in discovery order.
    """
    rows = c.constraint_rows()
    d = c.dim
    if max_subsets is not None and math.comb(len(rows), d - 1) > max_subsets:
        raise ValueError(f"{math.comb(len(rows), d - 1)} constraint subsets exceed the budget {max_subsets}")
    found: dict[tuple[Fraction, ...], None] = {}
    rhs = [1] + [0] * (d - 1)
    for subset in itertools.combinations(rows, d - 1):
        try:
            det, sx = solve_fraction_free([c.grading, *subset], rhs)
        except SingularMatrix:
            continue
        x = tuple(Fraction(v, det) for v in sx)
        if x in found:
            continue
        if all(_dot(r, sx) * det >= 0 for r in rows):
            found[x] = None
    return list(found)


@dataclass(frozen=True)
class FullDimensionality:
    """Outcome of :func:`check_full_dimensional`.

    ``witness`` satisfies ``γ(x) = 1`` and every non-forced inequality
    strictly.  ``certified`` is False only when the forced set came from a
    floating-point LP rather than exact reasoning.
    """

    full: bool
    witness: tuple[Fraction, ...] | None
    forced: tuple[IntVector, ...] = ()
    certified: bool = True


def _strict_witness(c: ConeSystem, x: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    g = c.degree(x)
    if g <= 0:
        return None
    if all(_dot(r, x) > 0 for r in c.constraint_rows()):
        return tuple(Fraction(v) / g for v in x)
    return None


def _perturbed_guess(c: ConeSystem, start: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    """Push ``start`` off the hyperplanes it lies on, along the sum of their normals."""
    rows = c.constraint_rows()
    values = [_dot(r, start) for r in rows]
    if any(v < 0 for v in values) or c.degree(start) <= 0:
        return None
    tight = [r for r, v in zip(rows, values) if v == 0]
    if not tight:
        return _strict_witness(c, start)
    push = [sum(col) for col in zip(*tight)]
    eps = Fraction(1)
    for _ in range(64):
        x = [Fraction(s) + eps * p for s, p in zip(start, push)]
        w = _strict_witness(c, x)
        if w is not None:
            return w
        eps /= 2
    return None


def _lp_witness(c: ConeSystem) -> FullDimensionality:
    import numpy as np
    from scipy.optimize import linprog

    rows = c.constraint_rows()
    d = c.dim
    a = np.array(rows, dtype=float)
    a_ub = np.hstack([-a, np.ones((len(rows), 1))])
    res = linprog(
        c=np.r_[np.zeros(d), -1.0],
        A_ub=a_ub,
        b_ub=np.zeros(len(rows)),
        A_eq=np.r_[np.array(c.grading, dtype=float), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(None, None)] * d + [(None, 1.0)],
        method="highs",
    )
    if res.status == 2:
        raise EmptyPolytope("no point satisfies all inequalities with grading 1")
    if res.status != 0:
        raise ConeError(f"interior-point search failed: {res.message}")
    if -res.fun > 1e-9:
        for limit in (10**6, 10**12, 10**18):
            x = [Fraction(v).limit_denominator(limit) for v in res.x[:d]]
            w = _strict_witness(c, x)
            if w is not None:
                return FullDimensionality(True, w)
    if -res.fun < -1e-9:
        raise EmptyPolytope("no point satisfies all inequalities with grading 1")
    forced = []
    for r in rows:
        sub = linprog(
            c=-np.array(r, dtype=float),
            A_ub=-a,
            b_ub=np.zeros(len(rows)),
            A_eq=np.array(c.grading, dtype=float)[None, :],
            b_eq=[1.0],
            bounds=[(None, None)] * d,
            method="highs",
        )
        if sub.status == 0 and -sub.fun <= 1e-9:
            forced.append(r)
    return FullDimensionality(False, None, tuple(forced), certified=False)


def check_full_dimensional(
    c: ConeSystem,
    hint: Sequence[Fraction | int] | None = None,
    exact_subset_limit: int = 20000,
) -> FullDimensionality:
    """Decide whether ``P`` has dimension ``D - 1`` and produce an interior point.

    First a natural interior point (``hint``, the all-ones vector, ``γ``) is
    pushed off the hyperplanes it touches and verified exactly.  Failing
    that, small systems are settled exactly from the vertex set and large
    ones by a linear program whose witness is verified exactly.
    """
    starts: list[Sequence[Fraction | int]] = []
    if hint is not None:
        starts.append(hint)
    starts.append([1] * c.dim)
    starts.append(c.grading)
    for s in starts:
        w = _perturbed_guess(c, [Fraction(v) for v in s])
        if w is not None:
            return FullDimensionality(True, w)
    rows = c.constraint_rows()
    if math.comb(len(rows), c.dim - 1) <= exact_subset_limit:
        verts = polytope_vertices(c)
        if not verts:
            raise EmptyPolytope("no point satisfies all inequalities with grading 1")
        bary = tuple(sum(col, Fraction(0)) / len(verts) for col in zip(*verts))
        forced = tuple(r for r in rows if all(_dot(r, v) == 0 for v in verts))
        return FullDimensionality(not forced, bary, forced)
    return _lp_witness(c)


@dataclass(frozen=True)
class ReducedSystem:
    """A full-dimensional cone in lattice coordinates of an equation kernel.

    The original point is ``x = Σ y_i * basis[i]``; ``basis`` spans the
    saturated kernel lattice, so lattice-normalized volumes agree.  When the
    pulled-back grading has a common factor ``g``, the reduced cone uses
    ``γ / g``, whose polytope is ``g`` times the original one;
    ``volume_factor`` converts its volume back.
    """

    cone: ConeSystem
    basis: tuple[IntVector, ...]
    grading_divisor: int = 1

    @property
    def volume_factor(self) -> Fraction:
        return Fraction(1, self.grading_divisor ** (self.cone.dim - 1))

    def lift(self, y: Sequence[Fraction | int]) -> tuple[Fraction, ...]:
        dim = len(self.basis[0]) if self.basis else 0
        return tuple(sum((Fraction(yi) * b[k] for yi, b in zip(y, self.basis)), Fraction(0)) for k in range(dim))


def eliminate_equations(
    dim: int,
    inequalities: Iterable[Iterable[int]],
    equations: Iterable[Iterable[int]],
    grading: Iterable[int],
    nonnegative: bool = False,
) -> ReducedSystem:
    """Restrict to the integer solution lattice of homogeneous equations."""
    ineq = [_as_row(r, dim, "inequality row") for r in inequalities]
    eqs = [_as_row(r, dim, "equation row") for r in equations]
    g = _as_row(grading, dim, "grading")
    if not any(e for row in eqs for e in row):
        basis = tuple(tuple(int(i == k) for i in range(dim)) for k in range(dim))
        return ReducedSystem(build_cone(dim, ineq, g, nonnegative), basis)
    basis = tuple(lattice_kernel_basis(eqs, dim))
    if not basis:
        raise EmptyPolytope("equations admit only the zero solution")

    def pull(row: Sequence[int]) -> IntVector:
        return tuple(_dot(row, b) for b in basis)

    new_g = pull(g)
    if not any(new_g):
        raise GradingVanishes("grading is identically zero on the solution lattice")
    divisor = math.gcd(*new_g)
    rows = [pull(r) for r in ineq]
    if nonnegative:
        rows.extend(tuple(b[k] for b in basis) for k in range(dim))
    cone = build_cone(len(basis), rows, tuple(v // divisor for v in new_g), False)
    return ReducedSystem(cone, basis, divisor)


@dataclass(frozen=True)
class EuclideanVolume:
    """Euclidean ``(D-1)``-volume of ``P`` as ``rational * sqrt(radicand)``."""

    rational: Fraction
    radicand: int

    def __float__(self) -> float:
        return float(self.rational) * math.sqrt(self.radicand)


def euclidean_volume(c: ConeSystem, lattice_volume: Fraction) -> EuclideanVolume:
    """Convert a lattice-normalized volume of ``P`` to Euclidean volume.

    For a primitive grading the slice lattice has covolume ``|γ|``, so the
    Euclidean volume is ``vol * |γ| / (D-1)!``.
    """
    norm2 = sum(x * x for x in c.grading)
    return EuclideanVolume(Fraction(lattice_volume) / math.factorial(c.dim - 1), norm2)


def vertex_denominator_lcm(c: ConeSystem, budget: int = 200_000) -> int | None:
    """An integer ``q`` such that ``q * v`` is integral for every vertex ``v`` of ``P``.

    Each vertex solves ``γ(x) = 1`` plus ``D - 1`` tight constraints.
    Tight sign forms eliminate coordinates, so the vertex is determined by
    a square minor of ``[γ; dense rows]`` on the remaining columns, and its
    denominator divides that minor.  Returns ``None`` when the number of
    (column-deduplicated) minors exceeds ``budget``.
    """
    gens = c.constraint_rows()
    units: set[int] = set()
    dense: list[IntVector] = []
    for g in gens:
        nz = [k for k, v in enumerate(g) if v]
        if len(nz) == 1:
            units.add(nz[0])
        else:
            dense.append(g)
    free = [k for k in range(c.dim) if k not in units]
    table = [c.grading, *dense]
    classes = sorted({tuple(r[k] for r in table) for k in units})
    free_cols = [tuple(r[k] for r in table) for k in free]
    total = 0
    plans = []
    for s in range(0, min(len(dense), c.dim - 1) + 1):
        extra = s + 1 - len(free)
        if extra < 0 or extra > len(classes):
            continue
        total += math.comb(len(dense), s) * math.comb(len(classes), extra)
        plans.append((s, extra))
    if total > budget:
        return None
    q = 1
    for s, extra in plans:
        for rsel in itertools.combinations(range(1, len(table)), s):
            rws = (0, *rsel)
            for csel in itertools.combinations(classes, extra):
                cols = free_cols + list(csel)
                m = [[col[r] for col in cols] for r in rws]
                det = det_fraction_free(m)
                if det:
                    q = math.lcm(q, abs(det))
    return q


# ---------------------------------------------------------------------------
# text format


@dataclass(frozen=True)
class ConeInput:
    """Parsed contents of a cone input file, before equation elimination."""

    dim: int
    inequalities: tuple[IntVector, ...] = ()
    equations: tuple[IntVector, ...] = ()
    grading: IntVector = ()
    nonnegative: bool = False
    comments: tuple[str, ...] = field(default=(), compare=False)

    def reduced(self) -> ReducedSystem:
        return eliminate_equations(self.dim, self.inequalities, self.equations, self.grading, self.nonnegative)

    def cone(self) -> ConeSystem:
        return self.reduced().cone

    def metadata(self) -> dict[str, str]:
        """``key = value`` pairs found in comment lines."""
        out: dict[str, str] = {}
        for line in self.comments:
            m = re.match(r"\s*([A-Za-z_][\w-]*)\s*[=:]\s*(.*?)\s*$", line)
            if m:
                out[m.group(1)] = m.group(2)
        return out


def parse_input(text: str) -> ConeInput:
    tokens: list[tuple[str, int]] = []
    comments: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, hash_, comment = raw.partition("#")
        if hash_:
            comments.append(comment.strip())
        tokens.extend((tok, lineno) for tok in body.split())
    pos = 0

    def take(what: str) -> tuple[str, int]:
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1][1] if tokens else 1
            raise InputFormatError(f"unexpected end of input, expected {what}", last)
        tok = tokens[pos]
        pos += 1
        return tok

    def take_int(what: str) -> int:
        tok, line = take(what)
        try:
            return int(tok)
        except ValueError:
            raise InputFormatError(f"expected integer for {what}, got {tok!r}", line) from None

    def take_rows(count: int, dim: int, what: str) -> tuple[IntVector, ...]:
        return tuple(tuple(take_int(f"{what} entry") for _ in range(dim)) for _ in range(count))

    tok, line = take("amb_space")
    if tok != "amb_space":
        raise InputFormatError(f"input must start with amb_space, got {tok!r}", line)
    dim = take_int("ambient dimension")
    if dim < 1:
        raise InputFormatError("ambient dimension must be positive", line)
    ineq: tuple[IntVector, ...] = ()
    eqs: tuple[IntVector, ...] = ()
    grading: IntVector | None = None
    nonneg = False
    while pos < len(tokens):
        tok, line = take("keyword")
        if tok == "inequalities":
            ineq += take_rows(take_int("row count"), dim, "inequality")
        elif tok == "equations":
            eqs += take_rows(take_int("row count"), dim, "equation")
        elif tok == "nonnegative":
            nonneg = True
        elif tok == "total_degree":
            grading = (1,) * dim
        elif tok == "grading":
            grading = take_rows(1, dim, "grading")[0]
        else:
            raise InputFormatError(f"unknown keyword {tok!r}", line)
    if grading is None:
        raise InputFormatError("missing grading (use total_degree or grading)", tokens[-1][1])
    return ConeInput(dim, ineq, eqs, grading, nonneg, tuple(comments))


def format_input(
    dim: int,
    inequalities: Sequence[Sequence[int]] = (),
    grading: Sequence[int] | None = None,
    nonnegative: bool = False,
    equations: Sequence[Sequence[int]] = (),
    comments: Sequence[str] = (),
) -> str:
    """Render a system in the text input format; ``grading=None`` means total degree."""
    lines = [f"# {c}" for c in comments]
    lines.append(f"amb_space {dim}")
    if inequalities:
        lines.append(f"inequalities {len(inequalities)}")
        lines.extend(" ".join(map(str, r)) for r in inequalities)
    if equations:
        lines.append(f"equations {len(equations)}")
        lines.extend(" ".join(map(str, r)) for r in equations)
    if nonnegative:
        lines.append("nonnegative")
    if grading is None or all(g == 1 for g in grading):
        lines.append("total_degree")
    else:
        lines.append("grading")
        lines.append(" ".join(map(str, grading)))
    return "\n".join(lines) + "\n"
