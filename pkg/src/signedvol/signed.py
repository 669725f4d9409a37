"""Signed decomposition of a polytope from the hollow triangulation of its dual cone.

For every hollow facet ``F`` the star simplex ``δ = cone(ω, F)`` has dual
basis forms ``ℓ_i``.  The simplex ``R_δ`` with vertices ``ℓ_i / ℓ_i(γ)``
enters the volume with sign ``e(δ) = Π sign(ℓ_i(γ))``.

Writing ``γ = Σ y_i α_i`` in the rows ``α_i`` of ``δ`` (``ω`` first), the
signed contribution is ``1 / (|det δ| · Π y_i)``.  The fast evaluator works
per simplex of the base triangulation: with ``W`` and ``Z`` the coordinates
of ``γ`` and ``ω`` in that simplex scaled by ``Δ = |det|``, dropping the ray
at position ``p`` contributes

    sign(Z_p) · (Δ·Z_p)^(D-1) / (W_p · Π_{i≠p} (W_i·Z_p − W_p·Z_i)).
"""

from __future__ import annotations

import logging
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq, mpz

from .cone import ConeError, ConeSystem, DualGenerators, check_full_dimensional, vertex_denominator_lcm
from .exact import (
    FixedPointAccumulator,
    IntVector,
    SingularMatrix,
    dual_basis_rows,
    det_fraction_free,
    solve_fraction_free,
)
from .simplex_basis import RayTable, bit_indices
from .triangulation import HollowFacet, HollowTriangulation, hollow_triangulation, placing_triangulation

__all__ = [
    "GenericityViolation",
    "RetriesExhausted",
    "UnboundedPolytope",
    "BoundaryHit",
    "DegeneratePolytope",
    "GenericElement",
    "SignedContribution",
    "VolumeResult",
    "StarSimplex",
    "StarEvaluator",
    "choose_generic",
    "evaluate_star_simplex",
    "star_decomposition",
    "indicator_check",
    "lawrence_volume",
    "certified_precision",
]

log = logging.getLogger(__name__)

DEFAULT_RANGE = 1 << 10


class GenericityViolation(ArithmeticError):
    """γ lies on a facet hyperplane of some star simplex (or ω on a facet span)."""


class RetriesExhausted(RuntimeError):
    pass


class UnboundedPolytope(ConeError):
    """The grading is not interior to the dual cone, so ``P`` is unbounded."""


class DegeneratePolytope(ConeError):
    """``P`` is not full-dimensional; an equation must be eliminated first."""


class BoundaryHit(ValueError):
    """A sample point lies on the boundary of ``P`` or of some ``R_δ``."""


@dataclass(frozen=True)
class GenericElement:
    omega: IntVector
    seed: int
    attempts: int
    coefficient_range: int


def choose_generic(
    gens: DualGenerators | Sequence[Sequence[int]],
    seed: int = 0,
    attempt: int = 0,
    base_range: int = DEFAULT_RANGE,
) -> GenericElement:
    """``ω = Σ c_j g_j`` with ``c_j`` uniform in ``[1, base_range · 2^attempt]``.

    The PRNG is keyed by ``(seed, attempt)`` so runs are reproducible.
    """
    vectors = gens.vectors if isinstance(gens, DualGenerators) else tuple(tuple(g) for g in gens)
    top = base_range << attempt
    rng = random.Random(f"omega:{seed}:{attempt}")
    coeffs = [rng.randint(1, top) for _ in vectors]
    dim = len(vectors[0])
    omega = tuple(sum(c * g[k] for c, g in zip(coeffs, vectors)) for k in range(dim))
    return GenericElement(omega, seed, attempt, top)


SAFETY_BITS = 8


def genericity_range(facets: int, dim: int, safety_bits: int = SAFETY_BITS) -> int:
    """Coefficient range for ``ω`` making a genericity failure unlikely.

    ``2·facets·(dim+1)`` bounds the failure probability by 1/2
    (each condition is a nonzero linear form in the coefficients); the
    ``safety_bits`` shift lowers it by a further factor ``2^safety_bits``.
    """
    need = 2 * max(1, facets) * (dim + 1)
    return max(DEFAULT_RANGE, 1 << (need - 1).bit_length()) << safety_bits


@dataclass(frozen=True)
class SignedContribution:
    sign: int
    volume: Fraction
    facet: HollowFacet | None = None


def evaluate_star_simplex(
    omega: Sequence[int],
    facet: HollowFacet | Sequence[int],
    rays: Sequence[Sequence[int]],
    gamma: Sequence[int],
) -> SignedContribution:
    """Reference evaluation of one star simplex from its dual basis forms.

    ``vol R_δ = |det(ℓ_1/ℓ_1(γ), …, ℓ_D/ℓ_D(γ))|``, computed from the
    gcd-reduced forms so rescaling any input row changes nothing.
    """
    idx = facet.ray_indices if isinstance(facet, HollowFacet) else tuple(facet)
    m = [tuple(omega), *(tuple(rays[i]) for i in idx)]
    try:
        dual = dual_basis_rows(m)
    except SingularMatrix:
        raise GenericityViolation("ω lies in the span of a hollow facet") from None
    values = [sum(a * b for a, b in zip(form, gamma)) for form in dual.forms]
    if any(v == 0 for v in values):
        raise GenericityViolation("γ lies on a facet hyperplane of a star simplex")
    sign = 1
    for v in values:
        if v < 0:
            sign = -sign
    det_forms = abs(det_fraction_free(dual.forms))
    volume = Fraction(det_forms, abs(math.prod(values)))
    return SignedContribution(sign, volume, facet if isinstance(facet, HollowFacet) else None)


class StarEvaluator:
    """Evaluates all hollow facets of base simplices, exactly or truncated.

    ``scale=None`` gives exact ``mpq`` sums; otherwise each term is truncated
    toward zero at ``scale`` decimal digits and summed as an ``mpz``.
    """

    def __init__(self, table: RayTable, gamma: Sequence[int], omega: Sequence[int], scale: int | None = None):
        self.table = table
        self.gamma = tuple(gamma)
        self.omega = tuple(omega)
        self.scale = scale
        self._pow10 = mpz(10) ** scale if scale is not None else None
        self._power = table.dim - 1

    def simplex(self, mask: int, dropped: int) -> tuple[mpq | mpz, int]:
        basis = self.table.basis(mask)
        w = basis.coords(self.gamma)
        z = basis.coords(self.omega)
        delta = basis.abs_det
        positions = [basis.position(r) for r in bit_indices(dropped)]
        for p in positions:
            if w[p] <= 0:
                raise UnboundedPolytope("grading is not in the interior of the dual cone")
            if z[p] == 0:
                raise GenericityViolation("ω lies in the span of a hollow facet")
        bound = max(map(abs, w)) * max(map(abs, z))
        if len(w) >= 12 and bound < (1 << 61):
            rows = self._minors_numpy(w, z, positions)
        else:
            rows = self._minors_python(w, z, positions)
        exact = self._pow10 is None
        total = mpq(0) if exact else mpz(0)
        for p, row in zip(positions, rows):
            zp = z[p]
            num = mpz(delta * zp) ** self._power
            if zp < 0:
                num = -num
            den = math.prod(row, start=mpz(w[p]))
            if exact:
                total += mpq(num, den)
            else:
                total += gmpy2.t_div(num * self._pow10, den)
        return total, len(positions)

    @staticmethod
    def _minors_python(w: list[int], z: list[int], positions: list[int]) -> list[list[int]]:
        rows = []
        for p in positions:
            wp, zp = w[p], z[p]
            row = [wi * zp - wp * zi for i, (wi, zi) in enumerate(zip(w, z)) if i != p]
            if 0 in row:
                raise GenericityViolation("γ lies on a facet hyperplane of a star simplex")
            rows.append(row)
        return rows

    @staticmethod
    def _minors_numpy(w: list[int], z: list[int], positions: list[int]) -> list[list[int]]:
        wa = np.array(w, dtype=np.int64)
        za = np.array(z, dtype=np.int64)
        ps = np.array(positions, dtype=np.intp)
        m = np.outer(za[ps], wa) - np.outer(wa[ps], za)
        m[np.arange(len(ps)), ps] = 1
        if not m.all():
            raise GenericityViolation("γ lies on a facet hyperplane of a star simplex")
        return m.tolist()

    def run(self, items: Iterable[tuple[int, int]]) -> tuple[mpq | mpz, int]:
        total = mpq(0) if self._pow10 is None else mpz(0)
        terms = 0
        for mask, dropped in items:
            v, k = self.simplex(mask, dropped)
            total += v
            terms += k
        return total, terms


# worker-process state for parallel evaluation
_WORKER: StarEvaluator | None = None


def _init_worker(table: RayTable, gamma, omega, scale) -> None:
    global _WORKER
    _WORKER = StarEvaluator(table, gamma, omega, scale)


def _run_batch(items: list[tuple[int, int]]):
    assert _WORKER is not None
    return _WORKER.run(items)


def evaluate_hollow(
    hollow: HollowTriangulation,
    gamma: Sequence[int],
    omega: Sequence[int],
    scale: int | None,
    workers: int = 1,
    progress: Callable[[int, Fraction], None] | None = None,
    progress_every: int = 500_000,
    batch: int = 2000,
) -> tuple[mpq | mpz, int]:
    """Stage 4 over a whole hollow triangulation; the sum does not depend on ``workers``."""
    t = hollow.triangulation
    items = [(t.masks[s], d) for s, d in enumerate(hollow.dropped) if d]
    batches = [items[i : i + batch] for i in range(0, len(items), batch)]
    total = mpq(0) if scale is None else mpz(0)
    terms = 0
    next_report = progress_every

    def fold(part) -> None:
        nonlocal total, terms, next_report
        total += part[0]
        terms += part[1]
        if progress is not None and terms >= next_report:
            next_report += progress_every
            value = Fraction(int(total.numerator), int(total.denominator)) if scale is None else Fraction(int(total), 10**scale)
            progress(terms, value)

    if workers <= 1 or len(batches) <= 1:
        ev = StarEvaluator(t.table, gamma, omega, scale)
        for b in batches:
            fold(ev.run(b))
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(t.table, gamma, omega, scale)) as pool:
            for part in pool.map(_run_batch, batches, chunksize=4):
                fold(part)
    return total, terms


def certified_precision(terms: int, denominator_bound: int) -> int:
    """Digits ``p`` with ``terms · 10^-p · denominator_bound < 1/2``."""
    need = 2 * terms * denominator_bound
    p = len(str(need))
    while 10**p <= need:
        p += 1
    return p


@dataclass
class VolumeResult:
    """Signed-decomposition volume of ``P``.

    Exact runs fill ``exact_value``; fixed runs fill ``fixed_value`` and
    satisfy ``|true - fixed_value| <= error_bound``.
    """

    mode: str
    exact_value: Fraction | None
    fixed_value: FixedPointAccumulator | None
    simplex_count: int
    triangulation_size: int
    seed: int
    omega: IntVector
    attempts: int
    strategy: str | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def precision(self) -> int | None:
        return self.fixed_value.scale if self.fixed_value is not None else None

    @property
    def value(self) -> Fraction:
        if self.exact_value is not None:
            return self.exact_value
        assert self.fixed_value is not None
        return self.fixed_value.as_fraction()

    @property
    def error_bound(self) -> Fraction:
        return Fraction(0) if self.fixed_value is None else self.fixed_value.error_bound


def _exact_strategy(c: ConeSystem, terms: int, requested: str, budget: int) -> tuple[str, int | None]:
    if requested == "direct":
        return "direct", None
    if requested not in ("auto", "certified"):
        raise ValueError(f"unknown exact strategy {requested!r}")
    if requested == "auto" and terms * c.dim <= 2_000_000:
        return "direct", None
    q = vertex_denominator_lcm(c, budget)
    if q is None:
        if requested == "certified":
            raise ValueError("vertex denominator bound exceeds the enumeration budget")
        log.warning("no denominator bound within budget; summing rationals directly")
        return "direct", None
    return "certified", q ** (c.dim - 1)


def lawrence_volume(
    c: ConeSystem,
    mode: str = "exact",
    digits: int = 100,
    seed: int = 0,
    workers: int = 1,
    strategy: str = "auto",
    max_retries: int = 32,
    progress: Callable[[int, Fraction], None] | None = None,
    denominator_budget: int = 200_000,
    safety_bits: int = SAFETY_BITS,
) -> VolumeResult:
    """Lattice-normalized volume of ``P`` by signed decomposition.

    ``mode`` is ``"exact"`` or ``"fixed"`` (``digits`` decimals, truncated
    per term).  Exact ``strategy``: ``"direct"`` sums rationals;
    ``"certified"`` sums truncated terms at a precision where rounding to a
    proven denominator bound recovers the exact fraction; ``"auto"``
    chooses by problem size.
    """
    if mode not in ("exact", "fixed"):
        raise ValueError(f"mode must be 'exact' or 'fixed', got {mode!r}")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    fd = check_full_dimensional(c)
    if not fd.full:
        raise DegeneratePolytope(f"polytope is not full-dimensional; {len(fd.forced)} inequalities are forced to equality")
    gens = c.dual_generators()
    t1 = time.perf_counter()
    tri = placing_triangulation(gens)
    t2 = time.perf_counter()
    hollow = hollow_triangulation(tri)
    t3 = time.perf_counter()
    timings.update(check=t1 - t0, triangulation=t2 - t1, hollow=t3 - t2)
    count = len(hollow)

    if mode == "fixed":
        used, denom = "fixed", None
        scale: int | None = digits
    else:
        used, denom = _exact_strategy(c, count, strategy, denominator_budget)
        scale = certified_precision(count, denom) if denom is not None else None
    base = genericity_range(count, c.dim, safety_bits)
    for attempt in range(max_retries):
        ge = choose_generic(gens, seed, attempt, base)
        t4 = time.perf_counter()
        try:
            total, terms = evaluate_hollow(hollow, c.grading, ge.omega, scale, workers, progress)
        except GenericityViolation as exc:
            log.info("attempt %d: %s; retrying with a wider range", attempt, exc)
            continue
        timings["evaluation"] = time.perf_counter() - t4
        break
    else:
        raise RetriesExhausted(f"no generic ω found in {max_retries} attempts")

    if mode == "fixed":
        acc = FixedPointAccumulator(digits, int(total), terms)
        return VolumeResult("fixed", None, acc, terms, len(tri), seed, ge.omega, ge.attempts, None, timings)
    if denom is None:
        value = Fraction(int(total.numerator), int(total.denominator))
    else:
        assert scale is not None
        n = int(total) * denom
        half = 10**scale // 2
        numer = (n + half) // 10**scale
        value = Fraction(numer, denom)
    return VolumeResult("exact", value, None, terms, len(tri), seed, ge.omega, ge.attempts, used, timings)


@dataclass(frozen=True)
class StarSimplex:
    """Rows ``ω, F`` of a star simplex, coordinates of ``γ`` in them, sign and volume."""

    rows: tuple[IntVector, ...]
    gamma_coords: tuple[Fraction, ...]
    sign: int
    volume: Fraction

    def contains(self, x: Sequence[Fraction | int]) -> bool:
        """``x ∈ R_δ`` iff ``y_j · α_j(x) ≥ 0`` for every row; raises on the boundary."""
        for row, y in zip(self.rows, self.gamma_coords):
            v = sum(a * b for a, b in zip(row, x))
            if v == 0:
                raise BoundaryHit("point on the boundary of a star simplex")
            if (v > 0) != (y > 0):
                return False
        return True


def star_decomposition(c: ConeSystem, seed: int = 0, max_retries: int = 32) -> list[StarSimplex]:
    """All star simplices with explicit rows; intended for small systems and checks."""
    gens = c.dual_generators()
    tri = placing_triangulation(gens)
    hollow = hollow_triangulation(tri)
    base = genericity_range(len(hollow), c.dim)
    for attempt in range(max_retries):
        omega = choose_generic(gens, seed, attempt, base).omega
        out = []
        try:
            for f in hollow:
                rows = (omega, *(tri.rays[i] for i in f.ray_indices))
                try:
                    det, ys = solve_fraction_free([list(col) for col in zip(*rows)], list(c.grading))
                except SingularMatrix:
                    raise GenericityViolation("ω lies in the span of a hollow facet") from None
                if any(y == 0 for y in ys):
                    raise GenericityViolation("γ lies on a facet hyperplane of a star simplex")
                y = tuple(Fraction(v, det) for v in ys)
                contrib = 1 / (abs(det) * math.prod(y))
                out.append(StarSimplex(rows, y, 1 if contrib > 0 else -1, abs(contrib)))
        except GenericityViolation:
            continue
        return out
    raise RetriesExhausted(f"no generic ω found in {max_retries} attempts")


def indicator_check(c: ConeSystem, star: Sequence[StarSimplex], x: Sequence[Fraction | int]) -> int:
    """``Σ e(δ) · 1[x ∈ R_δ]``; equals ``1[x ∈ P]`` for admissible ``x``."""
    for row in c.constraint_rows():
        if sum(a * b for a, b in zip(row, x)) == 0:
            raise BoundaryHit("point on the boundary of P")
    return sum(s.sign for s in star if s.contains(x))
