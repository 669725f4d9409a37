"""Independent checks: primal vertex triangulation and Monte Carlo sampling.

Nothing here touches the dual cone.  ``primal_volume`` triangulates ``P``
itself from its vertices; ``monte_carlo`` samples uniform profiles and
evaluates event rows; ``simulate_outcomes`` decides elections directly
from profiles without any inequality rows.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cone import ConeSystem, polytope_vertices
from .exact import IntVector, det_fraction_free, integer_rank
from .voting.events import Rule, VotingEvent
from .voting.rankings import RankingSpace

__all__ = [
    "DimensionTooLarge",
    "DegeneratePolytope",
    "VertexSet",
    "MonteCarloEstimate",
    "enumerate_vertices",
    "primal_volume",
    "monte_carlo",
    "sample_profiles",
    "simulate_outcomes",
]

MAX_POLYTOPE_DIM = 9


class DimensionTooLarge(ValueError):
    pass


class DegeneratePolytope(ValueError):
    pass


@dataclass(frozen=True)
class VertexSet:
    vertices: tuple[tuple[Fraction, ...], ...]

    def __len__(self) -> int:
        return len(self.vertices)


def enumerate_vertices(c: ConeSystem, max_subsets: int = 2_000_000) -> VertexSet:
    """Vertices of a bounded ``P``, in canonical (sorted) order."""
    if c.dim - 1 > MAX_POLYTOPE_DIM:
        raise DimensionTooLarge(f"polytope dimension {c.dim - 1} exceeds {MAX_POLYTOPE_DIM}")
    try:
        verts = polytope_vertices(c, max_subsets)
    except ValueError as exc:
        raise DimensionTooLarge(str(exc)) from None
    return VertexSet(tuple(sorted(verts)))


def _scaled(v: Sequence[Fraction]) -> list[int]:
    den = math.lcm(*(x.denominator for x in v))
    return [int(x * den) for x in v]


def primal_volume(c: ConeSystem) -> Fraction:
    """Lattice-normalized volume of ``P`` from a pulling triangulation of its vertices.

    Each face is coned from its lowest-index vertex over its facets not
    containing that vertex; the simplex volumes are ``|det|`` of homogeneous
    vertex coordinates.
    """
    verts = list(enumerate_vertices(c).vertices)
    d = c.dim
    if not verts or integer_rank(_scaled(v) for v in verts) < d:
        raise DegeneratePolytope("polytope is not full-dimensional")
    rows = c.constraint_rows()
    tight = [frozenset(k for k, r in enumerate(rows) if sum(a * x for a, x in zip(r, v)) == 0) for v in verts]

    def rank(idx: frozenset[int]) -> int:
        return integer_rank(_scaled(verts[i]) for i in idx)

    def pulling(face: frozenset[int], face_rank: int) -> list[tuple[int, ...]]:
        if face_rank == 1:
            return [(next(iter(face)),)]
        apex = min(face)
        facets: set[frozenset[int]] = set()
        for k in range(len(rows)):
            sub = frozenset(i for i in face if k in tight[i])
            if apex in sub or len(sub) < face_rank - 1 or sub == face or sub in facets:
                continue
            if rank(sub) == face_rank - 1:
                facets.add(sub)
        out = []
        for f in sorted(facets, key=sorted):
            out.extend((apex, *s) for s in pulling(f, face_rank - 1))
        return out

    total = Fraction(0)
    for simplex in pulling(frozenset(range(len(verts))), d):
        mat = [verts[i] for i in simplex]
        den = math.prod(math.lcm(*(x.denominator for x in v)) for v in mat)
        total += Fraction(abs(det_fraction_free([_scaled(v) for v in mat])), den)
    return total


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int

    def sigmas_from(self, value: float) -> float:
        if self.stderr == 0:
            return 0.0 if value == self.estimate else math.inf
        return abs(self.estimate - value) / self.stderr


def sample_profiles(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of the standard simplex (normalized exponentials)."""
    x = rng.standard_exponential((count, dim))
    x /= x.sum(axis=1, keepdims=True)
    return x


def _event_block(args) -> tuple[float, float, float, float, float, int]:
    """Sums needed for the mean (and the ratio estimator) over one block."""
    terms, cond_rows, dim, count, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    x = sample_profiles(dim, count, rng)
    value = np.zeros(count)
    for coef, mat in terms:
        if mat.shape[0] == 0:
            value += coef
        else:
            value += coef * np.all(x @ mat.T >= 0, axis=1)
    if cond_rows is None:
        den = np.ones(count)
    else:
        coef, mat = cond_rows
        den = coef * np.all(x @ mat.T >= 0, axis=1)
    return float(value.sum()), float((value * value).sum()), float(den.sum()), float((den * den).sum()), float((value * den).sum()), count


def monte_carlo(
    event: VotingEvent,
    samples: int,
    seed: int = 0,
    block: int = 100_000,
    workers: int = 1,
    conditional: bool | None = None,
) -> MonteCarloEstimate:
    """Estimate the event probability under the uniform profile model.

    Each sample scores ``Σ coefficient · 1[x ∈ P_k]``, so the estimate is
    unbiased for the probability and its standard error is the sample
    standard deviation over ``√samples``.  Conditional events (efficiencies)
    are estimated as a ratio to the Condorcet-winner indicator with a
    delta-method error.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    terms = [(float(t.coefficient), np.array(t.rows, dtype=float).reshape(len(t.rows), event.dim)) for t in event.terms()]
    conditional = event.conditional if conditional is None else conditional
    cond = None
    if conditional:
        from .voting.events import pairwise_margin_row

        cw = [pairwise_margin_row(event.space, 0, c) for c in range(1, event.space.n)]
        cond = (float(event.space.n), np.array(cw, dtype=float))
    nblocks = -(-samples // block)
    seqs = np.random.SeedSequence(seed).spawn(nblocks)
    sizes = [min(block, samples - i * block) for i in range(nblocks)]
    jobs = [(terms, cond, event.dim, s, q) for s, q in zip(sizes, seqs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_event_block, jobs))
    else:
        parts = [_event_block(j) for j in jobs]
    s1, s2, d1, d2, sd, n = (sum(p[k] for p in parts) for k in range(6))
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    if cond is None:
        est, se = mean, math.sqrt(var / n)
    else:
        dm = d1 / n
        est = mean / dm
        # variance of value - est * den, linearized around the ratio
        lin = s2 / n - 2 * est * sd / n + est * est * d2 / n - (mean - est * dm) ** 2
        se = math.sqrt(max(lin, 0.0) / n) / dm
    if event.complement:
        est = 1 - est
    return MonteCarloEstimate(est, se, n, seed)


@dataclass(frozen=True)
class OutcomeSample:
    """Per-profile election outcomes decided directly from voter shares."""

    margins: np.ndarray  # (samples, n, n) share preferring i to j minus the reverse
    scores: dict[Rule, np.ndarray]  # (samples, n)

    def condorcet_winner(self) -> np.ndarray:
        """Index of the Condorcet winner or -1."""
        n = self.margins.shape[1]
        off = ~np.eye(n, dtype=bool)
        wins = np.all((self.margins > 0) | ~off, axis=2)
        has = wins.any(axis=1)
        return np.where(has, wins.argmax(axis=1), -1)

    def condorcet_loser(self) -> np.ndarray:
        n = self.margins.shape[1]
        off = ~np.eye(n, dtype=bool)
        loses = np.all((self.margins < 0) | ~off, axis=2)
        return np.where(loses.any(axis=1), loses.argmax(axis=1), -1)

    def order(self, rule: Rule) -> np.ndarray:
        """Candidates sorted by decreasing score under ``rule``."""
        return np.argsort(-self.scores[rule], axis=1, kind="stable")

    def tournament_codes(self) -> np.ndarray:
        n = self.margins.shape[1]
        code = np.zeros(self.margins.shape[0], dtype=np.int64)
        k = 0
        for i in range(n):
            for j in range(i + 1, n):
                code |= (self.margins[:, i, j] > 0).astype(np.int64) << k
                k += 1
        return code


def simulate_outcomes(space: RankingSpace, samples: int, rng: np.random.Generator, rules: Sequence[Rule] = ()) -> OutcomeSample:
    """Draw uniform profiles and compute majority margins and rule scores from preference levels."""
    x = sample_profiles(space.size, samples, rng)
    lv = np.array(space.levels)  # (rankings, n)
    n = space.n
    pref = (lv[:, :, None] < lv[:, None, :]).astype(float) - (lv[:, :, None] > lv[:, None, :]).astype(float)
    margins = np.einsum("sk,kij->sij", x, pref)
    scores = {}
    for rule in rules:
        if rule is Rule.PR:
            w = (lv == 0).astype(float)
        elif rule is Rule.NPR:
            w = (lv < n - 1).astype(float)
        elif rule is Rule.BR:
            w = (n - 1 - lv).astype(float)
        else:
            w = (lv == 0).astype(float)
        scores[rule] = x @ w
    return OutcomeSample(margins, scores)


def estimate_indicator(
    space: RankingSpace,
    predicate: Callable[[OutcomeSample], np.ndarray],
    samples: int,
    seed: int = 0,
    rules: Sequence[Rule] = (),
    block: int = 50_000,
) -> MonteCarloEstimate:
    """Frequency of a boolean outcome predicate with its binomial standard error."""
    seqs = np.random.SeedSequence(seed).spawn(-(-samples // block))
    hits = 0
    done = 0
    for i, q in enumerate(seqs):
        size = min(block, samples - i * block)
        out = simulate_outcomes(space, size, np.random.default_rng(q), rules)
        hits += int(np.count_nonzero(predicate(out)))
        done += size
    p = hits / done
    return MonteCarloEstimate(p, math.sqrt(p * (1 - p) / done), done, seed)
