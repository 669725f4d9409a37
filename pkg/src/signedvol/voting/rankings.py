"""Ranking spaces: the coordinates of an anonymous voting profile."""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from functools import cached_property

Ranking = tuple[tuple[int, ...], ...]  # indifference classes, best first


@dataclass(frozen=True)
class RankingSpace:
    """Preference orders on candidates ``0..n-1`` in canonical column order.

    Each ranking is a tuple of indifference classes, best first.  For
    linear orders every class is a singleton.
    """

    n: int
    rankings: tuple[Ranking, ...]
    weak: bool = False

    @property
    def size(self) -> int:
        return len(self.rankings)

    @cached_property
    def levels(self) -> tuple[tuple[int, ...], ...]:
        """``levels[k][a]`` is the class index of candidate ``a`` in ranking ``k``."""
        out = []
        for r in self.rankings:
            lv = [0] * self.n
            for depth, block in enumerate(r):
                for a in block:
                    lv[a] = depth
            out.append(tuple(lv))
        return tuple(out)

    def label(self, k: int) -> str:
        return ranking_label(self.rankings[k])


def candidate_name(a: int) -> str:
    return string.ascii_lowercase[a] if a < 26 else f"c{a}"


def ranking_label(r: Ranking) -> str:
    """``a>b>c`` for linear orders, ``a=b>c`` for ties."""
    return ">".join("=".join(candidate_name(a) for a in block) for block in r)


def linear_orders(n: int) -> RankingSpace:
    if n < 2:
        raise ValueError("need at least two candidates")
    rankings = tuple(tuple((a,) for a in p) for p in itertools.permutations(range(n)))
    return RankingSpace(n, rankings, weak=False)


def _ordered_partitions(items: tuple[int, ...]):
    if not items:
        yield ()
        return
    for size in range(1, len(items) + 1):
        for first in itertools.combinations(items, size):
            rest = tuple(x for x in items if x not in first)
            for tail in _ordered_partitions(rest):
                yield (first, *tail)


def enumerate_weak_orders(n: int) -> RankingSpace:
    """All ordered set partitions except total indifference, sorted lexicographically."""
    if n < 2:
        raise ValueError("need at least two candidates")
    rankings = sorted(r for r in _ordered_partitions(tuple(range(n))) if len(r) > 1)
    return RankingSpace(n, tuple(rankings), weak=True)


def ranking_space(n: int, indifference: bool = False) -> RankingSpace:
    return enumerate_weak_orders(n) if indifference else linear_orders(n)
