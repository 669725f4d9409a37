"""Majority tournaments and their classes under relabeling of candidates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property


def _pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


@dataclass(frozen=True)
class Tournament:
    """Complete asymmetric relation on ``0..n-1``.

    Bit ``k`` of ``code`` refers to the ``k``-th pair ``(i, j)``, ``i < j``,
    in lexicographic order; it is set when ``i`` beats ``j``.
    """

    n: int
    code: int

    @classmethod
    def from_edges(cls, n: int, edges) -> Tournament:
        """Build from ``(winner, loser)`` pairs covering every pair exactly once."""
        index = {p: k for k, p in enumerate(_pairs(n))}
        code = 0
        seen = set()
        for w, l in edges:
            key = (min(w, l), max(w, l))
            if key in seen or w == l:
                raise ValueError(f"pair {key} oriented twice")
            seen.add(key)
            if w < l:
                code |= 1 << index[key]
        if len(seen) != len(index):
            raise ValueError("tournament must orient every pair")
        return cls(n, code)

    @classmethod
    def transitive(cls, n: int) -> Tournament:
        return cls.from_edges(n, _pairs(n))

    @cached_property
    def _matrix(self) -> tuple[tuple[bool, ...], ...]:
        m = [[False] * self.n for _ in range(self.n)]
        for k, (i, j) in enumerate(_pairs(self.n)):
            if (self.code >> k) & 1:
                m[i][j] = True
            else:
                m[j][i] = True
        return tuple(tuple(r) for r in m)

    def beats(self, a: int, b: int) -> bool:
        return self._matrix[a][b]

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """``(winner, loser)`` pairs in pair order."""
        return tuple((i, j) if self.beats(i, j) else (j, i) for i, j in _pairs(self.n))

    def out_degree(self, a: int) -> int:
        return sum(self._matrix[a])

    def scores(self) -> tuple[int, ...]:
        return tuple(self.out_degree(a) for a in range(self.n))

    def relabel(self, perm) -> Tournament:
        """Candidate ``a`` becomes ``perm[a]``."""
        return Tournament.from_edges(self.n, ((perm[w], perm[l]) for w, l in self.edges))

    def condorcet_winner(self) -> int | None:
        return next((a for a in range(self.n) if self.out_degree(a) == self.n - 1), None)

    def condorcet_loser(self) -> int | None:
        return next((a for a in range(self.n) if self.out_degree(a) == 0), None)


@dataclass(frozen=True)
class TournamentClass:
    name: str
    representative: Tournament
    cardinality: int


def _relabel_code(n: int, code: int, perm, pairs, index) -> int:
    out = 0
    for k, (i, j) in enumerate(pairs):
        w, l = (i, j) if (code >> k) & 1 else (j, i)
        pw, pl = perm[w], perm[l]
        if pw < pl:
            out |= 1 << index[(pw, pl)]
    return out


def _sub(t: Tournament, members) -> Tournament:
    """Induced tournament on ``members``, relabeled ``0..len-1`` in order."""
    pos = {a: k for k, a in enumerate(members)}
    return Tournament.from_edges(len(members), ((pos[w], pos[l]) for w, l in t.edges if w in pos and l in pos))


def _is_3cycle(t: Tournament, trio) -> bool:
    return all(sum(t.beats(a, b) for b in trio if b != a) == 1 for a in trio)


def _name_small(t: Tournament) -> str | None:
    n = t.n
    sc = sorted(t.scores(), reverse=True)
    if sc == list(range(n - 1, -1, -1)):
        return "LinOrd"
    if n == 3:
        return "3cyc"
    if n == 4:
        if t.condorcet_winner() is not None:
            return "CW3cyc"
        if t.condorcet_loser() is not None:
            return "3cycCL"
        return "4cyc"
    if n != 5:
        return None
    cw, cl = t.condorcet_winner(), t.condorcet_loser()
    if cw is not None:
        rest = [a for a in range(5) if a != cw]
        sub = sorted(_sub(t, rest).scores(), reverse=True)
        return {(3, 1, 1, 1): "CW2nd3cyc", (2, 2, 2, 0): "CW3cycCL", (2, 2, 1, 1): "CW4cyc"}[tuple(sub)]
    if cl is not None:
        rest = [a for a in range(5) if a != cl]
        sub = sorted(_sub(t, rest).scores(), reverse=True)
        return {(2, 2, 2, 0): "3cyc4thCL", (2, 2, 1, 1): "4cycCL"}[tuple(sub)]
    scores = t.scores()
    twos = [a for a in range(5) if scores[a] == 2]
    threes = [a for a in range(5) if scores[a] == 3]
    if len(twos) == 1:
        beaten_by = sum(t.beats(b, twos[0]) for b in threes)
        return "Γ1,1" if beaten_by == 2 else "Γ1,2"
    if len(twos) == 3:
        if _is_3cycle(t, twos):
            return "Γ2,1" if all(t.beats(threes[0], a) for a in twos) else "Γ2,2"
        return "Γ2,3"
    return "Γ3"


CLASS_ORDER_5 = (
    "LinOrd", "CW2nd3cyc", "CW3cycCL", "CW4cyc", "3cyc4thCL", "4cycCL",
    "Γ1,1", "Γ1,2", "Γ2,1", "Γ2,2", "Γ2,3", "Γ3",
)


def classify_tournaments(n: int) -> list[TournamentClass]:
    """Orbits of all ``2^C(n,2)`` tournaments under candidate relabeling.

    The representative is the orbit member with the largest code, so the
    transitive order ``0 > 1 > … > n-1`` represents linear orders.
    """
    if n < 2 or n > 6:
        raise ValueError("classification supports 2 <= n <= 6")
    pairs = _pairs(n)
    index = {p: k for k, p in enumerate(pairs)}
    perms = list(itertools.permutations(range(n)))
    seen: set[int] = set()
    orbits: list[tuple[int, int]] = []
    for code in range(1 << len(pairs)):
        if code in seen:
            continue
        orbit = {_relabel_code(n, code, p, pairs, index) for p in perms}
        seen |= orbit
        orbits.append((max(orbit), len(orbit)))
    classes = []
    for code, size in orbits:
        rep = Tournament(n, code)
        name = _name_small(rep) or "S" + "".join(map(str, sorted(rep.scores(), reverse=True)))
        classes.append(TournamentClass(name, rep, size))
    if n == 5:
        classes.sort(key=lambda c: CLASS_ORDER_5.index(c.name))
    else:
        classes.sort(key=lambda c: (sorted(c.representative.scores(), reverse=True), c.representative.code), reverse=True)
        counts: dict[str, int] = {}
        for c in classes:
            counts[c.name] = counts.get(c.name, 0) + 1
        dup: dict[str, int] = {}
        renamed = []
        for c in classes:
            if counts[c.name] > 1:
                dup[c.name] = dup.get(c.name, 0) + 1
                c = TournamentClass(f"{c.name}-{dup[c.name]}", c.representative, c.cardinality)
            renamed.append(c)
        classes = renamed
    return classes
