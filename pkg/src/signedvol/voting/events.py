"""Inequality systems for voting events of anonymous profiles.

Candidate roles are fixed labels: ``a = 0``, ``b = 1`` and so on.  An event
probability is ``Σ coefficient · vol(P_k)`` over a main polytope and optional
correction polytopes, optionally complemented (``1 - …``) or reported
conditionally on a Condorcet winner existing.  All rows are closed
inequalities; ties lie on measure-zero hyperplanes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable

from ..cone import ConeSystem, build_cone, format_input
from ..exact import IntVector
from .rankings import RankingSpace, candidate_name, ranking_space
from .tournaments import Tournament, classify_tournaments

__all__ = [
    "Rule",
    "UnknownEvent",
    "BadOptions",
    "ApprovalRequiresIndifference",
    "EventTerm",
    "VotingEvent",
    "EVENT_NAMES",
    "pairwise_margin_row",
    "score_row",
    "score_difference_row",
    "build_event",
]


class Rule(str, Enum):
    PR = "PR"  # plurality
    NPR = "NPR"  # negative plurality (antiplurality)
    BR = "BR"  # Borda
    AV = "AV"  # approval of the top indifference class

    @classmethod
    def parse(cls, text: str | Rule) -> Rule:
        if isinstance(text, Rule):
            return text
        aliases = {"APPROVAL": "AV", "PLURALITY": "PR", "BORDA": "BR", "ANTIPLURALITY": "NPR"}
        key = text.upper()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise BadOptions(f"unknown rule {text!r}") from None


class UnknownEvent(KeyError):
    pass


class BadOptions(ValueError):
    pass


class ApprovalRequiresIndifference(BadOptions):
    pass


def pairwise_margin_row(space: RankingSpace, a: int, b: int) -> IntVector:
    """``+1`` where ``a`` is strictly preferred to ``b``, ``-1`` for the reverse, ``0`` on ties."""
    if a == b:
        raise BadOptions("pairwise margin needs two distinct candidates")
    return tuple((lv[a] < lv[b]) - (lv[a] > lv[b]) for lv in space.levels)


def _weight(rule: Rule, n: int, depth: int) -> int:
    if rule is Rule.PR:
        return int(depth == 0)
    if rule is Rule.NPR:
        return int(depth < n - 1)
    if rule is Rule.BR:
        return n - 1 - depth
    return int(depth == 0)


def score_row(space: RankingSpace, rule: Rule | str, a: int) -> IntVector:
    """Points candidate ``a`` receives from each ranking under ``rule``."""
    rule = Rule.parse(rule)
    if rule is Rule.AV and not space.weak:
        raise ApprovalRequiresIndifference("approval voting needs a weak-order ranking space")
    if rule is not Rule.AV and space.weak:
        raise BadOptions(f"{rule.value} is defined for linear orders only")
    return tuple(_weight(rule, space.n, lv[a]) for lv in space.levels)


def score_difference_row(space: RankingSpace, rule: Rule | str, a: int, b: int) -> IntVector:
    sa, sb = score_row(space, rule, a), score_row(space, rule, b)
    return tuple(x - y for x, y in zip(sa, sb))


@dataclass(frozen=True)
class EventTerm:
    coefficient: Fraction
    rows: tuple[IntVector, ...]
    label: str = ""


@dataclass(frozen=True)
class VotingEvent:
    """A named event as weighted polytope volumes over a ranking space."""

    name: str
    space: RankingSpace
    rows: tuple[IntVector, ...]
    symmetry_factor: Fraction
    corrections: tuple[EventTerm, ...] = ()
    complement: bool = False
    conditional: bool = False
    description: str = ""
    options: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.space.size

    def terms(self) -> tuple[EventTerm, ...]:
        return (EventTerm(self.symmetry_factor, self.rows, "main"), *self.corrections)

    def cone(self, rows: tuple[IntVector, ...] | None = None) -> ConeSystem:
        return build_cone(self.dim, self.rows if rows is None else rows, (1,) * self.dim, nonnegative=True)

    def total_inequalities(self) -> int:
        """Rows of the main polytope including the sign inequalities."""
        return self.dim + len(self.rows)

    def combine(self, volumes: list[Fraction]) -> Fraction:
        """Probability from the volume of each term, in :meth:`terms` order."""
        p = sum((t.coefficient * v for t, v in zip(self.terms(), volumes)), Fraction(0))
        return 1 - p if self.complement else p

    def probability(self, volume: Callable[[ConeSystem], Fraction]) -> Fraction:
        return self.combine([volume(self.cone(t.rows)) for t in self.terms()])

    def formula(self) -> str:
        parts = []
        for k, t in enumerate(self.terms()):
            c = t.coefficient
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {abs(c)}*vol{k}")
        body = " ".join(parts).lstrip("+ ")
        return f"1 - ({body})" if self.complement else body

    def to_text(self, term: int = 0) -> str:
        """Cone input file for term ``term``, with a metadata header."""
        t = self.terms()[term]
        header = [
            f"event = {self.name}",
            f"n = {self.space.n}",
            f"indifference = {str(self.space.weak).lower()}",
            f"roles = " + ",".join(f"{candidate_name(i)}={i}" for i in range(self.space.n)),
            "rankings = " + " ".join(self.space.label(k) for k in range(self.dim)),
            f"symmetry_factor = {self.symmetry_factor}",
            f"term = {term} of {len(self.terms())}",
            f"probability = {self.formula()}",
        ]
        if self.conditional:
            header.append("conditional = condorcet_winner")
        for k, v in sorted(self.options.items()):
            header.append(f"option_{k} = {v}")
        return format_input(self.dim, t.rows, None, True, comments=header)


def _majorizes(space: RankingSpace, a: int, others) -> list[IntVector]:
    return [pairwise_margin_row(space, a, c) for c in others]


def _beats_in_score(space: RankingSpace, rule: Rule, a: int, others) -> list[IntVector]:
    return [score_difference_row(space, rule, a, c) for c in others]


def _condorcet_winner(space, opts):
    n = space.n
    return dict(rows=_majorizes(space, 0, range(1, n)), factor=n, description="candidate a is a Condorcet winner")


def _condorcet_paradox(space, opts):
    e = _condorcet_winner(space, opts)
    e.update(complement=True, description="no Condorcet winner exists")
    return e


def _rule_vs_runoff(space, opts):
    n, rule = space.n, opts["rule"]
    rest = range(2, n)
    if opts["optimized"]:
        rows = _beats_in_score(space, rule, 0, [1]) + _beats_in_score(space, rule, 1, rest)
    else:
        rows = _beats_in_score(space, rule, 0, range(1, n)) + _beats_in_score(space, rule, 1, rest)
    rows.append(pairwise_margin_row(space, 0, 1))
    return dict(rows=rows, factor=n * (n - 1), description=f"{rule.value} winner a also wins the runoff against second b")


def _cond_eff_rule(space, opts):
    n, rule = space.n, opts["rule"]
    rows = _majorizes(space, 0, range(1, n)) + _beats_in_score(space, rule, 0, range(1, n))
    return dict(rows=rows, factor=n, conditional=True, description=f"Condorcet winner a wins {rule.value}")


def _cond_eff_rule_runoff(space, opts):
    n, rule = space.n, opts["rule"]
    cw = _majorizes(space, 0, range(1, n))
    top = cw + _beats_in_score(space, rule, 0, range(1, n))
    desc = f"Condorcet winner a is first or second under {rule.value}"
    if opts["optimized"]:
        # Σ_b vol{a ≥ all but b} counts "a first" n-1 times and "a second behind b" once
        above_b = cw + _beats_in_score(space, rule, 0, range(2, n))
        corr = EventTerm(Fraction(-n * (n - 2)), tuple(top), "a first")
        return dict(rows=above_b, factor=n * (n - 1), corrections=(corr,), conditional=True, description=desc)
    second = cw + _beats_in_score(space, rule, 1, [c for c in range(n) if c != 1])
    second += _beats_in_score(space, rule, 0, range(2, n))
    corr = EventTerm(Fraction(n), tuple(top), "a first")
    return dict(rows=second, factor=n * (n - 1), corrections=(corr,), conditional=True, description=desc)


def _cw_and_2nd(space, opts):
    n = space.n
    rest = range(2, n)
    desc = "a Condorcet winner and a second candidate beating all remaining ones"
    if opts["optimized"]:
        rows = _majorizes(space, 0, rest) + _majorizes(space, 1, rest)
        return dict(rows=rows, factor=Fraction(n * (n - 1), 2), description=desc)
    rows = _majorizes(space, 0, range(1, n)) + _majorizes(space, 1, rest)
    return dict(rows=rows, factor=n * (n - 1), description=desc)


def _strong_borda(space, opts):
    n, rule = space.n, opts["rule"]
    rows = _beats_in_score(space, rule, 0, range(1, n)) + [pairwise_margin_row(space, c, 0) for c in range(1, n)]
    # reported given that a Condorcet loser exists; reversing all rankings
    # shows that probability equals p_CW, so the usual conditioning applies
    return dict(rows=rows, factor=n, conditional=True, description=f"{rule.value} winner a is the Condorcet loser")


def _reverse_strong_borda(space, opts):
    n, rule = space.n, opts["rule"]
    rows = [score_difference_row(space, rule, c, 0) for c in range(1, n)] + _majorizes(space, 0, range(1, n))
    return dict(rows=rows, factor=n, conditional=True, description=f"{rule.value} loser a is the Condorcet winner")


def _condorcet_class(space, opts):
    t: Tournament | None = opts.get("tournament")
    n = space.n
    if t is None:
        name = opts.get("class_name")
        classes = classify_tournaments(n)
        match = [c for c in classes if c.name == name] if name else classes[:1]
        if not match:
            raise BadOptions(f"unknown class {name!r}; known: {', '.join(c.name for c in classes)}")
        t, factor, label = match[0].representative, match[0].cardinality, match[0].name
    else:
        if t.n != n:
            raise BadOptions("tournament size differs from the candidate count")
        cls = next(c for c in classify_tournaments(n) if _same_orbit(c.representative, t))
        factor, label = cls.cardinality, cls.name
    rows = [pairwise_margin_row(space, w, l) for w, l in t.edges]
    return dict(rows=rows, factor=factor, description="majority relation equals the given tournament", code=t.code, **{"class": label})


def _same_orbit(a: Tournament, b: Tournament) -> bool:
    import itertools

    return any(a.relabel(p).code == b.code for p in itertools.permutations(range(a.n)))


_BUILDERS = {
    "condorcet_winner": (_condorcet_winner, False),
    "condorcet_paradox": (_condorcet_paradox, False),
    "rule_vs_runoff": (_rule_vs_runoff, True),
    "cond_eff_rule": (_cond_eff_rule, True),
    "cond_eff_rule_runoff": (_cond_eff_rule_runoff, True),
    "cw_and_2nd": (_cw_and_2nd, False),
    "strong_borda": (_strong_borda, True),
    "reverse_strong_borda": (_reverse_strong_borda, True),
    "condorcet_class": (_condorcet_class, False),
}
_ALIASES = {
    "condorcet": "condorcet_winner",
    "plur_vs_runoff": "rule_vs_runoff",
    "cond_eff_plur": "cond_eff_rule",
    "cond_eff_plur_runoff": "cond_eff_rule_runoff",
    "cwand2nd": "cw_and_2nd",
}
EVENT_NAMES = tuple(_BUILDERS) + ("eiac_condorcet_winner", "cond_eff_approval")


def build_event(
    name: str,
    n: int,
    rule: Rule | str | None = None,
    optimized: bool = False,
    indifference: bool = False,
    tournament: Tournament | None = None,
    class_name: str | None = None,
) -> VotingEvent:
    """Construct a catalog event for ``n`` candidates.

    ``optimized`` selects the reduced formulations (chained runoff rows,
    joint domination for ``cw_and_2nd``, inclusion–exclusion for
    ``cond_eff_rule_runoff``).  Plain and optimized forms have equal
    probabilities.
    """
    if n < 2:
        raise BadOptions("need at least two candidates")
    key = _ALIASES.get(name.lower(), name.lower())
    if key == "eiac_condorcet_winner":
        key, indifference = "condorcet_winner", True
    elif key == "cond_eff_approval":
        key, indifference, rule = "cond_eff_rule", True, Rule.AV
    if key not in _BUILDERS:
        raise UnknownEvent(f"unknown event {name!r}; known: {', '.join(EVENT_NAMES)}")
    builder, uses_rule = _BUILDERS[key]
    if n < 3 and key in ("rule_vs_runoff", "cond_eff_rule_runoff", "cw_and_2nd"):
        raise BadOptions(f"{key} needs at least three candidates")
    space = ranking_space(n, indifference)
    if uses_rule:
        default = Rule.AV if indifference else Rule.PR
        rule = Rule.parse(rule) if rule is not None else default
        if rule is Rule.AV and not indifference:
            raise ApprovalRequiresIndifference("approval voting needs indifference enabled")
    elif rule is not None:
        raise BadOptions(f"{key} does not take a rule")
    opts = {"rule": rule, "optimized": optimized, "tournament": tournament, "class_name": class_name}
    spec = builder(space, opts)
    recorded = {"optimized": optimized}
    if rule is not None:
        recorded["rule"] = rule.value
    if "class" in spec:
        recorded["class"] = spec["class"]
        recorded["tournament_code"] = spec["code"]
    return VotingEvent(
        name=key,
        space=space,
        rows=tuple(spec["rows"]),
        symmetry_factor=Fraction(spec["factor"]),
        corrections=tuple(spec.get("corrections", ())),
        complement=spec.get("complement", False),
        conditional=spec.get("conditional", False),
        description=spec["description"],
        options=recorded,
    )
