"""Voting-event polytopes under the uniform anonymous-profile model."""

from .events import (
    ApprovalRequiresIndifference,
    BadOptions,
    EVENT_NAMES,
    EventTerm,
    Rule,
    UnknownEvent,
    VotingEvent,
    build_event,
    pairwise_margin_row,
    score_difference_row,
    score_row,
)
from .rankings import RankingSpace, enumerate_weak_orders, linear_orders, ranking_space
from .tournaments import Tournament, TournamentClass, classify_tournaments

__all__ = [
    "ApprovalRequiresIndifference",
    "BadOptions",
    "EVENT_NAMES",
    "EventTerm",
    "RankingSpace",
    "Rule",
    "Tournament",
    "TournamentClass",
    "UnknownEvent",
    "VotingEvent",
    "build_event",
    "classify_tournaments",
    "enumerate_weak_orders",
    "linear_orders",
    "pairwise_margin_row",
    "ranking_space",
    "score_difference_row",
    "score_row",
]
