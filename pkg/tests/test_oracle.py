from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from signedvol.cone import build_cone
from signedvol.oracle import (
    DegeneratePolytope,
    DimensionTooLarge,
    enumerate_vertices,
    monte_carlo,
    primal_volume,
    sample_profiles,
)
from signedvol.voting import VotingEvent, build_event, linear_orders

from systems import condorcet_cone, random_system, unit_simplex, unit_square


def test_vertices_examples():
    assert enumerate_vertices(unit_simplex(3)).vertices == ((0, 0, 1), (0, 1, 0), (1, 0, 0))
    assert enumerate_vertices(unit_square()).vertices == ((0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1))


def test_vertices_condorcet_three():
    c = condorcet_cone(3)
    vs = enumerate_vertices(c)
    for v in vs.vertices:
        assert c.contains(v) and c.degree(v) == 1
    assert 3 * primal_volume(c) == Fraction(15, 16)


def test_vertices_invariant_under_permutation_and_scaling():
    rng = random.Random(9)
    for _ in range(20):
        c = random_system(rng, rng.randint(3, 5), 3)
        rows = []
        for r in c.inequalities:
            k = rng.randint(1, 4)
            rows.append(tuple(k * v for v in r))
        rng.shuffle(rows)
        raw = build_cone(c.dim, rows, c.grading, nonnegative=True)
        assert enumerate_vertices(raw) == enumerate_vertices(c)


def test_dimension_guard():
    with pytest.raises(DimensionTooLarge):
        enumerate_vertices(unit_simplex(11))
    with pytest.raises(DimensionTooLarge):
        primal_volume(unit_simplex(11))


def test_primal_examples():
    assert primal_volume(unit_simplex(3)) == 1
    assert primal_volume(unit_square()) == 2
    with pytest.raises(DegeneratePolytope):
        primal_volume(build_cone(3, [[1, -1, 0], [-1, 1, 0]], [1, 1, 1], nonnegative=True))


def test_sample_profiles_on_simplex():
    x = sample_profiles(6, 1000, np.random.default_rng(0))
    assert x.shape == (1000, 6)
    assert np.allclose(x.sum(axis=1), 1) and (x >= 0).all()


def test_monte_carlo_full_simplex():
    ev = VotingEvent("simplex", linear_orders(3), (), Fraction(1))
    est = monte_carlo(ev, 1000)
    assert est.estimate == 1.0 and est.stderr == 0.0


def test_monte_carlo_condorcet_three():
    exact = 3 * primal_volume(condorcet_cone(3))
    est = monte_carlo(build_event("condorcet", 3), 10**6, seed=1)
    assert est.sigmas_from(float(exact)) < 4


def test_monte_carlo_reproducible_and_worker_free():
    ev = build_event("condorcet", 3)
    assert monte_carlo(ev, 20_000, seed=4, block=5000) == monte_carlo(ev, 20_000, seed=4, block=5000, workers=2)


def test_monte_carlo_error_shrinks_with_samples():
    ev = build_event("condorcet", 4)
    small = monte_carlo(ev, 200_000, seed=2)
    large = monte_carlo(ev, 400_000, seed=2)
    assert large.stderr == pytest.approx(small.stderr / 2**0.5, rel=0.05)
    # empirical spread across seeds matches the reported error
    estimates = [monte_carlo(ev, 20_000, seed=s).estimate for s in range(40)]
    assert np.std(estimates, ddof=1) == pytest.approx(monte_carlo(ev, 20_000).stderr, rel=0.35)


def test_monte_carlo_conditional_ratio():
    ev = build_event("cond_eff_rule", 3, rule="BR")
    num = 3 * primal_volume(ev.cone())
    exact = num / Fraction(15, 16)
    est = monte_carlo(ev, 300_000, seed=5)
    assert est.sigmas_from(float(exact)) < 4
    with pytest.raises(ValueError):
        monte_carlo(ev, 10)
