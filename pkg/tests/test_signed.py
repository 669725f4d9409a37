from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from signedvol import signed
from signedvol.cone import build_cone, check_full_dimensional
from signedvol.exact import FixedPointAccumulator
from signedvol.oracle import primal_volume
from signedvol.signed import (
    BoundaryHit,
    DegeneratePolytope,
    GenericityViolation,
    RetriesExhausted,
    UnboundedPolytope,
    choose_generic,
    evaluate_hollow,
    evaluate_star_simplex,
    genericity_range,
    indicator_check,
    lawrence_volume,
    star_decomposition,
)
from signedvol.triangulation import HollowFacet, hollow_triangulation, placing_triangulation

from systems import condorcet_cone, random_system, unit_simplex, unit_square


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def test_choose_generic_positive_and_reproducible():
    gens = [(1, 0), (0, 1)]
    for seed in range(20):
        ge = choose_generic(gens, seed)
        assert all(v >= 1 for v in ge.omega)
        assert ge == choose_generic(gens, seed)
    assert choose_generic(gens, 0, attempt=3).coefficient_range == 1 << 13


def test_genericity_range_grows_with_problem():
    assert genericity_range(1, 2, 0) == 1 << 10
    assert genericity_range(10**6, 120, 0) >= 2 * 10**6 * 121


def test_star_simplex_segment_by_hand():
    # segment x >= 0, x1 + x2 = 1 of lattice length 1; ω = (2, 1)
    rays = [(1, 0), (0, 1)]
    gamma = (1, 1)
    first = evaluate_star_simplex((2, 1), (0,), rays, gamma)
    second = evaluate_star_simplex((2, 1), (1,), rays, gamma)
    assert (first.sign, first.volume) == (-1, 1)
    assert (second.sign, second.volume) == (1, 2)  # all ℓ_i(γ) > 0
    assert first.sign * first.volume + second.sign * second.volume == 1


def test_star_simplex_omega_equal_to_gamma_is_degenerate():
    with pytest.raises(GenericityViolation):
        evaluate_star_simplex((1, 1), HollowFacet((0,), 0), [(1, 0), (0, 1)], (1, 1))


def test_star_simplex_is_scale_invariant():
    a = evaluate_star_simplex((2, 1), (1,), [(1, 0), (0, 1)], (1, 1))
    b = evaluate_star_simplex((6, 3), (1,), [(1, 0), (0, 5)], (1, 1))
    assert (a.sign, a.volume) == (b.sign, b.volume)


def test_unit_square_signed_decomposition():
    c = unit_square()
    for seed in range(10):
        star = star_decomposition(c, seed)
        assert sorted(s.sign for s in star) == [-1, -1, 1, 1]
        assert sum(s.sign * s.volume for s in star) == 2


def test_unit_square_hundred_seeds_without_retry():
    c = unit_square()
    retries = 0
    for seed in range(100):
        r = lawrence_volume(c, seed=seed)
        assert r.value == 2
        retries += r.attempts
    assert retries <= 2


def test_basic_volumes():
    assert lawrence_volume(unit_simplex(3)).value == 1
    assert lawrence_volume(unit_square()).value == 2
    assert lawrence_volume(condorcet_cone(3)).value * 3 == Fraction(15, 16)


def test_forced_retry(monkeypatch):
    real = signed.choose_generic

    def first_is_gamma(gens, seed=0, attempt=0, base_range=signed.DEFAULT_RANGE):
        ge = real(gens, seed, attempt, base_range)
        if attempt == 0:
            return signed.GenericElement((0, 0, 1), seed, attempt, base_range)
        return ge

    monkeypatch.setattr(signed, "choose_generic", first_is_gamma)
    r = lawrence_volume(unit_square())
    assert r.value == 2 and r.attempts == 1


def test_retries_exhausted(monkeypatch):
    monkeypatch.setattr(signed, "choose_generic", lambda gens, seed=0, attempt=0, base_range=0: signed.GenericElement((0, 0, 1), seed, attempt, 1))
    with pytest.raises(RetriesExhausted):
        lawrence_volume(unit_square(), max_retries=3)


def test_unbounded_and_degenerate():
    with pytest.raises(UnboundedPolytope):
        lawrence_volume(build_cone(2, [], [1, 0], nonnegative=True))
    with pytest.raises(DegeneratePolytope):
        lawrence_volume(build_cone(3, [[1, -1, 0], [-1, 1, 0]], [1, 1, 1], nonnegative=True))


def test_fast_evaluator_matches_reference():
    rng = random.Random(3)
    for _ in range(15):
        c = random_system(rng, rng.randint(3, 6), rng.randint(1, 3))
        gens = c.dual_generators()
        t = placing_triangulation(gens)
        h = hollow_triangulation(t)
        omega = choose_generic(gens, 1, 0, genericity_range(len(h), c.dim)).omega
        ref = sum((lambda s: s.sign * s.volume)(evaluate_star_simplex(omega, f, t.rays, c.grading)) for f in h)
        fast, terms = evaluate_hollow(h, c.grading, omega, None)
        assert terms == len(h)
        assert Fraction(int(fast.numerator), int(fast.denominator)) == ref


def test_seed_invariance():
    c = condorcet_cone(3)
    values = {lawrence_volume(c, seed=s).value for s in range(10)}
    assert values == {Fraction(5, 16)}


def test_same_seed_same_result():
    c = condorcet_cone(4)
    a = lawrence_volume(c, mode="fixed", digits=30, seed=5)
    b = lawrence_volume(c, mode="fixed", digits=30, seed=5)
    assert a.fixed_value == b.fixed_value and a.omega == b.omega


@pytest.mark.parametrize("scale", [None, 40])
def test_worker_invariance(scale):
    c = condorcet_cone(4)
    gens = c.dual_generators()
    h = hollow_triangulation(placing_triangulation(gens))
    omega = choose_generic(gens, 0, 0, genericity_range(len(h), c.dim)).omega
    results = {w: evaluate_hollow(h, c.grading, omega, scale, workers=w, batch=7) for w in (1, 4, 8)}
    assert results[1] == results[4] == results[8]


def test_worker_invariance_end_to_end():
    c = condorcet_cone(4)
    assert lawrence_volume(c, workers=1).value == lawrence_volume(c, workers=4).value == Fraction(1717, 8192)


def test_certified_strategy_matches_direct():
    c = condorcet_cone(4)
    direct = lawrence_volume(c, strategy="direct")
    certified = lawrence_volume(c, strategy="certified")
    assert certified.strategy == "certified"
    assert direct.value == certified.value


@given(st.integers(0, 10**9), st.sampled_from([10, 25, 60]))
def test_fixed_versus_exact(seed, digits):
    rng = random.Random(seed)
    c = random_system(rng, rng.randint(3, 5), rng.randint(1, 3))
    exact = lawrence_volume(c, seed=seed).value
    fixed = lawrence_volume(c, mode="fixed", digits=digits, seed=seed)
    assert isinstance(fixed.fixed_value, FixedPointAccumulator)
    assert fixed.error_bound == Fraction(fixed.simplex_count, 10**digits)
    assert abs(fixed.value - exact) <= fixed.error_bound


@given(st.integers(0, 10**9))
def test_sign_balance_positive(seed):
    rng = random.Random(seed)
    c = random_system(rng, rng.randint(2, 5), rng.randint(0, 3))
    star = star_decomposition(c, seed)
    assert sum(s.sign * s.volume for s in star) > 0


def random_point(rng: random.Random, c, spread: Fraction) -> list[Fraction]:
    """Random point on γ = 1 around an interior witness."""
    w = check_full_dimensional(c).witness
    while True:
        x = [v + spread * Fraction(rng.randint(-10**6, 10**6), 10**6) for v in w]
        g = c.degree(x)
        if g > 0:
            return [v / g for v in x]


def eq1_holds(c, star, rng, points: int) -> bool:
    checked = 0
    while checked < points:
        x = random_point(rng, c, Fraction(2))
        try:
            value = indicator_check(c, star, x)
        except BoundaryHit:
            continue
        inside = all(dot(r, x) > 0 for r in c.constraint_rows())
        if value != int(inside):
            return False
        checked += 1
    return True


def test_indicator_examples():
    c = unit_square()
    star = star_decomposition(c)
    assert indicator_check(c, star, [Fraction(1, 2), Fraction(1, 2), 1]) == 1
    assert indicator_check(c, star, [Fraction(3, 2), Fraction(1, 3), 1]) == 0
    with pytest.raises(BoundaryHit):
        indicator_check(c, star, [0, Fraction(1, 2), 1])


def test_indicator_identity_four_dimensional():
    rng = random.Random(44)
    for _ in range(10):
        c = random_system(rng, 4, rng.randint(1, 3))
        assert eq1_holds(c, star_decomposition(c, rng.randrange(1000)), rng, 100)


def test_oracle_agreement_small():
    rng = random.Random(5)
    for _ in range(25):
        c = random_system(rng, rng.randint(2, 5), rng.randint(0, 3))
        assert lawrence_volume(c).value == primal_volume(c)
