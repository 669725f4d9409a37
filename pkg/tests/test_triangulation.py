from __future__ import annotations

import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from signedvol.cone import check_full_dimensional
from signedvol.exact import SingularMatrix, dual_basis_rows, lattice_kernel_basis
from signedvol.simplex_basis import RayTable, bit_indices, indices_mask
from signedvol.triangulation import NotFullDimensional, hollow_triangulation, placing_triangulation

from systems import condorcet_cone, random_system, unit_square


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def facet_counts(t):
    counts: Counter = Counter()
    for s in t.simplices():
        for f in itertools.combinations(s, len(s) - 1):
            counts[f] += 1
    return counts


def _prod(values):
    out = Fraction(1)
    for v in values:
        out *= v
    return out


def random_generators(seed: int):
    rng = random.Random(seed)
    dim = rng.randint(2, 6)
    c = random_system(rng, dim, rng.randint(1, 4))
    return c, list(c.constraint_rows())


def test_simplicial_cone():
    t = placing_triangulation([(1, 0), (0, 1)])
    assert t.simplices() == [(0, 1)]
    h = hollow_triangulation(t)
    assert len(h) == 2
    assert {f.ray_indices for f in h} == {(0,), (1,)}


def test_interior_generator_placed_last_is_skipped():
    # placing only joins generators outside the current cone
    t = placing_triangulation([(1, 0), (0, 1), (1, 1)])
    assert t.simplices() == [(0, 1)]
    assert sorted(f.ray_indices for f in hollow_triangulation(t)) == [(0,), (1,)]


def test_interior_generator_placed_second():
    t = placing_triangulation([(1, 0), (1, 1), (0, 1)])
    assert len(t) == 2
    assert sorted(f.ray_indices for f in hollow_triangulation(t)) == [(0,), (2,)]


def test_single_simplex_all_facets_hollow():
    for d in range(2, 7):
        t = placing_triangulation([tuple(int(i == k) for i in range(d)) for k in range(d)])
        h = hollow_triangulation(t)
        assert len(t) == 1 and len(h) == d
        assert all(f.parent == 0 for f in h)


def test_rank_deficient():
    with pytest.raises(NotFullDimensional):
        placing_triangulation([(1, 0, 0), (0, 1, 0), (1, 1, 0)])


def test_bitmask_helpers():
    assert bit_indices(0b10110) == [1, 2, 4]
    assert indices_mask([1, 2, 4]) == 0b10110


def test_simplex_basis_coords():
    table = RayTable.from_rays([(1, 0, 0), (1, 1, 0), (0, 0, 1), (1, 2, 3)])
    b = table.basis(indices_mask([1, 2, 3]))
    v = (1, 0, 0)
    coords = b.coords(v)
    rebuilt = [sum(Fraction(c, b.abs_det) * table.rays[i][k] for c, i in zip(coords, b.indices)) for k in range(3)]
    assert rebuilt == list(v)
    with pytest.raises(SingularMatrix):
        RayTable.from_rays([(1, 0), (2, 0)]).basis(0b11)


def test_condorcet_three_sizes():
    t = placing_triangulation(condorcet_cone(3).dual_generators())
    h = hollow_triangulation(t)
    counts = facet_counts(t)
    assert len(h) == sum(1 for v in counts.values() if v == 1)


@given(st.integers(0, 10**9))
def test_facet_parity_and_hollow_set(seed):
    _, gens = random_generators(seed)
    t = placing_triangulation(gens)
    counts = facet_counts(t)
    assert set(counts.values()) <= {1, 2}
    h = hollow_triangulation(t)
    assert sorted(f.ray_indices for f in h) == sorted(f for f, v in counts.items() if v == 1)
    for f in h:
        assert set(f.ray_indices) < set(t.simplex(f.parent))


@given(st.integers(0, 10**9))
def test_hollow_facets_span_support_hyperplanes(seed):
    _, gens = random_generators(seed)
    t = placing_triangulation(gens)
    for f in hollow_triangulation(t):
        (normal,) = lattice_kernel_basis([t.rays[i] for i in f.ray_indices], t.dim)
        values = [dot(normal, g) for g in gens]
        assert all(v >= 0 for v in values) or all(v <= 0 for v in values)


@given(st.integers(0, 10**9))
def test_partitioned_hollow_extraction_agrees(seed):
    _, gens = random_generators(seed)
    t = placing_triangulation(gens)
    base = sorted(f.ray_indices for f in hollow_triangulation(t, partitions=1))
    assert sorted(f.ray_indices for f in hollow_triangulation(t, partitions=3)) == base


def test_volume_partition_independent_of_order():
    """Σ |det σ| / Π <r, x> is the volume of the cone truncated by an interior form.

    Raw Σ |det σ| depends on the triangulation; the truncated volume does not.
    """
    for seed in range(100):
        c, gens = random_generators(seed)
        x = check_full_dimensional(c).witness
        rng = random.Random(seed)
        order = list(range(len(gens)))
        rng.shuffle(order)
        t1 = placing_triangulation(gens)
        t2 = placing_triangulation(gens, order=order)
        for t in (t1, t2):
            for d, s in zip(t.dets, t.simplices()):
                assert d == abs(_det([t.rays[i] for i in s])) != 0
        v1 = sum(Fraction(d) / _prod(dot(t1.rays[i], x) for i in s) for d, s in zip(t1.dets, t1.simplices()))
        v2 = sum(Fraction(d) / _prod(dot(t2.rays[i], x) for i in s) for d, s in zip(t2.dets, t2.simplices()))
        assert v1 == v2


def _det(m):
    from signedvol.exact import det_fraction_free

    return det_fraction_free(m)


def test_pointwise_cover():
    rng = random.Random(11)
    for seed in range(10):
        _, gens = random_generators(seed)
        t = placing_triangulation(gens)
        duals = [dual_basis_rows([t.rays[i] for i in s]) for s in t.simplices()]
        for _ in range(100):
            coeffs = [rng.randint(0, 50) for _ in gens]
            p = [sum(a * g[k] for a, g in zip(coeffs, gens)) for k in range(t.dim)]
            if not any(p):
                continue
            inside = interior = 0
            for db in duals:
                vals = [dot(form, p) for form in db.forms]
                if all(v >= 0 for v in vals):
                    inside += 1
                    if all(v > 0 for v in vals):
                        interior += 1
            assert inside >= 1
            assert interior <= 1


def test_square_dual_cone():
    t = placing_triangulation(unit_square().dual_generators())
    assert len(t) == 2
    assert len(hollow_triangulation(t)) == 4
