from __future__ import annotations

import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asymptheta.linalg import (LatticeError, column_hermite, coset_representatives, det, hermite_complement,
                               integer_kernel, inverse, is_saturated, lattice_index, matmul, nullspace, primitive,
                               rank, rref, saturate, solve)

ints = st.integers(min_value=-6, max_value=6)


def square(n):
    return st.lists(st.lists(ints, min_size=n, max_size=n), min_size=n, max_size=n)


@given(st.integers(1, 4).flatmap(square))
def test_det_and_rank_match_numpy(m):
    a = np.array(m, dtype=float)
    assert abs(float(det(m)) - np.linalg.det(a)) < 1e-6 * max(1.0, abs(np.linalg.det(a)))
    assert rank(m) == np.linalg.matrix_rank(a)


@given(st.integers(1, 4).flatmap(square))
def test_inverse_is_exact(m):
    if det(m) == 0:
        with pytest.raises(ValueError):
            inverse(m)
        return
    prod = matmul(m, inverse(m))
    assert prod == [[F(int(i == j)) for j in range(len(m))] for i in range(len(m))]


@given(st.lists(st.lists(ints, min_size=4, max_size=4), min_size=1, max_size=3))
def test_nullspace_and_integer_kernel(m):
    for v in nullspace(m, 4):
        assert all(sum(F(a) * b for a, b in zip(row, v)) == 0 for row in m)
    kern = integer_kernel(m, 4)
    assert len(kern) == 4 - rank(m)
    for v in kern:
        assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in m)
    if kern:
        # the integer kernel is saturated
        assert is_saturated(kern, 4)


@given(st.lists(st.lists(ints, min_size=3, max_size=3), min_size=1, max_size=3))
def test_column_hermite_is_unimodular(m):
    h, u = column_hermite(m)
    assert abs(det(u)) == 1
    assert matmul(m, u) == [[F(x) for x in row] for row in h]


def test_rref_and_solve():
    r, piv = rref([[2, 4], [1, 3]])
    assert piv == [0, 1] and r == [[1, 0], [0, 1]]
    assert solve([[1, 1], [1, -1]], [3, 1]) == [2, 1]
    assert solve([[1, 1], [2, 2]], [1, 3]) is None


def test_primitive():
    assert primitive([F(2), F(4)]) == (1, 2)
    assert primitive([F(1, 2), F(-1, 3)]) == (3, -2)


def test_hermite_complement_examples():
    assert hermite_complement([[1, 1]], 2) == [[0, 1]]
    assert abs(det([[1, 1], [0, 1]])) == 1
    assert hermite_complement([[1, 0], [0, 1]], 2) == []
    comp = hermite_complement([[1, -1]], 2)
    assert abs(det([[1, -1]] + comp)) == 1


def test_hermite_complement_rejects_unsaturated():
    with pytest.raises(LatticeError, match="saturate"):
        hermite_complement([[2, 0]], 2)


@given(st.lists(st.lists(ints, min_size=3, max_size=3), min_size=1, max_size=2))
def test_complement_of_saturation_is_unimodular(vectors):
    if rank(vectors) == 0:
        return
    sat = saturate(vectors, 3)
    comp = hermite_complement(sat, 3)
    assert abs(det(sat + comp)) == 1


def test_coset_representatives_count_equals_index():
    reps = coset_representatives([[1, 0], [1, 2]])
    assert len(reps) == 2
    # generators (1,0) and (1,2): the point is a*(1,0) + b*(1,2)
    points = sorted((int(a + b), int(2 * b)) for a, b in reps)
    assert points == [(0, 0), (1, 1)]


@given(st.integers(1, 3).flatmap(square))
def test_coset_representatives_are_distinct_lattice_points(m):
    if det(m) == 0:
        return
    reps = coset_representatives(m)
    assert len(reps) == abs(det(m))
    pts = set()
    for frac in reps:
        assert all(0 <= x < 1 for x in frac)
        p = tuple(sum(f * m[j][i] for j, f in enumerate(frac)) for i in range(len(m)))
        assert all(x.denominator == 1 for x in p)
        pts.add(p)
    assert len(pts) == len(reps)


def test_lattice_index():
    assert lattice_index([[2, 0], [0, 3]], [[1, 0], [0, 1]]) == 6
    assert lattice_index([[1, 1]], [[1, 1]]) == 1


def test_brute_force_coset_count():
    gens = [[2, 1], [0, 3]]
    reps = coset_representatives(gens)
    # lattice points of the half-open parallelogram, counted directly
    count = 0
    for x, y in itertools.product(range(-1, 4), range(-1, 5)):
        # solve x = 2a, y = a + 3b
        a = F(x, 2)
        b = (y - a) / 3
        if 0 <= a < 1 and 0 <= b < 1:
            count += 1
    assert count == len(reps) == 6
