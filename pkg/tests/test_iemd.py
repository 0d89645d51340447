import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gngiemd.features import Signature
from gngiemd.iemd import (brute_force_iemd, cost_matrix, iemd, iemd_matrix, l1_mass, solve_flow,
                          unit_mass, write_distance_csv)
from oracles import loop_cost, permutation_emd

weights = arrays(np.float64, (6, 7), elements=st.floats(0, 1))


def sig(w, real=6):
    w = np.array(w, dtype=float)
    w[real:] = 0
    return Signature(w, real)


def random_sig(rng):
    real = int(rng.integers(0, 7))
    return sig(rng.random((6, 7)), real)


def check_flow(f, supply, demand, tol=1e-9):
    assert np.all(f >= -tol)
    assert np.all(f.sum(axis=1) <= supply + tol)
    assert np.all(f.sum(axis=0) <= demand + tol)
    assert f.sum() == pytest.approx(min(supply.sum(), demand.sum()), abs=tol)


def test_identical_signatures_zero_diagonal():
    p = random_sig(np.random.default_rng(0))
    assert np.all(np.diag(cost_matrix(p, p)) == 0)


def test_virtual_vs_unit_cluster():
    p = sig(np.zeros((6, 7)), 0)
    w = np.zeros((6, 7))
    w[0, 0] = 1
    q = sig(w, 1)
    c = cost_matrix(p, q)
    assert c[0, 0] == 1.0 and c[1, 0] == 2.0


@given(weights, weights)
def test_cost_matches_loop_formula(a, b):
    assert np.allclose(cost_matrix(a, b), loop_cost(a, b), rtol=1e-12, atol=1e-12)


@given(weights, weights)
def test_off_diagonal_penalty_ratio(a, b):
    c = cost_matrix(a, b)
    d = np.linalg.norm(a[:, None] - b[None], axis=2)
    for i in range(6):
        for j in range(6):
            if i != j and d[i, j] > 1e-9:
                assert c[i, j] / d[i, j] == pytest.approx((i + 1) * (j + 1))


def test_identity_favoring_cost():
    c = np.ones((6, 6)) - np.eye(6)
    f = solve_flow(c, unit_mass(), unit_mass())
    assert np.array_equal(f, np.eye(6))
    assert (c * f).sum() == 0


def test_two_cluster_instance():
    c = np.array([[1.0, 2.0], [3.0, 1.0]])
    f = solve_flow(c, np.ones(2), np.ones(2))
    assert np.array_equal(f, np.eye(2)) and (c * f).sum() == 2


def test_two_cluster_embedded_in_six():
    p = np.zeros((6, 7))
    q = np.zeros((6, 7))
    p[0, 0], q[0, 0] = 1.0, 0.5
    p[1, 1], q[1, 2] = 1.0, 1.0
    assert iemd(p, q) == pytest.approx(brute_force_iemd(p, q), abs=1e-12)
    assert iemd(p, q) == pytest.approx(permutation_emd(p, q), abs=1e-12)


def test_negative_mass_rejected():
    with pytest.raises(ValueError, match="negative"):
        solve_flow(np.ones((6, 6)), -np.ones(6), np.ones(6))


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_flow(np.ones((6, 5)), np.ones(6), np.ones(6))


def test_one_real_cluster_against_empty():
    w = np.zeros((6, 7))
    w[0, 0] = 1
    p, q = sig(w, 1), sig(np.zeros((6, 7)), 0)
    assert iemd(p, q) == pytest.approx(1 / 6, abs=1e-12)
    assert brute_force_iemd(p, q) == pytest.approx(1 / 6, abs=1e-12)
    assert permutation_emd(w, np.zeros((6, 7))) == pytest.approx(1 / 6, abs=1e-12)


def test_swapped_clusters():
    rng = np.random.default_rng(4)
    w = rng.random((6, 7))
    p = sig(w, 3)
    ws = w.copy()
    ws[[0, 1]] = ws[[1, 0]]
    # the penalty multiplies the distance, so an exact swap is matched for free
    assert iemd(p, sig(ws, 3)) == 0
    # once the swapped clusters also change, crossing costs i*j times more
    q = ws.copy()
    q[0] += 0.1
    q[1] += 0.1
    c = cost_matrix(p, sig(q, 3))
    assert c[0, 1] == pytest.approx(2 * np.linalg.norm(w[0] - q[1]))
    assert iemd(p, sig(q, 3)) > 0


def test_random_costs_match_permutations():
    rng = np.random.default_rng(9)
    for _ in range(50):
        c = rng.random((6, 6))
        f = solve_flow(c, unit_mass(), unit_mass())
        check_flow(f, np.ones(6), np.ones(6))
        best = min(sum(c[i, p[i]] for i in range(6)) for p in itertools.permutations(range(6)))
        assert (c * f).sum() == pytest.approx(best, abs=1e-12)


@given(weights, weights)
def test_oracle_equivalence(a, b):
    assert abs(iemd(a, b) - brute_force_iemd(a, b)) < 1e-9
    assert abs(iemd(a, b) - permutation_emd(a, b)) < 1e-9


@given(weights, weights)
def test_identity_and_symmetry(a, b):
    assert iemd(a, a) == 0
    assert abs(iemd(a, b) - iemd(b, a)) <= 1e-12
    assert iemd(a, b) >= 0


@given(weights, weights)
def test_general_masses_feasible(a, b):
    s, t = l1_mass(a), l1_mass(b)
    f = solve_flow(cost_matrix(a, b), s, t)
    check_flow(f, s, t, tol=1e-7)


def test_unequal_masses_use_lp():
    c = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = solve_flow(c, np.array([2.0, 0.0]), np.array([1.0, 1.0]))
    assert np.allclose(f, [[1.0, 1.0], [0.0, 0.0]])


def test_matrix_matches_pairwise(tmp_path):
    rng = np.random.default_rng(2)
    sigs = [random_sig(rng) for _ in range(8)]
    d = iemd_matrix(sigs)
    assert np.all(np.diag(d) == 0) and np.array_equal(d, d.T)
    for i in range(8):
        for j in range(8):
            assert d[i, j] == pytest.approx(iemd(sigs[i], sigs[j]), abs=1e-12)
    cross = iemd_matrix(sigs[:3], sigs[3:])
    assert cross.shape == (3, 5)
    assert cross[1, 2] == pytest.approx(d[1, 5], abs=1e-12)
    write_distance_csv(cross, tmp_path / "d.csv")
    rows = (tmp_path / "d.csv").read_text().splitlines()
    assert len(rows) == 3 and len(rows[0].split(",")) == 5
