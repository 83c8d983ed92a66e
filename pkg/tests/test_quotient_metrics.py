import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from orbitlab import group_actions as ga
from orbitlab import quotient_metrics as qm
from orbitlab.errors import DimensionMismatch, EmptyGlueSet, InvalidAction, NotSquare, SizeMismatch

SIGN2 = ga.FiniteLinear(2, (np.eye(2), -np.eye(2)))
C4 = ga.FiniteLinear(2, tuple(oracles.dihedral_matrices(4, rotations_only=True)))


@pytest.mark.parametrize("action,x,y,expected", [
    (SIGN2, [1.0, 0.0], [-1.0, 0.0], 0.0),
    (C4, [1.0, 0.0], [0.0, 1.0], 0.0),
    (SIGN2, [1.0, 0.0], [0.0, 1.0], math.sqrt(2)),
])
def test_finite_linear_examples(action, x, y, expected):
    assert qm.dist_finite_linear(action, np.array(x), np.array(y)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("kind,n,mats", [
    ("A", 4, oracles.permutation_matrices(4)),
    ("B", 3, oracles.signed_permutation_matrices(3)),
    ("I2", 6, oracles.dihedral_matrices(6)),
])
def test_finite_linear_vs_bruteforce(kind, n, mats):
    spec = ga.ReflectionGroup(kind, n)
    rng = ga.make_rng(3)
    X = ga.random_point(spec, 1.0, rng, size=100)
    Y = ga.random_point(spec, 1.0, rng, size=100)
    got = qm.dist_finite_linear(spec, X, Y)
    want = [oracles.group_bruteforce(mats, x, y) for x, y in zip(X, Y)]
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("r,u,v,expected", [
    (4, [1], [1j], 0.0),
    (2, [1], [1j], math.sqrt(2)),
    (3, [1, 0], [0, 1], math.sqrt(2)),
])
def test_scalar_cyclic_examples(r, u, v, expected):
    assert qm.dist_scalar_cyclic(r, np.array(u), np.array(v)) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("r", [2, 3, 5, 8])
def test_scalar_cyclic_matches_bruteforce_and_formula(r):
    spec = ga.ScalarCyclic(r, 3)
    rng = ga.make_rng(r)
    U = ga.random_point(spec, 1.0, rng, size=100)
    V = ga.random_point(spec, 1.0, rng, size=100)
    got = qm.dist_scalar_cyclic(r, U, V)
    np.testing.assert_allclose(got, [oracles.cyclic_bruteforce(r, u, v) for u, v in zip(U, V)], atol=1e-12)
    np.testing.assert_allclose(got, qm.dist_finite_linear(spec, U, V), atol=1e-12)
    np.testing.assert_allclose(got, qm.dist_scalar_cyclic_formula(r, U, V), atol=1e-7)
    assert np.all(qm.dist_circle_scalar(U, V) <= got + 1e-12)


def test_scalar_cyclic_rejects_r1():
    with pytest.raises(InvalidAction):
        qm.dist_scalar_cyclic(1, np.ones(1), np.ones(1))


def test_circle_scalar_examples_and_grid():
    assert qm.dist_circle_scalar(np.array([1.0 + 0j]), np.array([np.exp(0.7j)])) == pytest.approx(0, abs=1e-15)
    assert qm.dist_circle_scalar(np.array([1, 0j]), np.array([0, 1 + 0j])) == pytest.approx(math.sqrt(2))
    rng = ga.make_rng(4)
    spec = ga.CircleScalar(3)
    U = ga.random_point(spec, 1.0, rng, size=100)
    V = ga.random_point(spec, 1.0, rng, size=100)
    got = qm.dist_circle_scalar(U, V)
    want = [oracles.circle_grid_distance(u, v) for u, v in zip(U, V)]
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_orthogonal_examples():
    I, F = np.eye(2), np.diag([1.0, -1.0])
    assert qm.dist_orthogonal(I, F) == pytest.approx(0, abs=1e-15)
    assert qm.dist_special_orthogonal(I, F) == pytest.approx(2.0, abs=1e-12)
    assert oracles.o2_grid_distance(I, F, special=True) == pytest.approx(2.0, abs=1e-9)
    X = np.random.default_rng(0).standard_normal((3, 4))
    assert qm.dist_orthogonal(X, X) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_orthogonal_vs_angle_grid(n):
    rng = ga.make_rng(10 + n)
    X = rng.standard_normal((100, 2, n))
    Y = rng.standard_normal((100, 2, n))
    got_o = qm.dist_orthogonal(X, Y)
    got_so = qm.dist_special_orthogonal(X, Y)
    want_o = [oracles.o2_grid_distance(x, y) for x, y in zip(X, Y)]
    want_so = [oracles.o2_grid_distance(x, y, special=True) for x, y in zip(X, Y)]
    np.testing.assert_allclose(got_o, want_o, atol=1e-6)
    np.testing.assert_allclose(got_so, want_so, atol=1e-6)
    np.testing.assert_allclose(got_o, qm.dist_orthogonal_formula(X, Y), atol=1e-6)
    np.testing.assert_allclose(got_so, qm.dist_special_orthogonal_formula(X, Y), atol=1e-6)
    assert np.all(got_so >= got_o - 1e-12)


def test_orthogonal_frozen_value():
    X = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]])
    Y = np.array([[0.5, -1.0, 2.0], [1.0, 1.0, 0.0]])
    # frozen from the angle-grid oracle
    assert qm.dist_orthogonal(X, Y) == pytest.approx(oracles.o2_grid_distance(X, Y), abs=1e-9)
    assert qm.dist_orthogonal(X, Y) == pytest.approx(1.4860704630695356, abs=1e-9)


def test_same_orbit_is_zero():
    rng = ga.make_rng(5)
    X = rng.standard_normal((3, 5))
    Q = ga.haar_special_orthogonal(3, rng)
    assert qm.dist_special_orthogonal(X, Q @ X) < 1e-10
    Z = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    assert qm.dist_unitary(Z, np.exp(0.4j) * Z) < 1e-10
    assert qm.dist_unitary(Z, Z) < 1e-12


def test_unitary_1xn_is_circle():
    rng = ga.make_rng(6)
    Z = rng.standard_normal((50, 1, 3)) + 1j * rng.standard_normal((50, 1, 3))
    W = rng.standard_normal((50, 1, 3)) + 1j * rng.standard_normal((50, 1, 3))
    np.testing.assert_allclose(qm.dist_unitary(Z, W), qm.dist_circle_scalar(Z[:, 0], W[:, 0]), atol=1e-10)
    np.testing.assert_allclose(qm.dist_unitary(Z, W), qm.dist_unitary_formula(Z, W), atol=1e-7)


def test_haar_oracle_upper_bounds_closed_form():
    rng = ga.make_rng(8)
    X = rng.standard_normal((20, 2, 3))
    Y = rng.standard_normal((20, 2, 3))
    haar = qm.MetricOracle(ga.OrthogonalLeft(2, 3), "haar_sample_min", haar_samples=4000)(X, Y)
    exact = qm.dist_orthogonal(X, Y)
    assert np.all(haar >= exact - 1e-12)
    assert np.all(haar - exact < 0.05)


@pytest.mark.parametrize("M,expected", [
    (np.zeros((2, 2)), 0.0),
    (np.diag([2.0, 1.0]), 3.0),
    (np.diag([2.0, -1.0]), 1.0),
])
def test_so_trace_max_examples(M, expected):
    assert qm.so_trace_max(M) == pytest.approx(expected, abs=1e-14)
    assert oracles.so2_trace_max_grid(M) == pytest.approx(expected, abs=1e-9)


def test_so_trace_max_needs_square():
    with pytest.raises(NotSquare):
        qm.so_trace_max(np.ones((2, 3)))


def test_so_trace_max_3x3_sampled():
    rng = ga.make_rng(9)
    for M in rng.standard_normal((30, 3, 3)):
        want = oracles.so3_trace_max_search(M, samples=500)
        got = float(qm.so_trace_max(M))
        assert got >= want - 1e-6
        assert got <= want + 1e-3


def test_so_indicator_is_branch_free_at_singular_m():
    M = np.diag([1.0, 1e-17, -0.0])
    M[2, 2] = -1e-18
    assert qm.so_trace_max(M) == pytest.approx(1.0, abs=1e-12)


def test_permutation_examples():
    x = np.array([[0.0, 1.0]])
    assert qm.dist_permutation_wasserstein(x, x[:, ::-1]) == pytest.approx(0)
    rng = ga.make_rng(12)
    a = rng.standard_normal((3, 5))
    assert qm.dist_permutation_wasserstein(a, a[:, rng.permutation(5)]) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_permutation_vs_bruteforce(d):
    rng = ga.make_rng(20 + d)
    for _ in range(20):
        x, y = rng.standard_normal((2, d, 4))
        assert qm.dist_permutation_wasserstein(x, y) == pytest.approx(oracles.permutation_bruteforce(x, y), abs=1e-10)


def test_permutation_size_mismatch():
    with pytest.raises((SizeMismatch, DimensionMismatch)):
        qm.dist_permutation_wasserstein(np.zeros((2, 3)), np.zeros((2, 4)))


def test_euclidean_family_invariances():
    rng = ga.make_rng(13)
    x = rng.standard_normal((2, 5))
    b = rng.standard_normal(2)
    assert qm.dist_euclidean_family("E", x, x + b[:, None]) < 1e-12
    A = ga.haar_orthogonal(2, rng)
    assert qm.dist_euclidean_family("E", x, A @ x + b[:, None]) < 1e-10
    F = np.diag([1.0, -1.0])
    y = F @ x + b[:, None]
    xc, yc = qm.center_columns(x), qm.center_columns(y)
    want = oracles.o2_grid_distance(xc, yc, special=True)
    assert qm.dist_euclidean_family("SE", x, y) == pytest.approx(want, abs=1e-6)
    with pytest.raises(SizeMismatch):
        qm.dist_euclidean_family("E", np.zeros((2, 1)), np.zeros((2, 1)))


@pytest.mark.parametrize("L,x,y,expected", [
    ((1.0,), [0.0], [0.5], 0.5),
    ((1.0,), [0.0], [0.9], 0.1),
    ((1.0, 2.0), [0.0, 0.0], [0.5, 1.0], math.sqrt(1.25)),
])
def test_rect_torus_examples(L, x, y, expected):
    assert qm.dist_rect_torus(L, np.array(x), np.array(y)) == pytest.approx(expected, abs=1e-15)


def test_o_rect_matches_torus():
    spec = ga.Wallpaper("o-rect", 1.0, 1.0)
    rng = ga.make_rng(14)
    X = rng.uniform(-3, 3, (100, 2))
    Y = rng.uniform(-3, 3, (100, 2))
    np.testing.assert_allclose(qm.dist_wallpaper(spec, X, Y), qm.dist_rect_torus((1.0, 1.0), X, Y), atol=1e-12)


@pytest.mark.parametrize("sig,a,b", [("**", 1.0, 1.5), ("2*22", 1.0, 0.7), ("4*2", 1.3, 1.3), ("xx", 2.0, 1.0)])
def test_wallpaper_vs_orbit_search(sig, a, b):
    spec = ga.Wallpaper(sig, a, b)
    rng = ga.make_rng(15)
    X = rng.uniform(-4, 4, (40, 2))
    Y = rng.uniform(-4, 4, (40, 2))
    got = qm.dist_wallpaper(spec, X, Y)
    want = [oracles.wallpaper_bruteforce(sig, a, b, x, y) for x, y in zip(X, Y)]
    np.testing.assert_allclose(got, want, atol=1e-12)
    # the tighter enumeration radius gives the same minimum as doubling it
    np.testing.assert_allclose(got, qm.dist_wallpaper(spec, X, Y, radius_scale=2.0), atol=1e-15)


def test_wallpaper_same_orbit_examples():
    x = np.array([0.3, 0.45])
    mirrored = np.array([-0.3, 0.45])
    assert qm.dist_wallpaper(ga.Wallpaper("**", 1.0, 1.0), x, mirrored) < 1e-15
    c = np.array([0.5, 0.5])
    quarter = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert qm.dist_wallpaper(ga.Wallpaper("4*2", 1.0, 1.0), x, quarter @ (x - c) + c) < 1e-14


def _disk(y):
    return np.abs(1 - np.linalg.norm(y, axis=-1))


def test_glued_examples():
    t = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    Z = np.stack([np.cos(t), np.sin(t)], axis=1)
    p = np.array([0.2, -0.1, 1.0])
    q = np.array([0.5, 0.3, 1.0])
    assert qm.dist_glued(qm.euclidean, Z, p, q) == pytest.approx(np.linalg.norm(p[:2] - q[:2]))
    z = np.array([Z[17, 0], Z[17, 1], 1.0])
    assert qm.dist_glued(qm.euclidean, Z, z, z * [1, 1, -1]) == pytest.approx(0, abs=1e-15)
    centre_up, centre_down = np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])
    assert qm.dist_glued(qm.euclidean, Z, centre_up, centre_down) == pytest.approx(2.0, abs=1e-12)
    assert oracles.glued_disk_distance(centre_up, centre_down) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(EmptyGlueSet):
        qm.dist_glued(qm.euclidean, np.zeros((0, 2)), centre_up, centre_down)


def test_oracle_strategy_validation():
    with pytest.raises(InvalidAction):
        qm.MetricOracle(ga.OrthogonalLeft(2, 2), "assignment")
    with pytest.raises(InvalidAction):
        qm.MetricOracle(ga.ScalarCyclic(3, 1), "nonsense")
    with pytest.raises(ValueError):
        qm.MetricOracle(ga.ScalarCyclic(3, 1), tolerance=0.0)
    a = qm.MetricOracle(ga.ScalarCyclic(3, 2), "closed_form")
    b = qm.MetricOracle(ga.ScalarCyclic(3, 2), "brute_force_finite")
    U = ga.random_point(ga.ScalarCyclic(3, 2), 1.0, 0, size=20)
    V = ga.random_point(ga.ScalarCyclic(3, 2), 1.0, 1, size=20)
    np.testing.assert_allclose(a(U, V), b(U, V), atol=1e-12)


METRIC_CASES = [
    (ga.OrthogonalLeft(2, 3), qm.dist_orthogonal),
    (ga.SpecialOrthogonalLeft(3, 4), qm.dist_special_orthogonal),
    (ga.ScalarCyclic(4, 2), lambda u, v: qm.dist_scalar_cyclic(4, u, v)),
    (ga.PermuteColumns(2, 5), qm.dist_permutation_wasserstein),
    (ga.ReflectionGroup("B", 3), lambda x, y: qm.dist_finite_linear(ga.ReflectionGroup("B", 3), x, y)),
]


@pytest.mark.parametrize("spec,dist", METRIC_CASES)
def test_metric_axioms(spec, dist):
    rng = ga.make_rng(16)
    X, Y, Z = (ga.random_point(spec, 1.0, rng, size=1000) for _ in range(3))
    dxy, dyx = dist(X, Y), dist(Y, X)
    np.testing.assert_allclose(dxy, dyx, atol=1e-12)
    assert np.all(dxy <= dist(X, Z) + dist(Z, Y) + 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.integers(2, 6))
def test_scalar_cyclic_is_c_r_invariant(vals, r):
    u = np.array([vals[0] + 1j * vals[1]])
    v = np.array([vals[2] + 1j * vals[3]])
    w = np.exp(2j * np.pi / r) * v
    assert qm.dist_scalar_cyclic(r, u, v) == pytest.approx(float(qm.dist_scalar_cyclic(r, u, w)), abs=1e-12)
