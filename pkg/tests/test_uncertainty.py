import itertools
import json

import numpy as np
import pytest

from domsimplex.errors import (
    CombinatorialBlowup,
    NonPositiveScale,
    NotPermutationInvariant,
    ParameterOutOfRange,
)
from domsimplex.uncertainty import (
    Budget,
    BudgetIntersection,
    ExplicitConvHull,
    ExplicitPolytope,
    GeneralizedBudget,
    Hypersphere,
    PiEllipsoid,
    PNormBall,
    ScaledSpi,
    TwoNormBalls,
    from_json,
    validate_assumption1,
)

from oracles import enumerate_polytope_vertices


def _families_for(m, rng):
    alpha = np.abs(rng.standard_normal((2, m)))
    alpha /= np.linalg.norm(alpha, axis=1, keepdims=True)
    sets = [
        Hypersphere(m),
        PNormBall(m, p=3.0),
        PNormBall(m, p=1.5),
        TwoNormBalls(m, p=3.0, q=1.5, r=1.1),
        Budget(m, k=max(1, m // 2)),
        BudgetIntersection(m, alpha),
        GeneralizedBudget(m, theta=0.8),
        PiEllipsoid(m, a=0.5),
    ]
    if m <= 6:
        rows, rhs = np.ones((1, m)), np.array([m / 2.0])
        sets.append(ExplicitPolytope(m, rows, rhs))
    return sets


# -- membership ---------------------------------------------------------------


def test_membership_unit_vectors_hypersphere():
    s = Hypersphere(3)
    assert s.membership(np.array([1.0, 0.0, 0.0]))
    assert not s.membership(np.array([1.0, 0.2, 0.0]))


def test_membership_budget_direct_inequality():
    s = Budget(4, k=2)
    assert not s.membership(np.array([1.0, 1.0, 0.5, 0.0]))
    assert s.membership(np.array([1.0, 1.0, 0.0, 0.0]))


def test_membership_negative_entry_fails():
    s = Hypersphere(3)
    assert not s.membership(np.array([-0.01, 0.1, 0.1]))


def test_membership_pi_ellipsoid_boundary_point():
    a, m = 0.5, 3
    s = PiEllipsoid(m, a)
    g = 1.0 / np.sqrt(a * m * m + (1 - a) * m)
    h = g * np.ones(m)
    assert s.membership(h)
    # the quadratic form is exactly 1 there
    quad = (1 - a) * h @ h + a * h.sum() ** 2
    assert quad == pytest.approx(1.0, abs=1e-12)


# -- support ------------------------------------------------------------------


def test_support_unit_direction():
    s = PNormBall(4, p=2.0)
    res = s.support(np.array([1.0, 0.0, 0.0, 0.0]))
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(res.argmax, [1, 0, 0, 0], atol=1e-12)


def test_support_uniform_direction_sphere():
    s = PNormBall(4, p=2.0)
    res = s.support(np.ones(4))
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(res.argmax, 0.5 * np.ones(4), atol=1e-12)


def test_support_budget_intersection_matches_vertex_oracle():
    rng = np.random.default_rng(5)
    m = 6
    alpha = np.abs(rng.standard_normal((2, m)))
    alpha /= np.linalg.norm(alpha, axis=1, keepdims=True)
    s = BudgetIntersection(m, alpha)
    V = enumerate_polytope_vertices(alpha, np.ones(2), m,
                                    box_upper=np.ones(m))
    for _ in range(10):
        w = rng.standard_normal(m)
        res = s.support(w)
        ref = float((V @ w).max())
        assert res.value == pytest.approx(ref, abs=1e-7)
        assert s.membership(res.argmax, tol=1e-7)


def test_support_dominates_members_every_family():
    rng = np.random.default_rng(11)
    for s in _families_for(6, rng):
        pts = s.sample(500, seed=momentum_seed(s))
        for w in (np.ones(6), rng.standard_normal(6),
                  np.abs(rng.standard_normal(6))):
            res = s.support(w)
            assert res.value >= (pts @ w).max() - 1e-7
            assert s.membership(res.argmax, tol=1e-7)
            assert res.value == pytest.approx(float(w @ res.argmax),
                                              rel=1e-8, abs=1e-10)


def momentum_seed(s):
    return (hash(s.family) % 1000) + s.m


def test_support_capped_pball_radius_above_one():
    # radius 1.1 with the box active: compare against a dense grid at m=2
    s = PNormBall(2, p=2.0, radius=1.1)
    xs = np.linspace(0.0, 1.0, 4001)
    ys = np.minimum(1.0, np.sqrt(np.maximum(1.1 ** 2 - xs ** 2, 0.0)))
    for w in (np.array([1.0, 1.0]), np.array([0.3, 1.0]),
              np.array([1.0, 0.05])):
        ref = float((w[0] * xs + w[1] * ys).max())
        res = s.support(w)
        # the grid is a lower bound; the solver point must beat it and be
        # a certified member
        assert res.value >= ref - 1e-9
        assert res.value <= ref + 1e-3
        assert s.membership(res.argmax, tol=1e-7)
        assert res.value == pytest.approx(float(w @ res.argmax), rel=1e-10)


def test_support_two_norm_balls_matches_grid_oracle():
    p, q, r = 3.0, 1.5, 1.15
    s = TwoNormBalls(2, p=p, q=q, r=r)
    xs = np.linspace(0.0, 1.0, 20001)
    y_p = (1 - xs ** p) ** (1 / p)
    y_q = np.maximum(r ** q - xs ** q, 0.0) ** (1 / q)
    ys = np.minimum(y_p, y_q)
    for w in (np.array([1.0, 1.0]), np.array([1.0, 0.2]),
              np.array([0.7, 1.3]), np.array([0.0, 1.0])):
        ref = float((w[0] * xs + w[1] * ys).max())
        res = s.support(w)
        assert res.value >= ref - 1e-9
        assert res.value <= ref + 1e-4
        assert s.membership(res.argmax, tol=1e-7)
        assert res.value == pytest.approx(float(w @ res.argmax), rel=1e-10)


def test_support_pi_ellipsoid_matches_subset_oracle():
    rng = np.random.default_rng(3)
    m, a = 5, 0.35
    s = PiEllipsoid(m, a)
    Sigma = (1 - a) * np.eye(m) + a * np.ones((m, m))
    for _ in range(20):
        w = rng.standard_normal(m)
        best = 0.0
        for k in range(1, m + 1):
            for S in itertools.combinations(range(m), k):
                sub = Sigma[np.ix_(S, S)]
                g = np.linalg.solve(sub, w[list(S)])
                if np.all(g >= -1e-12):
                    best = max(best, float(np.sqrt(w[list(S)] @ g)))
        res = s.support(w)
        assert res.value == pytest.approx(best, abs=1e-9)


# -- gamma ---------------------------------------------------------------------


def test_gamma_closed_forms():
    assert PNormBall(8, p=2.0).gamma(4) == pytest.approx(0.5, abs=1e-12)
    assert Budget(6, k=3).gamma(2) == pytest.approx(1.0, abs=1e-12)
    for k in range(1, 7):
        assert PiEllipsoid(6, a=0.0).gamma(k) == pytest.approx(
            1 / np.sqrt(k), abs=1e-12)


def test_gamma_matches_support_oracle_within_1e9():
    rng = np.random.default_rng(2)
    m = 7
    for s in _families_for(m, rng):
        if not s.permutation_invariant:
            continue
        for k in range(1, m + 1):
            w = np.zeros(m)
            w[:k] = 1.0
            oracle = s.support(w).value / k
            assert s.gamma(k) == pytest.approx(oracle, abs=1e-9)


def test_gamma_point_is_member_and_nonincreasing():
    rng = np.random.default_rng(4)
    m = 6
    for s in _families_for(m, rng):
        if not s.permutation_invariant:
            continue
        gs = [s.gamma(k) for k in range(1, m + 1)]
        for k, g in enumerate(gs, start=1):
            h = np.zeros(m)
            h[:k] = g
            assert s.membership(h, tol=1e-9), (s.family, k)
        assert all(gs[i] >= gs[i + 1] - 1e-12 for i in range(m - 1))


def test_gamma_requires_pi():
    rng = np.random.default_rng(0)
    alpha = np.abs(rng.standard_normal((2, 4)))
    alpha /= np.linalg.norm(alpha, axis=1, keepdims=True)
    with pytest.raises(NotPermutationInvariant):
        BudgetIntersection(4, alpha).gamma(2)


# -- vertices -------------------------------------------------------------------


def test_budget_unit_vertices():
    V = Budget(3, k=1).vertices()
    expect = {(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)}
    assert {tuple(np.round(v).astype(int)) for v in V} == expect


def test_budget_fractional_vertices_unavailable():
    assert Budget(4, k=1.5).vertices() is None


def test_worstcase_hull_vertices_m4_degenerate():
    # at m=4 the orbit points are midpoints of unit vectors, hence not
    # extreme; only 0 and the unit vectors survive
    pts = [np.zeros(4)] + [np.eye(4)[i] for i in range(4)]
    s = ExplicitConvHull(4, np.array(pts),
                         orbit={"value": 0.5, "nonzeros": 2})
    V = s.vertices()
    assert V.shape[0] == 5
    assert s.permutation_invariant


def test_worstcase_hull_vertices_m9():
    # 0, the 9 unit vectors, and all 84 orbit points are genuinely extreme
    pts = [np.zeros(9)] + [np.eye(9)[i] for i in range(9)]
    s = ExplicitConvHull(9, np.array(pts),
                         orbit={"value": 1.0 / 3.0, "nonzeros": 6})
    V = s.vertices()
    assert V.shape[0] == 1 + 9 + 84
    assert s.permutation_invariant


def test_box_polytope_vertices():
    s = ExplicitPolytope(2, np.zeros((1, 2)), np.array([1.0]))
    V = s.vertices()
    assert V.shape[0] == 4


def test_vertex_cap_raises():
    with pytest.raises(CombinatorialBlowup):
        Budget(40, k=8).vertices()


# -- sampling -------------------------------------------------------------------


def test_sampling_members_and_determinism():
    s = Hypersphere(5)
    pts = s.sample(1000, seed=9)
    assert all(s.membership(h, tol=1e-9) for h in pts)
    pts2 = s.sample(1000, seed=9)
    assert np.array_equal(pts, pts2)


def test_small_point_is_member_everywhere():
    rng = np.random.default_rng(1)
    for s in _families_for(5, rng):
        assert s.membership(np.full(5, 1.0 / 5.0 / 5.0), tol=1e-9)


# -- down-monotonicity and assumption checks ------------------------------------


def test_down_monotonicity_sampled():
    rng = np.random.default_rng(17)
    for s in _families_for(6, rng):
        pts = s.sample(500, seed=23)
        scale = rng.uniform(0.0, 1.0, size=pts.shape)
        for h, u in zip(pts, scale):
            assert s.membership(h * u, tol=1e-9), s.family


def test_generalized_budget_large_theta_not_down_monotone():
    s = GeneralizedBudget(10, theta=3.6)
    assert not s.is_down_monotone
    h = np.full(10, 1.0 / (10 - 2 * 3.6) - 1e-9)
    assert s.membership(h)
    h2 = h.copy()
    h2[0] = 0.0
    assert not s.membership(h2)


def test_validate_assumption1_passes_for_families():
    rng = np.random.default_rng(19)
    for s in _families_for(5, rng):
        validate_assumption1(s, samples=50, seed=3)


def test_parameter_validation():
    with pytest.raises(ParameterOutOfRange):
        PNormBall(4, p=0.5)
    with pytest.raises(ParameterOutOfRange):
        Budget(4, k=0.5)
    with pytest.raises(ParameterOutOfRange):
        PiEllipsoid(4, a=1.5)
    with pytest.raises(NonPositiveScale):
        ScaledSpi(3, np.array([1.0, 0.0, 1.0]), Hypersphere(3))


# -- scaled wrapper --------------------------------------------------------------


def test_scaled_spi_oracles_delegate():
    lam = np.array([0.5, 0.8, 1.0])
    s = ScaledSpi(3, lam, Hypersphere(3))
    assert s.membership(lam * np.array([1.0, 0.0, 0.0]))
    assert not s.membership(np.array([0.51, 0.0, 0.0]) / np.array([1, 1, 1]))
    w = np.array([1.0, 0.3, 0.2])
    res = s.support(w)
    inner = Hypersphere(3).support(lam * w)
    assert res.value == pytest.approx(inner.value, rel=1e-12)
    assert np.allclose(res.argmax, lam * inner.argmax)
    pts = s.sample(200, seed=5)
    assert all(s.membership(h) for h in pts)


# -- JSON round trip --------------------------------------------------------------


def test_json_round_trip_all_families():
    rng = np.random.default_rng(29)
    sets = _families_for(5, rng)
    sets.append(ScaledSpi(5, np.full(5, 0.9), PNormBall(5, p=2.0)))
    pts = [np.zeros(5)] + [np.eye(5)[i] for i in range(5)]
    sets.append(ExplicitConvHull(5, np.array(pts),
                                 orbit={"value": 0.5, "nonzeros": 2}))
    for s in sets:
        doc = s.to_json()
        s2 = from_json(doc)
        assert s2.family == s.family
        assert s2.m == s.m
        assert json.loads(s2.to_json()) == json.loads(doc)
        h = s.sample(5, seed=1)
        for v in h:
            assert s2.membership(v, tol=1e-7)
