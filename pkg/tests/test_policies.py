import numpy as np
import pytest

from domsimplex.domination import (
    DominatingSimplex,
    appendix_g_simplex,
    beta_pi,
    closed_form_simplex,
    iterative_simplex,
)
from domsimplex.errors import CombinatorialBlowup, DimensionMismatch
from domsimplex.lpcore import GE, LE, LinearProgramSpec, SimplexSolver
from domsimplex.policies import (
    Instance,
    build_policy,
    exact_ar,
    pap_recourse,
    pap_worst_cost,
    solve_affine,
    solve_simplex_ar,
)
from domsimplex.uncertainty import (
    Budget,
    BudgetIntersection,
    ExplicitConvHull,
    GeneralizedBudget,
    Hypersphere,
    ScaledSpi,
    unwrap_scaled,
)


def _random_instance(m, seed, scale=None):
    rng = np.random.default_rng(seed)
    s = np.sqrt(m) if scale is None else scale
    G = np.abs(rng.standard_normal((m, m))) / s
    B = np.eye(m) + G
    return Instance(A=B.copy(), B=B, c=np.ones(m), d=np.ones(m))


def _identity_instance(m):
    ident = np.eye(m)
    return Instance(A=ident, B=ident.copy(), c=np.ones(m), d=np.ones(m))


# -- adjustable LP over the simplex ---------------------------------------------


def test_identity_covering_unit_simplex():
    m = 5
    sim = DominatingSimplex(1.0, np.full(m, 1.0 / m), "NumericPi")
    sol = solve_simplex_ar(_identity_instance(m), sim)
    assert sol.objective == pytest.approx(1.0, abs=1e-9)


def test_simplex_ar_solution_invariants():
    m = 6
    inst = _random_instance(m, seed=1)
    sim = closed_form_simplex(Budget(m, k=2))
    sol = solve_simplex_ar(inst, sim)
    verts = sim.vertices()
    for i in range(verts.shape[0]):
        resid = inst.A @ sol.x_hat + inst.B @ sol.y_hat[i] - verts[i]
        assert np.all(resid >= -1e-7)
        assert sol.z >= inst.d @ sol.y_hat[i] - 1e-9
    assert sol.objective == pytest.approx(
        float(inst.c @ sol.x_hat + sol.z), rel=1e-9)


def test_sandwich_budget_m6():
    m, k = 6, 2
    s = Budget(m, k=k)
    sim = closed_form_simplex(s)
    V = s.vertices()
    for seed in range(5):
        inst = _random_instance(m, seed=seed)
        z_u, _ = exact_ar(inst, V)
        z_hat = solve_simplex_ar(inst, sim).objective
        assert z_u <= z_hat + 1e-6
        assert z_hat <= sim.beta * z_u + 1e-6


# -- exact oracle -----------------------------------------------------------------


def test_exact_ar_unit_simplex_identity():
    m = 4
    V = np.vstack([np.zeros(m), np.eye(m)])
    z, recourse = exact_ar(_identity_instance(m), V)
    assert z == pytest.approx(1.0, abs=1e-9)
    assert recourse.shape == (m + 1, m)


def test_exact_ar_matches_independent_assembly():
    m, k = 5, 2
    inst = _random_instance(m, seed=7)
    V = Budget(m, k=k).vertices()
    z, _ = exact_ar(inst, V)

    # independent assembly: same math, hand-rolled variable layout
    nV = V.shape[0]
    nv = m + nV * m + 1
    obj = np.zeros(nv)
    obj[:m] = inst.c
    obj[-1] = 1.0
    cons = []
    for vi in range(nV):
        for r in range(m):
            row = np.zeros(nv)
            row[:m] = inst.A[r]
            row[m + vi * m:m + (vi + 1) * m] = inst.B[r]
            cons.append((row, GE, V[vi, r]))
    for vi in range(nV):
        row = np.zeros(nv)
        row[m + vi * m:m + (vi + 1) * m] = inst.d
        row[-1] = -1.0
        cons.append((row, LE, 0.0))
    ref = SimplexSolver(LinearProgramSpec(obj, cons)).solve()
    assert z == pytest.approx(ref.objective, abs=1e-7)


def test_exact_ar_cap():
    inst = _identity_instance(4)
    with pytest.raises(CombinatorialBlowup):
        exact_ar(inst, np.zeros((30000, 4)))


def test_unwrap_scaled_preserves_exact_value():
    m = 4
    rng = np.random.default_rng(3)
    lam = rng.uniform(0.5, 1.0, size=m)
    inner = Budget(m, k=2)
    wrapped = ScaledSpi(m, lam, inner)
    inst = _random_instance(m, seed=11)
    V_inner = inner.vertices()
    V_scaled = V_inner * lam
    z_scaled, _ = exact_ar(inst, V_scaled)
    inst2, inner2 = unwrap_scaled(inst, wrapped)
    z_unwrapped, _ = exact_ar(inst2, inner2.vertices())
    assert z_scaled == pytest.approx(z_unwrapped, abs=1e-6)
    # identity scaling is a no-op
    inst3, _ = unwrap_scaled(inst, ScaledSpi(m, np.ones(m), inner))
    assert np.allclose(inst3.A, inst.A)


# -- piecewise policy --------------------------------------------------------------


def test_pap_static_regime_and_single_piece():
    m = 4
    sim = DominatingSimplex(1.0, np.zeros(m), "NumericPi")
    inst = _identity_instance(m)
    sol = solve_simplex_ar(inst, sim)
    pol = build_policy(inst, sol)
    assert np.allclose(pol.x, 2.0 * sol.x_hat)
    # h below the static threshold keeps the v-vertex recourse
    y0 = pap_recourse(pol, np.zeros(m))
    assert np.allclose(y0, sol.y_hat[-1])
    # a unit spike activates exactly one piece
    y1 = pap_recourse(pol, np.eye(m)[0])
    assert np.allclose(y1, sol.y_hat[0] + sol.y_hat[-1])


def test_pap_feasibility_and_guarantee_budget():
    m, k = 6, 2
    s = Budget(m, k=k)
    sim = closed_form_simplex(s)
    V = s.vertices()
    for seed in range(3):
        inst = _random_instance(m, seed=seed + 20)
        sol = solve_simplex_ar(inst, sim)
        pol = build_policy(inst, sol)
        for h in s.sample(1000, seed=seed):
            y = pap_recourse(pol, h)
            assert np.all(y >= -1e-9)
            assert np.all(inst.A @ pol.x + inst.B @ y >= h - 1e-7)
        wc = pap_worst_cost(pol, s)
        assert wc.exact
        z_u, _ = exact_ar(inst, V)
        assert wc.value <= 2 * sim.beta * z_u + 1e-6
        assert wc.value <= 2 * sol.objective + 1e-6


def test_pap_worst_cost_formula_degenerate():
    m = 3
    pol_y = np.zeros((m + 1, m))
    pol_y[-1] = np.array([0.2, 0.1, 0.0])
    from domsimplex.policies import PiecewisePolicy

    pol = PiecewisePolicy(
        x=np.full(m, 0.5), beta=1.0, v=np.full(m, 1.0 / m),
        y_vertices=pol_y, provenance="NumericPi",
        first_stage_cost=1.5, recourse_costs=pol_y @ np.ones(m))
    wc = pap_worst_cost(pol, Budget(m, k=1))
    assert wc.value == pytest.approx(1.5 + 0.3, abs=1e-9)


def test_pap_worst_cost_matches_sampled_max():
    m = 6
    s = Hypersphere(m)
    inst = _random_instance(m, seed=33)
    sim = beta_pi(s)
    sol = solve_simplex_ar(inst, sim)
    pol = build_policy(inst, sol)
    wc = pap_worst_cost(pol, s)
    assert wc.exact
    sampled = 0.0
    for h in s.sample(2000, seed=4):
        y = pap_recourse(pol, h)
        sampled = max(sampled, float(inst.c @ pol.x + inst.d @ y))
    assert wc.value >= sampled - 1e-7
    assert wc.value <= 2 * sol.objective + 1e-6


def test_pap_appendix_g_route():
    m = 6
    s = BudgetIntersection(
        m, np.abs(np.random.default_rng(2).standard_normal((2, m)))
        / np.sqrt(m))
    base, _ = iterative_simplex(s)
    shifted = appendix_g_simplex(s, base.beta, base.v)
    inst = _random_instance(m, seed=40)
    sol = solve_simplex_ar(inst, shifted)
    pol = build_policy(inst, sol)
    assert np.allclose(pol.x, sol.x_hat)  # direct route, no doubling
    for h in s.sample(500, seed=5):
        y = pap_recourse(pol, h)
        assert np.all(y >= -1e-9)
        assert np.all(inst.A @ pol.x + inst.B @ y >= h - 1e-7)
    wc = pap_worst_cost(pol, s)
    assert wc.exact
    assert wc.value <= sol.objective + 1e-6


def test_pap_appendix_h_route():
    m, theta = 8, 0.4 * 7
    s = GeneralizedBudget(m, theta)
    sim = closed_form_simplex(s)
    inst = _random_instance(m, seed=50)
    sol = solve_simplex_ar(inst, sim)
    pol = build_policy(inst, sol)
    assert np.allclose(pol.x, sol.x_hat)
    for h in s.sample(500, seed=6):
        y = pap_recourse(pol, h)
        assert np.all(y >= -1e-9)
        assert np.all(inst.A @ pol.x + inst.B @ y >= h - 1e-7)
    wc = pap_worst_cost(pol, s)
    assert not wc.exact
    assert wc.sampled_lower is not None
    assert wc.sampled_lower <= wc.value + 1e-9
    assert wc.value <= sol.objective + 1e-6


# -- affine baseline ---------------------------------------------------------------


def test_affine_optimal_on_simplex_hull():
    m = 5
    sim = closed_form_simplex(Budget(m, k=2))
    hull = ExplicitConvHull(m, sim.vertices(), check_box=False)
    inst = _random_instance(m, seed=60)
    aff = solve_affine(inst, hull, tol=1e-7)
    ar = solve_simplex_ar(inst, sim)
    assert aff.objective == pytest.approx(
        ar.objective, abs=1e-5 * (1 + ar.objective))


def test_affine_matches_vertex_explicit_lp_budget():
    m, k = 6, 2
    s = Budget(m, k=k)
    inst = _random_instance(m, seed=61)
    aff = solve_affine(inst, s, tol=1e-7)

    # one-shot LP with every vertex instantiated
    V = s.vertices()
    n = m
    nv = n + n * m + n + 1
    obj = np.zeros(nv)
    obj[:n] = inst.c
    obj[-1] = 1.0
    lower = np.zeros(nv)
    lower[n:n + n * m] = -np.inf
    q0 = n + n * m
    cons = []
    for h in V:
        for j in range(m):
            row = np.zeros(nv)
            row[:n] = inst.A[j]
            for krow in range(n):
                row[n + krow * m:n + (krow + 1) * m] += inst.B[j, krow] * h
            row[q0:q0 + n] = inst.B[j]
            cons.append((row, GE, float(h[j])))
        for i in range(n):
            row = np.zeros(nv)
            row[n + i * m:n + (i + 1) * m] = h
            row[q0 + i] = 1.0
            cons.append((row, GE, 0.0))
        row = np.zeros(nv)
        for krow in range(n):
            row[n + krow * m:n + (krow + 1) * m] = inst.d[krow] * h
        row[q0:q0 + n] = inst.d
        row[-1] = -1.0
        cons.append((row, LE, 0.0))
    ref = SimplexSolver(LinearProgramSpec(obj, cons, lower=lower)).solve()
    assert aff.objective == pytest.approx(ref.objective, abs=1e-6)


def test_affine_at_least_adjustable():
    m, k = 6, 2
    s = Budget(m, k=k)
    V = s.vertices()
    for seed in (70, 71):
        inst = _random_instance(m, seed=seed)
        z_u, _ = exact_ar(inst, V)
        aff = solve_affine(inst, s, tol=1e-7)
        assert aff.objective >= z_u - 1e-6


def test_affine_policy_certified_feasible():
    m = 6
    s = Hypersphere(m)
    inst = _random_instance(m, seed=80)
    aff = solve_affine(inst, s, tol=1e-6)
    for h in s.sample(500, seed=8):
        y = aff.recourse(h)
        assert np.all(y >= -1e-5)
        assert np.all(inst.A @ aff.x + inst.B @ y >= h - 1e-5)
        assert inst.d @ y <= aff.z + 1e-5


def test_instance_validation_and_json():
    with pytest.raises(ValueError):
        Instance(A=-np.eye(2), B=np.eye(2), c=np.ones(2), d=np.ones(2))
    with pytest.raises(DimensionMismatch):
        Instance(A=np.eye(2), B=np.eye(3), c=np.ones(2), d=np.ones(2))
    inst = _random_instance(3, seed=90)
    back = Instance.from_json(inst.to_json())
    assert np.allclose(back.A, inst.A)
    assert np.allclose(back.B, inst.B)
