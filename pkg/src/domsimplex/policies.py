"""Policies for the two-stage adjustable covering problem.

Given covering data (A, B, c, d) and an uncertainty set, this module

* solves the adjustable problem over a dominating simplex (a compact LP
  with one recourse vector per simplex vertex),
* assembles the piecewise policy driven by the plus-part map and evaluates
  its recourse and exact worst-case cost,
* computes an affine-policy baseline by cutting planes with exact support
  separation, and
* solves the adjustable problem exactly over an explicit vertex list.
"""

import json
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domination import DominatingSimplex, max_plus_sum
from .errors import (
    CombinatorialBlowup,
    DimensionMismatch,
    IterationCapExceeded,
    LpInfeasible,
    StrategyUnavailable,
)
from .lpcore import GE, LE, LinearProgramSpec, LpStatus, SimplexSolver
from .uncertainty import UncertaintySet

EXACT_AR_CAP = 10 ** 5
AFFINE_CUT_CAP_PER_M = 200


@dataclass(frozen=True)
class Instance:
    """Covering-problem data: minimize c.x + worst-case recourse d.y."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        if self.A.ndim != 2 or self.B.shape != self.A.shape:
            raise DimensionMismatch("A and B must be matrices of equal shape")
        m, n = self.A.shape
        if self.c.shape != (n,) or self.d.shape != (n,):
            raise DimensionMismatch("c and d must have length n")
        if np.any(self.A < 0):
            raise ValueError("A must be entrywise nonnegative")
        if np.any(self.c < 0) or np.any(self.d < 0):
            raise ValueError("c and d must be nonnegative")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def to_json(self) -> str:
        return json.dumps({
            "m": self.m, "n": self.n,
            "A": self.A.tolist(), "B": self.B.tolist(),
            "c": self.c.tolist(), "d": self.d.tolist(),
        })

    @staticmethod
    def from_json(text) -> "Instance":
        doc = json.loads(text) if isinstance(text, str) else text
        m, n = int(doc["m"]), int(doc["n"])
        A = np.asarray(doc["A"], dtype=float).reshape(m, n)
        B = np.asarray(doc["B"], dtype=float).reshape(m, n)
        return Instance(A, B, np.asarray(doc["c"], dtype=float),
                        np.asarray(doc["d"], dtype=float))


@dataclass(frozen=True)
class SimplexArSolution:
    """Optimal adjustable solution over a dominating simplex."""

    x_hat: np.ndarray
    y_hat: np.ndarray        # (m+1, n); row m is the v-vertex recourse
    z: float
    objective: float
    simplex: DominatingSimplex


@dataclass(frozen=True)
class PiecewisePolicy:
    """First stage plus the m+1 recourse vertices of the plus-part policy."""

    x: np.ndarray
    beta: float
    v: np.ndarray
    y_vertices: np.ndarray   # (m+1, n)
    provenance: str
    first_stage_cost: float
    recourse_costs: np.ndarray  # d @ y_vertices, length m+1

    def to_json(self) -> str:
        return json.dumps({
            "x": self.x.tolist(), "beta": self.beta, "v": self.v.tolist(),
            "y_vertices": self.y_vertices.tolist(),
            "provenance": self.provenance,
        })


@dataclass(frozen=True)
class AffinePolicy:
    """Affine recourse y(h) = P h + q with certified worst-case cost z."""

    x: np.ndarray
    P: np.ndarray
    q: np.ndarray
    z: float
    objective: float
    cuts: int
    max_violation: float

    def recourse(self, h) -> np.ndarray:
        return self.P @ np.asarray(h, dtype=float) + self.q

    def to_json(self) -> str:
        return json.dumps({
            "x": self.x.tolist(), "P": self.P.tolist(),
            "q": self.q.tolist(), "z": self.z,
        })


@dataclass(frozen=True)
class WorstCost:
    """Worst-case policy cost; exact unless ``exact`` is False, in which
    case ``value`` is a certified upper bound and ``sampled_lower`` a
    sampled lower bound."""

    value: float
    exact: bool
    sampled_lower: Optional[float] = None


# ----------------------------------------------------------------------------
# adjustable LP over a simplex
# ----------------------------------------------------------------------------


def solve_simplex_ar(instance: Instance,
                     simplex: DominatingSimplex) -> SimplexArSolution:
    """Compact LP: one recourse vector per simplex vertex.

    minimize c.x + z  s.t.  A x + B y_i >= vertex_i,  z >= d.y_i,  all >= 0.
    """
    if simplex.m != instance.m:
        raise DimensionMismatch("simplex dimension differs from instance")
    m, n = instance.m, instance.n
    verts = simplex.vertices()
    k = verts.shape[0]
    nv = n + k * n + 1          # x | y_1..y_k | z
    obj = np.zeros(nv)
    obj[:n] = instance.c
    obj[-1] = 1.0
    cons = []
    for vi in range(k):
        base = n + vi * n
        for row in range(m):
            coef = np.zeros(nv)
            coef[:n] = instance.A[row]
            coef[base:base + n] = instance.B[row]
            cons.append((coef, GE, float(verts[vi, row])))
        zrow = np.zeros(nv)
        zrow[base:base + n] = instance.d
        zrow[-1] = -1.0
        cons.append((zrow, LE, 0.0))
    sol = SimplexSolver(LinearProgramSpec(obj, cons)).solve()
    if sol.status is not LpStatus.OPTIMAL:
        raise LpInfeasible(f"adjustable LP over the simplex is {sol.status}")
    x_hat = sol.x[:n]
    y_hat = sol.x[n:n + k * n].reshape(k, n)
    return SimplexArSolution(x_hat, y_hat, float(sol.x[-1]),
                             float(sol.objective), simplex)


def build_policy(instance: Instance,
                 solution: SimplexArSolution) -> PiecewisePolicy:
    """Piecewise policy from the simplex solution.

    The plus-part route doubles the first stage; the shifted-hull and
    sorted-coefficient routes dominate directly and keep it unscaled.
    """
    sim = solution.simplex
    doubling = sim.provenance not in ("AppendixG", "AppendixH")
    x = 2.0 * solution.x_hat if doubling else solution.x_hat.copy()
    return PiecewisePolicy(
        x=x,
        beta=sim.beta,
        v=sim.v.copy(),
        y_vertices=solution.y_hat.copy(),
        provenance=sim.provenance,
        first_stage_cost=float(instance.c @ x),
        recourse_costs=solution.y_hat @ instance.d,
    )


def _recourse_coefficients(policy: PiecewisePolicy, h) -> np.ndarray:
    """Vertex-recourse mixing weights at h, length m+1 (last = v vertex)."""
    h = np.asarray(h, dtype=float)
    m = policy.v.size
    if h.shape != (m,):
        raise DimensionMismatch("h has wrong length")
    if policy.provenance == "AppendixH":
        order = np.argsort(h, kind="stable")
        two_low = h[order[0]] + h[order[1]]
        scale = 1.0 / policy.v[0]   # = m - 1 - 2*theta
        alpha = np.zeros(m + 1)
        alpha[order[0]] = h[order[0]]
        alpha[order[1:]] = h[order[1:]] - two_low / 2.0
        alpha[m] = scale * two_low / 2.0
        return alpha
    lam = np.maximum(h - policy.beta * policy.v, 0.0) / policy.beta
    if policy.provenance == "AppendixG":
        return np.concatenate([lam, [1.0 - lam.sum()]])
    return np.concatenate([lam, [1.0]])


def pap_recourse(policy: PiecewisePolicy, h) -> np.ndarray:
    """Recourse at a realized h (assumed a member of the set)."""
    return _recourse_coefficients(policy, h) @ policy.y_vertices


def pap_worst_cost(policy: PiecewisePolicy, uset: UncertaintySet,
                   samples: int = 1000, seed: int = 0) -> WorstCost:
    """Exact worst-case policy cost where a plus-part maximization applies.

    The cost is convex piecewise linear in h, so the maximum is a constant
    plus an exact max-plus-sum with per-coordinate weights.  Falls back to
    a certified upper bound plus a sampled lower bound when no exact
    strategy applies.
    """
    base = policy.first_stage_cost + float(policy.recourse_costs[-1])
    beta, v = policy.beta, policy.v
    if policy.provenance == "AppendixH":
        upper = policy.first_stage_cost + float(policy.recourse_costs.max())
        return WorstCost(upper, exact=False,
                         sampled_lower=_sampled_cost(policy, uset, samples,
                                                     seed))
    if policy.provenance == "AppendixG":
        w = np.maximum(
            (policy.recourse_costs[:-1] - policy.recourse_costs[-1]) / beta,
            0.0)
    else:
        w = policy.recourse_costs[:-1] / beta
    try:
        res = max_plus_sum(uset, beta * v, w)
    except StrategyUnavailable:
        upper = policy.first_stage_cost + 2.0 * float(
            policy.recourse_costs.max())
        return WorstCost(upper, exact=False,
                         sampled_lower=_sampled_cost(policy, uset, samples,
                                                     seed))
    return WorstCost(base + res.value, exact=True)


def _sampled_cost(policy, uset, samples, seed):
    best = 0.0
    for h in uset.sample(samples, seed):
        coeff = _recourse_coefficients(policy, h)
        best = max(best, policy.first_stage_cost
                   + float(coeff @ policy.recourse_costs))
    return best


# ----------------------------------------------------------------------------
# exact adjustable oracle over explicit vertices
# ----------------------------------------------------------------------------


def exact_ar(instance: Instance,
             vertex_list) -> Tuple[float, np.ndarray]:
    """Optimal adjustable value over an explicit uncertainty vertex list.

    One LP with a recourse vector per vertex; returns (z_AR, recourse
    matrix aligned with the vertex list).
    """
    V = np.asarray(vertex_list, dtype=float)
    if V.ndim != 2 or V.shape[1] != instance.m:
        raise DimensionMismatch("vertex list must be N x m")
    m, n = instance.m, instance.n
    k = V.shape[0]
    if k * n > EXACT_AR_CAP:
        raise CombinatorialBlowup(
            f"{k} vertices x {n} recourse vars exceed {EXACT_AR_CAP}")
    nv = n + k * n + 1
    obj = np.zeros(nv)
    obj[:n] = instance.c
    obj[-1] = 1.0
    cons = []
    for vi in range(k):
        base = n + vi * n
        for row in range(m):
            coef = np.zeros(nv)
            coef[:n] = instance.A[row]
            coef[base:base + n] = instance.B[row]
            cons.append((coef, GE, float(V[vi, row])))
        zrow = np.zeros(nv)
        zrow[base:base + n] = instance.d
        zrow[-1] = -1.0
        cons.append((zrow, LE, 0.0))
    sol = SimplexSolver(LinearProgramSpec(obj, cons)).solve()
    if sol.status is not LpStatus.OPTIMAL:
        raise LpInfeasible(f"exact adjustable LP is {sol.status}")
    return float(sol.objective), sol.x[n:n + k * n].reshape(k, n)


# ----------------------------------------------------------------------------
# affine baseline by constraint generation
# ----------------------------------------------------------------------------


def _initial_points(uset: UncertaintySet) -> List[np.ndarray]:
    m = uset.m
    seeds = []
    candidates = [np.zeros(m)] + [np.eye(m)[i] for i in range(m)]
    for h in candidates:
        try:
            ok = uset.membership(h, tol=1e-7)
        except CombinatorialBlowup:
            ok = False
        if ok:
            seeds.append(h)
    if len(seeds) < m + 1:
        # sets without the unit vectors (e.g. re-wrapped dominating hulls):
        # seed at support points instead
        for i in range(m):
            seeds.append(uset.support(np.eye(m)[i]).argmax)
        seeds.append(uset.support(np.ones(m)).argmax)
    return seeds


def _covering_direction(instance: Instance):
    """Cheapest u >= 0 with A u >= e, or None.

    Adding delta*u to the first stage absorbs a covering shortfall of
    delta; used to repair near-feasible master points into strictly
    feasible policies.
    """
    m = instance.m
    cons = [(instance.A[j], GE, 1.0) for j in range(m)]
    sol = SimplexSolver(LinearProgramSpec(instance.c, cons)).solve()
    return sol.x if sol.status is LpStatus.OPTIMAL else None


def solve_affine(instance: Instance, uset: UncertaintySet,
                 tol: float = 1e-6) -> AffinePolicy:
    """Optimal affine recourse by cutting planes with exact separation.

    Master variables (x, P, q, z) with P sign-free; three cut families
    (covering rows, recourse nonnegativity, worst-case cost) separated via
    the set's support oracle until no violation exceeds ``tol`` at the
    master optimum.  Two standard accelerations that leave the contract
    intact: deeper cuts are also separated at a point pulled halfway toward
    a feasible static anchor (in-out stabilization), and cuts that stay
    slack for several rounds are deleted from the master.
    """
    m, n = instance.m, instance.n
    if uset.m != m:
        raise DimensionMismatch("set dimension differs from instance")
    A, B, c, d = instance.A, instance.B, instance.c, instance.d
    nv = n + n * m + n + 1      # x | P row-major | q | z

    def p_cols(krow):
        return slice(n + krow * m, n + (krow + 1) * m)

    q_col = n + n * m
    z_col = nv - 1

    def covering_cut(j, h):
        coef = np.zeros(nv)
        coef[:n] = A[j]
        for krow in range(n):
            coef[p_cols(krow)] += B[j, krow] * h
        coef[q_col:q_col + n] = B[j]
        return (coef, GE, float(h[j]))

    def nonneg_cut(i, h):
        coef = np.zeros(nv)
        coef[p_cols(i)] = h
        coef[q_col + i] = 1.0
        return (coef, GE, 0.0)

    def objective_cut(h):
        coef = np.zeros(nv)
        for krow in range(n):
            coef[p_cols(krow)] = d[krow] * h
        coef[q_col:q_col + n] = d
        coef[z_col] = -1.0
        return (coef, LE, 0.0)

    def separate(point, collect):
        """Violated cuts at a master point; returns (cuts, worst)."""
        x = point[:n]
        P = point[n:n + n * m].reshape(n, m)
        q = point[q_col:q_col + n]
        z = float(point[z_col])
        cuts = []
        worst = 0.0
        for j in range(m):
            res = uset.support(np.eye(m)[j] - P.T @ B[j])
            viol = res.value - float(A[j] @ x + B[j] @ q)
            if viol > tol:
                worst = max(worst, viol)
                if collect:
                    cuts.append(covering_cut(j, res.argmax))
        for i in range(n):
            res = uset.support(-P[i])
            viol = res.value - float(q[i])
            if viol > tol:
                worst = max(worst, viol)
                if collect:
                    cuts.append(nonneg_cut(i, res.argmax))
        res = uset.support(P.T @ d)
        viol = res.value + float(d @ q) - z
        if viol > tol:
            worst = max(worst, viol)
            if collect:
                cuts.append(objective_cut(res.argmax))
        return cuts, worst

    def cuts_at_scenario(point, h):
        """Violated cuts at one known member h (no oracle calls)."""
        x = point[:n]
        P = point[n:n + n * m].reshape(n, m)
        q = point[q_col:q_col + n]
        z = float(point[z_col])
        y = P @ h + q
        cuts = []
        resid = A @ x + B @ y - h
        for j in np.nonzero(resid < -tol)[0]:
            cuts.append(covering_cut(int(j), h))
        for i in np.nonzero(y < -tol)[0]:
            cuts.append(nonneg_cut(int(i), h))
        if float(d @ y) > z + tol:
            cuts.append(objective_cut(h))
        return cuts

    obj = np.zeros(nv)
    obj[:n] = c
    obj[z_col] = 1.0
    lower = np.zeros(nv)
    lower[n:n + n * m] = -np.inf

    cover_dir = _covering_direction(instance)
    d_scale = 1.0 + 2.0 * float(np.abs(d).sum())

    def repair(point, slack):
        """Inflate a point with max violation ``slack`` into a feasible one."""
        if cover_dir is None:
            return None
        fixed = point.copy()
        fixed[:n] = point[:n] + slack * cover_dir
        fixed[q_col:q_col + n] = point[q_col:q_col + n] + slack
        fixed[z_col] = point[z_col] + slack * d_scale
        _, resid = separate(fixed, collect=False)
        return fixed if resid == 0.0 else None

    def cost(point):
        return float(obj @ point)

    # seed the master in two blocks: the origin block solves fast, the unit
    # blocks then enter via a warm dual-simplex pass
    points = _initial_points(uset)
    cons = []
    for j in range(m):
        cons.append(covering_cut(j, points[0]))
    for i in range(n):
        cons.append(nonneg_cut(i, points[0]))
    cons.append(objective_cut(points[0]))
    solver = SimplexSolver(LinearProgramSpec(obj, cons, lower=lower))
    sol = solver.solve()
    n_cuts = len(cons)
    later = []
    for h in points[1:]:
        for j in range(m):
            later.append(covering_cut(j, h))
        for i in range(n):
            later.append(nonneg_cut(i, h))
        later.append(objective_cut(h))
    if later:
        solver.add_rows(later)
        sol = solver.resolve()
        n_cuts += len(later)
    cut_cap = AFFINE_CUT_CAP_PER_M * m
    center = None
    # scenario pool for cheap cut flooding: support points of random
    # directions (members by construction, fixed seed for determinism)
    pool_rng = np.random.default_rng(0)
    scenario_pool = [uset.support(pool_rng.standard_normal(m)).argmax
                     for _ in range(2 * m)]
    pool_at = 0

    while True:
        if sol.status is not LpStatus.OPTIMAL:
            raise LpInfeasible(f"affine master is {sol.status}")
        omega = sol.x
        new_cuts = []
        worst = 0.0
        if center is not None:
            # in-out: cut at the pulled-in query while it is still violated;
            # only a clean query lets the master point itself be tested
            query = 0.5 * (omega + center)
            new_cuts, _ = separate(query, collect=True)
            if not new_cuts:
                center = query
        if not new_cuts:
            new_cuts, worst = separate(omega, collect=True)
            if not new_cuts:
                x = omega[:n]
                P = omega[n:n + n * m].reshape(n, m)
                q = omega[q_col:q_col + n]
                return AffinePolicy(x, P, q, float(omega[z_col]),
                                    float(sol.objective), cuts=n_cuts,
                                    max_violation=0.0)
            # refresh the center with a feasible inflation of the master point
            candidate = repair(omega, worst)
            if candidate is not None and (center is None
                                          or cost(candidate) < cost(center)):
                center = candidate
        # flood a few pooled scenarios while far from feasibility
        if worst > 1e-3 or center is None:
            for _ in range(4):
                new_cuts.extend(cuts_at_scenario(omega,
                                                 scenario_pool[pool_at]))
                pool_at = (pool_at + 1) % len(scenario_pool)
        if n_cuts + len(new_cuts) > cut_cap:
            x = omega[:n]
            P = omega[n:n + n * m].reshape(n, m)
            q = omega[q_col:q_col + n]
            incumbent = AffinePolicy(x, P, q, float(omega[z_col]),
                                     float(sol.objective), cuts=n_cuts,
                                     max_violation=worst)
            raise IterationCapExceeded(
                f"cut cap {cut_cap} reached with violation {worst:.3g}",
                incumbent=incumbent, max_violation=worst)
        solver.add_rows(new_cuts)
        sol = solver.resolve()
        n_cuts += len(new_cuts)
        solver.drop_slack_cuts()
