"""Uncertainty-set families and their oracles.

Every set lives in the nonnegative orthant of R^m and is meant to satisfy
the standing normalization: contained in the unit box, containing every
coordinate unit vector, and down-monotone (``GeneralizedBudget`` with
``theta > 1`` genuinely violates down-monotonicity; see its docstring).

Oracles:

* ``membership(h, tol)``   - defining inequalities within ``tol``; any
  negative entry fails.
* ``support(w)``           - exact maximizer of ``w @ h`` over the set.
* ``gamma(k)``             - largest average of any ``k`` coordinates
  (permutation-invariant sets only).
* ``vertices()``           - exact extreme points where enumerable,
  ``None`` for continuum-vertex families.
* ``sample(count, seed)``  - members by rejection from the unit box with
  radial shrinking toward the origin.

JSON descriptors: ``{"family": <tag>, "m": <int>, "params": {...}}`` with
per-family params documented on each class.
"""

import itertools
import json
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import (
    CombinatorialBlowup,
    DimensionMismatch,
    NonPositiveScale,
    NotPermutationInvariant,
    ParameterOutOfRange,
    RequiresHRep,
    UnsupportedFamily,
)
from .lpcore import EQ, LE, LinearProgramSpec, LpStatus, solve_lp

DEFAULT_TOL = 1e-9
VERTEX_CAP = 10 ** 6


@dataclass(frozen=True)
class SupportResult:
    """Maximum of a linear functional over a set, with a witness."""

    value: float
    argmax: np.ndarray


def _check_vec(h, m):
    h = np.asarray(h, dtype=float)
    if h.shape != (m,):
        raise DimensionMismatch(f"expected length-{m} vector, got {h.shape}")
    return h


class UncertaintySet:
    """Base class; subclasses are immutable after construction."""

    family = "?"
    permutation_invariant = False

    def __init__(self, m: int):
        if m < 1:
            raise ParameterOutOfRange("dimension must be positive")
        self.m = int(m)

    # -- oracles -------------------------------------------------------------

    def membership(self, h, tol: float = DEFAULT_TOL) -> bool:
        h = _check_vec(h, self.m)
        if not np.all(np.isfinite(h)):
            raise ValueError("non-finite point")
        if np.any(h < -tol):
            return False
        return self._member(np.maximum(h, 0.0), tol)

    def support(self, w) -> SupportResult:
        w = _check_vec(w, self.m)
        return self._support(w)

    def gamma(self, k: int) -> float:
        if not self.permutation_invariant:
            raise NotPermutationInvariant(
                f"{self.family} is not permutation invariant")
        if not 1 <= k <= self.m:
            raise ParameterOutOfRange(f"k={k} outside [1, {self.m}]")
        return self._gamma(int(k))

    def vertices(self) -> Optional[np.ndarray]:
        return None

    def sample(self, count: int, seed: int) -> np.ndarray:
        if count < 1:
            raise ParameterOutOfRange("count must be >= 1")
        rng = np.random.default_rng(seed)
        out = np.empty((count, self.m))
        for i in range(count):
            h = rng.uniform(0.0, 1.0, size=self.m)
            for _ in range(200):
                if self.membership(h, tol=DEFAULT_TOL):
                    break
                h = 0.5 * h
            else:
                raise RuntimeError("shrinking never reached the set")
            out[i] = h
        return out

    def h_rep(self) -> Tuple[np.ndarray, np.ndarray]:
        """Rows (A, b) with the set equal to {h in [0,1]^m : A h <= b}."""
        raise RequiresHRep(f"{self.family} has no halfspace representation")

    @property
    def has_h_rep(self) -> bool:
        try:
            self.h_rep()
            return True
        except RequiresHRep:
            return False

    # -- family internals ----------------------------------------------------

    def _member(self, h, tol) -> bool:
        raise NotImplementedError

    def _support(self, w) -> SupportResult:
        raise NotImplementedError

    def _gamma(self, k) -> float:
        return self.support(_indicator(k, self.m)).value / k

    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(
            {"family": self.family, "m": self.m, "params": self.params()})

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m}, {self.params()})"


def _indicator(k, m):
    w = np.zeros(m)
    w[:k] = 1.0
    return w


def _support_lp(rows, rhs, w, m):
    """Exact linear maximization over {h in [0,1]^m : rows h <= rhs}."""
    cons = [(rows[i], LE, rhs[i]) for i in range(len(rhs))]
    spec = LinearProgramSpec(-w, cons, upper=np.ones(m))
    sol = solve_lp(spec)
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"support LP ended {sol.status}")
    return SupportResult(float(w @ sol.x), sol.x)


# ----------------------------------------------------------------------------
# conic families
# ----------------------------------------------------------------------------


class PNormBall(UncertaintySet):
    """{h in [0,1]^m : ||h||_p <= radius}.  params: {"p", "radius"}."""

    family = "PNormBall"
    permutation_invariant = True

    def __init__(self, m, p, radius: float = 1.0):
        super().__init__(m)
        if p < 1:
            raise ParameterOutOfRange("p must be >= 1")
        if radius < 1:
            raise ParameterOutOfRange(
                "radius < 1 excludes the unit vectors; rescale first")
        self.p = float(p)
        self.radius = float(radius)

    def params(self):
        return {"p": self.p, "radius": self.radius}

    def _member(self, h, tol):
        if np.any(h > 1 + tol):
            return False
        return float(np.linalg.norm(h, self.p)) <= self.radius + tol

    def _support(self, w):
        wp = np.maximum(w, 0.0)
        if not wp.any():
            return SupportResult(0.0, np.zeros(self.m))
        p, rad = self.p, self.radius
        if p == 1.0:
            return _greedy_budget_fill(w, rad)
        t = wp ** (1.0 / (p - 1.0))
        h = rad * t / np.linalg.norm(t, p)
        if h.max() > 1.0 + 1e-12:
            # box active: h(c) = min(1, c t) with ||h(c)||_p = radius
            lo, hi = 0.0, float(1.0 / t.max())
            while np.linalg.norm(np.minimum(1.0, hi * t), p) < rad:
                hi *= 2.0
                if hi > 1e18:
                    h = (t > 0).astype(float)  # whole support at the box
                    break
            else:
                for _ in range(100):
                    mid = 0.5 * (lo + hi)
                    if np.linalg.norm(np.minimum(1.0, mid * t), p) < rad:
                        lo = mid
                    else:
                        hi = mid
                h = np.minimum(1.0, 0.5 * (lo + hi) * t)
        return SupportResult(float(w @ h), h)

    def _gamma(self, k):
        return min(1.0, self.radius * k ** (-1.0 / self.p))


class Hypersphere(PNormBall):
    """Unit 2-norm ball intersected with the box.  params: {}."""

    family = "Hypersphere"

    def __init__(self, m):
        super().__init__(m, p=2.0, radius=1.0)

    def params(self):
        return {}


class TwoNormBalls(UncertaintySet):
    """{h >= 0 : ||h||_p <= 1, ||h||_q <= r} with p > q >= 1.

    params: {"p", "q", "r"}.  The support oracle solves the two-multiplier
    stationarity system by nested bisection; single-ball optima short-circuit.
    """

    family = "TwoNormBalls"
    permutation_invariant = True

    def __init__(self, m, p, q, r):
        super().__init__(m)
        if not p > q >= 1:
            raise ParameterOutOfRange("need p > q >= 1")
        if r < 1:
            raise ParameterOutOfRange("r < 1 excludes the unit vectors")
        self.p = float(p)
        self.q = float(q)
        self.r = float(r)

    def params(self):
        return {"p": self.p, "q": self.q, "r": self.r}

    def _member(self, h, tol):
        return (np.linalg.norm(h, self.p) <= 1 + tol
                and np.linalg.norm(h, self.q) <= self.r + tol)

    def _h_of(self, wp, lam, mu):
        """Per-coordinate root of wp_i = lam*p*h^(p-1) + mu*q*h^(q-1)."""
        p, q = self.p, self.q
        m = wp.size
        pos = wp > 0
        h = np.zeros(m)
        if lam <= 0 and mu <= 0:
            h[pos] = np.inf
            return h
        if lam <= 0 and q == 1.0:
            h[wp > mu] = np.inf
            return h
        lo = np.zeros(m)
        hi = np.ones(m)
        for _ in range(200):
            f = lam * p * hi ** (p - 1) + mu * q * hi ** (q - 1)
            grow = pos & (f < wp)
            if not grow.any():
                break
            hi[grow] *= 2.0
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            f = lam * p * mid ** (p - 1) + mu * q * mid ** (q - 1)
            small = f < wp
            lo = np.where(small, mid, lo)
            hi = np.where(small, hi, mid)
        h[pos] = (0.5 * (lo + hi))[pos]
        return h

    def _lam_for_unit_pnorm(self, wp, mu):
        """Smallest lam >= 0 with ||h(lam, mu)||_p <= 1."""
        h0 = self._h_of(wp, 0.0, mu)
        if np.all(np.isfinite(h0)) and np.linalg.norm(h0, self.p) <= 1.0:
            return 0.0, h0
        lo, hi = 0.0, 1.0
        for _ in range(200):
            h = self._h_of(wp, hi, mu)
            if np.linalg.norm(h, self.p) <= 1.0:
                break
            hi *= 2.0
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            h = self._h_of(wp, mid, mu)
            if np.linalg.norm(h, self.p) > 1.0:
                lo = mid
            else:
                hi = mid
        h = self._h_of(wp, hi, mu)
        return hi, h

    def _support(self, w):
        wp = np.maximum(w, 0.0)
        if not wp.any():
            return SupportResult(0.0, np.zeros(self.m))
        p, q, r = self.p, self.q, self.r
        # p-ball alone
        t = wp ** (1.0 / (p - 1.0))
        h1 = t / np.linalg.norm(t, p)
        if np.linalg.norm(h1, q) <= r + 1e-12:
            return SupportResult(float(w @ h1), h1)
        # q-ball alone
        if q > 1.0:
            s = wp ** (1.0 / (q - 1.0))
            h2 = r * s / np.linalg.norm(s, q)
            if np.linalg.norm(h2, p) <= 1 + 1e-12:
                return SupportResult(float(w @ h2), h2)
        # both constraints active: bisect on the q-multiplier
        mu_lo, mu_hi = 0.0, 1.0
        for _ in range(200):
            _, h = self._lam_for_unit_pnorm(wp, mu_hi)
            if np.linalg.norm(h, q) <= r:
                break
            mu_hi *= 2.0
        for _ in range(90):
            mu = 0.5 * (mu_lo + mu_hi)
            _, h = self._lam_for_unit_pnorm(wp, mu)
            if np.linalg.norm(h, q) > r:
                mu_lo = mu
            else:
                mu_hi = mu
        _, h = self._lam_for_unit_pnorm(wp, mu_hi)
        return SupportResult(float(w @ h), h)

    def _gamma(self, k):
        return min(k ** (-1.0 / self.p), self.r * k ** (-1.0 / self.q))


class PiEllipsoid(UncertaintySet):
    """{h >= 0 : (1-a) sum h_i^2 + a (sum h_i)^2 <= 1}, 0 <= a <= 1.

    params: {"a"}.  The support oracle uses the top-k threshold structure of
    the stationarity conditions; a=1 degenerates to the unit simplex.
    """

    family = "PiEllipsoid"
    permutation_invariant = True

    def __init__(self, m, a):
        super().__init__(m)
        if not 0.0 <= a <= 1.0:
            raise ParameterOutOfRange("a must lie in [0, 1]")
        self.a = float(a)

    def params(self):
        return {"a": self.a}

    def _quad(self, h):
        return (1.0 - self.a) * float(h @ h) + self.a * float(h.sum()) ** 2

    def _member(self, h, tol):
        return self._quad(h) <= 1.0 + 2 * tol

    def _support(self, w):
        a = self.a
        wp = np.maximum(w, 0.0)
        if not wp.any():
            return SupportResult(0.0, np.zeros(self.m))
        if a == 1.0:
            j = int(np.argmax(w))
            h = np.zeros(self.m)
            h[j] = 1.0
            return SupportResult(float(w[j]), h)
        order = np.argsort(-wp, kind="stable")
        ws = wp[order]
        prefix = np.cumsum(ws)
        chosen = None
        for k in range(1, self.m + 1):
            if ws[k - 1] <= 0:
                break
            c = a * prefix[k - 1] / (1.0 - a + a * k)
            if ws[k - 1] > c and (k == self.m or ws[k] <= c + 1e-15):
                chosen = (k, c)
                break
        if chosen is None:
            k = int(np.sum(ws > 0))
            c = a * prefix[k - 1] / (1.0 - a + a * k)
            chosen = (k, c)
        k, c = chosen
        g = np.zeros(self.m)
        g[order[:k]] = (wp[order[:k]] - c) / (1.0 - a)
        val = float(np.sqrt(wp @ g))
        h = g / val if val > 0 else g
        return SupportResult(float(w @ h), h)

    def _gamma(self, k):
        return 1.0 / np.sqrt(self.a * k * k + (1.0 - self.a) * k)


# ----------------------------------------------------------------------------
# polyhedral families
# ----------------------------------------------------------------------------


def _greedy_budget_fill(w, budget):
    """max w @ h over {h in [0,1]^m : sum h <= budget} by sorted fill."""
    m = w.size
    h = np.zeros(m)
    left = float(budget)
    for j in np.argsort(-w, kind="stable"):
        if w[j] <= 0 or left <= 0:
            break
        step = min(1.0, left)
        h[j] = step
        left -= step
    return SupportResult(float(w @ h), h)


class Budget(UncertaintySet):
    """Box-capped simplex {h in [0,1]^m : sum h_i <= k}.  params: {"k"}."""

    family = "Budget"
    permutation_invariant = True

    def __init__(self, m, k):
        super().__init__(m)
        if not 1.0 <= k <= m:
            raise ParameterOutOfRange("budget must lie in [1, m]")
        self.k = float(k)

    def params(self):
        return {"k": self.k}

    def _member(self, h, tol):
        return np.all(h <= 1 + tol) and float(h.sum()) <= self.k + tol

    def _support(self, w):
        return _greedy_budget_fill(w, self.k)

    def _gamma(self, k):
        return min(1.0, self.k / k)

    def h_rep(self):
        return np.ones((1, self.m)), np.array([self.k])

    def vertices(self):
        if abs(self.k - round(self.k)) > 1e-12:
            return None
        b = int(round(self.k))
        total = sum(_comb(self.m, j) for j in range(b + 1))
        if total > VERTEX_CAP:
            raise CombinatorialBlowup(f"{total} vertices exceed {VERTEX_CAP}")
        verts = [np.zeros(self.m)]
        for j in range(1, b + 1):
            for idx in itertools.combinations(range(self.m), j):
                v = np.zeros(self.m)
                v[list(idx)] = 1.0
                verts.append(v)
        return np.array(verts)


def _comb(n, k):
    from math import comb

    return comb(n, k)


class BudgetIntersection(UncertaintySet):
    """{h in [0,1]^m : alpha @ h <= 1 rowwise}, alpha >= 0.

    params: {"alpha": L x m row-major nested list}.
    """

    family = "BudgetIntersection"
    permutation_invariant = False

    def __init__(self, m, alpha):
        super().__init__(m)
        alpha = np.asarray(alpha, dtype=float)
        if alpha.ndim != 2 or alpha.shape[1] != m:
            raise DimensionMismatch("alpha must be L x m")
        if np.any(alpha < 0):
            raise ParameterOutOfRange("alpha must be nonnegative")
        if np.any(alpha > 1 + 1e-9):
            raise ParameterOutOfRange(
                "alpha entries above 1 exclude unit vectors")
        self.alpha = alpha

    def params(self):
        return {"alpha": self.alpha.tolist()}

    def _member(self, h, tol):
        if np.any(h > 1 + tol):
            return False
        return np.all(self.alpha @ h <= 1 + tol)

    def _support(self, w):
        rows, rhs = self.h_rep()
        return _support_lp(rows, rhs, w, self.m)

    def h_rep(self):
        return self.alpha.copy(), np.ones(self.alpha.shape[0])


class GeneralizedBudget(UncertaintySet):
    """{h in [0,1]^m : sum h <= 1 + theta*(h_i + h_j) for every pair i != j}.

    params: {"theta"}.  The binding pair is always the two smallest
    coordinates.  For theta > 1 the set is *not* down-monotone (zeroing a
    small coordinate can push the remaining sum past its pair budgets), so
    down-monotone spot checks are skipped for it.
    """

    family = "GeneralizedBudget"
    permutation_invariant = True

    def __init__(self, m, theta):
        super().__init__(m)
        if m < 3:
            raise ParameterOutOfRange("needs m >= 3")
        if theta <= 0:
            raise ParameterOutOfRange("theta must be positive")
        self.theta = float(theta)

    def params(self):
        return {"theta": self.theta}

    @property
    def is_down_monotone(self) -> bool:
        return self.theta <= 1.0

    def _member(self, h, tol):
        if np.any(h > 1 + tol):
            return False
        two_smallest = np.partition(h, 1)[:2]
        return float(h.sum()) <= 1 + self.theta * two_smallest.sum() + tol

    def _support(self, w):
        rows, rhs = self.h_rep()
        return _support_lp(rows, rhs, w, self.m)

    def h_rep(self):
        rows = []
        base = np.ones(self.m)
        for i, j in itertools.combinations(range(self.m), 2):
            row = base.copy()
            row[i] -= self.theta
            row[j] -= self.theta
            rows.append(row)
        return np.array(rows), np.ones(len(rows))


class ExplicitPolytope(UncertaintySet):
    """{h in [0,1]^m : rows @ h <= rhs}; intended down-monotone.

    params: {"rows": nested list, "rhs": list}.
    """

    family = "ExplicitPolytope"
    permutation_invariant = False

    def __init__(self, m, rows, rhs):
        super().__init__(m)
        rows = np.asarray(rows, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != m or rows.shape[0] != rhs.size:
            raise DimensionMismatch("rows/rhs shapes disagree")
        self.rows = rows
        self.rhs = rhs

    def params(self):
        return {"rows": self.rows.tolist(), "rhs": self.rhs.tolist()}

    def _member(self, h, tol):
        if np.any(h > 1 + tol):
            return False
        return np.all(self.rows @ h <= self.rhs + tol)

    def _support(self, w):
        return _support_lp(self.rows, self.rhs, w, self.m)

    def h_rep(self):
        return self.rows.copy(), self.rhs.copy()

    def vertices(self):
        if self.m > 8:
            return None
        return _enumerate_hrep_vertices(self.rows, self.rhs, self.m)


def _enumerate_hrep_vertices(rows, rhs, m):
    """Feasible intersections of m active constraints of the boxed H-rep."""
    A = [rows[i] for i in range(rows.shape[0])]
    b = list(rhs)
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1.0
        A.append(e.copy())
        b.append(1.0)
        A.append(-e)
        b.append(0.0)
    A = np.array(A)
    b = np.array(b)
    n_cons = len(b)
    n_cand = _comb(n_cons, m)
    if n_cand > 2 * VERTEX_CAP:
        raise CombinatorialBlowup(
            f"{n_cand} candidate bases exceed the enumeration cap")
    verts = []
    for active in itertools.combinations(range(n_cons), m):
        M = A[list(active)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[list(active)])
        if np.all(A @ v <= b + 1e-9):
            verts.append(np.maximum(v, 0.0))
    uniq = []
    for v in verts:
        if not any(np.max(np.abs(v - u)) < 1e-9 for u in uniq):
            uniq.append(v)
    if len(uniq) > VERTEX_CAP:
        raise CombinatorialBlowup("vertex list exceeds cap")
    return np.array(uniq)


# ----------------------------------------------------------------------------
# hull families and scaling wrapper
# ----------------------------------------------------------------------------


class ExplicitConvHull(UncertaintySet):
    """Convex hull of an explicit point list, optionally extended with the
    full permutation orbit of a sparse uniform vector.

    params: {"vertices": nested list, "orbit": {"value": v, "nonzeros": r}}
    (orbit optional).  With an orbit and m > 12 the vertex list stays lazy:
    support/gamma use the sorted closed form, membership and vertex
    enumeration raise ``CombinatorialBlowup``.
    """

    family = "ExplicitConvHull"

    def __init__(self, m, vertices, orbit=None, check_box=True):
        super().__init__(m)
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != m:
            raise DimensionMismatch("vertices must be N x m")
        if np.any(pts < -1e-12):
            raise ParameterOutOfRange("hull points must be nonnegative")
        if check_box and np.any(pts > 1 + 1e-9):
            raise ParameterOutOfRange("hull points must lie in the unit box")
        self.points = pts
        if orbit is not None:
            value = float(orbit["value"])
            nonzeros = int(orbit["nonzeros"])
            if not 1 <= nonzeros <= m or value <= 0:
                raise ParameterOutOfRange("bad orbit parameters")
            self.orbit = {"value": value, "nonzeros": nonzeros}
        else:
            self.orbit = None

    @property
    def permutation_invariant(self):
        if self.orbit is None:
            return False
        base = {tuple(np.round(p, 12)) for p in self.points}
        expected = {tuple(np.zeros(self.m))}
        for i in range(self.m):
            e = np.zeros(self.m)
            e[i] = 1.0
            expected.add(tuple(np.round(e, 12)))
        return base == expected

    def params(self):
        out = {"vertices": self.points.tolist()}
        if self.orbit is not None:
            out["orbit"] = dict(self.orbit)
        return out

    def _orbit_count(self):
        return 0 if self.orbit is None else _comb(self.m,
                                                  self.orbit["nonzeros"])

    def _all_points(self):
        if self.orbit is None:
            return self.points
        if self.m > 12:
            raise CombinatorialBlowup(
                "orbit expansion is only materialized for m <= 12")
        value, r = self.orbit["value"], self.orbit["nonzeros"]
        extra = []
        for idx in itertools.combinations(range(self.m), r):
            v = np.zeros(self.m)
            v[list(idx)] = value
            extra.append(v)
        return np.vstack([self.points, extra])

    def _member(self, h, tol):
        pts = self._all_points()
        n = pts.shape[0]
        cons = [(pts[:, i], EQ, float(h[i])) for i in range(self.m)]
        cons.append((np.ones(n), EQ, 1.0))
        spec = LinearProgramSpec(np.zeros(n), cons)
        # minimal total slack of the convex-combination system
        sol = solve_lp(_relaxed_feasibility(spec))
        return sol.status is LpStatus.OPTIMAL and sol.objective <= tol * max(
            1.0, float(self.m))

    def _support(self, w):
        best = 0.0
        arg = np.zeros(self.m)
        vals = self.points @ w
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            arg = self.points[j]
        if self.orbit is not None:
            value, r = self.orbit["value"], self.orbit["nonzeros"]
            order = np.argsort(-w, kind="stable")[:r]
            v = np.zeros(self.m)
            v[order] = value
            cand = float(w @ v)
            if cand > best:
                best = cand
                arg = v
        return SupportResult(best, arg.copy())

    def vertices(self):
        total = self.points.shape[0] + self._orbit_count()
        if total > VERTEX_CAP:
            raise CombinatorialBlowup(f"{total} vertices exceed {VERTEX_CAP}")
        pts = self._all_points()
        uniq = []
        for v in pts:
            if not any(np.max(np.abs(v - u)) < 1e-12 for u in uniq):
                uniq.append(v)
        pts = np.array(uniq)
        if pts.shape[0] > 500:
            return pts
        keep = []
        for i in range(pts.shape[0]):
            others = np.delete(pts, i, axis=0)
            if not _in_hull(pts[i], others):
                keep.append(i)
        return pts[keep]


def _relaxed_feasibility(spec: LinearProgramSpec):
    """Phase-1-style LP: minimize total slack of the equality system."""
    n = spec.n_vars
    k = spec.n_rows
    # variables: original n, plus a slack pair per row
    obj = np.concatenate([np.zeros(n), np.ones(2 * k)])
    cons = []
    for i in range(k):
        row = np.zeros(n + 2 * k)
        row[:n] = spec.rows[i]
        row[n + 2 * i] = 1.0
        row[n + 2 * i + 1] = -1.0
        cons.append((row, EQ, spec.rhs[i]))
    return LinearProgramSpec(obj, cons)


def _in_hull(point, pts):
    n = pts.shape[0]
    cons = [(pts[:, i], EQ, float(point[i])) for i in range(point.size)]
    cons.append((np.ones(n), EQ, 1.0))
    sol = solve_lp(_relaxed_feasibility(LinearProgramSpec(np.zeros(n), cons)))
    return sol.status is LpStatus.OPTIMAL and sol.objective <= 1e-9


class ScaledSpi(UncertaintySet):
    """diag(lam) image of a permutation-invariant inner set.

    params: {"lam": list, "inner": descriptor}.  Oracles delegate to the
    inner set; permutation-dependent operations require unwrapping first.
    """

    family = "ScaledSpi"
    permutation_invariant = False

    def __init__(self, m, lam, inner: UncertaintySet):
        super().__init__(m)
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (m,):
            raise DimensionMismatch("lam must have length m")
        if np.any(lam <= 0):
            raise NonPositiveScale("lam must be strictly positive")
        if inner.m != m:
            raise DimensionMismatch("inner set dimension mismatch")
        if not inner.permutation_invariant:
            raise NotPermutationInvariant("inner set must be PI")
        self.lam = lam
        self.inner = inner

    def params(self):
        return {"lam": self.lam.tolist(),
                "inner": json.loads(self.inner.to_json())}

    def _member(self, h, tol):
        return self.inner.membership(h / self.lam, tol=tol)

    def _support(self, w):
        res = self.inner.support(self.lam * w)
        return SupportResult(res.value, self.lam * res.argmax)

    def sample(self, count, seed):
        return self.inner.sample(count, seed) * self.lam


def unwrap_scaled(instance, scaled: ScaledSpi):
    """Row-rescale an instance so the uncertainty becomes the inner PI set.

    The covering system ``A x + B y >= h`` with ``h = lam * g`` is divided
    rowwise by ``lam``; the two-stage optimum is unchanged.
    """
    if not isinstance(scaled, ScaledSpi):
        raise UnsupportedFamily("unwrap_scaled expects a ScaledSpi set")
    lam = scaled.lam
    inv = (1.0 / lam)[:, None]
    return replace(instance, A=instance.A * inv, B=instance.B * inv), \
        scaled.inner


# ----------------------------------------------------------------------------
# module-level ops and JSON
# ----------------------------------------------------------------------------


def membership(uset: UncertaintySet, h, tol: float = DEFAULT_TOL) -> bool:
    return uset.membership(h, tol=tol)


def support(uset: UncertaintySet, w) -> SupportResult:
    return uset.support(w)


def gamma(uset: UncertaintySet, k: int) -> float:
    return uset.gamma(k)


def vertices(uset: UncertaintySet) -> Optional[np.ndarray]:
    return uset.vertices()


def sample(uset: UncertaintySet, count: int, seed: int) -> np.ndarray:
    return uset.sample(count, seed)


_FAMILIES = {}


def _register(cls):
    _FAMILIES[cls.family] = cls


for _cls in (PNormBall, Hypersphere, TwoNormBalls, PiEllipsoid, Budget,
             BudgetIntersection, GeneralizedBudget, ExplicitPolytope,
             ExplicitConvHull):
    _register(_cls)


def from_json(text: str) -> UncertaintySet:
    """Build a descriptor from its JSON form."""
    doc = json.loads(text) if isinstance(text, str) else text
    family = doc["family"]
    m = int(doc["m"])
    params = doc.get("params", {})
    if family == "ScaledSpi":
        inner = from_json(params["inner"])
        return ScaledSpi(m, np.asarray(params["lam"], dtype=float), inner)
    if family not in _FAMILIES:
        raise UnsupportedFamily(f"unknown family {family!r}")
    cls = _FAMILIES[family]
    if family == "Hypersphere":
        return cls(m)
    if family == "PNormBall":
        return cls(m, params["p"], params.get("radius", 1.0))
    if family == "TwoNormBalls":
        return cls(m, params["p"], params["q"], params["r"])
    if family == "PiEllipsoid":
        return cls(m, params["a"])
    if family == "Budget":
        return cls(m, params["k"])
    if family == "BudgetIntersection":
        return cls(m, np.asarray(params["alpha"], dtype=float))
    if family == "GeneralizedBudget":
        return cls(m, params["theta"])
    if family == "ExplicitPolytope":
        return cls(m, np.asarray(params["rows"], dtype=float),
                   np.asarray(params["rhs"], dtype=float))
    if family == "ExplicitConvHull":
        return cls(m, np.asarray(params["vertices"], dtype=float),
                   orbit=params.get("orbit"))
    raise UnsupportedFamily(family)


def validate_assumption1(uset: UncertaintySet, samples: int = 100,
                         seed: int = 0, tol: float = 1e-7) -> None:
    """Spot-check the standing normalization; raises on violation.

    Checks unit vectors and the origin for membership, box containment and
    down-monotonicity on sampled points.  ``ScaledSpi`` validates its inner
    set; ``GeneralizedBudget`` with theta > 1 skips the down-monotone check.
    """
    if isinstance(uset, ScaledSpi):
        validate_assumption1(uset.inner, samples=samples, seed=seed, tol=tol)
        return
    m = uset.m
    if not uset.membership(np.zeros(m), tol=tol):
        raise ParameterOutOfRange("origin not a member")
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        if not uset.membership(e, tol=tol):
            raise ParameterOutOfRange(f"unit vector e_{i + 1} not a member")
    check_monotone = not (isinstance(uset, GeneralizedBudget)
                          and not uset.is_down_monotone)
    pts = uset.sample(samples, seed)
    rng = np.random.default_rng(seed + 1)
    for h in pts:
        if np.any(h > 1 + tol):
            raise ParameterOutOfRange("sampled member escapes the unit box")
        if check_monotone:
            h2 = h * rng.uniform(0.0, 1.0, size=m)
            if not uset.membership(h2, tol=tol):
                raise ParameterOutOfRange(
                    "down-monotonicity violated by a sampled pair")
