"""Dominating-simplex construction and verification.

A dominating pair ``(beta, v)`` certifies the structural inequality

    max over the set of sum_i (h_i - beta * v_i)^+  <=  beta,

which makes ``2 * beta * conv(e_1..e_m, v)`` a dominating set; several
families admit pairs whose *unscaled* hull ``beta * conv(e_1..e_m, v)``
already dominates (``dominates_directly``).  The module provides

* closed-form pairs per family,
* the gamma-based pair for permutation-invariant sets,
* an iterative construction for halfspace-described sets (one exact
  mixed-integer maximization per round),
* the max-plus-sum evaluator those constructions and the policy bounds
  share, and
* verification plus the point-wise dominating map.
"""

import json
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .errors import (
    NonConvergence,
    NotPermutationInvariant,
    ParameterOutOfRange,
    RequiresHRep,
    StrategyUnavailable,
    StructuralInequalityUnverified,
    UnsupportedFamily,
)
from .lpcore import LE, LinearProgramSpec, LpStatus, solve_lp
from .uncertainty import (
    Budget,
    ExplicitConvHull,
    GeneralizedBudget,
    Hypersphere,
    PiEllipsoid,
    PNormBall,
    TwoNormBalls,
    UncertaintySet,
)

logger = logging.getLogger(__name__)

PROVENANCES = ("ClosedForm", "NumericPi", "Algorithm1", "AppendixG",
               "AppendixH")
STRATEGIES = ("PiEnumeration", "Milp", "SubsetOracle")

EQ23_SLACK = 1e-6
SUBSET_ORACLE_MAX_M = 20


@dataclass(frozen=True)
class DominatingSimplex:
    """(beta, v) pair plus provenance; vertices derive from the provenance.

    ``dominates_directly`` records whether ``beta * conv(...)`` itself
    dominates the set (closed-form proofs for budget-style and ellipsoidal
    families, shifted hulls) or whether the guarantee is the generic doubled
    hull (gamma-based and iterative constructions).
    """

    beta: float
    v: np.ndarray
    provenance: str
    dominates_directly: bool = False

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ParameterOutOfRange(f"unknown provenance {self.provenance}")
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    @property
    def m(self) -> int:
        return self.v.size

    def vertices(self) -> np.ndarray:
        """The m+1 simplex vertices, scaled by beta."""
        eye = np.eye(self.m)
        if self.provenance == "AppendixG":
            tops = self.beta * (eye + self.v[None, :])
        else:
            tops = self.beta * eye
        return np.vstack([tops, self.beta * self.v[None, :]])

    def dominating_hull(self) -> "DominatingSimplex":
        """The simplex whose hull provably dominates the set."""
        if self.dominates_directly:
            return self
        return replace(self, beta=2.0 * self.beta, dominates_directly=True)

    def to_json(self) -> str:
        return json.dumps({
            "beta": self.beta,
            "v": self.v.tolist(),
            "provenance": self.provenance,
            "dominates_directly": self.dominates_directly,
        })

    @staticmethod
    def from_json(text) -> "DominatingSimplex":
        doc = json.loads(text) if isinstance(text, str) else text
        return DominatingSimplex(
            beta=float(doc["beta"]),
            v=np.asarray(doc["v"], dtype=float),
            provenance=doc["provenance"],
            dominates_directly=bool(doc.get("dominates_directly", False)),
        )


def _clamp_beta(beta: float, origin: str) -> float:
    if beta < 1.0:
        logger.info("%s produced beta=%.6g < 1; clamped to 1", origin, beta)
        return 1.0
    return beta


def beta_pi(uset: UncertaintySet) -> DominatingSimplex:
    """Gamma-based pair for a permutation-invariant set.

    beta = max over integer k of gamma(k) / (gamma(m) + 1/k), v = gamma(m)*e,
    clamped to beta >= 1.
    """
    if not uset.permutation_invariant:
        raise NotPermutationInvariant(f"{uset.family} is not PI")
    m = uset.m
    g_m = uset.gamma(m)
    beta = max(uset.gamma(k) / (g_m + 1.0 / k) for k in range(1, m + 1))
    beta = _clamp_beta(beta, "beta_pi")
    return DominatingSimplex(beta, g_m * np.ones(m), "NumericPi")


def beta_pi_raw(uset: UncertaintySet) -> float:
    """Unclamped integer-k maximum, for closed-form comparisons."""
    if not uset.permutation_invariant:
        raise NotPermutationInvariant(f"{uset.family} is not PI")
    m = uset.m
    g_m = uset.gamma(m)
    return max(uset.gamma(k) / (g_m + 1.0 / k) for k in range(1, m + 1))


def closed_form_simplex(uset: UncertaintySet) -> DominatingSimplex:
    """Family-specific closed-form pair."""
    m = uset.m
    e = np.ones(m)
    if isinstance(uset, (Hypersphere, PNormBall)) and not isinstance(
            uset, TwoNormBalls):
        if abs(uset.radius - 1.0) > 1e-12:
            raise ParameterOutOfRange(
                "closed form is stated for radius 1; use beta_pi")
        p = uset.p
        beta = (1.0 / p) * (p - 1.0) ** ((p - 1.0) / p) * m ** (
            (p - 1.0) / p ** 2) if p > 1 else 1.0
        beta = _clamp_beta(beta, "closed_form_simplex")
        return DominatingSimplex(beta, m ** (-1.0 / p) * e, "ClosedForm")
    if isinstance(uset, TwoNormBalls):
        p, q, r = uset.p, uset.q, uset.r
        if not (1.0 <= r <= m ** (1.0 / q - 1.0 / p) + 1e-12):
            raise ParameterOutOfRange("need 1 <= r <= m^(1/q - 1/p)")
        beta1 = r ** ((1.0 - p) / p) * m ** ((p - 1.0) / (p * q))
        beta2 = r ** (1.0 / q) * m ** ((q - 1.0) / q ** 2)
        beta = _clamp_beta(min(beta1, beta2), "closed_form_simplex")
        return DominatingSimplex(beta, r * m ** (-1.0 / q) * e, "ClosedForm",
                                 dominates_directly=True)
    if isinstance(uset, PiEllipsoid):
        a = uset.a
        g = 1.0 / np.sqrt(a * m * m + (1.0 - a) * m)
        beta = 1.0 / (a / 2.0 + np.sqrt(1.0 - a)
                      / (a * m * m + (1.0 - a) * m) ** 0.25)
        beta = _clamp_beta(beta, "closed_form_simplex")
        return DominatingSimplex(beta, g * e, "ClosedForm",
                                 dominates_directly=True)
    if isinstance(uset, Budget):
        k = uset.k
        beta = _clamp_beta(min(k, m / k), "closed_form_simplex")
        return DominatingSimplex(beta, (k / m) * e, "ClosedForm",
                                 dominates_directly=True)
    if isinstance(uset, GeneralizedBudget):
        theta = uset.theta
        if theta >= (m - 1) / 2.0:
            raise ParameterOutOfRange(
                "closed form needs theta < (m-1)/2; use the iterative "
                "construction for larger theta")
        v = e / (m - 1.0 - 2.0 * theta)
        return DominatingSimplex(1.0, v, "AppendixH", dominates_directly=True)
    raise UnsupportedFamily(
        f"no closed-form dominating pair for {uset.family}")


# ----------------------------------------------------------------------------
# max-plus-sum
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxPlusSum:
    value: float
    argmax: np.ndarray
    strategy: str


def _is_uniform(vec) -> bool:
    return float(np.ptp(vec)) <= 1e-12


def _pi_enumeration(uset, u, w) -> MaxPlusSum:
    m = uset.m
    u1 = float(u[0])
    w1 = float(w[0])
    best_val, best_k = 0.0, 0
    for k in range(1, m + 1):
        val = w1 * k * max(uset.gamma(k) - u1, 0.0)
        if val > best_val:
            best_val, best_k = val, k
    h = np.zeros(m)
    if best_k:
        h[:best_k] = uset.gamma(best_k)
    return MaxPlusSum(best_val, h, "PiEnumeration")


def _subset_oracle(uset, u, w) -> MaxPlusSum:
    m = uset.m
    if m > SUBSET_ORACLE_MAX_M:
        raise StrategyUnavailable(
            f"subset enumeration capped at m={SUBSET_ORACLE_MAX_M}")
    best = 0.0
    best_h = np.zeros(m)
    for bits in range(1, 1 << m):
        mask = np.zeros(m)
        for i in range(m):
            if (bits >> i) & 1:
                mask[i] = 1.0
        res = uset.support(mask * w)
        val = res.value - float((mask * w) @ u)
        if val > best:
            best = val
            best_h = res.argmax
    best = max(best, float(np.maximum(best_h - u, 0.0) @ w))
    return MaxPlusSum(best, best_h, "SubsetOracle")


def _milp(uset, u, w) -> MaxPlusSum:
    """Branch-and-bound on the binary formulation of the plus-part maximum.

    Variables [h | z | x]: maximize w @ z with z_i <= h_i - u_i + (1 - x_i),
    z_i <= x_i, h in the set's H-rep, x binary.  The z_i <= x_i cap stays
    although the unit box makes it inactive.
    """
    m = uset.m
    rows, rhs = uset.h_rep()
    n = 3 * m
    obj = np.zeros(n)
    obj[m:2 * m] = -w  # minimize -w.z
    cons = []
    for i in range(m):
        row = np.zeros(n)
        row[m + i] = 1.0
        row[i] = -1.0
        row[2 * m + i] = 1.0
        cons.append((row, LE, 1.0 - float(u[i])))
        row2 = np.zeros(n)
        row2[m + i] = 1.0
        row2[2 * m + i] = -1.0
        cons.append((row2, LE, 0.0))
    for rix in range(rows.shape[0]):
        row = np.zeros(n)
        row[:m] = rows[rix]
        cons.append((row, LE, float(rhs[rix])))
    lower = np.zeros(n)
    upper = np.ones(n)

    best_val = -np.inf
    best_h = np.zeros(m)

    def node_value(fix0, fix1):
        lo = lower.copy()
        up = upper.copy()
        for i in fix0:
            up[2 * m + i] = 0.0
        for i in fix1:
            lo[2 * m + i] = 1.0
        spec = LinearProgramSpec(obj, cons, lower=lo, upper=up)
        sol = solve_lp(spec)
        return sol

    stack = [(frozenset(), frozenset())]
    visited = 0
    while stack:
        fix0, fix1 = stack.pop()
        visited += 1
        if visited > 4 ** m + 100:
            raise NonConvergence("branch-and-bound node budget exceeded")
        sol = node_value(fix0, fix1)
        if sol.status is not LpStatus.OPTIMAL:
            continue
        ub = -sol.objective
        if ub <= best_val + 1e-9:
            continue
        x = sol.x[2 * m:]
        frac = np.abs(x - np.round(x))
        j = int(np.argmax(frac))
        if frac[j] <= 1e-6:
            val = float(np.maximum(sol.x[:m] - u, 0.0) @ w)
            if val > best_val:
                best_val = val
                best_h = sol.x[:m].copy()
            continue
        # incumbent from rounding before branching
        r0 = frozenset(fix0 | {i for i in range(m)
                               if i not in fix1 and x[i] < 0.5})
        r1 = frozenset(set(range(m)) - r0)
        inc = node_value(r0, r1)
        if inc.status is LpStatus.OPTIMAL:
            val = float(np.maximum(inc.x[:m] - u, 0.0) @ w)
            if val > best_val:
                best_val = val
                best_h = inc.x[:m].copy()
        stack.append((frozenset(fix0 | {j}), fix1))
        stack.append((fix0, frozenset(fix1 | {j})))
    if not np.isfinite(best_val):
        raise NonConvergence("no integral solution found")
    return MaxPlusSum(best_val, best_h, "Milp")


def max_plus_sum(uset: UncertaintySet, u, w,
                 strategy: Optional[str] = None) -> MaxPlusSum:
    """Exact max over the set of sum_i w_i (h_i - u_i)^+."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape != (uset.m,) or w.shape != (uset.m,):
        raise ParameterOutOfRange("u and w must be length-m vectors")
    if np.any(u < -1e-12) or np.any(w < -1e-12):
        raise ParameterOutOfRange("u and w must be nonnegative")
    down_monotone = getattr(uset, "is_down_monotone", True)
    pi_ok = (uset.permutation_invariant and down_monotone
             and _is_uniform(u) and _is_uniform(w))
    if strategy is None:
        if pi_ok:
            strategy = "PiEnumeration"
        elif uset.has_h_rep:
            strategy = "Milp"
        elif uset.m <= SUBSET_ORACLE_MAX_M:
            strategy = "SubsetOracle"
        else:
            raise StrategyUnavailable(
                f"no max-plus-sum strategy applies to {uset.family} "
                f"at m={uset.m} with these weights")
    if strategy == "PiEnumeration":
        if not pi_ok:
            raise StrategyUnavailable(
                "PiEnumeration needs a PI, down-monotone set and uniform "
                "u, w")
        return _pi_enumeration(uset, u, w)
    if strategy == "Milp":
        if not uset.has_h_rep:
            raise RequiresHRep(f"{uset.family} has no H-rep for the MIP")
        return _milp(uset, u, w)
    if strategy == "SubsetOracle":
        return _subset_oracle(uset, u, w)
    raise StrategyUnavailable(f"unknown strategy {strategy!r}")


# ----------------------------------------------------------------------------
# iterative construction for halfspace-described sets
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverTrace:
    """Per-round maximizers of the iterative construction."""

    points: List[np.ndarray]
    values: List[float]


def iterative_simplex(uset: UncertaintySet,
                      slack: float = 1e-7
                      ) -> Tuple[DominatingSimplex, CoverTrace]:
    """Build (beta, v) for a halfspace-described set by greedy covering.

    Each round takes an exact maximizer of the residual plus-part sum,
    clips the accumulated cover at the unit box, and stops as soon as the
    maximum no longer exceeds the round count (within ``slack``).  The
    returned v is a member and beta*(beta-1) <= 4m.
    """
    if not uset.has_h_rep:
        raise RequiresHRep(
            f"{uset.family} has no H-rep; permutation-invariant sets "
            "should use beta_pi")
    m = uset.m
    ones = np.ones(m)
    u = np.zeros(m)
    t = 0
    cap = int(np.ceil(2.0 * np.sqrt(m))) + 2
    points: List[np.ndarray] = []
    values: List[float] = []
    while True:
        res = max_plus_sum(uset, u, ones, strategy="Milp")
        if res.value <= t + slack:
            break
        if t >= cap:
            raise NonConvergence(
                f"round bound {cap} exceeded (value {res.value:.6g})")
        h = np.maximum(res.argmax, 0.0).copy()
        h[u >= 1.0 - 1e-12] = 0.0
        points.append(h)
        values.append(res.value)
        u = np.minimum(1.0, u + h)
        t += 1
    beta = float(max(t, 1))
    v = u / beta
    return (DominatingSimplex(beta, v, "Algorithm1"),
            CoverTrace(points, values))


def appendix_g_simplex(uset: UncertaintySet, beta: float, v,
                       check: bool = True) -> DominatingSimplex:
    """Shifted dominating hull conv(beta*v, beta*(e_i + v)).

    Valid for any structural pair, e.g. the iterative construction's
    output; the map h -> beta*v + (h - beta*v)^+ lands in this hull
    directly, so no doubling is needed.
    """
    v = np.asarray(v, dtype=float)
    if check:
        res = max_plus_sum(uset, beta * v, np.ones(uset.m))
        if res.value > beta + EQ23_SLACK:
            raise StructuralInequalityUnverified(
                f"plus-part max {res.value:.6g} exceeds beta={beta:.6g}")
    return DominatingSimplex(float(beta), v, "AppendixG",
                             dominates_directly=True)


# ----------------------------------------------------------------------------
# verification and the dominating map
# ----------------------------------------------------------------------------


def dominating_point(simplex: DominatingSimplex, h):
    """Map a member h to its dominating point beta*v + (h - beta*v)^+.

    Also returns the convex-combination coefficients (m weights on the
    scaled unit vectors, one on the v vertex) certifying containment in the
    down-monotone completion of the doubled hull.
    """
    h = np.asarray(h, dtype=float)
    bv = simplex.beta * simplex.v
    plus = np.maximum(h - bv, 0.0)
    hhat = bv + plus
    lam = plus / simplex.beta
    lam_v = 1.0 - float(lam.sum())
    return hhat, np.concatenate([lam, [lam_v]])


def verify_domination(uset: UncertaintySet, simplex: DominatingSimplex,
                      factor: int = 1, samples: int = 1000, seed: int = 0,
                      tol: float = 1e-7):
    """Check the domination certificates; returns (ok, witness).

    factor=1: the structural inequality via an exact max-plus-sum.
    factor=2: additionally, on sampled members, the mapped point dominates
    and its convex-combination coefficients are nonnegative with sum <= 1.
    """
    if factor not in (1, 2):
        raise ParameterOutOfRange("factor must be 1 or 2")
    bv = simplex.beta * simplex.v
    res = max_plus_sum(uset, bv, np.ones(uset.m))
    if res.value > simplex.beta + EQ23_SLACK:
        return False, res.argmax
    if factor == 1:
        return True, None
    for h in uset.sample(samples, seed):
        hhat, lam = dominating_point(simplex, h)
        if np.any(hhat < h - tol):
            return False, h
        if np.any(lam[:-1] < -tol) or lam[:-1].sum() > 1.0 + tol:
            return False, h
    return True, None
