"""Benchmark harness: random instances, the adversarial affine-policy
instance family, and the piecewise-vs-affine comparison pipeline.

Families and their instance scalings (B = I + |Y|/s entrywise, Y standard
normal, A = B, c = d = e):

=====================  ======================================  =========
family tag             uncertainty set                          s
=====================  ======================================  =========
hypersphere            unit 2-norm ball                        sqrt(m)
pnorm3                 3-norm ball                             m^(1/3)
pnorm3_2               3/2-norm ball                           m^(2/3)
budget                 sum h <= c*sqrt(m), c ~ U[1,2]          sqrt(m)
budget_intersection2   two normalized budget rows              sqrt(m)
budget_intersection5   five normalized budget rows             sqrt(m)
generalized_budget     pairwise budgets, theta = 0.4*(m-1)     sqrt(m)
=====================  ======================================  =========

The reported policy value is always the adjustable optimum over the
family's dominating hull: the doubled hull for the norm balls, the direct
closed-form hull for budget and pairwise-budget sets, and the shifted hull
built from the iterative construction for budget intersections.
"""

import csv
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domination import (
    DominatingSimplex,
    appendix_g_simplex,
    closed_form_simplex,
    iterative_simplex,
)
from .errors import DomSimplexError, ParameterOutOfRange
from .policies import Instance, exact_ar, solve_affine, solve_simplex_ar
from .uncertainty import (
    Budget,
    BudgetIntersection,
    ExplicitConvHull,
    GeneralizedBudget,
    Hypersphere,
    PNormBall,
    UncertaintySet,
)

FAMILIES = (
    "hypersphere",
    "pnorm3",
    "pnorm3_2",
    "budget",
    "budget_intersection2",
    "budget_intersection5",
    "generalized_budget",
)

CSV_COLUMNS = ("family", "m", "instance_id", "z_pap", "z_aff", "ratio",
               "t_pap_ms", "t_aff_ms", "t_alg1_ms", "status")

_SCALE_EXP = {"pnorm3": 1.0 / 3.0, "pnorm3_2": 2.0 / 3.0}


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    m_values: Sequence[int]
    instances: int = 50
    seed: int = 0
    affine_tol: float = 1e-6
    out_path: Optional[str] = None
    affine_max_m: int = 30

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterOutOfRange(
                f"family must be one of {', '.join(FAMILIES)}")
        if any(m < 2 for m in self.m_values):
            raise ParameterOutOfRange("m must be >= 2")
        if self.instances < 1:
            raise ParameterOutOfRange("instances must be >= 1")


@dataclass(frozen=True)
class MStats:
    """Ratio statistics for one dimension; quantiles are upper tails
    (q05 = 95th percentile), matching how the ratio tables read."""

    m: int
    n_ok: int
    n_failed: int
    avg: float
    max: float
    min: float
    q05: float
    q10: float
    q25: float
    q50: float
    t_pap_ms: float
    t_aff_ms: float
    t_alg1_ms: Optional[float]


@dataclass
class RatioStats:
    family: str
    per_m: Dict[int, MStats] = field(default_factory=dict)

    @property
    def any_failures(self) -> bool:
        return any(s.n_failed for s in self.per_m.values())


def _instance_rng(seed: int, m: int, idx: int) -> np.random.Generator:
    return np.random.default_rng([seed, m, idx])


def gen_instance(family: str, m: int, seed, rng=None) -> Instance:
    """Random covering instance: n = m, c = d = e, A = B = I + |Y|/s."""
    if family not in FAMILIES:
        raise ParameterOutOfRange(f"unknown family {family!r}")
    if rng is None:
        rng = np.random.default_rng(seed)
    s = m ** _SCALE_EXP.get(family, 0.5)
    G = np.abs(rng.standard_normal((m, m))) / s
    B = np.eye(m) + G
    return Instance(A=B.copy(), B=B, c=np.ones(m), d=np.ones(m))


def _make_set(family: str, m: int, rng) -> UncertaintySet:
    if family == "hypersphere":
        return Hypersphere(m)
    if family == "pnorm3":
        return PNormBall(m, p=3.0)
    if family == "pnorm3_2":
        return PNormBall(m, p=1.5)
    if family == "budget":
        c = rng.uniform(1.0, 2.0)
        return Budget(m, k=min(float(m), c * np.sqrt(m)))
    if family in ("budget_intersection2", "budget_intersection5"):
        L = 2 if family.endswith("2") else 5
        G = rng.standard_normal((L, m))
        alpha = np.abs(G) / np.linalg.norm(G, axis=1, keepdims=True)
        return BudgetIntersection(m, alpha)
    if family == "generalized_budget":
        return GeneralizedBudget(m, theta=0.4 * (m - 1))
    raise ParameterOutOfRange(family)


def _policy_hull(family: str,
                 uset: UncertaintySet) -> Tuple[DominatingSimplex, float]:
    """Dominating hull used for the policy value, plus construction time."""
    if family in ("budget_intersection2", "budget_intersection5"):
        t0 = time.perf_counter()
        base, _ = iterative_simplex(uset)
        hull = appendix_g_simplex(uset, base.beta, base.v, check=False)
        return hull, (time.perf_counter() - t0) * 1e3
    sim = closed_form_simplex(uset)
    return sim.dominating_hull(), 0.0


@dataclass(frozen=True)
class ComparisonRow:
    family: str
    m: int
    instance_id: int
    z_pap: Optional[float]
    z_aff: Optional[float]
    ratio: Optional[float]
    t_pap_ms: Optional[float]
    t_aff_ms: Optional[float]
    t_alg1_ms: Optional[float]
    status: str


def run_comparison(config: ExperimentConfig) -> Tuple[RatioStats,
                                                      List[ComparisonRow]]:
    """Policy-vs-affine sweep; failures are recorded per instance, never
    silently dropped."""
    rows: List[ComparisonRow] = []
    stats = RatioStats(config.family)
    for m in config.m_values:
        ratios, t_paps, t_affs, t_algs = [], [], [], []
        failed = 0
        for idx in range(config.instances):
            rng = _instance_rng(config.seed, m, idx)
            inst = gen_instance(config.family, m, None, rng=rng)
            uset = _make_set(config.family, m, rng)
            try:
                hull, t_alg1 = _policy_hull(config.family, uset)
                t0 = time.perf_counter()
                z_pap = solve_simplex_ar(inst, hull).objective
                t_pap = (time.perf_counter() - t0) * 1e3
                if m > config.affine_max_m:
                    rows.append(ComparisonRow(
                        config.family, m, idx, z_pap, None, None, t_pap,
                        None, t_alg1 or None, "pap_only"))
                    t_paps.append(t_pap)
                    continue
                t0 = time.perf_counter()
                z_aff = solve_affine(inst, uset, tol=config.affine_tol
                                     ).objective
                t_aff = (time.perf_counter() - t0) * 1e3
            except DomSimplexError as exc:
                failed += 1
                rows.append(ComparisonRow(
                    config.family, m, idx, None, None, None, None, None,
                    None, f"failed:{type(exc).__name__}"))
                continue
            ratio = z_aff / z_pap
            rows.append(ComparisonRow(
                config.family, m, idx, z_pap, z_aff, ratio, t_pap, t_aff,
                t_alg1 or None, "ok"))
            ratios.append(ratio)
            t_paps.append(t_pap)
            t_affs.append(t_aff)
            if t_alg1:
                t_algs.append(t_alg1)
        if ratios:
            arr = np.array(ratios)
            stats.per_m[m] = MStats(
                m=m, n_ok=len(ratios), n_failed=failed,
                avg=float(arr.mean()), max=float(arr.max()),
                min=float(arr.min()),
                q05=float(np.percentile(arr, 95)),
                q10=float(np.percentile(arr, 90)),
                q25=float(np.percentile(arr, 75)),
                q50=float(np.percentile(arr, 50)),
                t_pap_ms=float(np.mean(t_paps)),
                t_aff_ms=float(np.mean(t_affs)) if t_affs else float("nan"),
                t_alg1_ms=float(np.mean(t_algs)) if t_algs else None)
    if config.out_path:
        write_csv(config.out_path, rows)
    return stats, rows


def write_csv(path: str, rows: Sequence[ComparisonRow]) -> None:
    def fmt(x):
        if x is None:
            return ""
        if isinstance(x, float):
            return repr(x)
        return str(x)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([fmt(getattr(r, col)) for col in CSV_COLUMNS])


# ----------------------------------------------------------------------------
# adversarial instance family for the affine baseline
# ----------------------------------------------------------------------------


def build_worstcase_instance(m: int) -> Tuple[Instance, ExplicitConvHull]:
    """Adversarial covering instance with hull uncertainty.

    Requires a perfect square m >= 4 so the orbit support count m - sqrt(m)
    is integral.  B has unit diagonal and 1/sqrt(m) off-diagonal, A = B,
    c = e/15, d = e; the uncertainty is the hull of the origin, the unit
    vectors, and every placement of m - sqrt(m) coordinates at 1/sqrt(m).
    """
    root = int(round(np.sqrt(m)))
    if root * root != m or m < 4:
        raise ParameterOutOfRange("m must be a perfect square >= 4")
    r = m - root
    B = np.full((m, m), 1.0 / root)
    np.fill_diagonal(B, 1.0)
    inst = Instance(A=B.copy(), B=B, c=np.ones(m) / 15.0, d=np.ones(m))
    pts = np.vstack([np.zeros(m), np.eye(m)])
    uset = ExplicitConvHull(m, pts,
                            orbit={"value": 1.0 / root, "nonzeros": r})
    return inst, uset


def worstcase_simplex(m: int) -> DominatingSimplex:
    """Dominating hull conv((m/r) e_i, e/sqrt(m)) for the adversarial set.

    v = (r/(m sqrt(m))) e is the average of the orbit points, hence a
    member; the hull dominates directly with scaling factor m/r.
    """
    root = int(round(np.sqrt(m)))
    if root * root != m or m < 4:
        raise ParameterOutOfRange("m must be a perfect square >= 4")
    r = m - root
    beta = m / r
    v = (r / (m * root)) * np.ones(m)
    return DominatingSimplex(beta, v, "ClosedForm", dominates_directly=True)


@dataclass(frozen=True)
class WorstCaseResult:
    m: int
    z_pap: float
    z_aff: float
    ratio: float
    z_exact: Optional[float]   # vertex-exact value where enumerable
    pap_bound: float           # m / (m - sqrt(m))
    aff_bound: float           # sqrt(m) / 15


def run_worstcase(m: int, affine_tol: float = 1e-6,
                  with_exact: Optional[bool] = None) -> WorstCaseResult:
    inst, uset = build_worstcase_instance(m)
    sim = worstcase_simplex(m)
    z_pap = solve_simplex_ar(inst, sim).objective
    z_aff = solve_affine(inst, uset, tol=affine_tol).objective
    root = int(round(np.sqrt(m)))
    if with_exact is None:
        with_exact = m <= 9
    z_exact = None
    if with_exact:
        z_exact, _ = exact_ar(inst, uset.vertices())
    return WorstCaseResult(
        m=m, z_pap=z_pap, z_aff=z_aff, ratio=z_aff / z_pap,
        z_exact=z_exact,
        pap_bound=m / (m - root),
        aff_bound=np.sqrt(m) / 15.0)
