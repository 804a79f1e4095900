"""Self-contained dense LP subsystem.

Two-phase primal simplex on a dense tableau, with an incremental row-append
path (dual simplex warm start) for cutting-plane masters.  Deterministic:
Dantzig pricing with first-index tie-breaking, Bland's rule after 1000
degenerate pivots, minimum-ratio leaving with smallest-basis-index ties.
Solving the same spec twice yields bit-identical results.

Units and conventions: minimization, relations ``">="``, ``"<="``, ``"="``,
variable lower bounds default to 0 (``-inf`` marks a free variable, handled
by an internal split), upper bounds become internal rows.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NumericalBreakdown

Relation = str
GE, LE, EQ = ">=", "<=", "="
_RELATIONS = (GE, LE, EQ)

FEAS_TOL = 1e-7
OPT_TOL = 1e-8
PIV_TOL = 1e-9
BLAND_AFTER = 1000

Constraint = Tuple[np.ndarray, Relation, float]


class LpStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProgramSpec:
    """Dense LP data: minimize ``objective @ x`` subject to row constraints.

    ``constraints`` is a sequence of ``(row, relation, rhs)`` triples.
    """

    objective: np.ndarray
    constraints: Sequence[Constraint]
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.ndim != 1:
            raise DimensionMismatch("objective must be a vector")
        n = self.objective.size
        rows = []
        rels = []
        rhs = []
        for row, rel, b in self.constraints:
            row = np.asarray(row, dtype=float)
            if row.shape != (n,):
                raise DimensionMismatch(
                    f"constraint row has length {row.size}, expected {n}")
            if rel not in _RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
            rows.append(row)
            rels.append(rel)
            rhs.append(float(b))
        self.rows = np.array(rows, dtype=float) if rows else np.zeros((0, n))
        self.relations = tuple(rels)
        self.rhs = np.array(rhs, dtype=float)
        self.lower = (np.zeros(n) if self.lower is None
                      else np.asarray(self.lower, dtype=float))
        if self.upper is not None:
            self.upper = np.asarray(self.upper, dtype=float)
            if self.upper.shape != (n,):
                raise DimensionMismatch("upper bounds have wrong length")
        if self.lower.shape != (n,):
            raise DimensionMismatch("lower bounds have wrong length")
        for arr, what in ((self.objective, "objective"), (self.rows, "rows"),
                          (self.rhs, "rhs")):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {what}")
        if np.any(np.isnan(self.lower)) or (
                self.upper is not None and np.any(np.isnan(self.upper))):
            raise ValueError("NaN in bounds")
        if self.upper is not None:
            both = np.isfinite(self.lower) & np.isfinite(self.upper)
            if np.any(self.lower[both] > self.upper[both] + 1e-12):
                raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return len(self.relations)

    def with_rows(self, new_rows: Sequence[Constraint]) -> "LinearProgramSpec":
        """Spec augmented with extra constraint rows."""
        return LinearProgramSpec(
            self.objective,
            list(zip(self.rows, self.relations, self.rhs)) + list(new_rows),
            lower=self.lower.copy(),
            upper=None if self.upper is None else self.upper.copy(),
        )


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class SimplexSolver:
    """Two-phase dense simplex over one spec, reusable for appended rows.

    Single-use per thread of execution: build, ``solve()``, optionally
    ``add_rows()`` + ``resolve()``.  No state is shared between instances.
    """

    def __init__(self, spec: LinearProgramSpec):
        self.spec = spec
        self._extra: list = []          # constraints appended after build
        self._cut_age: list = []        # consecutive slack checks per extra row
        self._solved = False
        self._status: Optional[LpStatus] = None
        self._degen = 0
        self._iters = 0
        self._build()

    # -- standardization ---------------------------------------------------

    def _build(self):
        spec = self.spec
        n = spec.n_vars
        lower = spec.lower
        self._free = ~np.isfinite(lower)
        self._shift = np.where(self._free, 0.0, lower)

        # structural columns: one per variable, plus one negative part per
        # free variable
        self._pos_col = np.arange(1, n + 1)
        neg = np.full(n, -1, dtype=np.int64)
        nxt = n + 1
        for j in np.nonzero(self._free)[0]:
            neg[j] = nxt
            nxt += 1
        self._neg_col = neg
        self._n_struct = nxt - 1

        rows = [(spec.rows[i], spec.relations[i], spec.rhs[i])
                for i in range(spec.n_rows)]
        self._n_user = len(rows)
        if spec.upper is not None:
            for j in np.nonzero(np.isfinite(spec.upper))[0]:
                e = np.zeros(n)
                e[j] = 1.0
                rows.append((e, LE, float(spec.upper[j])))

        m = len(rows)
        n_art_max = m
        cap_cols = 1 + self._n_struct + m + n_art_max
        self._alloc(2 + m, cap_cols)
        T = self._buf
        colkind = self._colkind_buf
        colkind[0] = 3
        colkind[1:1 + self._n_struct] = 0

        # phase-2 reduced costs for the slack starting basis
        cstd = np.zeros(cap_cols)
        cstd[self._pos_col] = spec.objective
        has_neg = self._neg_col >= 0
        cstd[self._neg_col[has_neg]] = -spec.objective[has_neg]
        T[0, :] = 0.0
        T[0, 1:] = cstd[1:]

        self._basis = np.zeros(m, dtype=np.int64)
        self._row_negated = np.zeros(m, dtype=bool)
        self._dual_col = np.zeros(m, dtype=np.int64)
        nxt = 1 + self._n_struct
        art_rows = []
        for i, (row, rel, b) in enumerate(rows):
            coef, b_std = self._standardize_row(row, b)
            neg = False
            if rel == GE:
                coef, b_std, rel, neg = -coef, -b_std, LE, True
            if b_std < 0:
                coef, b_std, neg = -coef, -b_std, not neg
                rel = GE if rel == LE else EQ
            self._row_negated[i] = neg
            T[2 + i, 0] = b_std
            T[2 + i, 1:1 + self._n_struct] = coef
            if rel == LE:
                T[2 + i, nxt] = 1.0
                colkind[nxt] = 1
                self._basis[i] = nxt
                self._dual_col[i] = nxt
                nxt += 1
            elif rel == GE:
                T[2 + i, nxt] = -1.0
                colkind[nxt] = 1
                nxt += 1
                art_rows.append(i)
            else:  # EQ
                art_rows.append(i)
        for i in art_rows:
            T[2 + i, nxt] = 1.0
            colkind[nxt] = 2
            self._basis[i] = nxt
            self._dual_col[i] = nxt
            nxt += 1
        self._ncols = nxt
        self._nrows = 2 + m
        self._art_rows = art_rows

        # phase-1 reduced costs: minimize the sum of artificials
        T[1, :] = 0.0
        for i in art_rows:
            T[1, :self._ncols] -= T[2 + i, :self._ncols]
        for i in art_rows:
            T[1, self._basis[i]] = 0.0

    def _standardize_row(self, row: np.ndarray, b: float):
        """Map a row over original variables to structural columns."""
        coef = np.zeros(self._n_struct)
        coef[self._pos_col - 1] = row
        has_neg = self._neg_col >= 0
        coef[self._neg_col[has_neg] - 1] = -row[has_neg]
        return coef, b - float(row @ self._shift)

    def _alloc(self, nrows, ncols):
        self._buf = np.zeros((nrows, ncols))
        self._colkind_buf = np.zeros(ncols, dtype=np.int8)

    def _grow(self, add_rows, add_cols):
        need_r = self._nrows + add_rows
        need_c = self._ncols + add_cols
        if need_r <= self._buf.shape[0] and need_c <= self._buf.shape[1]:
            return
        cap_r = max(need_r, int(self._buf.shape[0] * 1.5))
        cap_c = max(need_c, int(self._buf.shape[1] * 1.5))
        buf = np.zeros((cap_r, cap_c))
        buf[:self._nrows, :self._ncols] = self._buf[:self._nrows, :self._ncols]
        kind = np.zeros(cap_c, dtype=np.int8)
        kind[:self._ncols] = self._colkind_buf[:self._ncols]
        self._buf = buf
        self._colkind_buf = kind

    @property
    def _T(self):
        return self._buf[:self._nrows, :self._ncols]

    @property
    def _colkind(self):
        return self._colkind_buf[:self._ncols]

    def _cap(self):
        return 50 * (self._nrows + self._ncols)

    # -- solving -----------------------------------------------------------

    def solve(self) -> LpSolution:
        T = self._T
        if self._art_rows:
            code, it, self._degen = _kernels.primal_loop(
                T, self._basis, self._colkind, 1, OPT_TOL, PIV_TOL,
                self._cap(), BLAND_AFTER, self._degen)
            self._iters += it
            if code == 2:
                raise NumericalBreakdown(
                    f"phase-1 pivot cap {self._cap()} exceeded")
            if code == 1:
                raise NumericalBreakdown("phase-1 objective unbounded")
            if -T[1, 0] > FEAS_TOL:
                self._solved = True
                self._status = LpStatus.INFEASIBLE
                return LpSolution(LpStatus.INFEASIBLE, iterations=self._iters)
            self._expel_artificials()
        code, it, self._degen = _kernels.primal_loop(
            T, self._basis, self._colkind, 0, OPT_TOL, PIV_TOL,
            self._cap(), BLAND_AFTER, self._degen)
        self._iters += it
        if code == 2:
            raise NumericalBreakdown(f"pivot cap {self._cap()} exceeded")
        self._solved = True
        if code == 1:
            self._status = LpStatus.UNBOUNDED
            return LpSolution(LpStatus.UNBOUNDED, iterations=self._iters)
        self._status = LpStatus.OPTIMAL
        return self._extract()

    def _expel_artificials(self):
        """Pivot basic artificials out (or leave them pinned on redundant rows)."""
        T = self._T
        kind = self._colkind
        for i in range(self._nrows - 2):
            b = self._basis[i]
            if kind[b] == 2:
                row = T[2 + i]
                for j in range(1, self._ncols):
                    if kind[j] != 2 and kind[j] != 3 and abs(row[j]) > PIV_TOL:
                        _kernels._pivot_np(T, 2 + i, j)
                        self._basis[i] = j
                        break

    def _extract(self) -> LpSolution:
        T = self._T
        u = np.zeros(self._ncols)
        u[self._basis] = T[2:, 0]
        x = self._shift + u[self._pos_col]
        has_neg = self._neg_col >= 0
        x[has_neg] -= u[self._neg_col[has_neg]]
        duals = np.empty(self._n_user)
        for i in range(self._n_user):
            y = -T[0, self._dual_col[i]]
            duals[i] = -y if self._row_negated[i] else y
        obj = float(self.spec.objective @ x)
        return LpSolution(LpStatus.OPTIMAL, x=x, objective=obj, duals=duals,
                          iterations=self._iters)

    # -- incremental rows ---------------------------------------------------

    def add_rows(self, new_rows: Sequence[Constraint]):
        """Append constraints over the original variables.

        Equality rows are split into a <=/>= pair internally.
        """
        expanded = []
        for row, rel, b in new_rows:
            row = np.asarray(row, dtype=float)
            if row.shape != (self.spec.n_vars,):
                raise DimensionMismatch("new row has wrong width")
            if rel == EQ:
                expanded.append((row, LE, float(b)))
                expanded.append((row, GE, float(b)))
            else:
                expanded.append((row, rel, float(b)))
        self._extra.extend((r.copy(), rel, b) for r, rel, b in expanded)
        self._cut_age.extend(0 for _ in expanded)
        k = len(expanded)
        self._grow(k, k)
        T = self._buf
        kind = self._colkind_buf
        old_rows, old_cols = self._nrows, self._ncols
        for t, (row, rel, b) in enumerate(expanded):
            coef, b_std = self._standardize_row(row, b)
            if rel == GE:
                coef, b_std = -coef, -b_std
            r = old_rows + t
            T[r, :] = 0.0
            T[r, 0] = b_std
            T[r, 1:1 + self._n_struct] = coef
            slack = old_cols + t
            T[r, slack] = 1.0
            kind[slack] = 1
        self._nrows += k
        self._ncols += k
        T = self._T
        # reduce the new rows against the current basis in one shot: basic
        # columns are unit vectors, so there are no second-order terms
        if old_rows > 2 and self._solved:
            block = T[old_rows:, :]
            coef = block[:, self._basis].copy()
            block -= coef @ T[2:old_rows, :]
        self._basis = np.concatenate(
            [self._basis,
             np.arange(old_cols, old_cols + k, dtype=np.int64)])
        new_dual = np.arange(old_cols, old_cols + k, dtype=np.int64)
        self._dual_col = np.concatenate([self._dual_col, new_dual])
        self._row_negated = np.concatenate(
            [self._row_negated, np.zeros(k, dtype=bool)])

    def resolve(self) -> LpSolution:
        """Re-optimize after ``add_rows``; dual simplex from the prior basis."""
        if not self._solved or self._status is not LpStatus.OPTIMAL:
            return self._fresh()
        T = self._T
        code, it = _kernels.dual_loop(
            T, self._basis, self._colkind, FEAS_TOL, PIV_TOL, self._cap())
        self._iters += it
        if code == 1:
            # dual simplex says infeasible; confirm from scratch to rule out
            # accumulated roundoff in the warm tableau
            return self._fresh()
        if code == 2:
            return self._fresh()
        # polish: dual steps keep reduced costs nonnegative up to roundoff
        code, it, self._degen = _kernels.primal_loop(
            T, self._basis, self._colkind, 0, OPT_TOL, PIV_TOL,
            self._cap(), BLAND_AFTER, self._degen)
        self._iters += it
        if code == 2:
            return self._fresh()
        if code == 1:
            self._status = LpStatus.UNBOUNDED
            return LpSolution(LpStatus.UNBOUNDED, iterations=self._iters)
        self._status = LpStatus.OPTIMAL
        return self._extract()

    def _fresh(self) -> LpSolution:
        fresh = SimplexSolver(self.spec.with_rows(self._extra))
        out = fresh.solve()
        self.__dict__.update(fresh.__dict__)
        return out

    def drop_slack_cuts(self, min_slack: float = 1e-7,
                        min_age: int = 3) -> int:
        """Delete appended rows persistently nonbinding at the optimum.

        A row whose own slack is basic with positive value is nonbinding:
        its slack column is a unit column, so removing row and column leaves
        the tableau of the reduced problem with a valid basis and unchanged
        reduced costs.  A row is removed once it has been slack on
        ``min_age`` consecutive calls; rows from the original spec are never
        dropped.  Returns the number of rows removed.
        """
        if not self._solved or self._status is not LpStatus.OPTIMAL:
            return 0
        T = self._T
        m = self._nrows - 2
        n_init = m - len(self._extra)
        drop_rows = []
        drop_cols = []
        for i in range(n_init, m):
            b = self._basis[i]
            slack_now = (b == self._dual_col[i] and self._colkind[b] == 1
                         and T[2 + i, 0] > min_slack)
            k = i - n_init
            self._cut_age[k] = self._cut_age[k] + 1 if slack_now else 0
            if self._cut_age[k] >= min_age:
                drop_rows.append(i)
                drop_cols.append(b)
        if not drop_rows:
            return 0
        keep_rows = np.setdiff1d(np.arange(m), np.array(drop_rows))
        keep_cols = np.setdiff1d(np.arange(self._ncols),
                                 np.array(drop_cols))
        remap = -np.ones(self._ncols, dtype=np.int64)
        remap[keep_cols] = np.arange(keep_cols.size)
        tab_rows = np.concatenate([np.arange(2), keep_rows + 2])
        new_kind = self._colkind[keep_cols].copy()
        self._buf = self._buf[np.ix_(tab_rows, keep_cols)].copy()
        self._colkind_buf = new_kind
        self._nrows = 2 + keep_rows.size
        self._ncols = keep_cols.size
        self._basis = remap[self._basis[keep_rows]]
        self._dual_col = remap[self._dual_col[keep_rows]]
        self._row_negated = self._row_negated[keep_rows]
        drop_extra = {i - n_init for i in drop_rows}
        self._extra = [c for k, c in enumerate(self._extra)
                       if k not in drop_extra]
        self._cut_age = [a for k, a in enumerate(self._cut_age)
                         if k not in drop_extra]
        # initial rows (including any carrying artificials) are never dropped
        return len(drop_rows)


def solve_lp(spec: LinearProgramSpec) -> LpSolution:
    """Solve a dense LP; deterministic for identical specs."""
    return SimplexSolver(spec).solve()


def resolve_with_rows(spec: LinearProgramSpec,
                      new_rows: Sequence[Constraint],
                      warm: Optional[SimplexSolver] = None) -> LpSolution:
    """Solve ``spec`` augmented with ``new_rows``.

    With ``warm`` (a solver that already solved ``spec``), reuses its basis
    via dual simplex; the result equals a fresh solve either way.
    """
    if warm is not None:
        warm.add_rows(new_rows)
        return warm.resolve()
    return solve_lp(spec.with_rows(new_rows))
