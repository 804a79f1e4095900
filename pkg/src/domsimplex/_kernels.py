"""Simplex pivot loops: numba-JIT kernels with pure-numpy twins.

Tableau layout shared by every kernel:

* ``T[0]``  - reduced costs of the true objective (phase 2),
* ``T[1]``  - reduced costs of the phase-1 objective,
* ``T[2:]`` - one row per constraint,
* column 0  - right-hand side, columns ``1..`` - variables.

``colkind`` codes: 3 rhs, 0 structural, 1 slack, 2 artificial.  Artificial
columns never re-enter the basis.  Both backends use the same entering rule
(Dantzig, first index on ties; Bland after ``bland_after`` degenerate pivots)
and the same leaving rule (minimum ratio, smallest basis index within an
absolute tie window), so a given tableau pivots identically under either.

Status codes: 0 done, 1 unbounded (primal) / infeasible (dual), 2 pivot cap.
"""

import numpy as np

from ._backend import HAS_NUMBA, use_numba

_RATIO_TIE = 1e-9
_DEGEN_STEP = 1e-10


# ---------------------------------------------------------------------------
# pure-numpy reference implementations
# ---------------------------------------------------------------------------


def _pivot_np(T, r, c):
    # r is a tableau row index (constraint rows start at 2)
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= col[:, None] * T[r][None, :]


def _entering_np(obj, colkind, opt_tol, bland):
    cand = np.where(colkind != 2, obj, np.inf)
    cand[0] = np.inf
    if bland:
        hits = np.nonzero(cand < -opt_tol)[0]
        return int(hits[0]) if hits.size else -1
    j = int(np.argmin(cand))
    return j if cand[j] < -opt_tol else -1


def _leaving_np(T, basis, enter, piv_tol):
    col = T[2:, enter]
    rhs = T[2:, 0]
    ok = col > piv_tol
    if not ok.any():
        return -1, np.inf
    ratios = np.where(ok, rhs / np.where(ok, col, 1.0), np.inf)
    rmin = float(ratios.min())
    ties = np.nonzero(ratios <= rmin + _RATIO_TIE)[0]
    return int(ties[np.argmin(basis[ties])]), rmin


def primal_loop_np(T, basis, colkind, obj_row, opt_tol, piv_tol, max_iter,
                   bland_after, degen0):
    iters = 0
    degen = degen0
    while iters < max_iter:
        enter = _entering_np(T[obj_row], colkind, opt_tol, degen > bland_after)
        if enter < 0:
            return 0, iters, degen
        leave, rmin = _leaving_np(T, basis, enter, piv_tol)
        if leave < 0:
            return 1, iters, degen
        if rmin < _DEGEN_STEP:
            degen += 1
        _pivot_np(T, 2 + leave, enter)
        basis[leave] = enter
        iters += 1
    return 2, iters, degen


def dual_loop_np(T, basis, colkind, feas_tol, piv_tol, max_iter):
    iters = 0
    while iters < max_iter:
        rhs = T[2:, 0]
        r = int(np.argmin(rhs))
        if rhs[r] >= -feas_tol:
            return 0, iters
        row = T[2 + r]
        ok = (row < -piv_tol) & (colkind != 2)
        ok[0] = False
        if not ok.any():
            return 1, iters
        ratios = np.where(ok, T[0] / np.where(ok, -row, 1.0), np.inf)
        enter = int(np.argmin(ratios))
        _pivot_np(T, 2 + r, enter)
        basis[r] = enter
        iters += 1
    return 2, iters


# ---------------------------------------------------------------------------
# numba kernels (same arithmetic, explicit loops)
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _pivot_nb(T, r, c):
        ncols = T.shape[1]
        piv = T[r, c]
        for j in range(ncols):
            T[r, j] /= piv
        for i in range(T.shape[0]):
            if i != r:
                f = T[i, c]
                if f != 0.0:
                    for j in range(ncols):
                        T[i, j] -= f * T[r, j]

    @njit(cache=True)
    def primal_loop_nb(T, basis, colkind, obj_row, opt_tol, piv_tol, max_iter,
                       bland_after, degen0):
        m = T.shape[0] - 2
        ncols = T.shape[1]
        iters = 0
        degen = degen0
        while iters < max_iter:
            bland = degen > bland_after
            enter = -1
            if bland:
                for j in range(1, ncols):
                    if colkind[j] != 2 and T[obj_row, j] < -opt_tol:
                        enter = j
                        break
            else:
                best = -opt_tol
                for j in range(1, ncols):
                    if colkind[j] != 2:
                        v = T[obj_row, j]
                        if v < best:
                            best = v
                            enter = j
            if enter < 0:
                return 0, iters, degen
            rmin = np.inf
            for i in range(m):
                a = T[2 + i, enter]
                if a > piv_tol:
                    r = T[2 + i, 0] / a
                    if r < rmin:
                        rmin = r
            if rmin == np.inf:
                return 1, iters, degen
            leave = -1
            best_basis = np.int64(1) << 62
            for i in range(m):
                a = T[2 + i, enter]
                if a > piv_tol:
                    r = T[2 + i, 0] / a
                    if r <= rmin + _RATIO_TIE and basis[i] < best_basis:
                        best_basis = basis[i]
                        leave = i
            if rmin < _DEGEN_STEP:
                degen += 1
            _pivot_nb(T, 2 + leave, enter)
            basis[leave] = enter
            iters += 1
        return 2, iters, degen

    @njit(cache=True)
    def dual_loop_nb(T, basis, colkind, feas_tol, piv_tol, max_iter):
        m = T.shape[0] - 2
        ncols = T.shape[1]
        iters = 0
        while iters < max_iter:
            r = 0
            worst = T[2, 0]
            for i in range(1, m):
                if T[2 + i, 0] < worst:
                    worst = T[2 + i, 0]
                    r = i
            if worst >= -feas_tol:
                return 0, iters
            enter = -1
            best = np.inf
            for j in range(1, ncols):
                if colkind[j] != 2:
                    a = T[2 + r, j]
                    if a < -piv_tol:
                        ratio = T[0, j] / (-a)
                        if ratio < best:
                            best = ratio
                            enter = j
            if enter < 0:
                return 1, iters
            _pivot_nb(T, 2 + r, enter)
            basis[r] = enter
            iters += 1
        return 2, iters


def primal_loop(T, basis, colkind, obj_row, opt_tol, piv_tol, max_iter,
                bland_after, degen0):
    if use_numba():
        return primal_loop_nb(T, basis, colkind, obj_row, opt_tol, piv_tol,
                              max_iter, bland_after, degen0)
    return primal_loop_np(T, basis, colkind, obj_row, opt_tol, piv_tol,
                          max_iter, bland_after, degen0)


def dual_loop(T, basis, colkind, feas_tol, piv_tol, max_iter):
    if use_numba():
        return dual_loop_nb(T, basis, colkind, feas_tol, piv_tol, max_iter)
    return dual_loop_np(T, basis, colkind, feas_tol, piv_tol, max_iter)
