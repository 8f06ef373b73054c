"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Works over exact rationals (:class:`fractions.Fraction`, numpy object arrays)
or floats. Problems are stated as::

    maximize    c @ x
    subject to  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from liplab.errors import InputError

EXACT_MAX_VARS = 50
DENSE_MAX_VARS = 500
FLOAT_TOL = 1e-11


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        nv = len(self.c)
        for a, b, name in ((self.A_ub, self.b_ub, "ub"), (self.A_eq, self.b_eq, "eq")):
            if (a is None) != (b is None):
                raise InputError(f"A_{name} and b_{name} must be given together")
            if a is not None and (np.ndim(a) != 2 or np.shape(a)[1] != nv or np.shape(a)[0] != len(b)):
                raise InputError(f"A_{name} has shape {np.shape(a)}, expected ({len(b)}, {nv})")

    @property
    def num_vars(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LPResult:
    status: str  # optimal | infeasible | unbounded
    value: object = None
    x: np.ndarray | None = None
    exact: bool = False
    pivots: int = 0


def _to_exact(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    return np.vectorize(lambda v: v if isinstance(v, Fraction) else Fraction(v), otypes=[object])(arr)


class _Tableau:
    def __init__(self, rows: np.ndarray, basis: list[int], tol, zero):
        self.t = rows  # last column is the right-hand side
        self.basis = basis
        self.tol = tol
        self.zero = zero
        self.pivots = 0

    def pivot(self, r: int, col: int) -> None:
        t = self.t
        t[r] = t[r] / t[r, col]
        factors = t[:, col].copy()
        factors[r] = self.zero
        t -= np.outer(factors, t[r])
        self.basis[r] = col
        self.pivots += 1

    def optimize(self, obj: np.ndarray, allowed: int) -> str:
        """Maximize ``obj @ x`` over columns ``< allowed``; obj is a reduced-profit row
        kept in sync with the tableau (last entry is minus the objective value)."""
        t = self.t
        while True:
            col = next((j for j in range(allowed) if obj[j] > self.tol), None)
            if col is None:
                return "optimal"
            best = None
            for r in range(t.shape[0]):
                if t[r, col] > self.tol:
                    ratio = t[r, -1] / t[r, col]
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            r = best[1]
            factor = obj[col]
            self.pivot(r, col)
            obj -= factor * t[r]


def simplex(lp: LinearProgram, exact: bool) -> LPResult:
    conv = _to_exact if exact else (lambda a: np.asarray(a, dtype=float))
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    tol = 0 if exact else FLOAT_TOL
    nv = lp.num_vars
    c = conv(lp.c)
    a_ub = conv(lp.A_ub) if lp.A_ub is not None else conv(np.zeros((0, nv)))
    b_ub = conv(lp.b_ub) if lp.b_ub is not None else conv(np.zeros(0))
    a_eq = conv(lp.A_eq) if lp.A_eq is not None else conv(np.zeros((0, nv)))
    b_eq = conv(lp.b_eq) if lp.b_eq is not None else conv(np.zeros(0))
    n_ub, n_eq = len(b_ub), len(b_eq)
    n_rows = n_ub + n_eq

    # columns: structural | slacks (one per ub row) | artificials
    need_art = [r for r in range(n_ub) if b_ub[r] < 0] + [n_ub + r for r in range(n_eq)]
    n_art = len(need_art)
    width = nv + n_ub + n_art + 1
    t = np.full((n_rows, width), zero, dtype=object if exact else float)
    basis = [0] * n_rows
    for r in range(n_ub):
        t[r, :nv] = a_ub[r]
        t[r, nv + r] = one
        t[r, -1] = b_ub[r]
    for r in range(n_eq):
        t[n_ub + r, :nv] = a_eq[r]
        t[n_ub + r, -1] = b_eq[r]
    for r in range(n_rows):
        if t[r, -1] < 0:
            t[r] = -t[r]
    art_col = {}
    for k, r in enumerate(need_art):
        col = nv + n_ub + k
        t[r, col] = one
        art_col[r] = col
    for r in range(n_rows):
        basis[r] = art_col.get(r, nv + r)

    tab = _Tableau(t, basis, tol, zero)
    first_art = nv + n_ub

    if n_art:
        # phase 1: maximize -sum(artificials)
        obj = np.full(width, zero, dtype=t.dtype)
        obj[first_art : first_art + n_art] = -one
        for r in need_art:
            obj += t[r]
        tab.optimize(obj, first_art)
        # obj[-1] is the remaining artificial mass
        if obj[-1] > (0 if exact else 1e-9):
            return LPResult("infeasible", exact=exact, pivots=tab.pivots)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for r in range(tab.t.shape[0]):
            if tab.basis[r] >= first_art:
                col = next((j for j in range(first_art) if abs(tab.t[r, j]) > tol), None)
                if col is None:
                    continue
                tab.pivot(r, col)
            keep.append(r)
        tab.t = tab.t[keep]
        tab.basis = [tab.basis[r] for r in keep]

    # phase 2
    obj = np.full(tab.t.shape[1], zero, dtype=tab.t.dtype)
    obj[:nv] = c
    for r, bcol in enumerate(tab.basis):
        if obj[bcol] != 0:
            obj -= obj[bcol] * tab.t[r]
    status = tab.optimize(obj, first_art)
    if status == "unbounded":
        return LPResult("unbounded", exact=exact, pivots=tab.pivots)
    x = np.full(nv, zero, dtype=object if exact else float)
    for r, bcol in enumerate(tab.basis):
        if bcol < nv:
            x[bcol] = tab.t[r, -1]
    value = sum((c[j] * x[j] for j in range(nv)), zero)
    return LPResult("optimal", value, x, exact, tab.pivots)


def _highs(lp: LinearProgram) -> LPResult:
    from scipy.optimize import linprog

    res = linprog(
        -np.asarray(lp.c, dtype=float),
        A_ub=None if lp.A_ub is None else np.asarray(lp.A_ub, dtype=float),
        b_ub=None if lp.b_ub is None else np.asarray(lp.b_ub, dtype=float),
        A_eq=None if lp.A_eq is None else np.asarray(lp.A_eq, dtype=float),
        b_eq=None if lp.b_eq is None else np.asarray(lp.b_eq, dtype=float),
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    return LPResult("optimal", float(-res.fun), np.asarray(res.x))


def solve_lp(lp: LinearProgram, method: str = "auto") -> LPResult:
    """Solve ``lp``. ``auto`` uses exact rational simplex up to 50 variables,
    float simplex up to 500, and HiGHS beyond that."""
    if method == "auto":
        if lp.num_vars <= EXACT_MAX_VARS:
            method = "exact"
        elif lp.num_vars <= DENSE_MAX_VARS:
            method = "float"
        else:
            method = "highs"
    if method == "exact":
        return simplex(lp, exact=True)
    if method == "float":
        return simplex(lp, exact=False)
    if method == "highs":
        return _highs(lp)
    raise InputError(f"unknown LP method {method!r}")
