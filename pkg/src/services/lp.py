"""
Exact linear programming.

``lp_solve`` runs a two-phase tableau simplex with Bland's rule over
``fractions.Fraction``. Variables are free; every bound is an explicit row.
Phase 1 always produces a Farkas certificate when the program is empty, and an
optimal point is pushed to a basic solution (a point with ``dim`` linearly
independent tight rows) before it is returned.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ..core.exceptions import DimensionMismatch, EmptyProgram
from ..utils.logger import logger
from .exact_arith import RatLike, RatMat, RatVec, independent_rows, nullspace, rat

Rows = Sequence[Sequence[RatLike]]
System = Tuple[Rows, Sequence[RatLike]]

ZERO = Fraction(0)
ONE = Fraction(1)


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    point: Optional[RatVec] = None
    value: Optional[Fraction] = None
    # row indices: inequalities first, then equalities offset by the inequality count
    basis: Tuple[int, ...] = ()
    certificate: Optional[RatVec] = None
    ray: Optional[RatVec] = None

    @classmethod
    def Optimal(cls, point: RatVec, value: Fraction, basis: Tuple[int, ...]) -> "LpOutcome":
        return cls(LpStatus.OPTIMAL, point=point, value=value, basis=basis)

    @classmethod
    def Infeasible(cls, certificate: RatVec) -> "LpOutcome":
        return cls(LpStatus.INFEASIBLE, certificate=certificate)

    @classmethod
    def Unbounded(cls, ray: RatVec) -> "LpOutcome":
        return cls(LpStatus.UNBOUNDED, ray=ray)

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    @property
    def is_infeasible(self) -> bool:
        return self.status is LpStatus.INFEASIBLE

    @property
    def is_unbounded(self) -> bool:
        return self.status is LpStatus.UNBOUNDED


def _normalize_system(system, n: int, name: str) -> Tuple[List[List[Fraction]], List[Fraction]]:
    if system is None:
        return [], []
    if isinstance(system, tuple) and len(system) == 2 and isinstance(system[0], RatMat):
        mat, rhs = system
        rows = [list(r) for r in mat.rows]
    else:
        mat, rhs = system
        rows = [[rat(e) for e in r] for r in mat]
    rhs = [rat(b) for b in rhs]
    if len(rows) != len(rhs):
        raise DimensionMismatch(f"{name} rows and right-hand side differ", {"rows": len(rows), "rhs": len(rhs)})
    for r in rows:
        if len(r) != n:
            raise DimensionMismatch(f"{name} row length differs from objective", {"expected": n, "got": len(r)})
    return rows, rhs


def lp_solve(objective: Sequence[RatLike], ineq: Optional[System] = None, eq: Optional[System] = None,
             sense: str = "max") -> LpOutcome:
    """
    Solve ``max|min c.x  s.t.  A x <= b,  E x = f`` exactly.

    Args:
        objective: cost vector c (its length fixes the number of variables)
        ineq: (A, b) inequality system, or None
        eq: (E, f) equality system, or None
        sense: 'max' or 'min'

    Returns:
        LpOutcome: Optimal with a basic solution, Infeasible with Farkas multipliers
        (inequality multipliers first, all >= 0), or Unbounded with an improving ray.
    """
    if sense not in ("max", "min"):
        raise ValueError(f"unknown sense: {sense}")
    c = [rat(e) for e in objective]
    n = len(c)
    if n == 0:
        raise EmptyProgram("linear program without variables")
    a_ub, b_ub = _normalize_system(ineq, n, "inequality")
    a_eq, b_eq = _normalize_system(eq, n, "equality")
    maximize = sense == "max"

    if not a_ub and not a_eq:
        if any(c):
            ray = RatVec(c if maximize else [-e for e in c])
            return LpOutcome.Unbounded(ray)
        return LpOutcome.Optimal(RatVec.zeros(n), ZERO, ())

    tableau = _Tableau(a_ub, b_ub, a_eq, b_eq)
    feasible = tableau.phase_one()
    if not feasible:
        certificate = tableau.farkas_certificate()
        logger.debug(f"LP infeasible; certificate {certificate}")
        return LpOutcome.Infeasible(certificate)

    if any(c):
        cost = [-e for e in c] if maximize else list(c)
        ray = tableau.phase_two(cost)
        if ray is not None:
            return LpOutcome.Unbounded(ray)
    x = tableau.solution()
    x, basis = crossover(x, a_ub, b_ub, a_eq, b_eq, c, maximize)
    value = sum((ci * xi for ci, xi in zip(c, x) if ci), ZERO)
    return LpOutcome.Optimal(x, value, basis)


class _Tableau:
    """Dense simplex tableau over z = (u, v, s) >= 0 with x = u - v."""

    def __init__(self, a_ub, b_ub, a_eq, b_eq):
        self.n = n = len(a_ub[0]) if a_ub else len(a_eq[0])
        self.m_ub = m_ub = len(a_ub)
        self.m = m = m_ub + len(a_eq)
        # columns: u (n), v (n), slack (m_ub), artificial (m)
        self.n_struct = 2 * n + m_ub
        self.art0 = self.n_struct
        self.width = self.n_struct + m
        self.signs: List[int] = []
        rows: List[List[Fraction]] = []
        for i in range(m):
            if i < m_ub:
                coeffs, rhs = a_ub[i], b_ub[i]
            else:
                coeffs, rhs = a_eq[i - m_ub], b_eq[i - m_ub]
            row = [ZERO] * (self.width + 1)
            for j, a in enumerate(coeffs):
                if a:
                    row[j] = a
                    row[n + j] = -a
            if i < m_ub:
                row[2 * n + i] = ONE
            sign = -1 if rhs < 0 else 1
            if sign < 0:
                row = [-e for e in row]
                rhs = -rhs
            row[self.art0 + i] = ONE
            row[self.width] = rhs
            rows.append(row)
            self.signs.append(sign)
        self.rows = rows
        self.basis = [self.art0 + i for i in range(m)]
        self.obj: List[Fraction] = []

    # ------------------------------------------------------------------
    def _pivot(self, r: int, col: int) -> None:
        prow = self.rows[r]
        pv = prow[col]
        if pv != 1:
            prow = [e / pv for e in prow]
            self.rows[r] = prow
        nz = [j for j, e in enumerate(prow) if e]
        for i, row in enumerate(self.rows):
            if i != r:
                f = row[col]
                if f:
                    for j in nz:
                        row[j] -= f * prow[j]
        f = self.obj[col]
        if f:
            for j in nz:
                self.obj[j] -= f * prow[j]
        self.basis[r] = col

    def _reduced_costs(self, cost: List[Fraction]) -> None:
        obj = list(cost) + [ZERO]
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                for j, e in enumerate(self.rows[i]):
                    if e:
                        obj[j] -= cb * e
        self.obj = obj

    def _run(self, allowed: int) -> Optional[int]:
        """Bland's rule on columns < allowed; returns the entering column when unbounded."""
        while True:
            enter = next((j for j in range(allowed) if self.obj[j] < 0), None)
            if enter is None:
                return None
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[self.width] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return enter
            self._pivot(best[1], enter)

    # ------------------------------------------------------------------
    def phase_one(self) -> bool:
        cost = [ZERO] * self.n_struct + [ONE] * self.m
        self._reduced_costs(cost)
        self._run(self.width)
        # obj[width] holds -(phase one objective)
        if -self.obj[self.width] != 0:
            return False
        self._drive_out_artificials()
        return True

    def _drive_out_artificials(self) -> None:
        for i in range(self.m):
            if self.basis[i] >= self.art0:
                row = self.rows[i]
                col = next((j for j in range(self.n_struct) if row[j] != 0), None)
                if col is not None:
                    self._pivot(i, col)

    def farkas_certificate(self) -> RatVec:
        # phase-one duals y_i = 1 - reduced cost of artificial i, mapped back through the row signs
        lam = []
        for i in range(self.m):
            y = ONE - self.obj[self.art0 + i]
            lam.append(-self.signs[i] * y)
        return RatVec(lam)

    def phase_two(self, cost_x: List[Fraction]) -> Optional[RatVec]:
        n = self.n
        cost = list(cost_x) + [-e for e in cost_x] + [ZERO] * self.m_ub + [ZERO] * self.m
        self._reduced_costs(cost)
        enter = self._run(self.n_struct)
        if enter is None:
            return None
        direction = [ZERO] * self.n_struct
        direction[enter] = ONE
        for i, b in enumerate(self.basis):
            if b < self.n_struct:
                direction[b] -= self.rows[i][enter]
        return RatVec(direction[j] - direction[n + j] for j in range(n))

    def solution(self) -> RatVec:
        z = [ZERO] * self.width
        for i, b in enumerate(self.basis):
            z[b] = self.rows[i][self.width]
        n = self.n
        return RatVec(z[j] - z[n + j] for j in range(n))


def crossover(x: RatVec, a_ub: List[List[Fraction]], b_ub: List[Fraction],
              a_eq: List[List[Fraction]], b_eq: List[Fraction],
              objective: Optional[Sequence[Fraction]] = None,
              maximize: bool = True) -> Tuple[RatVec, Tuple[int, ...]]:
    """
    Move a feasible point to a basic solution without worsening the objective.

    Returns the point and the indices of ``dim`` independent tight rows (fewer
    when the feasible set contains a line).
    """
    n = len(x)
    m_ub = len(a_ub)
    point = list(x)
    c = list(objective) if objective is not None else [ZERO] * n
    while True:
        tight_idx = [m_ub + j for j in range(len(a_eq))]
        tight_idx += [i for i in range(m_ub) if _dot(a_ub[i], point) == b_ub[i]]
        tight_rows = [a_eq[k - m_ub] if k >= m_ub else a_ub[k] for k in tight_idx]
        chosen = independent_rows(tight_rows, n)
        if len(chosen) == n:
            basis = tuple(sorted(tight_idx[k] for k in chosen))
            return RatVec(point), basis
        directions = nullspace([tight_rows[k] for k in chosen], n)
        d = list(directions[0])
        cd = _dot(c, d)
        if cd != 0 and (cd < 0) == maximize:
            d = [-e for e in d]
        step = _max_step(a_ub, b_ub, point, d)
        if step is None and _dot(c, d) == 0:
            d = [-e for e in d]
            step = _max_step(a_ub, b_ub, point, d)
        if step is None:
            basis = tuple(sorted(tight_idx[k] for k in chosen))
            return RatVec(point), basis
        point = [p + step * e for p, e in zip(point, d)]


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x), ZERO)


def _max_step(a_ub, b_ub, point, d) -> Optional[Fraction]:
    step = None
    for row, b in zip(a_ub, b_ub):
        ad = _dot(row, d)
        if ad > 0:
            t = (b - _dot(row, point)) / ad
            if step is None or t < step:
                step = t
    return step


def verify_farkas(certificate: Sequence[Fraction], ineq: Optional[System], eq: Optional[System],
                  n: int) -> bool:
    """Exact check that the multipliers combine the rows into ``0 <= c`` with ``c < 0``."""
    a_ub, b_ub = _normalize_system(ineq, n, "inequality")
    a_eq, b_eq = _normalize_system(eq, n, "equality")
    lam = [rat(e) for e in certificate]
    if len(lam) != len(a_ub) + len(a_eq):
        return False
    if any(v < 0 for v in lam[:len(a_ub)]):
        return False
    combo = [ZERO] * n
    for coef, row in zip(lam, a_ub + a_eq):
        if coef:
            for j, a in enumerate(row):
                combo[j] += coef * a
    bound = sum((coef * b for coef, b in zip(lam, b_ub + b_eq)), ZERO)
    return not any(combo) and bound < 0


def check_point(point: Sequence[Fraction], ineq: Optional[System], eq: Optional[System]) -> bool:
    """Exact feasibility of a point: zero residual on equalities, none violated."""
    n = len(point)
    a_ub, b_ub = _normalize_system(ineq, n, "inequality")
    a_eq, b_eq = _normalize_system(eq, n, "equality")
    return (all(_dot(r, point) <= b for r, b in zip(a_ub, b_ub))
            and all(_dot(r, point) == f for r, f in zip(a_eq, b_eq)))
