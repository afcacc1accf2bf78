"""
Rational polyhedra in H-representation.

An ``HPolytope`` stores ``ineq`` rows (a.x <= b) and ``eq`` rows (e.x = f) as
``Inequality`` tuples. Products of polytopes remember their blocks so that
linear minimization, vertex enumeration and implicit-equality detection can
work one factor at a time.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product as cartesian
from typing import Iterable, List, Optional, Sequence, Tuple

from ..core.config import settings
from ..core.exceptions import (
    DimensionMismatch, DimensionTooLarge, EmptyInputSet, PointOutsideSet, UnboundedInput,
)
from ..utils.logger import logger
from .exact_arith import (
    Inequality, RatLike, RatMat, RatVec, encoding_length, independent_rows, rat, solve_linear,
)
from .lp import lp_solve

ZERO = Fraction(0)
ONE = Fraction(1)


def _row(coeffs: Iterable[RatLike], bound: RatLike) -> Inequality:
    return Inequality(RatVec(coeffs), rat(bound))


def _pad(coeffs: Sequence[Fraction], offset: int, total: int) -> RatVec:
    entries = [ZERO] * total
    entries[offset:offset + len(coeffs)] = coeffs
    return RatVec(entries)


@dataclass(frozen=True)
class HPolytope:
    dim: int
    ineq: Tuple[Inequality, ...] = ()
    eq: Tuple[Inequality, ...] = ()
    blocks: Tuple["HPolytope", ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        for r in self.ineq + self.eq:
            if len(r.coeffs) != self.dim:
                raise DimensionMismatch("row length differs from polytope dimension",
                                        {"dim": self.dim, "row": len(r.coeffs)})

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @classmethod
    def from_rows(cls, dim: int, ineq: Iterable = (), eq: Iterable = ()) -> "HPolytope":
        """Build from ``(coeffs, bound)`` pairs."""
        return cls(dim, tuple(_row(c, b) for c, b in ineq), tuple(_row(c, b) for c, b in eq))

    @classmethod
    def simplex(cls, d: int) -> "HPolytope":
        ineq = [(RatVec.unit(d, i) * -1, 0) for i in range(d)]
        return cls.from_rows(d, ineq, [([1] * d, 1)])

    @classmethod
    def box(cls, lower: Sequence[RatLike], upper: Sequence[RatLike]) -> "HPolytope":
        d = len(lower)
        ineq = []
        for i in range(d):
            ineq.append((RatVec.unit(d, i), upper[i]))
            ineq.append((RatVec.unit(d, i) * -1, -rat(lower[i])))
        return cls.from_rows(d, ineq)

    @classmethod
    def unit_cube(cls, d: int) -> "HPolytope":
        return cls.box([0] * d, [1] * d)

    @classmethod
    def singleton(cls, point: Sequence[RatLike]) -> "HPolytope":
        d = len(point)
        return cls.from_rows(d, eq=[(RatVec.unit(d, i), point[i]) for i in range(d)])

    @classmethod
    def product(cls, *factors: "HPolytope") -> "HPolytope":
        """Cartesian product; coordinates are concatenated in argument order."""
        total = sum(f.dim for f in factors)
        ineq, eq, blocks = [], [], []
        offset = 0
        for f in factors:
            ineq.extend(Inequality(_pad(r.coeffs, offset, total), r.bound) for r in f.ineq)
            eq.extend(Inequality(_pad(r.coeffs, offset, total), r.bound) for r in f.eq)
            blocks.extend(f.factors())
            offset += f.dim
        return cls(total, tuple(ineq), tuple(eq), tuple(blocks))

    # ------------------------------------------------------------------
    # accessors
    # ------------------------------------------------------------------
    def factors(self) -> Tuple["HPolytope", ...]:
        return self.blocks if self.blocks else (self,)

    def factor_slices(self) -> List[Tuple[int, int, "HPolytope"]]:
        out, offset = [], 0
        for f in self.factors():
            out.append((offset, offset + f.dim, f))
            offset += f.dim
        return out

    @property
    def facet_complexity(self) -> int:
        rows = self.ineq + self.eq
        return max((encoding_length(r) for r in rows), default=0)

    @property
    def n_rows(self) -> int:
        return len(self.ineq) + len(self.eq)

    def ineq_system(self) -> Optional[Tuple[List[RatVec], List[Fraction]]]:
        if not self.ineq:
            return None
        return [r.coeffs for r in self.ineq], [r.bound for r in self.ineq]

    def eq_system(self) -> Optional[Tuple[List[RatVec], List[Fraction]]]:
        if not self.eq:
            return None
        return [r.coeffs for r in self.eq], [r.bound for r in self.eq]

    def contains(self, y: Sequence[Fraction]) -> bool:
        return separate(self, y).inside

    def with_equalities(self, indices: Iterable[int]) -> "HPolytope":
        """Move the given inequality rows to the equality system."""
        chosen = set(indices)
        ineq = tuple(r for i, r in enumerate(self.ineq) if i not in chosen)
        eq = self.eq + tuple(self.ineq[i] for i in sorted(chosen))
        return HPolytope(self.dim, ineq, eq)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "ineq_rows": len(self.ineq),
            "eq_rows": len(self.eq),
            "blocks": len(self.factors()),
            "facet_complexity": self.facet_complexity,
        }


# ----------------------------------------------------------------------
# separation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationResult:
    """Inside, or a violated row ``hyperplane . x <= offset`` valid for the whole set."""
    inside: bool
    hyperplane: Optional[RatVec] = None
    offset: Optional[Fraction] = None
    row: Optional[int] = None

    @classmethod
    def Inside(cls) -> "SeparationResult":
        return cls(True)

    @classmethod
    def Violated(cls, hyperplane: RatVec, offset: Fraction, row: Optional[int] = None) -> "SeparationResult":
        return cls(False, hyperplane, offset, row)


def separate(P: HPolytope, y: Sequence[Fraction]) -> SeparationResult:
    """First violated row in storage order (inequalities, then equalities)."""
    if len(y) != P.dim:
        raise DimensionMismatch("query point dimension differs from polytope", {"dim": P.dim, "point": len(y)})
    for i, r in enumerate(P.ineq):
        if r.coeffs.dot(y) > r.bound:
            return SeparationResult.Violated(r.coeffs, r.bound, i)
    base = len(P.ineq)
    for j, r in enumerate(P.eq):
        value = r.coeffs.dot(y)
        if value > r.bound:
            return SeparationResult.Violated(r.coeffs, r.bound, base + j)
        if value < r.bound:
            return SeparationResult.Violated(-r.coeffs, -r.bound, base + j)
    return SeparationResult.Inside()


# ----------------------------------------------------------------------
# linear optimization over polytopes
# ----------------------------------------------------------------------

def find_point(P: HPolytope) -> Optional[RatVec]:
    """A basic feasible point of P, or None when P is empty."""
    parts = []
    for f in P.factors():
        if f.n_rows == 0:
            parts.append(RatVec.zeros(f.dim))
            continue
        out = lp_solve([0] * f.dim, f.ineq_system(), f.eq_system())
        if not out.is_optimal:
            return None
        parts.append(out.point)
    return RatVec(e for p in parts for e in p)


def minimize(P: HPolytope, c: Sequence[Fraction]) -> Tuple[Fraction, RatVec]:
    """Exact ``min c.x`` over P, decomposed over blocks. Returns (value, vertex)."""
    if len(c) != P.dim:
        raise DimensionMismatch("objective dimension differs from polytope", {"dim": P.dim, "c": len(c)})
    value = ZERO
    parts: List[Fraction] = []
    for start, end, f in P.factor_slices():
        out = lp_solve(c[start:end], f.ineq_system(), f.eq_system(), sense="min")
        if out.is_infeasible:
            raise EmptyInputSet("polytope is empty", f.describe())
        if out.is_unbounded:
            raise UnboundedInput("linear objective unbounded on polytope", f.describe())
        value += out.value
        parts.extend(out.point)
    return value, RatVec(parts)


def maximize(P: HPolytope, c: Sequence[Fraction]) -> Tuple[Fraction, RatVec]:
    value, point = minimize(P, [-rat(e) for e in c])
    return -value, point


def _is_bounded_single(P: HPolytope) -> bool:
    n = P.dim
    rec_ineq = [(r.coeffs, ZERO) for r in P.ineq]
    rec_eq = [(r.coeffs, ZERO) for r in P.eq]
    nonneg = {i for i in range(n) for r in P.ineq
              if r.bound >= 0 and r.coeffs == RatVec.unit(n, i) * -1}
    if len(nonneg) == n:
        # recession cone lies in the orthant; one LP over it intersected with d <= 1
        box = [(RatVec.unit(n, i), ONE) for i in range(n)]
        rows = rec_ineq + box
        out = lp_solve([1] * n, ([r for r, _ in rows], [b for _, b in rows]),
                       ([r for r, _ in rec_eq], [b for _, b in rec_eq]) if rec_eq else None)
        return out.is_optimal and out.value == 0
    box = []
    for i in range(n):
        box.append((RatVec.unit(n, i), ONE))
        box.append((RatVec.unit(n, i) * -1, ONE))
    rows = rec_ineq + box
    ineq = ([r for r, _ in rows], [b for _, b in rows])
    eq = ([r for r, _ in rec_eq], [b for _, b in rec_eq]) if rec_eq else None
    for i in range(n):
        for sign in (1, -1):
            out = lp_solve(RatVec.unit(n, i) * sign, ineq, eq)
            if out.value != 0:
                return False
    return True


def is_bounded(P: HPolytope) -> bool:
    return all(_is_bounded_single(f) for f in P.factors())


def _implicit_single(P: HPolytope) -> List[int]:
    point = find_point(P)
    if point is None:
        raise EmptyInputSet("polytope is empty", P.describe())
    found = []
    for i, r in enumerate(P.ineq):
        if r.coeffs.dot(point) != r.bound:
            continue
        out = lp_solve(r.coeffs, P.ineq_system(), P.eq_system(), sense="min")
        if out.is_optimal and out.value == r.bound:
            found.append(i)
    return found


def implicit_equalities(P: HPolytope) -> List[int]:
    """Indices of inequality rows that hold with equality on all of P."""
    found, offset = [], 0
    # product rows are stored factor by factor
    for f in P.factors():
        found.extend(offset + i for i in _implicit_single(f))
        offset += len(f.ineq)
    return found


def find_anchor(P: HPolytope) -> Optional[int]:
    """A coordinate fixed to 1 by a unit equality row, if any."""
    for r in P.eq:
        nz = [j for j, e in enumerate(r.coeffs) if e]
        if len(nz) == 1 and r.bound == r.coeffs[nz[0]]:
            return nz[0]
    return None


# ----------------------------------------------------------------------
# homogenization
# ----------------------------------------------------------------------

def homogenize(P: HPolytope, anchor_index: Optional[int] = None) -> HPolytope:
    """
    H-representation of the cone ``R_+ P``.

    With no anchor, a fresh last coordinate t is appended and every row
    ``a.x <= b`` becomes ``a.x - b t <= 0``. With ``anchor_index`` the existing
    coordinate (fixed to 1 on P) plays the role of t and rows that vanish are dropped.
    Both forms add ``-t <= 0``.
    """
    if not is_bounded(P):
        raise UnboundedInput("cannot homogenize an unbounded polyhedron", P.describe())

    if anchor_index is None:
        n = P.dim + 1
        t = P.dim

        def lift(r: Inequality) -> RatVec:
            return RatVec(tuple(r.coeffs) + (-r.bound,))
    else:
        if not 0 <= anchor_index < P.dim:
            raise DimensionMismatch("anchor index out of range", {"dim": P.dim, "anchor": anchor_index})
        lo, _ = minimize(P, RatVec.unit(P.dim, anchor_index))
        hi, _ = maximize(P, RatVec.unit(P.dim, anchor_index))
        if lo != 1 or hi != 1:
            raise PointOutsideSet("anchor coordinate is not fixed to 1",
                                  {"anchor": anchor_index, "min": str(lo), "max": str(hi)})
        n = P.dim
        t = anchor_index

        def lift(r: Inequality) -> RatVec:
            entries = list(r.coeffs)
            entries[t] -= r.bound
            return RatVec(entries)

    ineq = [Inequality(lift(r), ZERO) for r in P.ineq]
    eq = [Inequality(lift(r), ZERO) for r in P.eq]
    ineq = [r for r in ineq if not r.coeffs.is_zero()]
    eq = [r for r in eq if not r.coeffs.is_zero()]
    ineq.append(Inequality(RatVec.unit(n, t) * -1, ZERO))
    return HPolytope(n, tuple(ineq), tuple(eq))


# ----------------------------------------------------------------------
# Caratheodory decomposition
# ----------------------------------------------------------------------

def caratheodory(P: HPolytope, x: Sequence[Fraction]) -> List[Tuple[RatVec, Fraction]]:
    """
    Write x as a convex combination of at most dim+1 vertices of P.

    Face descent: take a vertex v of the minimal face containing the current
    point, shoot the ray from v through the point to the boundary, and continue
    from the hit point, which lies on a strictly smaller face.
    """
    current = RatVec(x)
    if not separate(P, current).inside:
        raise PointOutsideSet("point is not in the polytope", {"point": current.to_strings()})
    remaining = ONE
    pieces: List[Tuple[RatVec, Fraction]] = []
    for _ in range(P.dim + 1):
        tight = [i for i, r in enumerate(P.ineq) if r.coeffs.dot(current) == r.bound]
        face = P.with_equalities(tight)
        out = lp_solve([0] * P.dim, face.ineq_system(), face.eq_system())
        vertex = out.point
        if vertex == current:
            pieces.append((vertex, remaining))
            return pieces
        d = current - vertex
        mu = None
        for r in P.ineq:
            ad = r.coeffs.dot(d)
            if ad > 0:
                step = (r.bound - r.coeffs.dot(vertex)) / ad
                if mu is None or step < mu:
                    mu = step
        if mu is None:
            raise UnboundedInput("ray left the polytope without hitting a facet", P.describe())
        pieces.append((vertex, remaining * (1 - 1 / mu)))
        remaining = remaining / mu
        current = vertex + d * mu
    raise PointOutsideSet("face descent did not terminate", {"dim": P.dim})


# ----------------------------------------------------------------------
# generalized Farkas
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FarkasCase:
    """case 1: x in X with min_y x.Ay >= 0; case 2: y in cone(Y) with max_x x.Ay <= -1."""
    case: int
    x: Optional[RatVec] = None
    y: Optional[RatVec] = None
    value: Optional[Fraction] = None

    @classmethod
    def Case1(cls, x: RatVec, value: Fraction) -> "FarkasCase":
        return cls(1, x=x, value=value)

    @classmethod
    def Case2(cls, y: RatVec, value: Fraction) -> "FarkasCase":
        return cls(2, y=y, value=value)


def bilinear_maxmin(A: RatMat, X: HPolytope, Y: HPolytope) -> Tuple[Fraction, RatVec]:
    """
    ``max_{x in X} min_{y in Y} x.Ay`` as one LP, by dualizing the inner minimum.

    Variables (x, lam, mu): maximize ``-h.lam + f.mu`` subject to
    ``A^T x + G^T lam - E^T mu = 0`` and ``lam >= 0``, where Y = {Gy <= h, Ey = f}.
    """
    m, n = A.shape
    if m != X.dim or n != Y.dim:
        raise DimensionMismatch("payoff matrix shape differs from strategy sets",
                                {"A": A.shape, "X": X.dim, "Y": Y.dim})
    mg, me = len(Y.ineq), len(Y.eq)
    width = m + mg + me
    objective = [ZERO] * m + [-r.bound for r in Y.ineq] + [r.bound for r in Y.eq]
    ineq_rows, ineq_rhs, eq_rows, eq_rhs = [], [], [], []
    for r in X.ineq:
        ineq_rows.append(list(r.coeffs) + [ZERO] * (mg + me))
        ineq_rhs.append(r.bound)
    for k in range(mg):
        row = [ZERO] * width
        row[m + k] = -ONE
        ineq_rows.append(row)
        ineq_rhs.append(ZERO)
    for r in X.eq:
        eq_rows.append(list(r.coeffs) + [ZERO] * (mg + me))
        eq_rhs.append(r.bound)
    AT = A.T
    for j in range(n):
        row = list(AT.row(j)) + [r.coeffs[j] for r in Y.ineq] + [-r.coeffs[j] for r in Y.eq]
        eq_rows.append(row)
        eq_rhs.append(ZERO)
    out = lp_solve(objective, (ineq_rows, ineq_rhs) if ineq_rows else None, (eq_rows, eq_rhs))
    if not out.is_optimal:
        raise EmptyInputSet("max-min program has no optimum", {"status": out.status.value})
    return out.value, out.point[:m]


def farkas_case(A: RatMat, X: HPolytope, Y: HPolytope) -> FarkasCase:
    """Decide which side of the generalized Farkas alternative holds, with a verified witness."""
    if find_point(X) is None:
        raise EmptyInputSet("X is empty", X.describe())
    if find_point(Y) is None:
        raise EmptyInputSet("Y is empty", Y.describe())
    value, x = bilinear_maxmin(A, X, Y)
    if value >= 0:
        check, _ = minimize(Y, A.vecmat(x))
        if check < 0:
            raise PointOutsideSet("case 1 witness failed exact check", {"min": str(check)})
        logger.debug(f"farkas case 1, max-min value {value}")
        return FarkasCase.Case1(x, check)
    _, y_star = bilinear_maxmin(A.T.scale(-1), Y, X)
    y = y_star / (-value)
    check, _ = maximize(X, A @ y)
    if check > -1:
        raise PointOutsideSet("case 2 witness failed exact check", {"max": str(check)})
    logger.debug(f"farkas case 2, max-min value {value}")
    return FarkasCase.Case2(y, check)


# ----------------------------------------------------------------------
# vertices
# ----------------------------------------------------------------------

def _vertices_single(P: HPolytope, limit: int) -> List[RatVec]:
    n = P.dim
    if n > limit:
        raise DimensionTooLarge("vertex enumeration limited to small dimensions", {"dim": n, "limit": limit})
    eq_rows = [r.coeffs for r in P.eq]
    keep = independent_rows(eq_rows, n)
    base_rows = [P.eq[i] for i in keep]
    k = n - len(base_rows)
    found = set()
    if k == 0:
        candidate = solve_linear([r.coeffs for r in base_rows], [r.bound for r in base_rows])
        if candidate is not None and P.contains(candidate):
            found.add(candidate)
        return sorted(found)
    for combo in combinations(P.ineq, k):
        rows = base_rows + list(combo)
        candidate = solve_linear([r.coeffs for r in rows], [r.bound for r in rows])
        if candidate is None:
            continue
        if all(r.coeffs.dot(candidate) <= r.bound for r in P.ineq) and \
                all(r.coeffs.dot(candidate) == r.bound for r in P.eq):
            found.add(candidate)
    return sorted(found)


def enumerate_vertices(P: HPolytope, max_dim: Optional[int] = None) -> List[RatVec]:
    """All vertices of a bounded polytope in lexicographic order."""
    limit = max_dim if max_dim is not None else settings.vertex_enum_max_dim
    per_factor = [_vertices_single(f, limit) for f in P.factors()]
    if len(per_factor) == 1:
        return per_factor[0]
    return sorted(RatVec(e for part in combo for e in part) for combo in cartesian(*per_factor))
