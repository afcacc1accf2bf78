"""
Linear deviation sets.

A deviation of player p is a d x d matrix B acting on column strategies,
``phi(x) = B x``; ``B[b, a]`` moves weight from source coordinate a to target
b. Matrices are flattened row-major, so ``B[b, a]`` sits at index ``b*d + a``.
A deviation polytope may carry auxiliary coordinates after the d*d matrix
entries (lifted descriptions); they never enter the meta-game payoff.
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product as cartesian
from typing import List, Optional, Sequence, Tuple

from ..core.config import settings
from ..core.exceptions import DimensionMismatch, EahError
from ..utils.logger import logger
from .exact_arith import Inequality, RatMat, RatVec
from .lp import lp_solve
from .polytope import HPolytope, enumerate_vertices, find_anchor

ZERO = Fraction(0)
ONE = Fraction(1)


def flat_index(b: int, a: int, d: int) -> int:
    return b * d + a


@dataclass(frozen=True)
class DeviationSet:
    player: int
    matrix_dim: int
    polytope: HPolytope
    includes_identity: bool = False
    kind: str = "file"
    aux_dims: int = 0
    base_vertices: Optional[Tuple[RatMat, ...]] = None

    def __post_init__(self):
        d = self.matrix_dim
        if self.polytope.dim != d * d + self.aux_dims:
            raise DimensionMismatch("deviation polytope dimension differs from d*d + aux",
                                    {"player": self.player, "dim": self.polytope.dim,
                                     "matrix_dim": d, "aux": self.aux_dims})

    @property
    def dim(self) -> int:
        return self.polytope.dim

    def matrix(self, point: Sequence[Fraction]) -> RatMat:
        d = self.matrix_dim
        return RatMat.from_flat(list(point[:d * d]), d, d)

    def contains(self, B: RatMat) -> bool:
        """Exact membership of a matrix (an LP over the auxiliary coordinates when lifted)."""
        flat = list(B.flatten())
        if self.aux_dims == 0:
            return self.polytope.contains(flat)
        d2 = self.matrix_dim ** 2

        def split(rows: Tuple[Inequality, ...]):
            coeffs = [list(r.coeffs[d2:]) for r in rows]
            rhs = [r.bound - RatVec(r.coeffs[:d2]).dot(flat) for r in rows]
            return coeffs, rhs

        ineq = split(self.polytope.ineq) if self.polytope.ineq else None
        eq = split(self.polytope.eq) if self.polytope.eq else None
        return lp_solve([0] * self.aux_dims, ineq, eq).is_optimal

    def vertices(self) -> List[RatMat]:
        """A finite set of matrices in the set containing every vertex of it."""
        if self.base_vertices is not None:
            extra = [RatMat.identity(self.matrix_dim)] if self.includes_identity else []
            return _dedupe(list(self.base_vertices) + extra)
        if self.kind == "swap":
            return swap_vertices(self.matrix_dim)
        return _dedupe(self.matrix(v) for v in enumerate_vertices(self.polytope))

    def brute_force_deviations(self) -> List[RatMat]:
        """Matrices whose constraints imply those of the whole set for a correlated distribution."""
        if self.kind == "swap":
            return elementary_swaps(self.matrix_dim)
        return self.vertices()

    def describe(self) -> dict:
        return {
            "player": self.player,
            "matrix_dim": self.matrix_dim,
            "kind": self.kind,
            "aux_dims": self.aux_dims,
            "includes_identity": self.includes_identity,
            **{k: v for k, v in self.polytope.describe().items() if k != "dim"},
        }


def _dedupe(mats) -> List[RatMat]:
    seen, out = set(), []
    for M in mats:
        if M not in seen:
            seen.add(M)
            out.append(M)
    return out


def swap_vertices(d: int) -> List[RatMat]:
    """The d^d deterministic column-stochastic matrices."""
    out = []
    for targets in cartesian(range(d), repeat=d):
        rows = [[ONE if targets[a] == b else ZERO for a in range(d)] for b in range(d)]
        out.append(RatMat(rows, ncols=d))
    return out


def elementary_swaps(d: int) -> List[RatMat]:
    """Identity except that source a is sent to target b != a."""
    out = []
    for a in range(d):
        for b in range(d):
            if a == b:
                continue
            rows = [[ONE if (i == j and j != a) else ZERO for j in range(d)] for i in range(d)]
            rows[b][a] = ONE
            out.append(RatMat(rows, ncols=d))
    return out


def make_swap_deviations(d: int, player: int = 0) -> DeviationSet:
    """Column-stochastic matrices: ``B >= 0`` and every column sums to 1."""
    if d < 1:
        raise DimensionMismatch("matrix dimension must be positive", {"d": d})
    n = d * d
    ineq = [(RatVec.unit(n, i) * -1, 0) for i in range(n)]
    eq = []
    for a in range(d):
        row = [ZERO] * n
        for b in range(d):
            row[flat_index(b, a, d)] = ONE
        eq.append((row, 1))
    return DeviationSet(player, d, HPolytope.from_rows(n, ineq, eq), includes_identity=True, kind="swap")


def normalizing_functional(A_p: HPolytope, anchor: Optional[int] = None) -> RatVec:
    """A vector w with ``w . x = 1`` on A_p: the anchor unit vector, else the first normalizing equality."""
    if anchor is None:
        anchor = find_anchor(A_p)
    if anchor is not None:
        return RatVec.unit(A_p.dim, anchor)
    for r in A_p.eq:
        if r.bound != 0:
            return r.coeffs / r.bound
    raise EahError("strategy polytope has no equality fixing a linear functional to 1", A_p.describe())


def make_constant_deviations(A_p: HPolytope, anchor: Optional[int] = None, player: int = 0,
                             strategy_vertices: Optional[Sequence[RatVec]] = None) -> DeviationSet:
    """
    Constant deviations ``B = z w^T`` for z in A_p, where w is the normalizing functional.

    On A_p, ``B x = z (w . x) = z``. With a treeplex w is the empty-sequence unit
    vector; with a simplex it is the all-ones vector.
    """
    d = A_p.dim
    n = d * d
    w = normalizing_functional(A_p, anchor)
    ref = next(a for a, e in enumerate(w) if e)
    ineq, eq = [], []

    def column_row(r: Inequality) -> Tuple[List[Fraction], Fraction]:
        # constraint of A_p on z = B[:, ref] / w[ref]
        row = [ZERO] * n
        for b, c in enumerate(r.coeffs):
            if c:
                row[flat_index(b, ref, d)] = c / w[ref]
        return row, r.bound

    ineq.extend(column_row(r) for r in A_p.ineq)
    eq.extend(column_row(r) for r in A_p.eq)
    for a in range(d):
        if a == ref:
            continue
        ratio = w[a] / w[ref]
        for b in range(d):
            row = [ZERO] * n
            row[flat_index(b, a, d)] = ONE
            if ratio:
                row[flat_index(b, ref, d)] = -ratio
            eq.append((row, 0))
    if strategy_vertices is None and A_p.dim <= settings.vertex_enum_max_dim:
        strategy_vertices = enumerate_vertices(A_p)
    vertices = None
    if strategy_vertices is not None:
        vertices = tuple(RatMat([[z[b] * w[a] for a in range(d)] for b in range(d)], ncols=d)
                         for z in strategy_vertices)
    return DeviationSet(player, d, HPolytope.from_rows(n, ineq, eq), kind="constant",
                        base_vertices=vertices)


def _eliminate_last(ineq: List[Tuple[List[Fraction], Fraction]], eq: List[Tuple[List[Fraction], Fraction]],
                    max_rows: int):
    """Remove the last variable by equality substitution, else by Fourier-Motzkin. None if too large."""
    pivot = next((i for i, (r, _) in enumerate(eq) if r[-1]), None)
    if pivot is not None:
        prow, pb = eq[pivot]
        c = prow[-1]

        def substitute(r, b):
            f = r[-1] / c
            if not f:
                return r[:-1], b
            return [x - f * y for x, y in zip(r[:-1], prow[:-1])], b - f * pb

        new_eq = [substitute(r, b) for i, (r, b) in enumerate(eq) if i != pivot]
        new_ineq = [substitute(r, b) for r, b in ineq]
        return new_ineq, new_eq
    pos = [(r, b) for r, b in ineq if r[-1] > 0]
    neg = [(r, b) for r, b in ineq if r[-1] < 0]
    zero = [(r[:-1], b) for r, b in ineq if r[-1] == 0]
    if len(pos) * len(neg) + len(zero) > max_rows:
        return None
    combined = list(zero)
    for rp, bp in pos:
        for rn, bn in neg:
            fp, fn = ONE / rp[-1], ONE / -rn[-1]
            row = [fp * x + fn * y for x, y in zip(rp[:-1], rn[:-1])]
            bound = fp * bp + fn * bn
            if any(row) or bound < 0:
                combined.append((row, bound))
    return combined, [(r[:-1], b) for r, b in eq]


def with_identity(dev: DeviationSet, max_rows: Optional[int] = None) -> DeviationSet:
    """
    Convex hull of the set and the identity matrix.

    Lifted form over (W, aux, lam): every row ``g . (V, aux) <= h`` of the set
    becomes ``g . (W - lam vec(I), aux) <= h (1 - lam)`` with ``0 <= lam <= 1``.
    lam is then eliminated when an equality contains it, or by Fourier-Motzkin
    while the row count stays under ``max_rows``; otherwise it stays as an
    auxiliary coordinate.
    """
    if dev.includes_identity:
        return dev
    limit = max_rows if max_rows is not None else settings.fm_max_rows
    d = dev.matrix_dim
    n_old = dev.dim
    identity = [ZERO] * n_old
    for a in range(d):
        identity[flat_index(a, a, d)] = ONE

    def lift(r: Inequality) -> Tuple[List[Fraction], Fraction]:
        g = list(r.coeffs)
        g_identity = sum((x * y for x, y in zip(g, identity) if y), ZERO)
        return g + [r.bound - g_identity], r.bound

    ineq = [lift(r) for r in dev.polytope.ineq]
    eq = [lift(r) for r in dev.polytope.eq]
    lam_lo = [ZERO] * n_old + [-ONE]
    lam_hi = [ZERO] * n_old + [ONE]
    ineq += [(lam_lo, ZERO), (lam_hi, ONE)]

    reduced = _eliminate_last(ineq, eq, limit)
    if reduced is None:
        logger.info(f"with_identity: keeping the mixing variable lifted for player {dev.player}")
        poly = HPolytope.from_rows(n_old + 1, ineq, eq)
        return replace(dev, polytope=poly, includes_identity=True, kind=f"{dev.kind}+identity",
                       aux_dims=dev.aux_dims + 1)
    new_ineq, new_eq = reduced
    new_eq = [(r, b) for r, b in new_eq if any(r) or b != 0]
    poly = HPolytope.from_rows(n_old, new_ineq, new_eq)
    return replace(dev, polytope=poly, includes_identity=True, kind=f"{dev.kind}+identity")


def deviation_from_polytope(player: int, matrix_dim: int, polytope: HPolytope, aux_dims: int = 0,
                            includes_identity: bool = False) -> DeviationSet:
    return DeviationSet(player, matrix_dim, polytope, includes_identity=includes_identity,
                        kind="file", aux_dims=aux_dims)
