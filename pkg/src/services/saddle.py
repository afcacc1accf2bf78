"""
Saddle points of bilinear zero-sum games from good-enough responses.

The maximizer is only reachable through a GER oracle: given y in Y it returns
some strategy x with ``x.Ay >= 0`` together with the row ``x.A``. The
ellipsoid method is run on the dual feasibility system

    find y' in cone(Y) with row . y' <= -1 for every response row,

which is infeasible by construction. The rows it collects on the way are then
mixed by one small LP (the compressed program) into a strategy whose row is
nonnegative on all of Y.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ..core.config import settings
from ..core.exceptions import (
    DimensionMismatch, EmptyInputSet, GerContractViolation, VerificationFailedAfterMaxEscalations,
)
from ..utils.logger import logger
from .ellipsoid import EllipsoidTranscript, central_cut, certify_empty_or_point
from .exact_arith import RatMat, RatVec, encoding_length, nullspace
from .lp import lp_solve
from .polytope import (
    HPolytope, SeparationResult, enumerate_vertices, find_point, homogenize, implicit_equalities,
    minimize, separate,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class GerResponse:
    x_handle: Any
    row: RatVec


class GerOracle:
    """
    Wraps a response function with its declared encoding bound.

    Every call is checked: the row must have the right length, respect the
    bound, and satisfy ``row . y >= 0`` for the queried y.
    """

    def __init__(self, respond: Callable[[RatVec], GerResponse], encoding_bound: int, name: str = "ger"):
        self.respond = respond
        self.encoding_bound = encoding_bound
        self.name = name
        self.calls = 0

    def __call__(self, y: RatVec) -> GerResponse:
        self.calls += 1
        response = self.respond(y)
        if len(response.row) != len(y):
            raise DimensionMismatch("GER row length differs from the query",
                                    {"row": len(response.row), "query": len(y)})
        value = response.row.dot(y)
        if value < 0:
            raise GerContractViolation("GER response scores negative on its query",
                                       {"oracle": self.name, "query": y.to_strings(),
                                        "row": response.row.to_strings(), "value": str(value)})
        bits = encoding_length(response.row)
        if bits > self.encoding_bound:
            raise GerContractViolation("GER row exceeds the declared encoding bound",
                                       {"oracle": self.name, "bits": bits, "bound": self.encoding_bound})
        return response


@dataclass
class SaddleStats:
    ger_calls: int = 0
    iterations: int = 0
    escalations: int = 0
    responses: int = 0
    ellipsoid_dim: int = 0
    compress_attempts: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            "ger_calls": self.ger_calls,
            "iterations": self.iterations,
            "escalations": self.escalations,
            "responses": self.responses,
            "ellipsoid_dim": self.ellipsoid_dim,
            "compress_attempts": self.compress_attempts,
        }


@dataclass
class SaddleSolution:
    mixture: List[Tuple[GerResponse, Fraction]]
    value_check: Fraction
    stats: SaddleStats = field(default_factory=SaddleStats)
    transcripts: List[EllipsoidTranscript] = field(default_factory=list)

    @property
    def mixed_row(self) -> RatVec:
        dim = len(self.mixture[0][0].row)
        total = RatVec.zeros(dim)
        for response, weight in self.mixture:
            total = total + response.row * weight
        return total

    @property
    def support_size(self) -> int:
        return len(self.mixture)


def shift_to_zero(A: RatMat, opt: Fraction) -> RatMat:
    """``[[A, 0], [0, -opt]]``: with trailing ones appended, the form is ``x.Ay - opt``."""
    m, n = A.shape
    rows = [list(r) + [ZERO] for r in A.rows]
    rows.append([ZERO] * n + [-Fraction(opt)])
    return RatMat(rows, ncols=n + 1)


# ----------------------------------------------------------------------
# combined separation oracle for the dual feasibility system
# ----------------------------------------------------------------------

def _cone_vector(row: RatVec, appended: bool) -> RatVec:
    return row.concat([ZERO]) if appended else row


def combined_oracle(ger: GerOracle, cone: HPolytope, y_prime: Sequence[Fraction], anchor: int,
                    apex_point: Optional[RatVec] = None, appended: bool = False
                    ) -> Tuple[RatVec, Fraction, Optional[GerResponse]]:
    """
    Separate ``y_prime`` from the dual feasibility system.

    Returns (hyperplane, offset, response). Inside the cone with anchor value
    alpha > 0, GER is called on ``y_prime / alpha`` and its row is the cut
    ``row . y' <= -1``. At the apex every such constraint reads ``0 <= -1``;
    the zero row cannot serve as an ellipsoid cut, so the apex is answered
    with the constraint of the response at ``apex_point`` (offset -1), which
    the apex violates for any response. Outside the cone the violated cone row
    is returned with no response.
    """
    y_prime = RatVec(y_prime)
    sep = separate(cone, y_prime)
    if not sep.inside:
        return sep.hyperplane, sep.offset, None
    alpha = y_prime[anchor]
    if alpha == 0:
        if apex_point is None:
            raise EmptyInputSet("apex queried without a base point of Y")
        response = ger(apex_point)
        return _cone_vector(response.row, appended), -ONE, response
    y = y_prime[:-1] / alpha if appended else y_prime / alpha
    response = ger(y)
    return _cone_vector(response.row, appended), -ONE, response


class _DualInfeasible(Exception):
    """A response row vanishes on the whole cone: the dual system is empty outright."""


class _ReducedOracle:
    """The combined oracle seen through a basis Z of the cone's linear span (y' = Z z)."""

    def __init__(self, ger: GerOracle, cone: HPolytope, anchor: int, basis: List[RatVec],
                 apex_point: RatVec, appended: bool, collected: "_Responses"):
        self.ger = ger
        self.cone = cone
        self.anchor = anchor
        self.basis = basis
        self.apex_point = apex_point
        self.appended = appended
        self.collected = collected

    def lift(self, z: Sequence[Fraction]) -> RatVec:
        y = RatVec.zeros(self.cone.dim)
        for coef, col in zip(z, self.basis):
            if coef:
                y = y + col * coef
        return y

    def reduce(self, h: RatVec) -> RatVec:
        return RatVec(col.dot(h) for col in self.basis)

    def __call__(self, z: RatVec) -> SeparationResult:
        y_prime = self.lift(z)
        h, d, response = combined_oracle(self.ger, self.cone, y_prime, self.anchor,
                                         self.apex_point, self.appended)
        reduced = self.reduce(h)
        if response is not None:
            self.collected.add(response)
            if reduced.is_zero():
                raise _DualInfeasible()
        return SeparationResult.Violated(reduced, d)


class _Responses:
    """Responses deduplicated by row, in arrival order."""

    def __init__(self):
        self.items: List[GerResponse] = []
        self._seen = set()
        self.fresh = 0

    def add(self, response: GerResponse) -> None:
        if response.row in self._seen:
            return
        self._seen.add(response.row)
        self.items.append(response)
        self.fresh += 1

    def __len__(self) -> int:
        return len(self.items)


# ----------------------------------------------------------------------
# compressed program
# ----------------------------------------------------------------------

def _mix_lp(values: List[List[Fraction]]) -> Optional[List[Fraction]]:
    """
    ``max t`` over weights a in the simplex with ``sum_k a_k values[j][k] >= t`` for every j,
    capped at t <= 0. Returns the weights when the optimum is 0, else None.
    """
    L = len(values[0])
    width = L + 1
    ineq_rows, ineq_rhs = [], []
    for vals in values:
        ineq_rows.append([-v for v in vals] + [ONE])
        ineq_rhs.append(ZERO)
    for k in range(L):
        row = [ZERO] * width
        row[k] = -ONE
        ineq_rows.append(row)
        ineq_rhs.append(ZERO)
    cap = [ZERO] * width
    cap[L] = ONE
    ineq_rows.append(cap)
    ineq_rhs.append(ZERO)
    objective = [ZERO] * L + [ONE]
    out = lp_solve(objective, (ineq_rows, ineq_rhs), ([[ONE] * L + [ZERO]], [ONE]))
    if not out.is_optimal or out.value < 0:
        return None
    return list(out.point[:L])


def _parallel(d: Sequence[Fraction], a: Sequence[Fraction]) -> bool:
    k = next(i for i, e in enumerate(a) if e)
    ratio = d[k] / a[k]
    return all(x == ratio * y for x, y in zip(d, a))


def reduce_support(rows: List[RatVec], weights: List[Fraction], basis: List[RatVec]) -> List[Fraction]:
    """
    Drop responses while the mixed row stays a positive multiple of itself on the cone.

    A direction delta with ``sum_k delta_k rows_k`` vanishing on span(basis) is
    subtracted until a weight hits zero; weights are renormalized exactly.
    """
    weights = list(weights)
    while True:
        support = [k for k, w in enumerate(weights) if w > 0]
        if len(support) <= 1:
            return weights
        matrix = [[col.dot(rows[k]) for k in support] for col in basis]
        a = [weights[k] for k in support]
        delta = next((d for d in nullspace(matrix, len(support)) if not _parallel(d, a)), None)
        if delta is None:
            return weights
        if not any(e > 0 for e in delta):
            delta = -delta
        theta = min(w / e for w, e in zip(a, delta) if e > 0)
        stepped = [w - theta * e for w, e in zip(a, delta)]
        total = sum(stepped, ZERO)
        weights = [ZERO] * len(weights)
        for k, w in zip(support, stepped):
            weights[k] = w / total


def _mixed(rows: List[RatVec], weights: List[Fraction]) -> RatVec:
    total = [ZERO] * len(rows[0])
    for row, w in zip(rows, weights):
        if w:
            for j, e in enumerate(row):
                if e:
                    total[j] += w * e
    return RatVec(total)


def compress(responses: List[GerResponse], Y: HPolytope, basis: List[RatVec], appended: bool,
             vertex_limit: Optional[int] = None) -> Optional[Tuple[List[Tuple[GerResponse, Fraction]], Fraction]]:
    """
    Solve the compressed program over the collected responses and verify it exactly.

    Returns (mixture, min over Y of the mixed row) or None when the responses
    do not yet admit a mixture that is nonnegative on Y.
    """
    if not responses:
        return None
    rows = [r.row for r in responses]
    limit = vertex_limit if vertex_limit is not None else settings.vertex_enum_max_dim
    if Y.dim <= limit:
        points = enumerate_vertices(Y, max_dim=limit)
        weights = _mix_lp([[row.dot(p) for row in rows] for p in points])
    else:
        weights = None
        points = [minimize(Y, rows[0])[1]]
        # cutting planes: add the most violated vertex of Y until the mix holds
        while True:
            candidate = _mix_lp([[row.dot(p) for row in rows] for p in points])
            if candidate is None:
                break
            value, worst = minimize(Y, _mixed(rows, candidate))
            if value >= 0:
                weights = candidate
                break
            if worst in points:
                break
            points.append(worst)
    if weights is None:
        return None
    cone_rows = [_cone_vector(r, appended) for r in rows]
    weights = reduce_support(cone_rows, weights, basis)
    mixture = [(resp, w) for resp, w in zip(responses, weights) if w > 0]
    if sum((w for _, w in mixture), ZERO) != 1:
        return None
    value, _ = minimize(Y, _mixed([r.row for r, _ in mixture], [w for _, w in mixture]))
    if value < 0:
        return None
    return mixture, value


# ----------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------

def _span_basis(cone: HPolytope) -> List[RatVec]:
    return nullspace([r.coeffs for r in cone.eq], cone.dim)


def solve_saddle(ger: GerOracle, Y: HPolytope, phi_bound: Optional[int] = None,
                 anchor_index: Optional[int] = None, r_exp: Optional[int] = None,
                 eps_exp: Optional[int] = None, escalation_cap: Optional[int] = None,
                 compress_every: Optional[int] = None, replay: Optional[bool] = None) -> SaddleSolution:
    """
    Mixture of GER responses whose row is nonnegative on all of Y.

    Args:
        ger: good-enough-response oracle over Y
        Y: bounded, nonempty polytope
        phi_bound: facet-complexity bound; derived from the cone and the oracle when None
        anchor_index: coordinate of Y fixed to 1 used as the cone variable; appended when None
        r_exp, eps_exp: ellipsoid exponent overrides
        escalation_cap: number of parameter doublings before giving up
        compress_every: attempt the compressed program every this many new responses
        replay: re-run the final ellipsoid against its own cuts and compare

    Returns:
        SaddleSolution whose mixture has positive weights summing to 1
    """
    cap = escalation_cap if escalation_cap is not None else settings.escalation_cap
    replay = settings.replay_check if replay is None else replay
    apex_point = find_point(Y)
    if apex_point is None:
        raise EmptyInputSet("Y is empty", Y.describe())

    Y_eq = Y.with_equalities(implicit_equalities(Y))
    appended = anchor_index is None
    cone = homogenize(Y_eq, anchor_index)
    anchor = cone.dim - 1 if appended else anchor_index
    basis = _span_basis(cone)
    k = len(basis)
    if phi_bound is None:
        phi_bound = max(cone.facet_complexity, ger.encoding_bound)
    every = compress_every if compress_every is not None else settings.compress_check_every
    every = every or k

    stats = SaddleStats(ellipsoid_dim=k)
    collected = _Responses()
    transcripts: List[EllipsoidTranscript] = []
    calls_before = ger.calls
    logger.info(f"saddle: Y dim={Y.dim}, ellipsoid dim={k}, phi={phi_bound}, check every {every}")

    for level in range(cap + 1):
        oracle = _ReducedOracle(ger, cone, anchor, basis, apex_point, appended, collected)
        found: Dict[str, Any] = {}

        def stop(cuts: int) -> bool:
            if collected.fresh < every:
                return False
            collected.fresh = 0
            stats.compress_attempts += 1
            result = compress(collected.items, Y, basis, appended)
            if result is None:
                return False
            found["result"] = result
            return True

        try:
            transcript = certify_empty_or_point(oracle, k, phi_bound, level, r_exp, eps_exp, stop=stop)
        except _DualInfeasible:
            transcript = None
            logger.info("saddle: a response vanishes on the cone; dual system empty outright")
        if transcript is not None:
            transcripts.append(transcript)
            stats.iterations += transcript.iterations
            if replay:
                _replay(transcript, k)

        result = found.get("result")
        if result is None:
            stats.compress_attempts += 1
            result = compress(collected.items, Y, basis, appended)
        if result is not None:
            mixture, value = result
            stats.ger_calls = ger.calls - calls_before
            stats.responses = len(collected)
            stats.escalations = level
            logger.info(f"saddle: mixture of {len(mixture)} responses from {len(collected)} collected, "
                        f"min value {value}, {stats.iterations} cuts, level {level}")
            return SaddleSolution(mixture, value, stats, transcripts)
        logger.warning(f"saddle: compressed program failed at level {level}; escalating")

    raise VerificationFailedAfterMaxEscalations(
        "no verified mixture after the escalation cap",
        {"cap": cap, "responses": len(collected), "ger_calls": ger.calls - calls_before})


def _replay(transcript: EllipsoidTranscript, dim: int) -> None:
    """Re-run the ellipsoid with the recorded cuts and require the same run."""
    answers = {step.center: step for step in transcript.queries if not step.inside}
    target = transcript.iterations

    def oracle(z: RatVec) -> SeparationResult:
        step = answers.get(z)
        if step is None:
            raise VerificationFailedAfterMaxEscalations("replay diverged from the recorded run",
                                                        {"center": z.to_strings()})
        return SeparationResult.Violated(step.hyperplane, step.offset)

    rerun = central_cut(oracle, transcript.params, dim, stop=lambda cuts: cuts >= target)
    if [q.hyperplane for q in rerun.queries] != [q.hyperplane for q in transcript.queries]:
        raise VerificationFailedAfterMaxEscalations("replay produced different cuts", {"dim": dim})
    logger.debug(f"replay reproduced {rerun.iterations} cuts")


# ----------------------------------------------------------------------
# matrix games
# ----------------------------------------------------------------------

def matrix_game_value(A: RatMat) -> Tuple[Fraction, RatVec]:
    """Value and an optimal row strategy of ``max_x min_y x.Ay`` over simplices."""
    m, n = A.shape
    width = m + 1
    ineq_rows, ineq_rhs = [], []
    for j in range(n):
        ineq_rows.append([-A[i, j] for i in range(m)] + [ONE])
        ineq_rhs.append(ZERO)
    for i in range(m):
        row = [ZERO] * width
        row[i] = -ONE
        ineq_rows.append(row)
        ineq_rhs.append(ZERO)
    objective = [ZERO] * m + [ONE]
    out = lp_solve(objective, (ineq_rows, ineq_rhs), ([[ONE] * m + [ZERO]], [ONE]))
    return out.value, out.point[:m]


def best_response_ger(A: RatMat, x_vertices: Sequence[Sequence[Fraction]]) -> GerOracle:
    """GER oracle that answers with the first best response among explicit vertices."""
    vertices = [RatVec(v) for v in x_vertices]
    rows = [A.vecmat(v) for v in vertices]
    bound = max(encoding_length(r) for r in rows)

    def respond(y: RatVec) -> GerResponse:
        values = [r.dot(y) for r in rows]
        best = max(range(len(rows)), key=lambda i: (values[i], -i))
        return GerResponse(vertices[best], rows[best])

    return GerOracle(respond, bound, name="best-response")


def solve_matrix_game(A: RatMat, **kwargs) -> Tuple[Fraction, RatVec, SaddleSolution]:
    """
    Solve ``max_x min_y x.Ay`` over simplices through the GER framework.

    The value comes from one exact LP; the game is shifted to value 0 and the
    best response over the vertices of the row simplex acts as GER.
    """
    m, n = A.shape
    value, _ = matrix_game_value(A)
    shifted = shift_to_zero(A, value)
    x_vertices = [RatVec.unit(m + 1, i) + RatVec.unit(m + 1, m) for i in range(m)]
    ger = best_response_ger(shifted, x_vertices)
    Y = HPolytope.product(HPolytope.simplex(n), HPolytope.singleton([1]))
    solution = solve_saddle(ger, Y, anchor_index=n, **kwargs)
    x = RatVec.zeros(m)
    for response, weight in solution.mixture:
        x = x + response.x_handle[:m] * weight
    return value, x, solution
