"""
Central-cut ellipsoid method over a separation oracle.

The ellipsoid ``{x : (x - c)^T P^{-1} (x - c) <= 1}`` is carried as a center
and a shape matrix whose entries are dyadic rationals rounded to a fixed
number of bits below its largest diagonal entry. The update uses the
finite-precision blow-up factor ``(2n^2 + 3) / (2n^2)`` in place of
``n^2 / (n^2 - 1)`` so that rounding never lets the ellipsoid lose a point of
the set. A shape matrix that stops being positive definite along a cut ends
the run as EMPTY. Oracle queries and answers stay exact.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import isqrt
from typing import Callable, List, Optional

from ..core.config import settings
from ..core.exceptions import OracleContractViolation
from ..utils.logger import logger
from .exact_arith import RatVec, determinant, format_rat
from .polytope import SeparationResult

Oracle = Callable[[RatVec], SeparationResult]
StopHook = Callable[[int], bool]


def _log2(q: Fraction) -> float:
    return math.log2(q.numerator) - math.log2(q.denominator)


class EllipsoidOutcome(str, Enum):
    FEASIBLE = "feasible"
    EMPTY = "empty"
    STOPPED = "stopped"


@dataclass(frozen=True)
class EllipsoidParams:
    R: Fraction
    eps: Fraction
    max_iters: int
    precision_bits: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.max_iters < 1 or self.precision_bits < 1:
            raise ValueError("max_iters and precision_bits must be positive")

    @property
    def r_exp(self) -> float:
        return _log2(self.R)

    @property
    def eps_exp(self) -> float:
        return -_log2(self.eps)

    @classmethod
    def from_exponents(cls, dim: int, r_exp: int, eps_exp: int,
                       iter_constant: Optional[int] = None,
                       max_iters_ceiling: Optional[int] = None,
                       precision_bits: Optional[int] = None) -> "EllipsoidParams":
        """``R = 2^r_exp``, ``eps = 2^-eps_exp`` and the matching iteration budget."""
        c = iter_constant if iter_constant is not None else settings.iter_constant
        iters = c * (dim * eps_exp + dim * dim * r_exp)
        if max_iters_ceiling is not None:
            iters = min(iters, max_iters_ceiling)
        bits = precision_bits if precision_bits is not None else settings.precision_bits
        return cls(Fraction(2) ** r_exp, Fraction(1, 2 ** eps_exp), max(1, iters), bits)


@dataclass(frozen=True)
class TranscriptStep:
    center: RatVec
    inside: bool
    hyperplane: Optional[RatVec] = None
    offset: Optional[Fraction] = None

    def dump(self, k: int) -> str:
        center = "[" + ", ".join(format_rat(e) for e in self.center) + "]"
        if self.inside:
            return f"{k} center={center} answer=inside"
        plane = "[" + ", ".join(format_rat(e) for e in self.hyperplane) + "]"
        return f"{k} center={center} answer=cut hyperplane={plane} offset={format_rat(self.offset)}"


@dataclass
class EllipsoidTranscript:
    dim: int
    params: EllipsoidParams
    queries: List[TranscriptStep] = field(default_factory=list)
    outcome: Optional[EllipsoidOutcome] = None
    point: Optional[RatVec] = None
    log2_volume: float = 0.0
    determinants: List[Fraction] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return sum(1 for q in self.queries if not q.inside)

    @property
    def is_empty(self) -> bool:
        return self.outcome is EllipsoidOutcome.EMPTY

    @property
    def is_feasible(self) -> bool:
        return self.outcome is EllipsoidOutcome.FEASIBLE

    def dump(self) -> str:
        lines = [q.dump(k) for k, q in enumerate(self.queries)]
        lines.append(f"outcome={self.outcome.value if self.outcome else 'none'} iterations={self.iterations}")
        return "\n".join(lines) + "\n"

    def cuts(self) -> List[RatVec]:
        return [q.hyperplane for q in self.queries if not q.inside]


def shrink_factor(n: int) -> float:
    """Volume ratio of consecutive ellipsoids for one central cut with the blow-up factor."""
    if n == 1:
        return 0.5
    blow = (2 * n * n + 3) / (2 * n * n)
    return blow ** (n / 2) * math.sqrt((n - 1) / (n + 1))


def _round(q: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(round(q * scale), scale)


def _magnitude(q: Fraction) -> int:
    return q.numerator.bit_length() - q.denominator.bit_length()


def _sqrt(q: Fraction, bits: int) -> Fraction:
    """Square root of q > 0 truncated to about ``bits`` significant bits."""
    shift = max(bits, bits - _magnitude(q) // 2)
    scale = 1 << shift
    return Fraction(isqrt(math.floor(q * scale * scale)), scale)


def _round_matrix(P: List[List[Fraction]], bits: int) -> List[List[Fraction]]:
    """Round a shape matrix on a grid relative to its largest diagonal entry."""
    top = max(abs(P[i][i]) for i in range(len(P)))
    shift = bits if top == 0 else max(bits, bits - _magnitude(top))
    return [[_round(e, shift) for e in row] for row in P]


def central_cut(oracle: Oracle, params: EllipsoidParams, dim: int,
                stop: Optional[StopHook] = None, track_volume: bool = False) -> EllipsoidTranscript:
    """
    Run the ellipsoid method from the ball of radius R around the origin.

    Args:
        oracle: point -> SeparationResult; every cut must strictly cut off the query
        params: radius, volume threshold, iteration budget and rounding precision
        dim: space dimension (>= 1)
        stop: called with the number of cuts after each cut; returning True ends the run
        track_volume: record det(P) after every update

    Returns:
        EllipsoidTranscript with outcome FEASIBLE (exactly re-verified), EMPTY or STOPPED
    """
    if dim < 1:
        raise ValueError("ellipsoid dimension must be at least 1")
    n = dim
    bits = params.precision_bits
    transcript = EllipsoidTranscript(dim=n, params=params)

    center = [Fraction(0)] * n
    r2 = params.R * params.R
    P = [[r2 if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    log_vol = n * params.r_exp
    log_stop = -params.eps_exp
    log_shrink = math.log2(shrink_factor(n))
    if n > 1:
        blow = Fraction(2 * n * n + 3, 2 * n * n)
        two_over = Fraction(2, n + 1)
    if track_volume:
        transcript.determinants.append(determinant(P))

    for k in range(params.max_iters + 1):
        query = RatVec(center)
        answer = oracle(query)
        if answer.inside:
            transcript.queries.append(TranscriptStep(query, True))
            confirm = oracle(query)
            if not confirm.inside:
                raise OracleContractViolation("oracle changed its answer on a feasible point",
                                              {"point": query.to_strings()})
            transcript.outcome = EllipsoidOutcome.FEASIBLE
            transcript.point = query
            transcript.log2_volume = log_vol
            logger.debug(f"ellipsoid feasible after {k} cuts")
            return transcript

        a = answer.hyperplane
        if a is None or a.is_zero() or a.dot(query) <= answer.offset:
            raise OracleContractViolation("returned hyperplane does not cut off the queried center",
                                          {"center": query.to_strings(),
                                           "hyperplane": a.to_strings() if a is not None else None,
                                           "offset": str(answer.offset)})
        transcript.queries.append(TranscriptStep(query, False, a, answer.offset))
        if k >= params.max_iters or log_vol < log_stop:
            break

        Pa = [sum((P[i][j] * a[j] for j in range(n) if a[j]), Fraction(0)) for i in range(n)]
        aPa = sum((a[i] * Pa[i] for i in range(n) if a[i]), Fraction(0))
        if aPa <= 0:
            logger.warning(f"ellipsoid shape matrix degenerate after {k} cuts (a^T P a = {float(aPa):.3g})")
            break
        root = _sqrt(aPa, bits)
        if root == 0:
            logger.debug(f"ellipsoid degenerate after {k} cuts")
            break
        b = [e / root for e in Pa]
        if n == 1:
            center = [_round(center[0] - b[0] / 2, bits)]
            P = _round_matrix([[P[0][0] / 4]], bits)
        else:
            center = [_round(center[i] - b[i] / (n + 1), bits) for i in range(n)]
            P = _round_matrix([[blow * (P[i][j] - two_over * b[i] * b[j]) for j in range(n)]
                               for i in range(n)], bits)
        log_vol += log_shrink
        if track_volume:
            transcript.determinants.append(determinant(P))

        cuts = k + 1
        if cuts % settings.log_every == 0:
            logger.info(f"ellipsoid: {cuts} cuts, log2 volume {log_vol:.1f} (stop below {log_stop:.1f})")
        if stop is not None and stop(cuts):
            transcript.outcome = EllipsoidOutcome.STOPPED
            transcript.log2_volume = log_vol
            return transcript

    transcript.outcome = EllipsoidOutcome.EMPTY
    transcript.log2_volume = log_vol
    logger.debug(f"ellipsoid empty after {transcript.iterations} cuts")
    return transcript


def derive_exponents(dim: int, facet_complexity_bound: int, level: int = 0,
                     r_exp: Optional[int] = None, eps_exp: Optional[int] = None):
    """
    Radius and volume exponents for a run at escalation ``level``.

    Defaults are ``n^2 phi`` and ``5 n^3 phi`` capped by the configured ceilings;
    every escalation level doubles them. Explicit exponents override the defaults
    and are doubled the same way.
    """
    phi = max(1, facet_complexity_bound)
    scale = 2 ** level
    if r_exp is None:
        r_exp = settings.ellipsoid_r_exp
    if eps_exp is None:
        eps_exp = settings.ellipsoid_eps_exp
    if r_exp is None:
        r = min(dim * dim * phi, settings.r_exp_ceiling * scale)
    else:
        r = r_exp * scale
    if eps_exp is None:
        e = min(5 * dim ** 3 * phi, settings.eps_exp_ceiling * scale)
    else:
        e = eps_exp * scale
    return max(1, r), max(1, e)


def certify_empty_or_point(oracle: Oracle, dim: int, facet_complexity_bound: int, level: int = 0,
                           r_exp: Optional[int] = None, eps_exp: Optional[int] = None,
                           stop: Optional[StopHook] = None) -> EllipsoidTranscript:
    """One run with parameters derived from the dimension and a facet-complexity bound."""
    r, e = derive_exponents(dim, facet_complexity_bound, level, r_exp, eps_exp)
    bits = settings.precision_bits * (2 ** level) + (2 * e) // dim
    params = EllipsoidParams.from_exponents(
        dim, r, e, max_iters_ceiling=settings.max_iters_ceiling * (2 ** level), precision_bits=bits)
    logger.info(f"ellipsoid run: dim={dim} R=2^{r} eps=2^-{e} max_iters={params.max_iters} "
                f"precision={bits} level={level}")
    return central_cut(oracle, params, dim, stop=stop)
