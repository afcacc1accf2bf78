"""
Exact equilibrium verification and the brute-force equilibrium oracle.

For a correlated distribution mu and player p, the expected utility after a
deviation B is ``<G_p, B>`` with ``G_p[b][a] = sum_s mu(s) s_p[a] g_p(s_-p)[b]``,
so the largest deviation benefit is a linear maximization over the deviation
set. It is computed twice, over an explicit vertex list and by LP, and the
two must agree exactly.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from typing import List, Optional, Sequence, Tuple

from ..core.config import settings
from ..core.exceptions import (
    CertificateFailure, DimensionMismatch, DimensionTooLarge, InstanceTooLarge, PointOutsideSet,
)
from ..utils.logger import logger
from .deviations import DeviationSet, flat_index
from .exact_arith import RatMat
from .games import BruteForceReport, MixtureEquilibrium, PlayerCertificate, PolyhedralGame, PureProfile
from .lp import lp_solve
from .polytope import maximize

ZERO = Fraction(0)
ONE = Fraction(1)

Support = Sequence[Tuple[PureProfile, Fraction]]


@dataclass
class Violation:
    player: Optional[int]
    deviation: Optional[RatMat]
    benefit: Fraction
    reason: str = "deviation benefit"


@dataclass
class VerificationResult:
    passed: bool
    violation: Optional[Violation] = None
    certificates: List[PlayerCertificate] = field(default_factory=list)


def benefit_matrix(game: PolyhedralGame, p: int, support: Support) -> Tuple[List[List[Fraction]], Fraction]:
    """(G_p, expected utility of p) for a distribution over pure profiles."""
    d = game.dimension(p)
    G = [[ZERO] * d for _ in range(d)]
    base = ZERO
    for profile, weight in support:
        g = game.gradient(p, profile.strategies)
        s = profile[p]
        base += weight * g.dot(s)
        for a in range(d):
            if not s[a]:
                continue
            for b in range(d):
                if g[b]:
                    G[b][a] += weight * s[a] * g[b]
    return G, base


def _pairing(G: List[List[Fraction]], B: RatMat) -> Fraction:
    return sum((G[b][a] * B[b, a] for b in range(len(G)) for a in range(len(G)) if G[b][a]), ZERO)


def max_benefit_by_vertices(G: List[List[Fraction]], base: Fraction, dev: DeviationSet
                            ) -> Tuple[Fraction, RatMat]:
    d = dev.matrix_dim
    if dev.kind == "swap":
        # stochastic columns are independent: best target per source
        rows = [[ZERO] * d for _ in range(d)]
        total = ZERO
        for a in range(d):
            b_best = max(range(d), key=lambda b: (G[b][a], -b))
            rows[b_best][a] = ONE
            total += G[b_best][a]
        return total - base, RatMat(rows, ncols=d)
    best = None
    for B in dev.vertices():
        value = _pairing(G, B)
        if best is None or value > best[0]:
            best = (value, B)
    return best[0] - base, best[1]


def max_benefit_by_lp(G: List[List[Fraction]], base: Fraction, dev: DeviationSet) -> Tuple[Fraction, RatMat]:
    d = dev.matrix_dim
    c = [ZERO] * dev.dim
    for b in range(d):
        for a in range(d):
            c[flat_index(b, a, d)] = G[b][a]
    value, point = maximize(dev.polytope, c)
    return value - base, dev.matrix(point)


def player_certificate(game: PolyhedralGame, dev: DeviationSet, support: Support) -> PlayerCertificate:
    """
    Largest benefit of p's deviations, by LP and over the vertex list when it
    can be enumerated. ``by_vertices`` is None when the set is too large.
    """
    p = dev.player
    G, base = benefit_matrix(game, p, support)
    by_lp, lp_argmax = max_benefit_by_lp(G, base, dev)
    try:
        by_vertices, argmax = max_benefit_by_vertices(G, base, dev)
    except DimensionTooLarge as e:
        logger.info(f"verification: player {p} certified by LP only ({e.message})")
        return PlayerCertificate(p, by_lp, None, by_lp, lp_argmax)
    if by_vertices != by_lp:
        raise CertificateFailure("vertex and LP deviation benefits disagree",
                                 {"player": p, "vertices": str(by_vertices), "lp": str(by_lp)})
    return PlayerCertificate(p, by_lp, by_vertices, by_lp, argmax)


def _as_support(mu) -> List[Tuple[PureProfile, Fraction]]:
    if isinstance(mu, MixtureEquilibrium):
        return list(mu.support)
    return list(mu)


def verify_equilibrium(game: PolyhedralGame, devs: Sequence[DeviationSet], mu) -> VerificationResult:
    """Exact check that no player gains from any deviation in their set."""
    support = _as_support(mu)
    if len(devs) != game.n_players:
        raise DimensionMismatch("one deviation set per player expected",
                                {"players": game.n_players, "sets": len(devs)})
    for profile, _ in support:
        for p in range(game.n_players):
            if not game.strategy_polytope(p).contains(profile[p]):
                raise PointOutsideSet("support profile is not a strategy profile", {"player": p})
    weights = [w for _, w in support]
    if not support or any(w < 0 for w in weights) or sum(weights, ZERO) != 1:
        total = sum(weights, ZERO)
        return VerificationResult(False, Violation(None, None, total - 1, "weights are not a distribution"))

    certificates = [player_certificate(game, dev, support) for dev in devs]
    for cert in certificates:
        if not cert.holds:
            logger.info(f"verification: player {cert.player} gains {cert.max_benefit}")
            return VerificationResult(False, Violation(cert.player, cert.argmax, cert.max_benefit), certificates)
    return VerificationResult(True, None, certificates)


def joint_profiles(game: PolyhedralGame) -> List[PureProfile]:
    return [PureProfile(tuple(combo))
            for combo in cartesian(*(game.pure_strategies(p) for p in range(game.n_players)))]


def brute_force_equilibrium(game: PolyhedralGame, devs: Sequence[DeviationSet],
                            cap: Optional[int] = None) -> BruteForceReport:
    """
    One LP over the full joint distribution of pure profiles with a deviation
    constraint per (player, deviation matrix).
    """
    limit = cap if cap is not None else settings.max_brute
    count = 1
    for p in range(game.n_players):
        count *= game.n_pure(p)
    if count > limit:
        raise InstanceTooLarge("joint profile count exceeds the brute-force cap", {"profiles": count, "cap": limit})
    profiles = joint_profiles(game)
    n = len(profiles)

    # gains[p][k][s]: u_p(B_k s_p, s_-p) - u_p(s)
    ineq_rows, ineq_rhs = [], []
    for dev in devs:
        p = dev.player
        matrices = dev.brute_force_deviations()
        gains = [[ZERO] * n for _ in matrices]
        for j, s in enumerate(profiles):
            g = game.gradient(p, s.strategies)
            own = g.dot(s[p])
            for k, B in enumerate(matrices):
                gains[k][j] = g.dot(B @ s[p]) - own
        for row in gains:
            if any(row):
                ineq_rows.append(row)
                ineq_rhs.append(ZERO)
    for j in range(n):
        row = [ZERO] * n
        row[j] = -ONE
        ineq_rows.append(row)
        ineq_rhs.append(ZERO)
    out = lp_solve([0] * n, (ineq_rows, ineq_rhs), ([[ONE] * n], [ONE]))
    if not out.is_optimal:
        logger.info("brute force: no distribution satisfies the deviation constraints")
        return BruteForceReport(profiles, [], False)
    distribution = list(out.point)
    support = [(s, w) for s, w in zip(profiles, distribution) if w > 0]
    result = verify_equilibrium(game, devs, support)
    equilibrium = MixtureEquilibrium(support, result.certificates, sum(d * d for d in game.dimensions),
                                     {"profiles": n})
    if not result.passed:
        raise CertificateFailure("brute-force distribution failed verification",
                                 {"benefit": str(result.violation.benefit)})
    return BruteForceReport(profiles, distribution, True, equilibrium)
