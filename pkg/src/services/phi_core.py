"""
Exact linear Phi-equilibria through the saddle-point framework.

The correlator mixes pure profiles s; the deviator picks one matrix B_p per
player. The meta-game row of a profile lists ``-s_p[a] * g_p(s_-p)[b]`` at the
coordinate of ``B_p[b, a]`` and ``sum_p u_p(s)`` at a trailing anchor fixed to
1, so that ``row . y`` is the total deviation loss of the deviator.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

from ..core.config import settings
from ..core.exceptions import (
    CertificateFailure, DimensionMismatch, EahError, GradientOracleFailure, NoFixedPoint,
    PurificationFailure,
)
from ..utils.logger import logger
from .deviations import (
    DeviationSet, flat_index, make_constant_deviations, make_swap_deviations, with_identity,
)
from .exact_arith import RatMat, RatVec
from .games import MixtureEquilibrium, PolyhedralGame, PureProfile
from .lp import lp_solve
from .polytope import HPolytope, caratheodory, separate
from .saddle import GerOracle, GerResponse, solve_saddle
from .verifier import verify_equilibrium

ZERO = Fraction(0)
ONE = Fraction(1)

Trace = Optional[Callable[[int, Fraction], None]]


@dataclass(frozen=True)
class MetaLayout:
    """Coordinate layout of the deviator's polytope: one block per player, then the anchor."""
    dims: tuple
    aux: tuple

    @classmethod
    def from_devs(cls, devs: Sequence[DeviationSet]) -> "MetaLayout":
        return cls(tuple(d.matrix_dim for d in devs), tuple(d.aux_dims for d in devs))

    def offset(self, p: int) -> int:
        return sum(d * d + a for d, a in zip(self.dims[:p], self.aux[:p]))

    @property
    def size(self) -> int:
        return self.offset(len(self.dims)) + 1

    @property
    def anchor(self) -> int:
        return self.size - 1

    @property
    def n_bound(self) -> int:
        return sum(d * d for d in self.dims)


@dataclass(frozen=True)
class MetaDeviation:
    matrices: tuple
    anchor: Fraction = ONE

    @classmethod
    def from_point(cls, layout: MetaLayout, y: Sequence[Fraction]) -> "MetaDeviation":
        mats = []
        for p, d in enumerate(layout.dims):
            start = layout.offset(p)
            mats.append(RatMat.from_flat(list(y[start:start + d * d]), d, d))
        return cls(tuple(mats), y[layout.anchor])

    def to_point(self, layout: MetaLayout) -> RatVec:
        out = []
        for B, aux in zip(self.matrices, layout.aux):
            out.extend(B.flatten())
            out.extend([ZERO] * aux)
        out.append(self.anchor)
        return RatVec(out)


def utility_gradient(game: PolyhedralGame, p: int, marginals: Sequence[Sequence[Fraction]]) -> RatVec:
    """Expected gradient of u_p under the product of the opponents' marginals."""
    if len(marginals) != game.n_players:
        raise DimensionMismatch("one marginal per player expected",
                                {"players": game.n_players, "marginals": len(marginals)})
    for q, x in enumerate(marginals):
        if q != p and not game.strategy_polytope(q).contains(x):
            raise DimensionMismatch("marginal is not a strategy of its player", {"player": q})
    try:
        g = game.gradient(p, marginals)
    except EahError:
        raise
    except Exception as e:
        raise GradientOracleFailure(f"gradient oracle failed: {e}", {"player": p}) from e
    if len(g) != game.dimension(p):
        raise GradientOracleFailure("gradient has the wrong length",
                                    {"player": p, "expected": game.dimension(p), "got": len(g)})
    return g


def meta_row(game: PolyhedralGame, layout: MetaLayout, s: PureProfile) -> RatVec:
    row = [ZERO] * layout.size
    total = ZERO
    for p, d in enumerate(layout.dims):
        g = utility_gradient(game, p, s.strategies)
        total += g.dot(s[p])
        start = layout.offset(p)
        for a in range(d):
            if not s[p][a]:
                continue
            for b in range(d):
                if g[b]:
                    row[start + flat_index(b, a, d)] = -s[p][a] * g[b]
    row[layout.anchor] = total
    return RatVec(row)


def product_payoff(game: PolyhedralGame, marginals: Sequence[Sequence[Fraction]],
                   y: MetaDeviation) -> Fraction:
    """``sum_p g_p(x_-p) . (x_p - B_p x_p)``."""
    total = ZERO
    for p, B in enumerate(y.matrices):
        x = RatVec(marginals[p])
        g = utility_gradient(game, p, marginals)
        total += g.dot(x - B @ x)
    return total


def fixed_point(dev: DeviationSet, B: RatMat, A_p: HPolytope) -> RatVec:
    """A point x of A_p with ``B x = x``, from one LP."""
    d = dev.matrix_dim
    if B.shape != (d, d) or A_p.dim != d:
        raise DimensionMismatch("deviation matrix, deviation set and strategy polytope disagree",
                                {"B": B.shape, "d": d, "A_p": A_p.dim})
    shifted = B - RatMat.identity(d)
    eq_rows = [list(r) for r in shifted.rows] + [list(r.coeffs) for r in A_p.eq]
    eq_rhs = [ZERO] * d + [r.bound for r in A_p.eq]
    out = lp_solve([0] * d, A_p.ineq_system(), (eq_rows, eq_rhs))
    if not out.is_optimal:
        raise NoFixedPoint("deviation has no fixed point in the strategy set",
                           {"player": dev.player, "B": repr(B)})
    x = out.point
    if B @ x != x:
        raise NoFixedPoint("fixed point residual is not zero", {"player": dev.player})
    return x


def purified_ger(game: PolyhedralGame, devs: Sequence[DeviationSet], layout: MetaLayout,
                 y: Sequence[Fraction], trace: Trace = None) -> GerResponse:
    """
    A pure profile whose meta-game row scores ``>= 0`` against y.

    Fixed points of every B_p give a product distribution with payoff exactly 0;
    each marginal is then split into vertices and replaced by the first vertex
    that keeps the payoff nonnegative.
    """
    deviation = MetaDeviation.from_point(layout, y)
    if deviation.anchor != 1:
        deviation = MetaDeviation(tuple(B.scale(1 / deviation.anchor) for B in deviation.matrices))
    marginals = [fixed_point(dev, B, game.strategy_polytope(p))
                 for p, (dev, B) in enumerate(zip(devs, deviation.matrices))]
    for p in range(game.n_players):
        A_p = game.strategy_polytope(p)
        chosen = None
        for vertex, _ in caratheodory(A_p, marginals[p]):
            candidate = marginals[:p] + [vertex] + marginals[p + 1:]
            value = product_payoff(game, candidate, deviation)
            if value >= 0:
                chosen = vertex
                if trace is not None:
                    trace(p, value)
                break
        if chosen is None:
            raise PurificationFailure("no decomposition vertex keeps the payoff nonnegative", {"player": p})
        marginals[p] = chosen
    profile = PureProfile(tuple(marginals))
    row = meta_row(game, layout, profile)
    if row.dot(y) < 0:
        raise PurificationFailure("purified profile scores negative", {"value": str(row.dot(y))})
    return GerResponse(profile, row)


def encoding_bounds(game: PolyhedralGame, devs: Sequence[DeviationSet]):
    """(response row bound, facet-complexity bound phi) recomputed from the data."""
    layout = MetaLayout.from_devs(devs)
    entry_bits = game.value_encoding_bound()
    row_bound = layout.size * entry_bits
    psi = max([dev.polytope.facet_complexity for dev in devs] +
              [game.strategy_polytope(p).facet_complexity for p in range(game.n_players)])
    phi = max(2 * layout.n_bound * entry_bits, psi)
    return row_bound, phi


def deviation_polytope(devs: Sequence[DeviationSet]) -> HPolytope:
    return HPolytope.product(*(dev.polytope for dev in devs), HPolytope.singleton([1]))


def _check_devs(game: PolyhedralGame, devs: Sequence[DeviationSet]) -> None:
    if len(devs) != game.n_players:
        raise DimensionMismatch("one deviation set per player expected",
                                {"players": game.n_players, "sets": len(devs)})
    for p, dev in enumerate(devs):
        if dev.matrix_dim != game.dimension(p):
            raise DimensionMismatch("deviation matrix dimension differs from strategy dimension",
                                    {"player": p, "matrix_dim": dev.matrix_dim, "dim": game.dimension(p)})


def solve_phi_equilibrium(game: PolyhedralGame, devs: Sequence[DeviationSet], trace: Trace = None,
                          **saddle_options) -> MixtureEquilibrium:
    """
    Exact Phi-equilibrium as a sparse mixture of pure profiles.

    The deviator's polytope is the product of the hulls ``co(Phi_p + {I})``
    with an anchor fixed to 1, so that a nonnegative total loss bounds every
    single player's gain. The purified oracle serves as GER for the saddle
    solver and the resulting mixture is certified exactly against the
    original sets before it is returned.
    """
    _check_devs(game, devs)
    hulls = []
    for dev in devs:
        if not dev.includes_identity:
            logger.info(f"phi-equilibrium: adding the identity to the {dev.kind} set of player {dev.player}")
        hulls.append(with_identity(dev))
    layout = MetaLayout.from_devs(hulls)
    Y = deviation_polytope(hulls)
    row_bound, phi = encoding_bounds(game, hulls)
    logger.info(f"phi-equilibrium: players={game.n_players} dims={list(layout.dims)} "
                f"N={layout.n_bound} phi={phi}")

    ger = GerOracle(lambda y: purified_ger(game, hulls, layout, y, trace), row_bound, name="purified")
    solution = solve_saddle(ger, Y, phi_bound=max(phi, Y.facet_complexity),
                            anchor_index=layout.anchor, **saddle_options)

    merged = {}
    for response, weight in solution.mixture:
        profile = response.x_handle
        merged[profile] = merged.get(profile, ZERO) + weight
    support = [(profile, w) for profile, w in merged.items()]
    for profile, _ in support:
        for p in range(game.n_players):
            if not separate(game.strategy_polytope(p), profile[p]).inside:
                raise CertificateFailure("support profile leaves the strategy set", {"player": p})

    result = verify_equilibrium(game, devs, support)
    if not result.passed:
        raise CertificateFailure("mixture failed exact verification",
                                 {"player": result.violation.player if result.violation else None,
                                  "benefit": str(result.violation.benefit) if result.violation else None})
    stats = dict(solution.stats.as_dict())
    stats.update({"N": layout.n_bound, "phi": phi, "row_bound": row_bound})
    if len(support) > layout.n_bound:
        logger.warning(f"support {len(support)} exceeds N={layout.n_bound}")
    logger.info(f"phi-equilibrium: support {len(support)} of N={layout.n_bound}, "
                f"{stats['ger_calls']} GER calls")
    return MixtureEquilibrium(support, result.certificates, layout.n_bound, stats, solution.transcripts)


def build_deviations(game: PolyhedralGame, phi: str, from_file: Optional[Sequence[DeviationSet]] = None
                     ) -> List[DeviationSet]:
    """Deviation sets for every player: ``swap`` (CE), ``constant`` (CCE) or user-supplied ones."""
    if phi == "swap":
        return [make_swap_deviations(game.dimension(p), player=p) for p in range(game.n_players)]
    if phi == "constant":
        out = []
        for p in range(game.n_players):
            A_p = game.strategy_polytope(p)
            vertices = game.pure_strategies(p) if game.n_pure(p) <= settings.self_map_check_max_vertices else None
            out.append(make_constant_deviations(A_p, player=p, strategy_vertices=vertices))
        return out
    if phi == "file":
        if from_file is None:
            raise DimensionMismatch("deviation file required for phi=file")
        by_player = {dev.player: dev for dev in from_file}
        for p in range(game.n_players):
            if p not in by_player:
                logger.info(f"No deviation set supplied for player {p}; using the identity only")
                by_player[p] = identity_deviations(game.dimension(p), p)
        return [by_player[p] for p in range(game.n_players)]
    raise DimensionMismatch(f"unknown deviation family: {phi}")


def identity_deviations(d: int, player: int) -> DeviationSet:
    n = d * d
    eq = []
    for b in range(d):
        for a in range(d):
            eq.append((RatVec.unit(n, flat_index(b, a, d)), 1 if a == b else 0))
    return DeviationSet(player, d, HPolytope.from_rows(n, eq=eq), includes_identity=True, kind="identity",
                        base_vertices=(RatMat.identity(d),))
