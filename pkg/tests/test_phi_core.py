"""Tests for deviation sets and the Phi-equilibrium solver."""

import os
import random
from fractions import Fraction

import pytest

HALF = Fraction(1, 2)


def _identity_point(layout):
    from src.services.exact_arith import RatMat
    from src.services.phi_core import MetaDeviation

    return MetaDeviation(tuple(RatMat.identity(d) for d in layout.dims)).to_point(layout)


def _random_marginal(rng, d):
    weights = [rng.randint(0, 4) for _ in range(d)]
    if not any(weights):
        weights[rng.randrange(d)] = 1
    return [Fraction(w, sum(weights)) for w in weights]


def _random_stochastic(rng, d):
    from src.services.exact_arith import RatMat

    columns = [_random_marginal(rng, d) for _ in range(d)]
    return RatMat([[columns[a][b] for a in range(d)] for b in range(d)])


class TestDeviationSets:
    """Test the built-in and derived deviation families."""

    def test_swap_membership(self):
        """Test that column-stochastic matrices belong to the swap set."""
        from src.services.deviations import make_swap_deviations
        from src.services.exact_arith import RatMat

        dev = make_swap_deviations(2)
        assert dev.contains(RatMat.identity(2))
        assert dev.contains(RatMat([[HALF, 0], [HALF, 1]]))
        assert not dev.contains(RatMat([[1, 1], [1, 0]]))
        assert len(dev.vertices()) == 4

    def test_elementary_swaps(self):
        """Test the d(d-1) single-source swaps."""
        from src.services.deviations import elementary_swaps

        swaps = elementary_swaps(3)
        assert len(swaps) == 6
        assert all(sum(B[b, a] for b in range(3)) == 1 for B in swaps for a in range(3))

    def test_constant_membership(self):
        """Test that z 1^T is in the constant set and the identity is not."""
        from src.services.deviations import make_constant_deviations
        from src.services.exact_arith import RatMat
        from src.services.polytope import HPolytope

        dev = make_constant_deviations(HPolytope.simplex(2))
        quarter = Fraction(1, 4)
        assert dev.contains(RatMat([[quarter, quarter], [1 - quarter, 1 - quarter]]))
        assert not dev.contains(RatMat.identity(2))
        assert len(dev.vertices()) == 2

    def test_with_identity(self):
        """Test the hull of the constant set and the identity."""
        from src.services.deviations import make_constant_deviations, with_identity
        from src.services.exact_arith import RatMat
        from src.services.polytope import HPolytope

        dev = with_identity(make_constant_deviations(HPolytope.simplex(2)))
        assert dev.includes_identity
        assert dev.contains(RatMat.identity(2))
        assert dev.contains(RatMat([[Fraction(5, 8), Fraction(1, 8)], [Fraction(3, 8), Fraction(7, 8)]]))
        assert not dev.contains(RatMat([[0, 1], [1, 0]]))

    def test_normalizing_functional_treeplex(self, data_dir):
        """Test that the empty sequence normalizes a treeplex."""
        from src.services.deviations import normalizing_functional
        from src.utils.file_handler import load_game

        game = load_game(os.path.join(data_dir, "two_action.xml"))
        assert normalizing_functional(game.strategy_polytope(0)) == [1, 0, 0]

    def test_dimension_check(self):
        """Test that a polytope of the wrong size is refused."""
        from src.core.exceptions import DimensionMismatch
        from src.services.deviations import DeviationSet
        from src.services.polytope import HPolytope

        with pytest.raises(DimensionMismatch):
            DeviationSet(0, 2, HPolytope.unit_cube(3))

    def test_file_deviations(self, data_dir):
        """Test the trigger-style set read from file."""
        from src.services.exact_arith import RatMat
        from src.utils.file_handler import load_deviations

        (dev,) = load_deviations(os.path.join(data_dir, "trigger_two_action.json"))
        assert dev.player == 0
        assert dev.contains(RatMat.identity(3))
        assert dev.contains(RatMat([[1, 0, 0], [0, 0, 0], [0, 1, 1]]))
        assert len(dev.vertices()) == 3


class TestFixedPoints:
    """Test fixed points of deviation matrices."""

    def test_swap_matrix(self):
        """Test that exchanging two actions fixes the uniform strategy."""
        from src.services.deviations import make_swap_deviations
        from src.services.exact_arith import RatMat
        from src.services.phi_core import fixed_point
        from src.services.polytope import HPolytope

        x = fixed_point(make_swap_deviations(2), RatMat([[0, 1], [1, 0]]), HPolytope.simplex(2))
        assert x == [HALF, HALF]

    def test_collapse(self):
        """Test that sending everything to action 0 fixes e_0."""
        from src.services.deviations import make_swap_deviations
        from src.services.exact_arith import RatMat
        from src.services.phi_core import fixed_point
        from src.services.polytope import HPolytope

        x = fixed_point(make_swap_deviations(2), RatMat([[1, 1], [0, 0]]), HPolytope.simplex(2))
        assert x == [1, 0]

    def test_no_fixed_point(self):
        """Test that the zero matrix has no fixed point on the simplex."""
        from src.core.exceptions import NoFixedPoint
        from src.services.deviations import make_swap_deviations
        from src.services.exact_arith import RatMat
        from src.services.phi_core import fixed_point
        from src.services.polytope import HPolytope

        with pytest.raises(NoFixedPoint):
            fixed_point(make_swap_deviations(2), RatMat.zeros(2, 2), HPolytope.simplex(2))

    @pytest.mark.parametrize("seed", range(100))
    def test_random_stochastic(self, seed):
        """Test a zero residual on seeded column-stochastic matrices up to 5x5."""
        from src.services.deviations import make_swap_deviations
        from src.services.phi_core import fixed_point
        from src.services.polytope import HPolytope

        rng = random.Random(seed)
        d = rng.randint(1, 5)
        B = _random_stochastic(rng, d)
        x = fixed_point(make_swap_deviations(d), B, HPolytope.simplex(d))
        assert B @ x == x
        assert sum(x) == 1
        assert all(e >= 0 for e in x)


class TestMetaGame:
    """Test the meta-game rows and payoffs."""

    def test_meta_row(self, pd_game):
        """Test the row of mutual defection against swap deviations."""
        from src.services.exact_arith import RatVec
        from src.services.games import PureProfile
        from src.services.phi_core import MetaLayout, build_deviations, meta_row

        layout = MetaLayout.from_devs(build_deviations(pd_game, "swap"))
        assert layout.size == 9
        assert layout.n_bound == 8
        s = PureProfile((RatVec([0, 1]), RatVec([0, 1])))
        row = meta_row(pd_game, layout, s)
        assert row == [0, 0, 0, -1, 0, 0, 0, -1, 2]
        assert row.dot(_identity_point(layout)) == 0

    def test_product_payoff(self, pd_game):
        """Test the deviation loss of a single swap."""
        from src.services.exact_arith import RatMat
        from src.services.phi_core import MetaDeviation, product_payoff

        to_defect = MetaDeviation((RatMat([[0, 0], [1, 1]]), RatMat.identity(2)))
        assert product_payoff(pd_game, [[1, 0], [1, 0]], to_defect) == -2
        identity = MetaDeviation((RatMat.identity(2), RatMat.identity(2)))
        assert product_payoff(pd_game, [[HALF, HALF], [1, 0]], identity) == 0

    def test_purified_ger_at_identity(self, mp_game):
        """Test that the purified response scores exactly zero at the identity."""
        from src.services.phi_core import MetaLayout, build_deviations, purified_ger

        devs = build_deviations(mp_game, "swap")
        layout = MetaLayout.from_devs(devs)
        y = _identity_point(layout)
        response = purified_ger(mp_game, devs, layout, y)
        assert response.row.dot(y) == 0
        assert len(response.x_handle) == 2

    def test_purified_ger_nonnegative(self, pd_game):
        """Test the contract on a mixed swap point."""
        from src.services.exact_arith import RatMat
        from src.services.phi_core import MetaDeviation, MetaLayout, build_deviations, purified_ger

        devs = build_deviations(pd_game, "swap")
        layout = MetaLayout.from_devs(devs)
        y = MetaDeviation((RatMat([[HALF, 0], [HALF, 1]]), RatMat([[0, 1], [1, 0]]))).to_point(layout)
        assert purified_ger(pd_game, devs, layout, y).row.dot(y) >= 0

    def test_gradient_failure_wrapped(self, pd_game):
        """Test that an unexpected gradient error becomes GradientOracleFailure."""
        from unittest.mock import patch

        from src.core.exceptions import GradientOracleFailure
        from src.services.phi_core import utility_gradient

        with patch.object(type(pd_game), 'gradient', side_effect=RuntimeError("boom")):
            with pytest.raises(GradientOracleFailure):
                utility_gradient(pd_game, 0, [[1, 0], [1, 0]])

    @pytest.mark.parametrize("seed", range(100))
    def test_product_payoff_double_sum(self, seed):
        """Test the deviation loss of seeded triples against the sum over joint actions."""
        from itertools import product

        from src.services.games import random_instance
        from src.services.phi_core import MetaDeviation, product_payoff

        rng = random.Random(seed)
        game = random_instance(rng)
        marginals = [_random_marginal(rng, d) for d in game.actions]
        deviation = MetaDeviation(tuple(_random_stochastic(rng, d) for d in game.actions))
        expected = Fraction(0)
        for p, B in enumerate(deviation.matrices):
            for joint in product(*(range(d) for d in game.actions)):
                weight = Fraction(1)
                for q, a in enumerate(joint):
                    weight *= marginals[q][a]
                if not weight:
                    continue
                a = joint[p]
                deviated = sum(B[b, a] * game.payoff(p, joint[:p] + (b,) + joint[p + 1:])
                               for b in range(game.actions[p]))
                expected += weight * (game.payoff(p, joint) - deviated)
        assert product_payoff(game, marginals, deviation) == expected


class TestSolvePhiEquilibrium:
    """Test end-to-end Phi-equilibria of small games."""

    def test_prisoners_dilemma_ce(self, pd_game):
        """Test that the only correlated equilibrium is mutual defection."""
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        eq = solve_phi_equilibrium(pd_game, build_deviations(pd_game, "swap"))
        assert eq.support_size == 1
        profile, weight = eq.support[0]
        assert weight == 1
        assert profile[0] == [0, 1]
        assert profile[1] == [0, 1]
        assert all(c.holds for c in eq.certificate)
        assert eq.n_bound == 8

    def test_prisoners_dilemma_cce(self, pd_game):
        """Test that the coarse correlated equilibrium is mutual defection too."""
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        eq = solve_phi_equilibrium(pd_game, build_deviations(pd_game, "constant"))
        assert eq.support_size == 1
        profile, weight = eq.support[0]
        assert (profile[0], profile[1], weight) == ([0, 1], [0, 1], 1)

    def test_matching_pennies_ce(self, mp_game):
        """Test the unique correlated equilibrium of matching pennies."""
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        eq = solve_phi_equilibrium(mp_game, build_deviations(mp_game, "swap"))
        assert eq.support_size == 4
        assert eq.weights == [Fraction(1, 4)] * 4
        assert eq.support_size <= eq.n_bound
        assert all(c.max_benefit <= 0 for c in eq.certificate)

    def test_trace_hook(self, mp_game):
        """Test that the purification trace sees nonnegative values."""
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        seen = []
        solve_phi_equilibrium(mp_game, build_deviations(mp_game, "constant"),
                              trace=lambda p, value: seen.append((p, value)))
        assert seen
        assert all(value >= 0 for _, value in seen)

    def test_missing_players_get_identity(self, data_dir):
        """Test that a deviation file for player 0 only leaves player 1 fixed."""
        from unittest.mock import patch

        from src.services.phi_core import build_deviations
        from src.utils.file_handler import load_deviations, load_game

        game = load_game(os.path.join(data_dir, "two_action.xml"))
        file_devs = load_deviations(os.path.join(data_dir, "trigger_two_action.json"))
        with patch('src.services.phi_core.logger') as mock_logger:
            devs = build_deviations(game, "file", file_devs)
        assert [d.kind for d in devs] == ["file", "identity"]
        mock_logger.info.assert_called_once_with("No deviation set supplied for player 1; using the identity only")

    def test_unknown_family(self, pd_game):
        """Test that an unknown family name is refused."""
        from src.core.exceptions import DimensionMismatch
        from src.services.phi_core import build_deviations

        with pytest.raises(DimensionMismatch):
            build_deviations(pd_game, "internal")

    @pytest.mark.slow
    def test_trigger_deviations_on_tree(self, data_dir):
        """Test a file-supplied set on the two-action game tree."""
        from src.services.phi_core import build_deviations, solve_phi_equilibrium
        from src.utils.file_handler import load_deviations, load_game

        game = load_game(os.path.join(data_dir, "two_action.xml"))
        devs = build_deviations(game, "file", load_deviations(os.path.join(data_dir, "trigger_two_action.json")))
        eq = solve_phi_equilibrium(game, devs)
        assert all(c.holds for c in eq.certificate)
        # the trigger set rules out every profile where player 0 plays a
        assert all(profile[0] == [1, 0, 1] for profile, _ in eq.support)

    def test_matching_pennies_cce(self, mp_game):
        """Test a coarse correlated equilibrium of matching pennies certified against the constant sets."""
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        devs = build_deviations(mp_game, "constant")
        assert not any(dev.includes_identity for dev in devs)
        eq = solve_phi_equilibrium(mp_game, devs)
        assert sum(eq.weights) == 1
        assert all(c.holds for c in eq.certificate)
        assert eq.support_size <= eq.n_bound

    def test_hull_replaces_set_without_identity(self, mp_game):
        """Test that the solver runs over the hull with the identity and leaves the input sets alone."""
        from unittest.mock import patch

        from src.services import phi_core
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        devs = build_deviations(mp_game, "constant")
        with patch('src.services.phi_core.with_identity', wraps=phi_core.with_identity) as hull:
            solve_phi_equilibrium(mp_game, devs)
        assert hull.call_count == 2
        assert all(call.args[0].kind == "constant" for call in hull.call_args_list)
        assert [dev.kind for dev in devs] == ["constant", "constant"]

    def test_file_constant_sets(self, pd_game):
        """Test a constant set supplied without its base vertices."""
        from src.services.deviations import deviation_from_polytope
        from src.services.phi_core import build_deviations, solve_phi_equilibrium

        devs = [deviation_from_polytope(dev.player, dev.matrix_dim, dev.polytope)
                for dev in build_deviations(pd_game, "constant")]
        eq = solve_phi_equilibrium(pd_game, build_deviations(pd_game, "file", devs))
        assert all(c.holds for c in eq.certificate)
        assert all(profile[0] == [0, 1] and profile[1] == [0, 1] for profile, _ in eq.support)

    def _check_random_game(self, game):
        from src.services.phi_core import build_deviations, solve_phi_equilibrium
        from src.services.verifier import brute_force_equilibrium, verify_equilibrium

        devs = build_deviations(game, "swap")
        seen = []
        eq = solve_phi_equilibrium(game, devs, trace=lambda p, value: seen.append(value))
        assert all(c.max_benefit <= 0 for c in eq.certificate)
        assert eq.n_bound == sum(d * d for d in game.actions)
        assert eq.support_size <= eq.n_bound
        assert seen
        assert all(value >= 0 for value in seen)

        report = brute_force_equilibrium(game, devs)
        assert report.feasible
        assert verify_equilibrium(game, devs, report.equilibrium).passed
        assert verify_equilibrium(game, devs, eq).passed

    @pytest.mark.parametrize("seed", range(3))
    def test_random_two_by_two(self, seed):
        """Test seeded 2x2 games against the brute-force oracle."""
        from src.services.games import random_normal_form_game

        self._check_random_game(random_normal_form_game(random.Random(seed), [2, 2]))

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(50))
    def test_random_corpus(self, seed):
        """Test seeded games with 2 to 3 players and 2 to 4 actions each."""
        from src.services.games import random_instance

        self._check_random_game(random_instance(random.Random(seed), max_actions=4))

    @pytest.mark.slow
    def test_kuhn_cce(self, data_dir):
        """Test a coarse correlated equilibrium of Kuhn poker within two minutes."""
        import time

        from src.services.phi_core import build_deviations, solve_phi_equilibrium
        from src.utils.file_handler import load_game

        game = load_game(os.path.join(data_dir, "kuhn.xml"))
        started = time.monotonic()
        eq = solve_phi_equilibrium(game, build_deviations(game, "constant"))
        assert time.monotonic() - started < 120
        assert all(c.holds for c in eq.certificate)
        assert sum(eq.weights) == 1
