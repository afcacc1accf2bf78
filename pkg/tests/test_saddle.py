"""Tests for the GER saddle-point solver."""

import random
from fractions import Fraction
from unittest.mock import patch

import pytest


def _check_guarantee(A, value, x):
    assert sum(x) == 1
    assert all(e >= 0 for e in x)
    assert min(A.vecmat(x)) == value


class TestShift:
    """Test the zero-value shift."""

    def test_shift_to_zero(self):
        """Test the block layout of the shifted matrix."""
        from src.services.exact_arith import RatMat
        from src.services.saddle import shift_to_zero

        shifted = shift_to_zero(RatMat([[1, 2]]), Fraction(3, 2))
        assert shifted == RatMat([[1, 2, 0], [0, 0, Fraction(-3, 2)]])


class TestGerOracle:
    """Test the contract checks around a GER oracle."""

    def _oracle(self, row, bound=100):
        from src.services.exact_arith import RatVec
        from src.services.saddle import GerOracle, GerResponse

        return GerOracle(lambda y: GerResponse(None, RatVec(row)), bound, name="fixed")

    def test_valid_response(self):
        """Test that a nonnegative response passes and is counted."""
        from src.services.exact_arith import RatVec

        oracle = self._oracle([1, 0])
        oracle(RatVec([1, 1]))
        assert oracle.calls == 1

    def test_negative_response(self):
        """Test that a response scoring below zero is rejected."""
        from src.core.exceptions import GerContractViolation
        from src.services.exact_arith import RatVec

        with pytest.raises(GerContractViolation):
            self._oracle([-1, 0])(RatVec([1, 1]))

    def test_encoding_bound(self):
        """Test that a row longer than the declared bound is rejected."""
        from src.core.exceptions import GerContractViolation
        from src.services.exact_arith import RatVec

        with pytest.raises(GerContractViolation):
            self._oracle([Fraction(1, 1024), 0], bound=8)(RatVec([1, 1]))

    def test_wrong_length(self):
        """Test that a row of the wrong length is rejected."""
        from src.core.exceptions import DimensionMismatch
        from src.services.exact_arith import RatVec

        with pytest.raises(DimensionMismatch):
            self._oracle([1, 0, 0])(RatVec([1, 1]))

    def test_best_response_ties(self):
        """Test that ties go to the first vertex."""
        from src.services.exact_arith import RatMat, RatVec
        from src.services.saddle import best_response_ger

        ger = best_response_ger(RatMat([[1, 0], [1, 0]]), [[1, 0], [0, 1]])
        assert ger(RatVec([1, 0])).x_handle == [1, 0]


class TestCombinedOracle:
    """Test separation for the dual feasibility system."""

    def test_outside_cone(self):
        """Test that a point outside the cone gets a cone row and no response."""
        from src.services.polytope import HPolytope, homogenize
        from src.services.saddle import best_response_ger, combined_oracle
        from src.services.exact_arith import RatMat

        cone = homogenize(HPolytope.simplex(2))
        ger = best_response_ger(RatMat([[1, -1], [-1, 1]]), [[1, 0], [0, 1]])
        h, d, response = combined_oracle(ger, cone, [-1, 0, 1], 2, appended=True)
        assert response is None
        assert h.dot([-1, 0, 1]) > d
        assert ger.calls == 0

    def test_inside_cone_calls_ger_on_scaled_point(self):
        """Test that GER sees the point divided by the anchor value."""
        from src.services.exact_arith import RatMat, RatVec
        from src.services.polytope import HPolytope, homogenize
        from src.services.saddle import GerOracle, GerResponse, combined_oracle

        seen = []

        def respond(y):
            seen.append(y)
            return GerResponse(None, RatVec([1, 1]))

        cone = homogenize(HPolytope.simplex(2))
        h, d, response = combined_oracle(GerOracle(respond, 100), cone, [1, 1, 2], 2, appended=True)
        assert seen == [[Fraction(1, 2), Fraction(1, 2)]]
        assert h == [1, 1, 0]
        assert d == -1
        assert response is not None

    def test_apex_uses_base_point(self):
        """Test that the apex is cut by the response at the base point."""
        from src.services.exact_arith import RatMat, RatVec
        from src.services.polytope import HPolytope, homogenize
        from src.services.saddle import best_response_ger, combined_oracle

        cone = homogenize(HPolytope.simplex(2))
        ger = best_response_ger(RatMat([[1, 0], [0, 1]]), [[1, 0], [0, 1]])
        h, d, response = combined_oracle(ger, cone, [0, 0, 0], 2,
                                         apex_point=RatVec([1, 0]), appended=True)
        assert response.x_handle == [1, 0]
        assert d == -1
        assert h == [1, 0, 0]
        assert not h.is_zero()
        assert h.dot(RatVec([0, 0, 0])) > d


class TestSupportReduction:
    """Test the exact support reduction step."""

    def test_drops_redundant_response(self):
        """Test two parallel rows collapse onto one."""
        from src.services.exact_arith import RatVec
        from src.services.saddle import reduce_support

        weights = reduce_support([RatVec([1]), RatVec([2])], [Fraction(1, 2), Fraction(1, 2)], [RatVec([1])])
        assert weights == [1, 0]

    def test_single_response_untouched(self):
        """Test that a single response keeps weight 1."""
        from src.services.exact_arith import RatVec
        from src.services.saddle import reduce_support

        assert reduce_support([RatVec([1, 0])], [Fraction(1)], [RatVec([1, 0])]) == [1]


class TestMatrixGames:
    """Test zero-sum matrix games through the GER harness."""

    def test_rock_paper_scissors(self):
        """Test value 0 with the uniform strategy."""
        from src.services.exact_arith import RatMat
        from src.services.saddle import solve_matrix_game

        A = RatMat([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
        value, x, solution = solve_matrix_game(A)
        assert value == 0
        assert x == [Fraction(1, 3)] * 3
        _check_guarantee(A, value, x)
        assert solution.support_size <= 3 + 1
        assert solution.stats.ger_calls >= 1

    def test_matching_pennies(self):
        """Test value 0 with (1/2, 1/2)."""
        from src.services.exact_arith import RatMat
        from src.services.saddle import solve_matrix_game

        A = RatMat([[1, -1], [-1, 1]])
        value, x, _ = solve_matrix_game(A)
        assert value == 0
        assert x == [Fraction(1, 2), Fraction(1, 2)]

    def test_pure_saddle(self):
        """Test a game with a dominant row."""
        from src.services.exact_arith import RatMat
        from src.services.saddle import solve_matrix_game

        A = RatMat([[3, 1], [4, 2]])
        value, x, _ = solve_matrix_game(A)
        assert value == 2
        _check_guarantee(A, value, x)

    def test_random_small_games(self):
        """Test seeded 2x3 and 3x2 games against the direct LP value."""
        from src.services.games import random_zero_sum
        from src.services.saddle import matrix_game_value, solve_matrix_game

        rng = random.Random(5)
        for m, n in [(2, 3), (3, 2), (2, 2)]:
            A = random_zero_sum(rng, m, n)
            value, x, solution = solve_matrix_game(A)
            assert value == matrix_game_value(A)[0]
            _check_guarantee(A, value, x)
            assert solution.support_size <= n + 1

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_random_corpus(self, seed):
        """Test seeded games up to 6x6 against every vertex of Y and the GER call budget."""
        from src.services.exact_arith import RatVec
        from src.services.games import random_zero_sum
        from src.services.saddle import matrix_game_value, solve_matrix_game

        rng = random.Random(seed)
        m, n = rng.randint(2, 6), rng.randint(2, 6)
        A = random_zero_sum(rng, m, n)
        value, x, solution = solve_matrix_game(A)
        assert value == matrix_game_value(A)[0]
        _check_guarantee(A, value, x)
        row = solution.mixed_row
        anchor = RatVec.unit(n + 1, n)
        assert all(row.dot(RatVec.unit(n + 1, j) + anchor) >= 0 for j in range(n))
        assert solution.support_size <= n + 1

        runs = solution.transcripts
        if len(runs) == solution.stats.escalations + 1:
            assert solution.stats.ger_calls <= sum(t.params.max_iters + 1 for t in runs)
            assert solution.stats.ger_calls <= max(t.params.max_iters for t in runs) * (n + 1)

    def test_ger_calls_within_budget(self):
        """Test that one run calls GER at most once per ellipsoid query."""
        from src.services.exact_arith import RatMat
        from src.services.saddle import solve_matrix_game

        _, _, solution = solve_matrix_game(RatMat([[0, -1, 1], [1, 0, -1], [-1, 1, 0]]))
        runs = solution.transcripts
        assert runs
        assert solution.stats.ger_calls <= sum(len(t.queries) for t in runs)
        assert all(len(t.queries) <= t.params.max_iters + 1 for t in runs)

    def test_replay_check(self):
        """Test that replaying the recorded cuts reproduces the run."""
        from src.services.exact_arith import RatMat
        from src.services.saddle import solve_matrix_game

        value, x, _ = solve_matrix_game(RatMat([[1, -1], [-1, 1]]), replay=True)
        assert value == 0
        assert x == [Fraction(1, 2), Fraction(1, 2)]

    def test_escalation_exhausted(self):
        """Test that a compressed program that never succeeds ends in an error."""
        from src.core.exceptions import VerificationFailedAfterMaxEscalations
        from src.services.exact_arith import RatMat
        from src.services.saddle import solve_matrix_game

        with patch('src.services.saddle.compress', return_value=None):
            with pytest.raises(VerificationFailedAfterMaxEscalations):
                solve_matrix_game(RatMat([[1, -1], [-1, 1]]), escalation_cap=0, r_exp=2, eps_exp=4)
