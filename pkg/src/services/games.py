"""
Polyhedral games: normal-form games over simplices and extensive-form games in
sequence form, together with the value types shared by the solvers.
"""

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from math import lcm, prod
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.exceptions import DimensionMismatch, ImperfectRecall, MalformedTree
from .exact_arith import RatLike, RatMat, RatVec, rat
from .polytope import HPolytope

ZERO = Fraction(0)
ONE = Fraction(1)


# ----------------------------------------------------------------------
# value types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PureProfile:
    """One vertex of each player's strategy polytope."""
    strategies: Tuple[RatVec, ...]

    def __getitem__(self, p: int) -> RatVec:
        return self.strategies[p]

    def __len__(self) -> int:
        return len(self.strategies)

    def replace(self, p: int, strategy: RatVec) -> "PureProfile":
        items = list(self.strategies)
        items[p] = strategy
        return PureProfile(tuple(items))

    def to_lists(self) -> List[List[str]]:
        return [s.to_strings() for s in self.strategies]


@dataclass
class PlayerCertificate:
    player: int
    max_benefit: Fraction
    by_vertices: Optional[Fraction]
    by_lp: Fraction
    argmax: Optional[RatMat] = None

    @property
    def holds(self) -> bool:
        return self.max_benefit <= 0


@dataclass
class MixtureEquilibrium:
    support: List[Tuple[PureProfile, Fraction]]
    certificate: List[PlayerCertificate] = field(default_factory=list)
    n_bound: int = 0
    stats: Dict[str, Any] = field(default_factory=dict)
    transcripts: List[Any] = field(default_factory=list, repr=False)

    @property
    def support_size(self) -> int:
        return len(self.support)

    @property
    def weights(self) -> List[Fraction]:
        return [w for _, w in self.support]


@dataclass
class BruteForceReport:
    profiles: List[PureProfile]
    distribution: List[Fraction]
    feasible: bool
    equilibrium: Optional[MixtureEquilibrium] = None


# ----------------------------------------------------------------------
# games
# ----------------------------------------------------------------------

class PolyhedralGame(ABC):
    """n players, strategy polytopes A_p, multilinear utilities seen through gradients."""

    @property
    @abstractmethod
    def n_players(self) -> int:
        pass

    @abstractmethod
    def strategy_polytope(self, p: int) -> HPolytope:
        pass

    @abstractmethod
    def gradient(self, p: int, marginals: Sequence[Sequence[Fraction]]) -> RatVec:
        """Expected gradient of u_p; ``marginals[p]`` is ignored."""

    @abstractmethod
    def pure_strategies(self, p: int) -> List[RatVec]:
        pass

    @abstractmethod
    def payoff_weights(self) -> List[Fraction]:
        """Every nonzero payoff coefficient of every player (used for encoding bounds)."""

    def dimension(self, p: int) -> int:
        return self.strategy_polytope(p).dim

    @property
    def dimensions(self) -> List[int]:
        return [self.dimension(p) for p in range(self.n_players)]

    def n_pure(self, p: int) -> int:
        return len(self.pure_strategies(p))

    def utility(self, p: int, profile: Sequence[Sequence[Fraction]]) -> Fraction:
        return self.gradient(p, profile).dot(profile[p])

    def utilities(self, profile: Sequence[Sequence[Fraction]]) -> List[Fraction]:
        return [self.utility(p, profile) for p in range(self.n_players)]

    def value_encoding_bound(self) -> int:
        """
        Bit bound for any signed 0/1 combination of payoff coefficients.

        With D the lcm of all denominators and S the sum of |w|*D, every such
        sum has numerator at most S and denominator dividing D.
        """
        weights = self.payoff_weights()
        if not weights:
            return 4
        D = lcm(*(w.denominator for w in weights))
        S = sum(abs(w.numerator) * (D // w.denominator) for w in weights)
        return max(4, S.bit_length() + D.bit_length() + 2)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": type(self).__name__,
            "players": self.n_players,
            "dimensions": self.dimensions,
            "N": sum(d * d for d in self.dimensions),
            "facet_complexity": [self.strategy_polytope(p).facet_complexity for p in range(self.n_players)],
        }


class NormalFormGame(PolyhedralGame):
    """
    Payoff tensors stored row-major over joint actions (last player fastest).
    """

    def __init__(self, actions: Sequence[int], payoffs: Sequence[Sequence[RatLike]]):
        self.actions = list(actions)
        if not self.actions or any(a < 1 for a in self.actions):
            raise DimensionMismatch("every player needs at least one action", {"actions": self.actions})
        size = prod(self.actions)
        if len(payoffs) != len(self.actions):
            raise DimensionMismatch("one payoff tensor per player expected",
                                    {"players": len(self.actions), "tensors": len(payoffs)})
        self.payoffs: List[Tuple[Fraction, ...]] = []
        for p, tensor in enumerate(payoffs):
            if len(tensor) != size:
                raise DimensionMismatch("payoff tensor size differs from the action profile count",
                                        {"player": p, "expected": size, "got": len(tensor)})
            self.payoffs.append(tuple(rat(v) for v in tensor))
        self.strides = [prod(self.actions[q + 1:]) for q in range(len(self.actions))]
        self._polytopes = [HPolytope.simplex(d) for d in self.actions]

    @classmethod
    def bimatrix(cls, A: Sequence[Sequence[RatLike]], B: Sequence[Sequence[RatLike]]) -> "NormalFormGame":
        m, n = len(A), len(A[0])
        return cls([m, n], [[v for row in A for v in row], [v for row in B for v in row]])

    @property
    def n_players(self) -> int:
        return len(self.actions)

    def strategy_polytope(self, p: int) -> HPolytope:
        return self._polytopes[p]

    def payoff(self, p: int, joint: Sequence[int]) -> Fraction:
        return self.payoffs[p][sum(a * s for a, s in zip(joint, self.strides))]

    def gradient(self, p: int, marginals: Sequence[Sequence[Fraction]]) -> RatVec:
        if len(marginals) != self.n_players:
            raise DimensionMismatch("one marginal per player expected",
                                    {"players": self.n_players, "marginals": len(marginals)})
        supports = []
        for q, x in enumerate(marginals):
            if q == p:
                supports.append([(None, ONE)])
                continue
            if len(x) != self.actions[q]:
                raise DimensionMismatch("marginal length differs from action count",
                                        {"player": q, "expected": self.actions[q], "got": len(x)})
            supports.append([(a, w) for a, w in enumerate(x) if w])
        tensor = self.payoffs[p]
        g = [ZERO] * self.actions[p]
        for combo in cartesian(*supports):
            weight = ONE
            base = 0
            for q, (a, w) in enumerate(combo):
                if q != p:
                    weight *= w
                    base += a * self.strides[q]
            stride = self.strides[p]
            for b in range(self.actions[p]):
                value = tensor[base + b * stride]
                if value:
                    g[b] += weight * value
        return RatVec(g)

    def pure_strategies(self, p: int) -> List[RatVec]:
        d = self.actions[p]
        return [RatVec.unit(d, a) for a in range(d)]

    def n_pure(self, p: int) -> int:
        return self.actions[p]

    def payoff_weights(self) -> List[Fraction]:
        return [v for tensor in self.payoffs for v in tensor if v]


# ----------------------------------------------------------------------
# extensive form
# ----------------------------------------------------------------------

@dataclass
class TreeEdge:
    action: str
    child: str
    prob: Optional[Fraction] = None


@dataclass
class TreeNode:
    id: str
    kind: str  # chance | decision | terminal
    player: Optional[int] = None
    infoset: Optional[str] = None
    edges: List[TreeEdge] = field(default_factory=list)
    payoffs: Optional[List[Fraction]] = None


@dataclass
class GameTree:
    n_players: int
    root: str
    nodes: Dict[str, TreeNode]


@dataclass
class _Infoset:
    player: int
    label: str
    parent: int
    actions: List[str]
    first_sequence: int


class ExtensiveFormGame(PolyhedralGame):
    """
    Sequence-form game. Sequence 0 of every player is the empty sequence; the
    others are (infoset, action) pairs numbered in depth-first order. Payoffs
    are kept sparse, keyed by the tuple of the players' last sequences, with
    chance probabilities already multiplied in.
    """

    def __init__(self, n_players: int, infosets: List[_Infoset], sequence_labels: List[List[str]],
                 payoffs: Dict[Tuple[int, ...], List[Fraction]]):
        self._n = n_players
        self.infosets = infosets
        self.sequence_labels = sequence_labels
        self.sparse_payoffs = payoffs
        self._polytopes = [self._treeplex(p) for p in range(n_players)]
        self._by_sequence: List[Dict[int, List[Tuple[Tuple[int, ...], Fraction]]]] = []
        for p in range(n_players):
            index: Dict[int, List[Tuple[Tuple[int, ...], Fraction]]] = {}
            for key, values in payoffs.items():
                if values[p]:
                    index.setdefault(key[p], []).append((key, values[p]))
            self._by_sequence.append(index)

    @property
    def n_players(self) -> int:
        return self._n

    def n_sequences(self, p: int) -> int:
        return len(self.sequence_labels[p])

    def player_infosets(self, p: int) -> List[_Infoset]:
        return [I for I in self.infosets if I.player == p]

    def _treeplex(self, p: int) -> HPolytope:
        d = self.n_sequences(p)
        ineq = [(RatVec.unit(d, j) * -1, 0) for j in range(d)]
        eq = [(RatVec.unit(d, 0), 1)]
        for I in self.player_infosets(p):
            row = [ZERO] * d
            for k in range(len(I.actions)):
                row[I.first_sequence + k] = ONE
            row[I.parent] -= ONE
            eq.append((row, 0))
        return HPolytope.from_rows(d, ineq, eq)

    def strategy_polytope(self, p: int) -> HPolytope:
        return self._polytopes[p]

    def gradient(self, p: int, marginals: Sequence[Sequence[Fraction]]) -> RatVec:
        for q, x in enumerate(marginals):
            if q != p and len(x) != self.n_sequences(q):
                raise DimensionMismatch("marginal length differs from sequence count",
                                        {"player": q, "expected": self.n_sequences(q), "got": len(x)})
        g = [ZERO] * self.n_sequences(p)
        for sigma, entries in self._by_sequence[p].items():
            total = ZERO
            for key, value in entries:
                weight = value
                for q, s in enumerate(key):
                    if q != p:
                        weight *= marginals[q][s]
                        if not weight:
                            break
                total += weight
            g[sigma] = total
        return RatVec(g)

    def _plans(self, p: int, sequence: int) -> List[Dict[int, Fraction]]:
        plans: List[Dict[int, Fraction]] = [{}]
        for I in self.player_infosets(p):
            if I.parent != sequence:
                continue
            options = []
            for k in range(len(I.actions)):
                chosen = I.first_sequence + k
                for sub in self._plans(p, chosen):
                    option = dict(sub)
                    option[chosen] = ONE
                    options.append(option)
            plans = [{**a, **b} for a in plans for b in options]
        return plans

    def pure_strategies(self, p: int) -> List[RatVec]:
        d = self.n_sequences(p)
        out = []
        for plan in self._plans(p, 0):
            vec = [ZERO] * d
            vec[0] = ONE
            for j, v in plan.items():
                vec[j] = v
            out.append(RatVec(vec))
        return sorted(out)

    def _count(self, p: int, sequence: int) -> int:
        total = 1
        for I in self.player_infosets(p):
            if I.parent == sequence:
                total *= sum(self._count(p, I.first_sequence + k) for k in range(len(I.actions)))
        return total

    def n_pure(self, p: int) -> int:
        return self._count(p, 0)

    def payoff_weights(self) -> List[Fraction]:
        return [v for values in self.sparse_payoffs.values() for v in values if v]


def efg_build_sequence_form(tree: GameTree) -> ExtensiveFormGame:
    """
    Walk the tree depth-first and derive sequences, treeplexes and sparse payoffs.

    Raises:
        MalformedTree: unknown nodes, cycles, bad chance distributions, payoff
            vectors of the wrong length, or an information set whose nodes
            disagree on owner or action names
        ImperfectRecall: an information set reached from two different own sequences
    """
    n = tree.n_players
    if tree.root not in tree.nodes:
        raise MalformedTree("root node is missing", {"root": tree.root})
    infosets: Dict[Tuple[int, str], _Infoset] = {}
    order: List[_Infoset] = []
    labels: List[List[str]] = [["(root)"] for _ in range(n)]
    payoffs: Dict[Tuple[int, ...], List[Fraction]] = {}
    on_path = set()

    def visit(node_id: str, seqs: Tuple[int, ...], weight: Fraction) -> None:
        node = tree.nodes.get(node_id)
        if node is None:
            raise MalformedTree("edge points to an unknown node", {"node": node_id})
        if node_id in on_path:
            raise MalformedTree("cycle in game tree", {"node": node_id})
        on_path.add(node_id)
        if node.kind == "terminal":
            if node.payoffs is None or len(node.payoffs) != n:
                raise MalformedTree("terminal payoff vector has the wrong length",
                                    {"node": node_id, "players": n})
            entry = payoffs.setdefault(seqs, [ZERO] * n)
            for p in range(n):
                entry[p] += weight * node.payoffs[p]
        elif node.kind == "chance":
            if not node.edges:
                raise MalformedTree("chance node without outcomes", {"node": node_id})
            probs = [e.prob for e in node.edges]
            if any(pr is None or pr <= 0 for pr in probs) or sum(probs) != 1:
                raise MalformedTree("chance probabilities must be positive and sum to 1",
                                    {"node": node_id, "probs": [str(pr) for pr in probs]})
            for e in node.edges:
                visit(e.child, seqs, weight * e.prob)
        elif node.kind == "decision":
            p = node.player
            if p is None or not 0 <= p < n:
                raise MalformedTree("decision node owner out of range", {"node": node_id, "player": p})
            if not node.edges:
                raise MalformedTree("decision node without actions", {"node": node_id})
            actions = [e.action for e in node.edges]
            if len(set(actions)) != len(actions):
                raise MalformedTree("duplicate action names", {"node": node_id})
            label = node.infoset if node.infoset is not None else node_id
            key = (p, label)
            info = infosets.get(key)
            if info is None:
                info = _Infoset(p, label, seqs[p], actions, len(labels[p]))
                infosets[key] = info
                order.append(info)
                labels[p].extend(f"{label}:{a}" for a in actions)
            else:
                if info.parent != seqs[p]:
                    raise ImperfectRecall("information set reached from different own sequences",
                                          {"player": p, "infoset": label})
                if info.actions != actions:
                    raise MalformedTree("information set nodes disagree on actions",
                                        {"player": p, "infoset": label})
            for k, e in enumerate(node.edges):
                child_seqs = seqs[:p] + (info.first_sequence + k,) + seqs[p + 1:]
                visit(e.child, child_seqs, weight)
        else:
            raise MalformedTree("unknown node kind", {"node": node_id, "kind": node.kind})
        on_path.discard(node_id)

    visit(tree.root, (0,) * n, ONE)
    return ExtensiveFormGame(n, order, labels, payoffs)


# ----------------------------------------------------------------------
# instance generators
# ----------------------------------------------------------------------

def random_rational(rng: random.Random, low: int = -8, high: int = 8,
                    denominators: Sequence[int] = (1, 2, 4)) -> Fraction:
    return Fraction(rng.randint(low, high), rng.choice(list(denominators)))


def random_normal_form_game(rng: random.Random, actions: Sequence[int], **kwargs) -> NormalFormGame:
    size = prod(actions)
    payoffs = [[random_rational(rng, **kwargs) for _ in range(size)] for _ in actions]
    return NormalFormGame(actions, payoffs)


def random_instance(rng: random.Random, max_players: int = 3, max_actions: int = 3) -> NormalFormGame:
    """2 to max_players players with 2 to max_actions actions each."""
    n_players = rng.randint(2, max_players)
    return random_normal_form_game(rng, [rng.randint(2, max_actions) for _ in range(n_players)])


def random_zero_sum(rng: random.Random, m: int, n: int, **kwargs) -> RatMat:
    return RatMat([[random_rational(rng, **kwargs) for _ in range(n)] for _ in range(m)], ncols=n)


def prisoners_dilemma() -> NormalFormGame:
    """Actions (C, D); mutual cooperation 3, temptation 5, sucker 0, mutual defection 1."""
    return NormalFormGame.bimatrix([[3, 0], [5, 1]], [[3, 5], [0, 1]])


def matching_pennies() -> NormalFormGame:
    return NormalFormGame.bimatrix([[1, -1], [-1, 1]], [[-1, 1], [1, -1]])
