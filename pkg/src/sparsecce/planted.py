"""Planted-clique instances and the dense-pair recovery chain.

Instance generation plants a clique on the lowest-numbered nodes and fills
every other pair with an independent fair coin drawn per-cell from the
seed.  Recovery runs in two steps mirroring how near-optimal equilibria of
the random-spike gadget are mined for structure: first a pair of
equal-size node sets with pairwise density at least 3/5 is extracted from
a mixture supported on the adjacency block, then the dense pair is cleaned
into a verified clique by greedy peeling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Iterable, Optional

from .core import Game, Graph, ParameterError, SparseMixture
from .reduction import is_clique
from .rng import cell_coin


@dataclass(frozen=True)
class PlantedInstance:
    """A graph with a known planted clique."""

    graph: Graph
    planted: frozenset[int]
    n: int
    k: int
    seed: int

    def __post_init__(self) -> None:
        if len(self.planted) != self.k:
            raise ParameterError("planted set size disagrees with k")
        if not is_clique(self.graph, self.planted):
            raise ParameterError("planted set is not a clique")


def gen_planted_graph(n: int, k: int, seed: int) -> PlantedInstance:
    """Sample a graph with a k-clique planted on nodes 1..k.

    Every pair not internal to the planted set is included independently
    with probability 1/2, drawn per-cell from the seed, so regeneration
    with the same arguments is bit-identical.
    """
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    edges = set()
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if j <= k or cell_coin(seed, i, j):
                edges.add((i, j))
    graph = Graph(n=n, edges=frozenset(edges))
    return PlantedInstance(graph=graph, planted=frozenset(range(1, k + 1)),
                           n=n, k=k, seed=seed)


def dens(g: Graph, s: Iterable[int], t: Iterable[int]) -> Fraction:
    """Fraction of present pairs between two equal-size node sets, loops included."""
    s_nodes = sorted(set(s))
    t_nodes = sorted(set(t))
    if not s_nodes or len(s_nodes) != len(t_nodes):
        raise ParameterError("dens needs two nonempty node sets of equal size")
    for v in s_nodes + t_nodes:
        if not 1 <= v <= g.n:
            raise ParameterError(f"node {v} outside 1..{g.n}")
    present = sum(1 for i in s_nodes for j in t_nodes if g.has_edge(i, j))
    return Fraction(present, len(s_nodes) * len(t_nodes))


def extract_dense_pair(game: Game, mix: SparseMixture, d: int,
                       M: int) -> Optional[tuple[frozenset[int], frozenset[int]]]:
    """Mine a dense node-set pair from a mixture on the adjacency block.

    Picks the first component of weight at least 1/T, collects the columns
    of its support where the component's row strategy sees adjacency mass
    at least 4/5, then the support rows seeing at least 3/5 against the
    uniform distribution on those columns.  Both sets are truncated to
    their d lowest-index members; if either has fewer than d the mixture's
    welfare was too low for the construction and None is returned.

    The mixture must already be supported on the adjacency block
    (renormalize first); adjacency values are read as twice the row-payoff
    entries.  Requires the spike magnitude to exceed 4T.
    """
    if d < 1:
        raise ParameterError("d must be at least 1")
    T = mix.T
    if M <= 4 * T:
        raise ParameterError(f"need spike magnitude M > 4T, got M={M}, T={T}")

    threshold_weight = Fraction(1, T)
    t = next((i for i, w in enumerate(mix.weights) if w >= threshold_weight), None)
    if t is None:  # unreachable for valid weights; defensive
        return None
    x, y = mix.rows[t], mix.cols[t]
    sx, sy = x.support(), y.support()

    four_fifths = Fraction(4, 5)
    i_y = []
    for j in sy:
        mass = 2 * sum(x.probs[i] * game.R[i][j] for i in sx)
        if mass >= four_fifths:
            i_y.append(j)
            if len(i_y) == d:
                break
    if len(i_y) < d:
        return None

    three_fifths = Fraction(3, 5)
    share = Fraction(1, len(i_y))
    i_x = []
    for i in sx:
        mass = 2 * share * sum(game.R[i][j] for j in i_y)
        if mass >= three_fifths:
            i_x.append(i)
            if len(i_x) == d:
                break
    if len(i_x) < d:
        return None

    return (frozenset(i + 1 for i in i_x), frozenset(j + 1 for j in i_y))


def clique_from_dense_pair(g: Graph, s: Iterable[int], t: Iterable[int],
                           target: int) -> frozenset[int]:
    """Clean a dense pair into a verified clique by greedy peeling.

    Repeatedly deletes from the union the node with the fewest neighbors
    inside the current candidate set (lowest node index on ties) until the
    remainder is a clique.  The result may be smaller than ``target`` (the
    size the density promises at full scale) but always verifies; the worst
    case is a singleton.
    """
    candidate = sorted(set(s) | set(t))
    if not candidate:
        raise ParameterError("dense pair is empty")
    neighbor_sets = {v: g.neighbors(v) for v in candidate}
    while not is_clique(g, candidate):
        members = set(candidate)
        degree = {v: len(neighbor_sets[v] & members) for v in candidate}
        worst = min(candidate, key=lambda v: (degree[v], v))
        candidate.remove(worst)
    return frozenset(candidate)


def greedy_clique(g: Graph, seed: int) -> frozenset[int]:
    """Greedy clique through nodes in seeded random order (a lower-bound statistic)."""
    order = list(range(1, g.n + 1))
    Random(seed).shuffle(order)
    chosen: list[int] = []
    for v in order:
        neighbors = g.neighbors(v)
        if all(u in neighbors for u in chosen):
            chosen.append(v)
    return frozenset(chosen)
