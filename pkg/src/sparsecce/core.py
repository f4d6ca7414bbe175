"""Exact primitives for two-player normal-form games.

Games, mixed strategies, mixtures of product distributions, and joint
(correlated) distributions are immutable value types whose entries are
exact rationals.  The evaluators in this module (welfare, equilibrium
gaps, sparse/joint conversions) therefore produce exact certificates:
a reported gap of ``-1/10**20`` really is negative.  Floats are rejected
at construction time; callers that mean a dyadic value must convert
explicitly with ``Fraction(f)``.

Everything here is pure and reentrant.  Action indices are 0-based;
graph nodes are 1-based (node ``i`` plays as action index ``i - 1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Iterable, Optional, Sequence, Union


class ShapeError(ValueError):
    """Dimension mismatch between games, strategies, or distributions."""


class ParameterError(ValueError):
    """A parameter violates its documented domain."""


class ExactnessError(TypeError):
    """A float (or other inexact number) reached an exact-arithmetic type."""


def as_exact(value: Union[int, Fraction]) -> Fraction:
    """Coerce an int or Fraction to Fraction; reject inexact types."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise ExactnessError(
        f"expected int or Fraction, got {type(value).__name__}; "
        "convert floats explicitly with Fraction(value) if the exact "
        "dyadic reading is intended"
    )


def sqrt_exact(value: Fraction) -> Fraction:
    """Exact square root of a nonnegative rational that is a perfect square."""
    if value < 0:
        raise ParameterError("square root of a negative rational")
    num, den = value.numerator, value.denominator
    rnum, rden = isqrt(num), isqrt(den)
    if rnum * rnum != num or rden * rden != den:
        raise ParameterError(f"{value} is not a perfect rational square")
    return Fraction(rnum, rden)


def _exact_vector(values: Iterable[Union[int, Fraction]]) -> tuple[Fraction, ...]:
    return tuple(as_exact(v) for v in values)


def _exact_matrix(rows: Iterable[Iterable[Union[int, Fraction]]]) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(_exact_vector(row) for row in rows)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 1..n.

    Edges are stored as (i, j) pairs with i < j; self-loops are never
    stored (adjacency queries that want the loops-included convention go
    through :func:`sparsecce.constructions.adjacency_with_loops`).
    """

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("graph needs at least one node")
        for edge in self.edges:
            i, j = edge
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ParameterError(f"edge {edge} has an endpoint outside 1..{self.n}")
            if i == j:
                raise ParameterError(f"self-loop {edge} is not storable")
            if i > j:
                raise ParameterError(f"edge {edge} is not normalized (want i < j)")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph from unordered pairs, normalizing and deduplicating."""
        normalized = set()
        for i, j in edges:
            if i == j:
                raise ParameterError(f"self-loop ({i}, {j}) rejected")
            normalized.add((min(i, j), max(i, j)))
        return cls(n=n, edges=frozenset(normalized))

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return True  # loops-included adjacency convention
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> frozenset[int]:
        """Neighbors of node i, self excluded."""
        out = set()
        for a, b in self.edges:
            if a == i:
                out.add(b)
            elif b == i:
                out.add(a)
        return frozenset(out)


def clique_number(g: Graph) -> int:
    """Exact clique number via Bron-Kerbosch with pivoting (desk scale only)."""
    adjacency = {v: set(g.neighbors(v)) for v in range(1, g.n + 1)}
    best = 0

    def expand(candidates: set[int], excluded: set[int], size: int) -> None:
        nonlocal best
        if not candidates and not excluded:
            best = max(best, size)
            return
        if size + len(candidates) <= best:
            return
        pivot = max(candidates | excluded, key=lambda v: len(adjacency[v] & candidates))
        for v in sorted(candidates - adjacency[pivot]):
            expand(candidates & adjacency[v], excluded & adjacency[v], size + 1)
            candidates = candidates - {v}
            excluded = excluded | {v}

    expand(set(range(1, g.n + 1)), set(), 0)
    return best


@dataclass(frozen=True)
class Game:
    """Square two-player game with exact rational payoff matrices R and C."""

    m: int
    R: tuple[tuple[Fraction, ...], ...]
    C: tuple[tuple[Fraction, ...], ...]
    row_labels: tuple[str, ...] = field(default=())
    col_labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "R", _exact_matrix(self.R))
        object.__setattr__(self, "C", _exact_matrix(self.C))
        for name, mat in (("R", self.R), ("C", self.C)):
            if len(mat) != self.m or any(len(row) != self.m for row in mat):
                raise ShapeError(f"{name} must be {self.m}x{self.m}")
        if not self.row_labels:
            object.__setattr__(self, "row_labels", tuple(str(i + 1) for i in range(self.m)))
        if not self.col_labels:
            object.__setattr__(self, "col_labels", tuple(str(i + 1) for i in range(self.m)))
        if len(self.row_labels) != self.m or len(self.col_labels) != self.m:
            raise ShapeError("label count must match the action count")


@dataclass(frozen=True)
class MixedStrategy:
    """A probability distribution over m actions, exact."""

    probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", _exact_vector(self.probs))
        if any(p < 0 for p in self.probs):
            raise ParameterError("strategy has a negative probability")
        if sum(self.probs) != 1:
            raise ParameterError("strategy probabilities must sum to exactly 1")

    @property
    def m(self) -> int:
        return len(self.probs)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p)

    @classmethod
    def point_mass(cls, m: int, index: int) -> "MixedStrategy":
        if not 0 <= index < m:
            raise ParameterError(f"index {index} outside 0..{m - 1}")
        return cls(tuple(Fraction(1) if i == index else Fraction(0) for i in range(m)))

    @classmethod
    def uniform(cls, m: int) -> "MixedStrategy":
        return cls((Fraction(1, m),) * m)

    @classmethod
    def uniform_on(cls, m: int, indices: Iterable[int]) -> "MixedStrategy":
        idx = sorted(set(indices))
        if not idx:
            raise ParameterError("uniform_on needs a nonempty index set")
        if idx[0] < 0 or idx[-1] >= m:
            raise ParameterError("index outside 0..m-1")
        p = Fraction(1, len(idx))
        probs = [Fraction(0)] * m
        for i in idx:
            probs[i] = p
        return cls(tuple(probs))


@dataclass(frozen=True)
class SparseMixture:
    """A mixture of T product distributions: weights plus per-component strategies.

    ``uniform`` is derived, never supplied: it is True exactly when every
    weight equals 1/T.
    """

    weights: tuple[Fraction, ...]
    rows: tuple[MixedStrategy, ...]
    cols: tuple[MixedStrategy, ...]
    uniform: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", _exact_vector(self.weights))
        if not (len(self.weights) == len(self.rows) == len(self.cols)):
            raise ShapeError("weights, rows, and cols must have equal length")
        if len(self.weights) < 1:
            raise ParameterError("a mixture needs at least one component")
        if any(w < 0 for w in self.weights):
            raise ParameterError("mixture weight is negative")
        if sum(self.weights) != 1:
            raise ParameterError("mixture weights must sum to exactly 1")
        m = self.rows[0].m
        if any(s.m != m for s in self.rows) or any(s.m != m for s in self.cols):
            raise ShapeError("all strategies in a mixture must share one length")
        share = Fraction(1, len(self.weights))
        object.__setattr__(self, "uniform", all(w == share for w in self.weights))

    @property
    def T(self) -> int:
        return len(self.weights)

    @property
    def m(self) -> int:
        return self.rows[0].m


@dataclass(frozen=True)
class JointDistribution:
    """An explicit correlated distribution over action pairs, exact."""

    probs: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", _exact_matrix(self.probs))
        m = len(self.probs)
        if any(len(row) != m for row in self.probs):
            raise ShapeError("joint distribution must be square")
        if any(p < 0 for row in self.probs for p in row):
            raise ParameterError("joint distribution has a negative entry")
        if sum(sum(row) for row in self.probs) != 1:
            raise ParameterError("joint distribution must sum to exactly 1")

    @property
    def m(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class GapReport:
    """Equilibrium-gap diagnostics for one distribution on one game.

    ``cce_gap`` is the best fixed-action deviation benefit (signed: negative
    means a strict equilibrium).  ``ce_gap`` is the best swap-function
    deviation benefit, always >= max(cce_gap, 0); it is None when the caller
    skipped the swap scan.  Deviation indices are 0-based, lowest index on
    ties.
    """

    cce_gap: Fraction
    ce_gap: Optional[Fraction]
    best_row_deviation: int
    best_col_deviation: int
    welfare: Fraction
    egalitarian: Fraction
    utility_x: Fraction
    utility_y: Fraction


Distribution = Union[SparseMixture, JointDistribution]


# ---------------------------------------------------------------------------
# Conversions (any joint distribution is m-sparse, and back)
# ---------------------------------------------------------------------------


def mixture_to_joint(mix: SparseMixture, m: int) -> JointDistribution:
    """Expand a mixture of products into the explicit m x m joint distribution."""
    if mix.m != m:
        raise ShapeError(f"mixture strategies have length {mix.m}, expected {m}")
    probs = [[Fraction(0)] * m for _ in range(m)]
    for weight, xs, ys in zip(mix.weights, mix.rows, mix.cols):
        if not weight:
            continue
        for i in xs.support():
            wx = weight * xs.probs[i]
            row = probs[i]
            for j in ys.support():
                row[j] += wx * ys.probs[j]
    return JointDistribution(tuple(tuple(row) for row in probs))


def n_sparse_decompose(joint: JointDistribution) -> SparseMixture:
    """Write a joint distribution as an m-component mixture of products.

    Component t is the point mass on row t paired with the normalized t-th
    row of the distribution, weighted by the row sum.  All-zero rows get the
    uniform column strategy (any strategy would do; uniform is canonical).
    """
    m = joint.m
    weights, rows, cols = [], [], []
    for t in range(m):
        row = joint.probs[t]
        mass = sum(row)
        weights.append(mass)
        rows.append(MixedStrategy.point_mass(m, t))
        if mass:
            cols.append(MixedStrategy(tuple(p / mass for p in row)))
        else:
            cols.append(MixedStrategy.uniform(m))
    return SparseMixture(tuple(weights), tuple(rows), tuple(cols))


# ---------------------------------------------------------------------------
# Internal evaluation helpers (support-aware; shared by all evaluators)
# ---------------------------------------------------------------------------


def _check_shapes(game: Game, dist: Distribution) -> None:
    if dist.m != game.m:
        raise ShapeError(f"distribution is on {dist.m} actions, game has {game.m}")


def _marginals(dist: Distribution) -> tuple[list[Fraction], list[Fraction]]:
    """Row-player and column-player marginals of the distribution."""
    m = dist.m
    xbar = [Fraction(0)] * m
    ybar = [Fraction(0)] * m
    if isinstance(dist, JointDistribution):
        for i, row in enumerate(dist.probs):
            for j, p in enumerate(row):
                if p:
                    xbar[i] += p
                    ybar[j] += p
    else:
        for weight, xs, ys in zip(dist.weights, dist.rows, dist.cols):
            if not weight:
                continue
            for i in xs.support():
                xbar[i] += weight * xs.probs[i]
            for j in ys.support():
                ybar[j] += weight * ys.probs[j]
    return xbar, ybar


def _expected_utilities(game: Game, dist: Distribution) -> tuple[Fraction, Fraction]:
    ux = Fraction(0)
    uy = Fraction(0)
    if isinstance(dist, JointDistribution):
        for i, row in enumerate(dist.probs):
            for j, p in enumerate(row):
                if p:
                    ux += p * game.R[i][j]
                    uy += p * game.C[i][j]
    else:
        for weight, xs, ys in zip(dist.weights, dist.rows, dist.cols):
            if not weight:
                continue
            sx, sy = xs.support(), ys.support()
            for i in sx:
                ri = game.R[i]
                ci = game.C[i]
                pxi = weight * xs.probs[i]
                for j in sy:
                    pij = pxi * ys.probs[j]
                    ux += pij * ri[j]
                    uy += pij * ci[j]
    return ux, uy


def _best_deviation(payoffs: Sequence[Fraction]) -> tuple[int, Fraction]:
    """Argmax with lowest-index tie-break."""
    best_i, best_v = 0, payoffs[0]
    for i, v in enumerate(payoffs):
        if v > best_v:
            best_i, best_v = i, v
    return best_i, best_v


def _joint_rows(dist: Distribution) -> dict[int, dict[int, Fraction]]:
    """Sparse rows of the induced joint distribution, keyed by row action."""
    rows: dict[int, dict[int, Fraction]] = {}
    if isinstance(dist, JointDistribution):
        for i, row in enumerate(dist.probs):
            entries = {j: p for j, p in enumerate(row) if p}
            if entries:
                rows[i] = entries
    else:
        for weight, xs, ys in zip(dist.weights, dist.rows, dist.cols):
            if not weight:
                continue
            for i in xs.support():
                target = rows.setdefault(i, {})
                wx = weight * xs.probs[i]
                for j in ys.support():
                    target[j] = target.get(j, Fraction(0)) + wx * ys.probs[j]
    return rows


def _swap_benefit(game: Game, dist: Distribution) -> tuple[Fraction, Fraction]:
    """Total best-swap-function benefit for each player.

    For the row player this is sum over recommended actions a of
    max_b sum_j mu[a, j] * (R[b][j] - R[a][j]); every summand is
    nonnegative because b = a is allowed.
    """
    m = game.m
    rows = _joint_rows(dist)
    total_x = Fraction(0)
    for a, row in rows.items():
        base = sum(p * game.R[a][j] for j, p in row.items())
        best = max(sum(p * game.R[b][j] for j, p in row.items()) for b in range(m))
        total_x += best - base

    cols: dict[int, dict[int, Fraction]] = {}
    for i, row in rows.items():
        for j, p in row.items():
            cols.setdefault(j, {})[i] = p
    total_y = Fraction(0)
    for a, col in cols.items():
        base = sum(p * game.C[i][a] for i, p in col.items())
        best = max(sum(p * game.C[i][b] for i, p in col.items()) for b in range(m))
        total_y += best - base
    return total_x, total_y


# ---------------------------------------------------------------------------
# Evaluators
# ---------------------------------------------------------------------------


def social_welfare(game: Game, dist: Distribution) -> Fraction:
    """Expected sum of the two players' utilities, exact."""
    _check_shapes(game, dist)
    ux, uy = _expected_utilities(game, dist)
    return ux + uy


def egalitarian_welfare(game: Game, dist: Distribution) -> Fraction:
    """Expected utility of the worse-off player, exact."""
    _check_shapes(game, dist)
    ux, uy = _expected_utilities(game, dist)
    return min(ux, uy)


def cce_gap(game: Game, dist: Distribution, *, include_ce: bool = True) -> GapReport:
    """Full gap diagnostics for a distribution on a game.

    The coarse gap maximizes, over both players and all pure deviations,
    the benefit of switching to a fixed action before the draw; pure
    deviations suffice because expected utility is linear in the deviation.
    With ``include_ce`` the (more expensive) swap-function scan also runs.
    """
    _check_shapes(game, dist)
    m = game.m
    ux, uy = _expected_utilities(game, dist)
    xbar, ybar = _marginals(dist)

    y_support = [j for j, p in enumerate(ybar) if p]
    dev_x = [sum(game.R[a][j] * ybar[j] for j in y_support) for a in range(m)]
    x_support = [i for i, p in enumerate(xbar) if p]
    dev_y = [sum(xbar[i] * game.C[i][b] for i in x_support) for b in range(m)]

    best_row, best_row_payoff = _best_deviation(dev_x)
    best_col, best_col_payoff = _best_deviation(dev_y)
    gap = max(best_row_payoff - ux, best_col_payoff - uy)

    ce: Optional[Fraction] = None
    if include_ce:
        ce = max(_swap_benefit(game, dist))

    return GapReport(
        cce_gap=gap,
        ce_gap=ce,
        best_row_deviation=best_row,
        best_col_deviation=best_col,
        welfare=ux + uy,
        egalitarian=min(ux, uy),
        utility_x=ux,
        utility_y=uy,
    )


def ce_gap(game: Game, dist: Distribution) -> Fraction:
    """Best swap-function deviation benefit over both players, exact."""
    _check_shapes(game, dist)
    return max(_swap_benefit(game, dist))
