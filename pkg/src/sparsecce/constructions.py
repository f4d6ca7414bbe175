"""Game gadgets built from graphs, and the clique equilibrium certificate.

The central gadget embeds a graph's loops-included adjacency matrix as the
welfare-carrying block of a symmetric two-player game, surrounded by a
zero-sum punishment structure that caps how much probability any single
action can carry in a near-optimal equilibrium.  Two augmented variants add
an opt-out action that anchors a trivial pure equilibrium, and a randomized
large-ambient variant replaces the punishment identity blocks with sparse
random spikes for the low-precision regime.

All builders are pure; the randomized builder draws every entry directly
from ``(seed, i, j)`` so construction order is irrelevant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from .core import (
    Game,
    Graph,
    MixedStrategy,
    ParameterError,
    SparseMixture,
    as_exact,
)
from .rng import cell_bernoulli

_ZERO = Fraction(0)
_HALF = Fraction(1, 2)


def default_gamma(k: int) -> Fraction:
    """Diagonal bonus used throughout the reduction, as a function of k.

    Equals (1 / (80 k^3 (k+1)))^2 = 1 / (6400 k^6 (k+1)^2): strictly below
    the 1 / (40^2 k^6 (k+1)^2) schedule bound, and a perfect rational square
    so its square root (needed by the extraction threshold) is exact.
    """
    if k < 1:
        raise ParameterError("k must be positive")
    root = 80 * k**3 * (k + 1)
    return Fraction(1, root * root)


def gamma_bound_ok(k: int, gamma: Fraction) -> bool:
    """Whether gamma satisfies the schedule bound gamma < 1/(40^2 k^6 (k+1)^2)."""
    return 0 < gamma < Fraction(1, 1600 * k**6 * (k + 1) ** 2)


@dataclass(frozen=True)
class GzParams:
    """Parameters of the clique gadget game.

    ``k`` is the clique size the gadget targets, ``gamma`` the diagonal
    bonus (defaults to :func:`default_gamma`), and ``T`` the sparsity the
    augmented gadgets depend on through ``r = (1 + gamma*T/k) / 2``.
    """

    k: int
    gamma: Optional[Fraction] = None
    T: int = 1

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ParameterError("k must be at least 2")
        if self.T < 1:
            raise ParameterError("T must be at least 1")
        gamma = default_gamma(self.k) if self.gamma is None else as_exact(self.gamma)
        if gamma <= 0:
            raise ParameterError("gamma must be positive")
        object.__setattr__(self, "gamma", gamma)

    @property
    def r(self) -> Fraction:
        """Opt-out utility of the augmented gadgets: (1 + gamma*T/k)/2."""
        return (1 + self.gamma * self.T / self.k) / 2


def adjacency_with_loops(g: Graph) -> tuple[tuple[int, ...], ...]:
    """0/1 adjacency matrix of g with every diagonal entry forced to 1."""
    n = g.n
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = 1
    for a, b in g.edges:
        rows[a - 1][b - 1] = 1
        rows[b - 1][a - 1] = 1
    return tuple(tuple(row) for row in rows)


def _gz_blocks(g: Graph, p: GzParams) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Halved payoff matrices of the 2n x 2n clique gadget."""
    n = g.n
    adj = adjacency_with_loops(g)
    diag = (1 + p.gamma) / 2
    pos_k = Fraction(p.k, 2)
    neg_k = -pos_k
    m = 2 * n
    R = [[_ZERO] * m for _ in range(m)]
    C = [[_ZERO] * m for _ in range(m)]
    for i in range(n):
        for j in range(n):
            if i == j:
                R[i][j] = C[i][j] = diag
            elif adj[i][j]:
                R[i][j] = C[i][j] = _HALF
        R[i][n + i] = neg_k
        C[i][n + i] = pos_k
        R[n + i][i] = pos_k
        C[n + i][i] = neg_k
    return R, C


def _gz_labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(1, n + 1)) + tuple(f"aux{i}" for i in range(1, n + 1))


def build_gz_game(g: Graph, p: GzParams) -> Game:
    """The 2n x 2n clique gadget game.

    Row payoffs are half of [[A + gamma*I, -k*I], [k*I, 0]] and column
    payoffs half of [[A + gamma*I, k*I], [-k*I, 0]], so the game is
    symmetric (R equals C transposed) and welfare lives only on the
    adjacency block.
    """
    R, C = _gz_blocks(g, p)
    labels = _gz_labels(g.n)
    return Game(m=2 * g.n, R=tuple(map(tuple, R)), C=tuple(map(tuple, C)),
                row_labels=labels, col_labels=labels)


def _augment(g: Graph, p: GzParams, corner: Fraction) -> Game:
    """Clique gadget extended with an opt-out action worth `corner` at (O, O)."""
    n = g.n
    R, C = _gz_blocks(g, p)
    r = p.r
    m = 2 * n + 1
    for i in range(2 * n):
        R[i].append(-r)
        C[i].append(r)
    R.append([r] * (2 * n) + [corner])
    C.append([-r] * (2 * n) + [corner])
    labels = _gz_labels(n) + ("O",)
    return Game(m=m, R=tuple(map(tuple, R)), C=tuple(map(tuple, C)),
                row_labels=labels, col_labels=labels)


def build_augmented_game(g: Graph, p: GzParams) -> Game:
    """Opt-out gadget where (O, O) pays each player r = (1 + gamma*T/k)/2.

    A player choosing O receives r no matter what; the other player
    receives -r unless they chose O too.  Deleting the O row and column
    recovers :func:`build_gz_game` exactly.
    """
    return _augment(g, p, p.r)


def build_basicemb_game(g: Graph, p: GzParams, eps: Union[int, Fraction]) -> Game:
    """Opt-out gadget whose (O, O) cell pays eps to each player, 0 < eps < 1/2.

    Identical to :func:`build_augmented_game` elsewhere; the cheap opt-out
    equilibrium makes any welfare-sensitive objective prefer the clique
    block when the graph can support it.
    """
    eps = as_exact(eps)
    if not 0 < eps < _HALF:
        raise ParameterError("eps must lie strictly between 0 and 1/2")
    return _augment(g, p, eps)


def clique_cce(clique: Iterable[int], T: int, game_size: int) -> SparseMixture:
    """Uniform T-sparse equilibrium certificate supported on a clique.

    The clique is split, in sorted node order, into T contiguous blocks of
    equal size; component t plays uniformly on block t for both players.
    Requires T to divide the clique size.  ``game_size`` is the action count
    of the target game (2n for the plain gadget, 2n+1 for the augmented
    ones); clique node i plays as action index i - 1.
    """
    nodes = sorted(set(clique))
    k = len(nodes)
    if k == 0:
        raise ParameterError("clique must be nonempty")
    if T < 1 or k % T != 0:
        raise ParameterError(f"sparsity {T} must divide the clique size {k}")
    if nodes[0] < 1 or nodes[-1] > game_size:
        raise ParameterError("clique node outside the game's action range")
    block = k // T
    strategies = []
    for t in range(T):
        chunk = nodes[t * block:(t + 1) * block]
        strategies.append(MixedStrategy.uniform_on(game_size, [v - 1 for v in chunk]))
    weights = (Fraction(1, T),) * T
    return SparseMixture(weights, tuple(strategies), tuple(strategies))


# ---------------------------------------------------------------------------
# Low-precision (random spike) gadget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowPrecParams:
    """Parameters of the random-spike gadget.

    ``M`` is the spike magnitude (each spike-block entry is M with
    probability 3/(4M), else 0), ``N`` the ambient action count, ``n`` the
    graph size, ``k`` the planted-clique size the schedule targets, and
    ``seed`` the PRNG seed.  ``c1``/``c2`` record the schedule exponents
    when built by :func:`paper_lowprec_params`.
    """

    M: int
    N: int
    n: int
    seed: int
    k: int
    c1: Optional[int] = None
    c2: Optional[int] = None

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ParameterError("spike magnitude M must be a positive integer")
        if self.N < 2 * self.n:
            raise ParameterError("ambient dimension N must be at least 2n")
        if self.k < 1:
            raise ParameterError("target clique size k must be positive")

    @property
    def spike_probability(self) -> Fraction:
        return Fraction(3, 4 * self.M)


def completeness_threshold(M: int, N: int, n: int = 1, *, constant: int = 96,
                           log_discount: int = 0) -> int:
    """Planted-clique size above which the planted profile is an equilibrium w.h.p.

    Computed as ceil(constant * M^2 * (ln N - log_discount * ln n)); the
    default (96, 0) is the stricter of the two published variants, the
    laxer one being (32, 2).
    """
    value = constant * M * M * (math.log(N) - log_discount * math.log(n))
    return max(1, math.ceil(value))


def paper_lowprec_params(n: int, T: int, seed: int = 0) -> LowPrecParams:
    """The full-scale parameter schedule (documentation only; not buildable).

    M = 5T, c2 = 2000, c1 = ceil(c2 * ln(4M/3)) + 2, N = n^c1, and
    k = ceil(96 M^2 ln N).  The resulting N is astronomically large; use
    :func:`desk_lowprec_params` for anything that must actually run.
    """
    if T < 1:
        raise ParameterError("T must be at least 1")
    M = 5 * T
    c2 = 2000
    c1 = math.ceil(c2 * math.log(4 * M / 3)) + 2
    N = n**c1
    k = math.ceil(96 * M * M * c1 * math.log(n))
    return LowPrecParams(M=M, N=N, n=n, seed=seed, k=k, c1=c1, c2=c2)


def desk_lowprec_params(n: int, T: int, seed: int = 0,
                        c: Fraction = Fraction(1, 10)) -> LowPrecParams:
    """Workstation-scale substitute schedule: M = 5T, N = 8n, k = ceil(c M^2 ln N).

    The damping constant c replaces the full schedule's 96 so that k stays
    below n; property-based acceptance runs on these parameters.
    """
    if T < 1:
        raise ParameterError("T must be at least 1")
    M = 5 * T
    if M <= 4 * T:
        raise ParameterError("spike magnitude must exceed 4T")
    N = 8 * n
    k = max(1, math.ceil(c * M * M * Fraction(math.log(N))))
    if k > n:
        raise ParameterError(f"desk schedule gives k={k} > n={n}; lower c")
    return LowPrecParams(M=M, N=N, n=n, seed=seed, k=k)


def spike_matrix_entry(p: LowPrecParams, i: int, j: int) -> Fraction:
    """Entry (i, j) of the spike block, drawn independently from the seed.

    Rows index the N - n ambient actions (0-based), columns the n graph
    nodes.  Cell keys are offset by n so spike draws never collide with
    other per-cell uses of the same seed.
    """
    if not (0 <= i < p.N - p.n and 0 <= j < p.n):
        raise ParameterError("spike index out of range")
    if cell_bernoulli(p.seed, p.n + i, j, 3, 4 * p.M):
        return Fraction(p.M)
    return _ZERO


def build_lowprec_game(g: Graph, p: LowPrecParams) -> Game:
    """The N x N random-spike gadget for the low-precision regime.

    Row payoffs are half of [[A, -B^T], [B, 0]] and column payoffs half of
    [[A, B^T], [-B, 0]], where B is the (N-n) x n spike block drawn from the
    seed.  The same B realization appears in both matrices; the build is
    deterministic given ``p.seed``.
    """
    if g.n != p.n:
        raise ParameterError(f"graph has {g.n} nodes, params expect {p.n}")
    n, N = p.n, p.N
    adj = adjacency_with_loops(g)
    spike_half = Fraction(p.M, 2)
    neg_spike_half = -spike_half

    spikes = [
        [cell_bernoulli(p.seed, n + i, j, 3, 4 * p.M) for j in range(n)]
        for i in range(N - n)
    ]

    zero_tail = (_ZERO,) * (N - n)
    R_rows = []
    C_rows = []
    for i in range(n):
        top = [_HALF if adj[i][j] else _ZERO for j in range(n)]
        r_tail = [neg_spike_half if spikes[t][i] else _ZERO for t in range(N - n)]
        c_tail = [spike_half if spikes[t][i] else _ZERO for t in range(N - n)]
        R_rows.append(tuple(top) + tuple(r_tail))
        C_rows.append(tuple(top) + tuple(c_tail))
    for t in range(N - n):
        r_head = [spike_half if spikes[t][j] else _ZERO for j in range(n)]
        c_head = [neg_spike_half if spikes[t][j] else _ZERO for j in range(n)]
        R_rows.append(tuple(r_head) + zero_tail)
        C_rows.append(tuple(c_head) + zero_tail)

    labels = tuple(str(i) for i in range(1, n + 1)) + tuple(
        f"amb{i}" for i in range(1, N - n + 1)
    )
    return Game(m=N, R=tuple(R_rows), C=tuple(C_rows),
                row_labels=labels, col_labels=labels)
