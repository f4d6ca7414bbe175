"""Equilibrium solvers: welfare-optimal LP, no-regret dynamics, brute force.

The LP path runs an in-repo dense two-phase simplex with Bland's
anti-cycling rule, in exact rational arithmetic by default (floating point
with a feasibility tolerance for larger games).  The dynamics path runs
simultaneous multiplicative weights under full feedback and records the
played history; the uniform empirical mixture it returns has a coarse
equilibrium gap exactly equal to max(Reg_x, Reg_y)/T, which the tests lean
on heavily.  The brute-force search enumerates grid mixtures for tiny
games and serves as an oracle stand-in for the reduction pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    Game,
    JointDistribution,
    MixedStrategy,
    ParameterError,
    SparseMixture,
)


class SolverError(RuntimeError):
    """Numerical-mode solver failed to converge."""


# ---------------------------------------------------------------------------
# Dense two-phase simplex (exact or float) for maximization over
#   { x >= 0 : A_ub x <= b_ub, A_eq x = b_eq }
# ---------------------------------------------------------------------------

_FLOAT_TOL = 1e-9
_MAX_PIVOTS_FLOAT = 20_000


def _simplex_max(objective, a_ub, b_ub, a_eq, b_eq, *, exact: bool):
    """Maximize objective . x; returns (status, x, value).

    status is one of "optimal", "infeasible", "unbounded-guard".  In float
    mode a pivot-count guard raises SolverError instead of looping.
    """
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    tol = zero if exact else _FLOAT_TOL

    nvars = len(objective)
    rows = [(list(r), b, False) for r, b in zip(a_ub, b_ub)]
    rows += [(list(r), b, True) for r, b in zip(a_eq, b_eq)]
    nrows = len(rows)
    nslack = sum(1 for _, _, is_eq in rows if not is_eq)

    # Columns: structural vars, slacks, artificials, rhs.
    width = nvars + nslack + nrows + 1
    tableau = []
    basis = []
    slack_at = nvars
    art_at = nvars + nslack
    for coeffs, b, is_eq in rows:
        row = [zero] * width
        for j, v in enumerate(coeffs):
            row[j] = v
        sign = one
        if b < zero:
            sign = -one
            b = -b
            row = [-v for v in row]
        row[-1] = b
        if not is_eq:
            row[slack_at] = sign
            if sign > zero:
                basis.append(slack_at)
            else:
                row[art_at] = one
                basis.append(art_at)
                art_at += 1
            slack_at += 1
        else:
            row[art_at] = one
            basis.append(art_at)
            art_at += 1
        tableau.append(row)
    n_art_used = art_at - (nvars + nslack)

    def pivot(row_idx: int, col_idx: int) -> None:
        row = tableau[row_idx]
        factor = row[col_idx]
        tableau[row_idx] = row = [v / factor for v in row]
        for r in range(nrows + 1):
            if r == row_idx:
                continue
            other = tableau[r]
            coef = other[col_idx]
            if coef:
                tableau[r] = [a - coef * b for a, b in zip(other, row)]
        basis[row_idx - 1] = col_idx

    def run_phase(active_cols: int) -> str:
        pivots = 0
        while True:
            obj_row = tableau[0]
            enter = -1
            for j in range(active_cols):
                if obj_row[j] < -tol:  # Bland: lowest index improving column
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave = -1
            best_ratio = None
            for r in range(1, nrows + 1):
                coef = tableau[r][enter]
                if coef > tol:
                    ratio = tableau[r][-1] / coef
                    if (best_ratio is None or ratio < best_ratio
                            or (ratio == best_ratio and basis[r - 1] < basis[leave - 1])):
                        best_ratio = ratio
                        leave = r
            if leave < 0:
                return "unbounded-guard"
            pivot(leave, enter)
            pivots += 1
            if not exact and pivots > _MAX_PIVOTS_FLOAT:
                raise SolverError("simplex exceeded the pivot budget in float mode")

    # Phase 1: minimize the artificial sum, i.e. maximize its negation.
    obj1 = [zero] * width
    for j in range(nvars + nslack, nvars + nslack + n_art_used):
        obj1[j] = one
    tableau.insert(0, obj1)
    for r in range(1, nrows + 1):
        if basis[r - 1] >= nvars + nslack:
            row = tableau[r]
            tableau[0] = [a - b for a, b in zip(tableau[0], row)]
    status = run_phase(width - 1)
    if status != "optimal":
        return "infeasible", None, None
    residual = -tableau[0][-1]
    if (residual > tol) if exact else (residual > 1e-7):
        return "infeasible", None, None

    # Drive leftover artificials out of the basis (or drop redundant rows).
    for r in range(1, nrows + 1):
        if basis[r - 1] >= nvars + nslack:
            target = next(
                (j for j in range(nvars + nslack)
                 if (tableau[r][j] if exact else abs(tableau[r][j])) > tol
                 or (exact and tableau[r][j] != zero)),
                -1,
            )
            if target >= 0:
                pivot(r, target)

    # Phase 2: real objective over structural + slack columns only.
    obj2 = [zero] * width
    for j, v in enumerate(objective):
        obj2[j] = -v
    tableau[0] = obj2
    for r in range(1, nrows + 1):
        col = basis[r - 1]
        coef = tableau[0][col]
        if coef:
            row = tableau[r]
            tableau[0] = [a - coef * b for a, b in zip(tableau[0], row)]
    # Mask artificial columns by pivoting rules: restrict entering columns.
    status = run_phase(nvars + nslack)
    if status != "optimal":
        return status, None, None

    solution = [zero] * (nvars + nslack)
    for r in range(1, nrows + 1):
        if basis[r - 1] < nvars + nslack:
            solution[basis[r - 1]] = tableau[r][-1]
    value = sum(objective[j] * solution[j] for j in range(nvars))
    return "optimal", solution[:nvars], value


# ---------------------------------------------------------------------------
# Welfare-optimal (and related) equilibrium LP
# ---------------------------------------------------------------------------

LP_OBJECTIVES = ("welfare", "egalitarian-linearized", "player-x", "player-y")

EXACT_LP_ACTION_LIMIT = 64  # beyond this, default to float pivoting


@dataclass(frozen=True)
class LpSolution:
    """Outcome of the equilibrium LP: the optimizing distribution and value."""

    joint: Optional[JointDistribution]
    objective_value: Optional[Fraction]
    status: str  # "optimal" | "infeasible" | "unbounded-guard"


def _deviation_rows(game: Game) -> tuple[list, list]:
    """Coefficient rows (over vectorized mu) of the 2m fixed-deviation constraints."""
    m = game.m
    rows = []
    for a in range(m):  # row player switching to a
        row = [game.R[a][j] - game.R[i][j] for i in range(m) for j in range(m)]
        rows.append(row)
    for b in range(m):  # column player switching to b
        row = [game.C[i][b] - game.C[i][j] for i in range(m) for j in range(m)]
        rows.append(row)
    return rows, [Fraction(0)] * (2 * m)


def lp_optimal_cce(game: Game, objective: str = "welfare",
                   mode: Optional[str] = None) -> LpSolution:
    """Maximize a linear objective over the equilibrium polytope.

    The feasible set is { mu >= 0, sum mu = 1, no fixed deviation gains }.
    It is never empty (a Nash equilibrium exists), so "infeasible" never
    occurs for well-formed games.  The egalitarian objective is handled via
    the epigraph trick: maximize z subject to z <= each player's utility.
    Mode "exact" pivots in rationals (default up to 64 actions), "float"
    uses a 1e-9 feasibility tolerance.
    """
    if objective not in LP_OBJECTIVES:
        raise ParameterError(f"objective must be one of {LP_OBJECTIVES}")
    if mode is None:
        mode = "exact" if game.m <= EXACT_LP_ACTION_LIMIT else "float"
    if mode not in ("exact", "float"):
        raise ParameterError("mode must be 'exact' or 'float'")
    exact = mode == "exact"

    m = game.m
    njoint = m * m
    dev_rows, dev_rhs = _deviation_rows(game)
    eq_row = [Fraction(1)] * njoint
    welfare_vec = [game.R[i][j] + game.C[i][j] for i in range(m) for j in range(m)]

    if objective == "egalitarian-linearized":
        # Variables: mu (m^2), z+ and z- with z = z+ - z-.
        nvars = njoint + 2
        a_ub = [row + [Fraction(0), Fraction(0)] for row in dev_rows]
        for mat in (game.R, game.C):
            row = [-mat[i][j] for i in range(m) for j in range(m)]
            a_ub.append(row + [Fraction(1), Fraction(-1)])
        b_ub = dev_rhs + [Fraction(0), Fraction(0)]
        a_eq = [eq_row + [Fraction(0), Fraction(0)]]
        obj = [Fraction(0)] * njoint + [Fraction(1), Fraction(-1)]
    else:
        nvars = njoint
        a_ub = dev_rows
        b_ub = dev_rhs
        a_eq = [eq_row]
        if objective == "welfare":
            obj = welfare_vec
        elif objective == "player-x":
            obj = [game.R[i][j] for i in range(m) for j in range(m)]
        else:
            obj = [game.C[i][j] for i in range(m) for j in range(m)]
    b_eq = [Fraction(1)]

    if not exact:
        obj = [float(v) for v in obj]
        a_ub = [[float(v) for v in row] for row in a_ub]
        b_ub = [float(v) for v in b_ub]
        a_eq = [[float(v) for v in row] for row in a_eq]
        b_eq = [float(v) for v in b_eq]

    status, solution, value = _simplex_max(obj, a_ub, b_ub, a_eq, b_eq, exact=exact)
    if status != "optimal":
        return LpSolution(joint=None, objective_value=None, status=status)

    flat = solution[:njoint]
    if exact:
        probs = tuple(tuple(flat[i * m + j] for j in range(m)) for i in range(m))
        joint = JointDistribution(probs)
        return LpSolution(joint=joint, objective_value=value, status="optimal")

    # Float mode: clip numerical dust and renormalize exactly for the report.
    fracs = [max(Fraction(0), Fraction(v)) for v in flat]
    total = sum(fracs)
    if total == 0:
        raise SolverError("float LP returned an all-zero distribution")
    fracs = [v / total for v in fracs]
    probs = tuple(tuple(fracs[i * m + j] for j in range(m)) for i in range(m))
    return LpSolution(joint=JointDistribution(probs),
                      objective_value=Fraction(value), status="optimal")


# ---------------------------------------------------------------------------
# Multiplicative weights dynamics under full feedback
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DynamicsHistory:
    """Played strategies and full feedback of one simultaneous-MWU run.

    Strategies are exact snapshots of the played points.  Feedback vectors
    are the un-normalized payoffs R y^(t) and C^T x^(t): exact rationals in
    "exact" mode, floats in "float" mode.
    """

    mode: str
    eta: float
    xs: tuple[MixedStrategy, ...]
    ys: tuple[MixedStrategy, ...]
    ux: tuple[tuple, ...]
    uy: tuple[tuple, ...]

    @property
    def rounds(self) -> int:
        return len(self.xs)


def _exact_point(vec: np.ndarray) -> MixedStrategy:
    """Exact rational image of a float simplex point (dyadic, renormalized)."""
    fracs = [Fraction(float(v)) for v in vec]
    total = sum(fracs)
    return MixedStrategy(tuple(f / total for f in fracs))


def _normalized(matrix: np.ndarray) -> np.ndarray:
    """Affine image of the payoffs in [0, 1] (constant matrices map to zero)."""
    lo, hi = matrix.min(), matrix.max()
    if hi == lo:
        return np.zeros_like(matrix)
    return (matrix - lo) / (hi - lo)


def default_mwu_eta(m: int, rounds: int) -> float:
    """Step size sqrt(8 ln m / T) matching the [0, 1]-normalized regret bound."""
    if m < 2:
        return 0.0
    return math.sqrt(8.0 * math.log(m) / rounds)


def mwu_run(game: Game, rounds: int, eta: Optional[float] = None,
            mode: str = "float") -> tuple[SparseMixture, DynamicsHistory]:
    """Run simultaneous multiplicative weights for both players.

    Both players start uniform and update on full feedback; the trajectory
    is deterministic.  Updates use payoffs affinely normalized to [0, 1]
    (the regret guarantee is stated against that scale), while the recorded
    feedback is un-normalized.  Returns the uniform T-sparse empirical
    mixture and the history.  In "exact" mode the history's feedback
    vectors are exact (the identity gap == max regret / T then holds with
    rational equality); "float" mode trades that for speed.
    """
    if rounds < 1:
        raise ParameterError("rounds must be at least 1")
    if mode not in ("float", "exact"):
        raise ParameterError("mode must be 'float' or 'exact'")
    if eta is None:
        eta = default_mwu_eta(game.m, rounds)
    elif eta <= 0:
        raise ParameterError("eta must be positive")

    m = game.m
    Rf = np.array([[float(v) for v in row] for row in game.R])
    Cf = np.array([[float(v) for v in row] for row in game.C])
    Rn, Cn = _normalized(Rf), _normalized(Cf)

    wx = np.ones(m)
    wy = np.ones(m)
    xs, ys, uxs, uys = [], [], [], []
    for _ in range(rounds):
        x = wx / wx.sum()
        y = wy / wy.sum()
        xe = _exact_point(x)
        ye = _exact_point(y)
        xs.append(xe)
        ys.append(ye)
        if mode == "exact":
            uxs.append(tuple(
                sum(game.R[i][j] * ye.probs[j] for j in ye.support()) for i in range(m)
            ))
            uys.append(tuple(
                sum(xe.probs[i] * game.C[i][j] for i in xe.support()) for j in range(m)
            ))
        else:
            uxs.append(tuple(float(v) for v in Rf @ y))
            uys.append(tuple(float(v) for v in Cf.T @ x))
        wx = wx * np.exp(eta * (Rn @ y))
        wy = wy * np.exp(eta * (Cn.T @ x))
        wx /= wx.max()
        wy /= wy.max()

    share = Fraction(1, rounds)
    mixture = SparseMixture((share,) * rounds, tuple(xs), tuple(ys))
    history = DynamicsHistory(mode=mode, eta=eta, xs=tuple(xs), ys=tuple(ys),
                              ux=tuple(uxs), uy=tuple(uys))
    return mixture, history


def external_regret(history: DynamicsHistory):
    """Both players' external regrets over the recorded history.

    The best fixed comparator is a pure action by linearity, so the regret
    is max_a sum_t u^(t)[a] minus the realized cumulative utility.  Exact
    when the history is exact.
    """
    if history.rounds < 1:
        raise ParameterError("history is empty")

    def one_side(strategies: Sequence[MixedStrategy], feedback) -> Union[Fraction, float]:
        m = strategies[0].m
        zero = Fraction(0) if history.mode == "exact" else 0.0
        cumulative = [zero] * m
        realized = zero
        for strategy, util in zip(strategies, feedback):
            for a in range(m):
                cumulative[a] += util[a]
            realized += sum(strategy.probs[i] * util[i] for i in strategy.support())
        return max(cumulative) - realized

    return one_side(history.xs, history.ux), one_side(history.ys, history.uy)


# ---------------------------------------------------------------------------
# Brute-force grid search for tiny instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BruteForceResult:
    """Best grid mixture found, with its certified gap and welfare."""

    mixture: SparseMixture
    cce_gap: Fraction
    welfare: Fraction


def _grid_strategies(m: int, denominator: int) -> list[tuple[Fraction, ...]]:
    """All strategies with entries in {0, 1/d, ..., 1} summing to 1."""
    out = []

    def compose(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            compose(prefix + [v], remaining - v, slots - 1)

    compose([], denominator, m)
    return [tuple(Fraction(v, denominator) for v in counts) for counts in out]


_BRUTEFORCE_CANDIDATE_CAP = 2_000_000


def bruteforce_optimal_sparse_cce(game: Game, T: int, resolution: int,
                                  eps: Fraction) -> Optional[BruteForceResult]:
    """Exhaustive max-welfare search over uniform grid mixtures.

    Enumerates every uniform T-component mixture whose strategies live on
    the rational grid with the given denominator, keeps those with coarse
    gap at most eps, and returns the max-welfare survivor (ties broken by
    enumeration order).  Returns None when no grid point meets the budget.
    Deliberately tiny: m <= 5, T <= 2, resolution <= 6.
    """
    if game.m > 5:
        raise ParameterError("brute force is limited to games with at most 5 actions")
    if not 1 <= T <= 2:
        raise ParameterError("brute force is limited to T in {1, 2}")
    if not 1 <= resolution <= 6:
        raise ParameterError("resolution must be between 1 and 6")

    m = game.m
    grid = _grid_strategies(m, resolution)
    pairs = [(xi, yi) for xi in range(len(grid)) for yi in range(len(grid))]
    candidates = math.comb(len(pairs) + T - 1, T)
    if candidates > _BRUTEFORCE_CANDIDATE_CAP:
        raise ParameterError(
            f"{candidates} grid mixtures exceed the search cap; shrink the grid"
        )

    # Per-strategy deviation payoffs and per-pair utilities, computed once.
    r_dev = [tuple(sum(game.R[a][j] * y[j] for j in range(m)) for a in range(m))
             for y in grid]
    c_dev = [tuple(sum(x[i] * game.C[i][b] for i in range(m)) for b in range(m))
             for x in grid]
    ux_pair = {}
    uy_pair = {}
    for xi, yi in pairs:
        x, y = grid[xi], grid[yi]
        ux_pair[(xi, yi)] = sum(x[a] * r_dev[yi][a] for a in range(m))
        uy_pair[(xi, yi)] = sum(y[b] * c_dev[xi][b] for b in range(m))

    share = Fraction(1, T)
    best: Optional[tuple] = None
    for combo in combinations_with_replacement(pairs, T):
        ux = sum(ux_pair[p] for p in combo) * share
        uy = sum(uy_pair[p] for p in combo) * share
        gap = Fraction(0)
        for a in range(m):
            dev = sum(r_dev[p[1]][a] for p in combo) * share - ux
            if dev > gap or a == 0:
                gap = dev
        for b in range(m):
            dev = sum(c_dev[p[0]][b] for p in combo) * share - uy
            if dev > gap:
                gap = dev
        if gap <= eps:
            welfare = ux + uy
            if best is None or welfare > best[0]:
                best = (welfare, gap, combo)

    if best is None:
        return None
    welfare, gap, combo = best
    rows = tuple(MixedStrategy(grid[xi]) for xi, _ in combo)
    cols = tuple(MixedStrategy(grid[yi]) for _, yi in combo)
    mixture = SparseMixture((share,) * T, rows, cols)
    return BruteForceResult(mixture=mixture, cce_gap=gap, welfare=welfare)
