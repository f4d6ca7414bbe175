"""Max-clique extraction from near-optimal sparse equilibrium oracles.

The pipeline sweeps clique sizes k = 2T, 3T, ..., builds the clique gadget
game at each k with the canonical gamma schedule, queries an oracle for a
T-sparse near-optimal equilibrium, re-validates the answer exactly, and
extracts a candidate clique from the heaviest mixture component by
thresholding its renormalized strategy.  Candidates are only adopted after
an exact clique check, so the pipeline is sound no matter how adversarial
the oracle is.

Oracles are callables ``(game, T, eps, eps_hat, *, k, gamma) -> mixture or
None``; four implementations are provided (known-certificate, perturbed
certificate, brute force, file-backed).
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .constructions import GzParams, build_gz_game, clique_cce, default_gamma
from .core import (
    Game,
    Graph,
    MixedStrategy,
    ParameterError,
    SparseMixture,
    cce_gap,
    sqrt_exact,
)

_ZERO = Fraction(0)


def is_clique(g: Graph, nodes: Iterable[int]) -> bool:
    """Whether every distinct pair in the set is an edge; empty and singleton sets qualify."""
    members = sorted(set(nodes))
    if members and not (1 <= members[0] and members[-1] <= g.n):
        raise ParameterError("node outside 1..n")
    for idx, i in enumerate(members):
        for j in members[idx + 1:]:
            if (i, j) not in g.edges:
                return False
    return True


def renormalize_mixture(mix: SparseMixture, n: int) -> SparseMixture:
    """Push every component onto the first n actions and renormalize.

    Coordinates beyond n are zeroed; the surviving head is rescaled to sum
    to 1, with all-zero heads mapped to the uniform distribution on the
    first n actions.  Weights are unchanged, so the result is supported
    only on the n x n block.
    """
    m = mix.m
    if m < n:
        raise ParameterError(f"strategies have length {m} < block size {n}")
    tail = (_ZERO,) * (m - n)

    def clamp(strategy: MixedStrategy) -> MixedStrategy:
        head = strategy.probs[:n]
        mass = sum(head)
        if mass == 1:
            return strategy
        if mass:
            return MixedStrategy(tuple(p / mass for p in head) + tail)
        return MixedStrategy((Fraction(1, n),) * n + tail)

    return SparseMixture(
        mix.weights,
        tuple(clamp(s) for s in mix.rows),
        tuple(clamp(s) for s in mix.cols),
    )


def select_tstar(mix: SparseMixture) -> int:
    """Index of the heaviest component (lowest index on ties, 0-based).

    The winner always has weight at least 1/T by pigeonhole.
    """
    best = 0
    for t, w in enumerate(mix.weights):
        if w > mix.weights[best]:
            best = t
    return best


def extract_clique_topl(g: Graph, xhat: MixedStrategy, alpha_star: Fraction,
                        k: int, gamma: Fraction) -> frozenset[int]:
    """Candidate clique from a renormalized strategy of the heaviest component.

    With ell = floor(alpha_star * k), takes every node whose probability
    clears 1/ell - 40*ell*k*sqrt(gamma).  If that set is not an ell-clique,
    falls back to the ell largest coordinates (lowest node index on ties).
    The degenerate case ell = 0 yields the singleton of the largest
    coordinate.  Callers must re-verify with :func:`is_clique`.
    """
    n = g.n
    probs = xhat.probs[:n]
    ell = math.floor(alpha_star * k)
    if ell < 1:
        top = max(range(n), key=lambda i: (probs[i], -i))
        return frozenset({top + 1})

    threshold = Fraction(1, ell) - 40 * ell * k * sqrt_exact(gamma)
    candidate = frozenset(i + 1 for i in range(n) if probs[i] >= threshold)
    if len(candidate) == ell and is_clique(g, candidate):
        return candidate

    order = sorted(range(n), key=lambda i: (-probs[i], i))
    fallback = frozenset(i + 1 for i in order[:ell])
    if is_clique(g, fallback):
        return fallback
    return candidate


def extract_clique_threshold16(g: Graph, xhat: MixedStrategy, yhat: MixedStrategy,
                               ell: int) -> frozenset[int]:
    """Nodes carrying at least 1/(16*ell) in both renormalized strategies.

    This is the extraction used by the opt-out gadget arguments; an empty
    result is a legitimate answer.
    """
    if ell < 1:
        raise ParameterError("ell must be at least 1")
    threshold = Fraction(1, 16 * ell)
    n = g.n
    return frozenset(
        i + 1 for i in range(n)
        if xhat.probs[i] >= threshold and yhat.probs[i] >= threshold
    )


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


class SparseCceOracle:
    """Base protocol for equilibrium oracles used by the pipeline.

    Subclasses implement ``__call__`` returning a mixture that should be a
    T-sparse eps-equilibrium with near-optimal welfare, or None when they
    cannot produce one.  ``expected_welfare`` advertises the welfare the
    oracle knows to be achievable (None when it has no claim); the pipeline
    rejects outputs falling short of it by more than eps_hat.
    """

    concurrency_safe: bool = True

    def __call__(self, game: Game, T: int, eps: Fraction, eps_hat: Fraction,
                 *, k: int, gamma: Fraction) -> Optional[SparseMixture]:
        raise NotImplementedError

    def expected_welfare(self, k: int, T: int, gamma: Fraction) -> Optional[Fraction]:
        return None


class PlantedCertificateOracle(SparseCceOracle):
    """Answers with the block-uniform certificate of a known clique.

    Succeeds whenever T divides k and the known clique has at least k
    nodes (the first k in sorted order are used); otherwise returns None.
    """

    def __init__(self, clique: Iterable[int]):
        self.clique = tuple(sorted(set(clique)))

    def _subset(self, k: int, T: int) -> Optional[tuple[int, ...]]:
        if T < 1 or k % T != 0 or k > len(self.clique):
            return None
        return self.clique[:k]

    def __call__(self, game, T, eps, eps_hat, *, k, gamma):
        subset = self._subset(k, T)
        if subset is None:
            return None
        return clique_cce(subset, T, game.m)

    def expected_welfare(self, k, T, gamma):
        if self._subset(k, T) is None:
            return None
        return 1 + gamma * T / k


class PerturbationOracle(PlantedCertificateOracle):
    """Certificate oracle with seeded adversarial rational noise.

    Starting from the block-uniform certificate it tilts the component
    weights, shuffles mass between block coordinates, and leaks a sliver of
    mass onto the punishment actions; every perturbation is an exact
    rational scaled far inside the (eps, eps_hat) budgets, so the output
    still validates while exercising the renormalization and extraction
    margins.
    """

    def __init__(self, clique: Iterable[int], seed: int = 0):
        super().__init__(clique)
        self.seed = seed

    def __call__(self, game, T, eps, eps_hat, *, k, gamma):
        subset = self._subset(k, T)
        if subset is None:
            return None
        base = clique_cce(subset, T, game.m)
        rng = random.Random((self.seed << 20) ^ (k << 4) ^ T)
        n = game.m // 2

        def frac(scale: Fraction) -> Fraction:
            return Fraction(rng.randrange(1 << 20), 1 << 20) * scale

        def perturb(strategy: MixedStrategy) -> MixedStrategy:
            probs = list(strategy.probs)
            support = [i for i, p in enumerate(probs) if p]
            if len(support) >= 2:
                src, dst = rng.sample(support, 2)
                move = min(frac(gamma / 8), probs[src])
                probs[src] -= move
                probs[dst] += move
            if rng.random() < 0.5:
                src = rng.choice(support)
                aux = n + rng.randrange(n)
                leak = min(frac(gamma * gamma / 32), probs[src])
                probs[src] -= leak
                probs[aux] += leak
            return MixedStrategy(tuple(probs))

        weights = list(base.weights)
        if T >= 2:
            a, b = rng.sample(range(T), 2)
            tilt = frac(gamma * gamma / (32 * T))
            weights[a] += tilt
            weights[b] -= tilt
        return SparseMixture(
            tuple(weights),
            tuple(perturb(s) for s in base.rows),
            tuple(perturb(s) for s in base.cols),
        )


class BruteForceOracle(SparseCceOracle):
    """Grid-search oracle; only answers on games small enough to enumerate."""

    def __init__(self, resolution: int = 4):
        self.resolution = resolution

    def __call__(self, game, T, eps, eps_hat, *, k, gamma):
        from .solvers import bruteforce_optimal_sparse_cce

        try:
            result = bruteforce_optimal_sparse_cce(game, T, self.resolution, eps)
        except ParameterError:
            return None
        return None if result is None else result.mixture


class FileOracle(SparseCceOracle):
    """Reads mixtures from disk; the path may carry a ``{k}`` placeholder.

    A missing or unparsable file is a per-iteration failure (None), not an
    error; the pipeline re-validates whatever loads, so untrusted files are
    safe.
    """

    concurrency_safe = False  # file access kept serial for predictable errors

    def __init__(self, path_template: str):
        self.path_template = path_template

    def __call__(self, game, T, eps, eps_hat, *, k, gamma):
        from .cli import parse_mixture

        path = self.path_template.format(k=k)
        try:
            return parse_mixture(path)
        except (OSError, ValueError):
            return None


# ---------------------------------------------------------------------------
# The pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReductionRecord:
    """Trace of one k-iteration of the pipeline."""

    k: int
    gamma: Fraction
    eps: Fraction
    eps_hat: Fraction
    oracle_ok: bool
    gap: Optional[Fraction] = None
    welfare: Optional[Fraction] = None
    t_star: Optional[int] = None
    alpha_star: Optional[Fraction] = None
    ell: Optional[int] = None
    candidate_set: Optional[frozenset[int]] = None
    is_clique: bool = False
    degenerate: bool = False


@dataclass(frozen=True)
class ReductionReport:
    """Full per-k trace plus the best verified clique."""

    n: int
    T: int
    records: tuple[ReductionRecord, ...]
    clique: frozenset[int]

    @property
    def clique_size(self) -> int:
        return len(self.clique)


def reduction_schedule(k: int, T: int) -> tuple[Fraction, Fraction, Fraction]:
    """(gamma, eps, eps_hat) used at iteration k: the canonical gamma, the
    equilibrium budget k*gamma/2, and the optimality budget gamma^2*T/2."""
    gamma = default_gamma(k)
    return gamma, Fraction(k) * gamma / 2, gamma * gamma * T / 2


def _run_iteration(g: Graph, T: int, oracle: SparseCceOracle, k: int) -> ReductionRecord:
    gamma, eps, eps_hat = reduction_schedule(k, T)
    game = build_gz_game(g, GzParams(k=k, gamma=gamma, T=T))
    mix = oracle(game, T, eps, eps_hat, k=k, gamma=gamma)
    if mix is None:
        return ReductionRecord(k=k, gamma=gamma, eps=eps, eps_hat=eps_hat, oracle_ok=False)

    report = cce_gap(game, mix, include_ce=False)
    valid = report.cce_gap <= eps
    claimed = oracle.expected_welfare(k, T, gamma)
    if claimed is not None and report.welfare < claimed - eps_hat:
        valid = False
    if not valid:
        return ReductionRecord(k=k, gamma=gamma, eps=eps, eps_hat=eps_hat,
                               oracle_ok=False, gap=report.cce_gap,
                               welfare=report.welfare)

    renormalized = renormalize_mixture(mix, g.n)
    t_star = select_tstar(renormalized)
    alpha_star = renormalized.weights[t_star]
    ell = math.floor(alpha_star * k)
    candidate = extract_clique_topl(g, renormalized.rows[t_star], alpha_star, k, gamma)
    verified = ell >= 1 and len(candidate) == ell and is_clique(g, candidate)
    return ReductionRecord(
        k=k, gamma=gamma, eps=eps, eps_hat=eps_hat, oracle_ok=True,
        gap=report.cce_gap, welfare=report.welfare,
        t_star=t_star, alpha_star=alpha_star, ell=ell,
        candidate_set=candidate, is_clique=verified, degenerate=ell < 1,
    )


def run_reduction(g: Graph, T: int, oracle: SparseCceOracle,
                  parallel: bool = False) -> ReductionReport:
    """Sweep k = 2T, 3T, ..., floor(n/T)*T and keep the best verified clique.

    The answer starts as the singleton {1}, so it is a clique even when
    every oracle call fails.  Candidates replace it only after passing the
    exact ell-clique check at their iteration; iterations run in ascending
    k, so the final answer is the largest verified extraction.  With
    ``parallel`` set and an oracle that declares itself concurrency-safe,
    iterations run on a thread pool; the report is assembled in k order
    either way.
    """
    if T < 1:
        raise ParameterError("T must be at least 1")
    if T > g.n:
        raise ParameterError("T cannot exceed the node count")
    ks = list(range(2 * T, (g.n // T) * T + 1, T))

    if parallel and getattr(oracle, "concurrency_safe", False) and len(ks) > 1:
        with ThreadPoolExecutor() as pool:
            records = list(pool.map(lambda k: _run_iteration(g, T, oracle, k), ks))
    else:
        records = [_run_iteration(g, T, oracle, k) for k in ks]

    best: frozenset[int] = frozenset({1})
    for record in records:
        if record.is_clique and record.candidate_set:
            best = record.candidate_set
    return ReductionReport(n=g.n, T=T, records=tuple(records), clique=best)
