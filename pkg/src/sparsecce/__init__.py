"""Toolkit for T-sparse coarse correlated equilibria in two-player games.

Exact-rational evaluators and conversions live in :mod:`sparsecce.core`;
graph-to-game gadget builders in :mod:`sparsecce.constructions`;
equilibrium solvers (LP, no-regret dynamics, brute force) in
:mod:`sparsecce.solvers`; the max-clique extraction pipeline in
:mod:`sparsecce.reduction`; planted-clique instances and dense-pair
recovery in :mod:`sparsecce.planted`; file formats and the command line in
:mod:`sparsecce.cli`.
"""

from .constructions import (
    GzParams,
    LowPrecParams,
    adjacency_with_loops,
    build_augmented_game,
    build_basicemb_game,
    build_gz_game,
    build_lowprec_game,
    clique_cce,
    default_gamma,
    desk_lowprec_params,
    paper_lowprec_params,
)
from .core import (
    Game,
    GapReport,
    Graph,
    JointDistribution,
    MixedStrategy,
    ParameterError,
    ShapeError,
    SparseMixture,
    cce_gap,
    ce_gap,
    clique_number,
    egalitarian_welfare,
    mixture_to_joint,
    n_sparse_decompose,
    social_welfare,
)
from .planted import (
    PlantedInstance,
    clique_from_dense_pair,
    dens,
    extract_dense_pair,
    gen_planted_graph,
    greedy_clique,
)
from .reduction import (
    BruteForceOracle,
    FileOracle,
    PerturbationOracle,
    PlantedCertificateOracle,
    ReductionRecord,
    ReductionReport,
    SparseCceOracle,
    extract_clique_threshold16,
    extract_clique_topl,
    is_clique,
    renormalize_mixture,
    run_reduction,
    select_tstar,
)
from .solvers import (
    BruteForceResult,
    DynamicsHistory,
    LpSolution,
    bruteforce_optimal_sparse_cce,
    external_regret,
    lp_optimal_cce,
    mwu_run,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
