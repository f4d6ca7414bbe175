"""Command-line interface and flat-file formats.

Graphs travel as DIMACS-flavored edge lists (``c`` comments, one
``p <n> <m>`` header, ``e <i> <j>`` lines, 1-based nodes; the common
``p edge <n> <m>`` header variant is also accepted).  Games, mixtures, and
joint distributions travel as JSON documents whose matrix entries are
exact-rational strings like ``"3/4"``; plain JSON numbers are accepted on
input and converted losslessly (integers exactly, floats to their exact
dyadic value).  Reports come in a stable line-oriented text mode and a
sorted-key JSON mode that agree on every numeric field and embed the
arithmetic mode and seed, so identical configurations produce
byte-identical structured output.

Exit codes: 0 success, 1 usage or parse error, 2 validation failure,
3 oracle or extraction found nothing.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence, Union

from .constructions import (
    GzParams,
    LowPrecParams,
    build_augmented_game,
    build_basicemb_game,
    build_gz_game,
    build_lowprec_game,
    clique_cce,
    desk_lowprec_params,
    gamma_bound_ok,
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
)
from .planted import clique_from_dense_pair, dens, extract_dense_pair, gen_planted_graph
from .reduction import (
    BruteForceOracle,
    FileOracle,
    PerturbationOracle,
    PlantedCertificateOracle,
    ReductionReport,
    run_reduction,
)
from .solvers import DynamicsHistory, LpSolution, external_regret, lp_optimal_cce, mwu_run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NOT_FOUND = 3


class FileFormatError(ValueError):
    """Malformed input file; carries the offending path and line when known."""

    def __init__(self, message: str, path: str = "", lineno: Optional[int] = None):
        location = path if lineno is None else f"{path}:{lineno}"
        super().__init__(f"{location}: {message}" if location else message)


# ---------------------------------------------------------------------------
# Rational scalars
# ---------------------------------------------------------------------------


def rational_to_text(value: Fraction) -> str:
    return str(value)


def rational_from_value(value: Union[str, int, float]) -> Fraction:
    """Exact rational from a JSON scalar.

    Strings parse as ``num/den`` (or decimal literals, exactly); ints are
    exact; floats convert to their exact dyadic value, which is lossless
    with respect to the stored double.
    """
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise FileFormatError(f"bad rational literal {value!r}: {exc}") from exc
    if isinstance(value, bool):
        raise FileFormatError(f"bad rational literal {value!r}")
    if isinstance(value, (int, float)):
        return Fraction(value)
    raise FileFormatError(f"bad rational literal {value!r}")


# ---------------------------------------------------------------------------
# Graph files (DIMACS-flavored)
# ---------------------------------------------------------------------------


def parse_graph(path: str) -> Graph:
    graph, _, _ = _parse_graph_file(path)
    return graph


def parse_planted(path: str) -> tuple[Graph, Optional[frozenset[int]], Optional[int]]:
    """Graph plus the planted set and seed recorded in its comments, if any."""
    return _parse_graph_file(path)


def _parse_graph_file(path: str) -> tuple[Graph, Optional[frozenset[int]], Optional[int]]:
    n: Optional[int] = None
    declared_edges: Optional[int] = None
    edges: set[tuple[int, int]] = set()
    planted: Optional[frozenset[int]] = None
    seed: Optional[int] = None

    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            tag = tokens[0]
            if tag == "c":
                if len(tokens) >= 2 and tokens[1] == "planted":
                    planted = frozenset(int(v) for v in tokens[2:])
                elif len(tokens) >= 3 and tokens[1] == "seed":
                    seed = int(tokens[2])
                continue
            if tag == "p":
                if n is not None:
                    raise FileFormatError("duplicate header", path, lineno)
                fields = tokens[1:]
                if fields and not fields[0].lstrip("-").isdigit():
                    fields = fields[1:]  # tolerate the "p edge n m" variant
                if len(fields) != 2:
                    raise FileFormatError("header must be 'p <n> <m>'", path, lineno)
                try:
                    n, declared_edges = int(fields[0]), int(fields[1])
                except ValueError:
                    raise FileFormatError("header must be 'p <n> <m>'", path, lineno)
                if n < 1 or declared_edges < 0:
                    raise FileFormatError("header values out of range", path, lineno)
                continue
            if tag == "e":
                if n is None:
                    raise FileFormatError("edge before header", path, lineno)
                if len(tokens) != 3:
                    raise FileFormatError("edge line must be 'e <i> <j>'", path, lineno)
                try:
                    i, j = int(tokens[1]), int(tokens[2])
                except ValueError:
                    raise FileFormatError("edge endpoints must be integers", path, lineno)
                if i == j:
                    raise FileFormatError(f"self-loop on node {i}", path, lineno)
                if not (1 <= i <= n and 1 <= j <= n):
                    raise FileFormatError(f"node outside 1..{n}", path, lineno)
                edge = (min(i, j), max(i, j))
                if edge in edges:
                    raise FileFormatError(f"duplicate edge {edge}", path, lineno)
                edges.add(edge)
                continue
            raise FileFormatError(f"unknown line tag {tag!r}", path, lineno)

    if n is None:
        raise FileFormatError("missing 'p <n> <m>' header", path)
    if declared_edges is not None and declared_edges != len(edges):
        raise FileFormatError(
            f"header declares {declared_edges} edges, file has {len(edges)}", path
        )
    return Graph(n=n, edges=frozenset(edges)), planted, seed


def emit_graph(g: Graph, path: str, comments: Sequence[str] = ()) -> None:
    lines = [f"c {comment}" for comment in comments]
    lines.append(f"p {g.n} {len(g.edges)}")
    lines.extend(f"e {i} {j}" for i, j in sorted(g.edges))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Game / mixture / joint documents (JSON with rational strings)
# ---------------------------------------------------------------------------


def _load_document(path: str, kind: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"invalid JSON: {exc}", path) from exc
    if not isinstance(doc, dict) or doc.get("kind") != kind:
        raise FileFormatError(f"expected a {kind!r} document", path)
    return doc


def _dump_document(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _matrix_from_doc(rows, path: str, name: str) -> tuple[tuple[Fraction, ...], ...]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise FileFormatError(f"{name} must be an array of arrays", path)
    width = len(rows[0]) if rows else 0
    if any(len(r) != width for r in rows):
        raise FileFormatError(f"{name} rows have unequal lengths", path)
    return tuple(tuple(rational_from_value(v) for v in row) for row in rows)


def parse_game(path: str) -> Game:
    doc = _load_document(path, "game")
    R = _matrix_from_doc(doc.get("R"), path, "R")
    C = _matrix_from_doc(doc.get("C"), path, "C")
    m = doc.get("m", len(R))
    try:
        return Game(
            m=m, R=R, C=C,
            row_labels=tuple(doc.get("row_labels", ())),
            col_labels=tuple(doc.get("col_labels", ())),
        )
    except (ShapeError, ParameterError) as exc:
        raise FileFormatError(str(exc), path) from exc


def emit_game(game: Game, path: str) -> None:
    _dump_document(
        {
            "kind": "game",
            "m": game.m,
            "row_labels": list(game.row_labels),
            "col_labels": list(game.col_labels),
            "R": [[rational_to_text(v) for v in row] for row in game.R],
            "C": [[rational_to_text(v) for v in row] for row in game.C],
        },
        path,
    )


def parse_mixture(path: str) -> SparseMixture:
    doc = _load_document(path, "mixture")
    try:
        weights = tuple(rational_from_value(v) for v in doc["weights"])
        rows = tuple(MixedStrategy(tuple(rational_from_value(v) for v in row))
                     for row in doc["rows"])
        cols = tuple(MixedStrategy(tuple(rational_from_value(v) for v in col))
                     for col in doc["cols"])
        mixture = SparseMixture(weights, rows, cols)
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"malformed mixture document: {exc}", path) from exc
    except (ShapeError, ParameterError) as exc:
        raise FileFormatError(str(exc), path) from exc
    if "uniform_flag" in doc and bool(doc["uniform_flag"]) != mixture.uniform:
        raise FileFormatError("uniform_flag disagrees with the stored weights", path)
    return mixture


def emit_mixture(mix: SparseMixture, path: str) -> None:
    _dump_document(
        {
            "kind": "mixture",
            "m": mix.m,
            "T": mix.T,
            "weights": [rational_to_text(w) for w in mix.weights],
            "rows": [[rational_to_text(p) for p in s.probs] for s in mix.rows],
            "cols": [[rational_to_text(p) for p in s.probs] for s in mix.cols],
            "uniform_flag": mix.uniform,
        },
        path,
    )


def parse_joint(path: str) -> JointDistribution:
    doc = _load_document(path, "joint")
    probs = _matrix_from_doc(doc.get("probs"), path, "probs")
    try:
        return JointDistribution(probs)
    except (ShapeError, ParameterError) as exc:
        raise FileFormatError(str(exc), path) from exc


def emit_joint(joint: JointDistribution, path: str) -> None:
    _dump_document(
        {
            "kind": "joint",
            "m": joint.m,
            "probs": [[rational_to_text(v) for v in row] for row in joint.probs],
        },
        path,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _scalar_to_text(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return rational_to_text(value)
    if isinstance(value, frozenset):
        return " ".join(str(v) for v in sorted(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _scalar_to_json(value):
    if isinstance(value, Fraction):
        return rational_to_text(value)
    if isinstance(value, frozenset):
        return sorted(value)
    return value


def _report_fields(report, arithmetic: str, seed: Optional[int]):
    """(kind, flat fields, per-record fields) of any supported report object."""
    base = {"arithmetic": arithmetic, "seed": seed}
    if isinstance(report, GapReport):
        fields = dict(
            base,
            cce_gap=report.cce_gap,
            ce_gap=report.ce_gap,
            best_row_deviation=report.best_row_deviation,
            best_col_deviation=report.best_col_deviation,
            utility_x=report.utility_x,
            utility_y=report.utility_y,
            welfare=report.welfare,
            egalitarian=report.egalitarian,
        )
        return "gap-report", fields, None
    if isinstance(report, ReductionReport):
        fields = dict(
            base,
            n=report.n,
            sparsity=report.T,
            clique=report.clique,
            clique_size=report.clique_size,
        )
        records = [
            {
                "k": r.k,
                "gamma": r.gamma,
                "eps": r.eps,
                "eps_hat": r.eps_hat,
                "oracle_ok": r.oracle_ok,
                "gap": r.gap,
                "welfare": r.welfare,
                "t_star": r.t_star,
                "alpha_star": r.alpha_star,
                "ell": r.ell,
                "candidate_set": r.candidate_set,
                "is_clique": r.is_clique,
                "degenerate": r.degenerate,
            }
            for r in report.records
        ]
        return "reduction-report", fields, records
    if isinstance(report, LpSolution):
        fields = dict(
            base,
            status=report.status,
            objective_value=report.objective_value,
        )
        return "lp-solution", fields, None
    if isinstance(report, DynamicsHistory):
        reg_x, reg_y = external_regret(report)
        rounds = report.rounds
        if report.mode == "exact":
            empirical_gap = max(reg_x, reg_y) / rounds
        else:
            empirical_gap = max(reg_x, reg_y) / float(rounds)
        fields = dict(
            base,
            mode=report.mode,
            eta=report.eta,
            rounds=rounds,
            regret_x=reg_x,
            regret_y=reg_y,
            empirical_gap=empirical_gap,
        )
        return "dynamics-summary", fields, None
    raise ParameterError(f"cannot report a {type(report).__name__}")


def emit_report(report, format: str = "text", *, arithmetic: str = "exact",
                seed: Optional[int] = None) -> str:
    """Render a report as stable text lines or a sorted-key JSON tree."""
    kind, fields, records = _report_fields(report, arithmetic, seed)
    if format == "structured":
        doc = {"kind": kind}
        doc.update({k: _scalar_to_json(v) for k, v in fields.items()})
        if records is not None:
            doc["records"] = [
                {k: _scalar_to_json(v) for k, v in record.items()} for record in records
            ]
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if format != "text":
        raise ParameterError("format must be 'text' or 'structured'")
    lines = [f"kind = {kind}"]
    lines.extend(f"{key} = {_scalar_to_text(value)}" for key, value in fields.items())
    if records is not None:
        for record in records:
            parts = " ".join(f"{k}={_scalar_to_text(v).replace(' ', ',')}"
                             for k, v in record.items())
            lines.append(f"record {parts}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def _parse_clique_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise _UsageError(f"bad clique list {text!r}") from exc


def _cmd_verify(args) -> int:
    game = parse_game(args.game)
    mixture = parse_mixture(args.mixture)
    report = cce_gap(game, mixture)
    print(emit_report(report, args.format, arithmetic="exact", seed=None), end="")
    if args.max_gap is not None and report.cce_gap > rational_from_value(args.max_gap):
        print(f"validation failed: cce_gap {report.cce_gap} exceeds {args.max_gap}",
              file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _cmd_construct(args) -> int:
    graph = parse_graph(args.graph)
    if args.gadget == "lowprec":
        spike = args.spike if args.spike is not None else 5 * args.sparsity
        ambient = args.ambient if args.ambient is not None else 8 * graph.n
        params = LowPrecParams(M=spike, N=ambient, n=graph.n,
                               seed=args.seed, k=max(1, args.k or 1))
        game = build_lowprec_game(graph, params)
    else:
        if args.k is None:
            raise _UsageError("--k is required for this gadget")
        gamma = rational_from_value(args.gamma) if args.gamma is not None else None
        params = GzParams(k=args.k, gamma=gamma, T=args.sparsity)
        if not gamma_bound_ok(args.k, params.gamma):
            print(f"warning: gamma {params.gamma} violates the schedule bound "
                  f"1/(40^2 k^6 (k+1)^2) for k={args.k}", file=sys.stderr)
        if args.gadget == "gz":
            game = build_gz_game(graph, params)
        elif args.gadget == "augmented":
            game = build_augmented_game(graph, params)
        else:
            game = build_basicemb_game(graph, params, rational_from_value(args.eps))
    emit_game(game, args.output)
    return EXIT_OK


def _cmd_clique_cce(args) -> int:
    graph = parse_graph(args.graph)
    clique = _parse_clique_arg(args.clique)
    size = args.game_size if args.game_size is not None else 2 * graph.n
    mixture = clique_cce(clique, args.sparsity, size)
    emit_mixture(mixture, args.output)
    return EXIT_OK


def _cmd_reduce(args) -> int:
    graph, planted, _ = parse_planted(args.graph)
    clique: Optional[tuple[int, ...]] = None
    if args.clique is not None:
        clique = _parse_clique_arg(args.clique)
    elif planted is not None:
        clique = tuple(sorted(planted))

    if args.oracle in ("certificate", "perturb") and clique is None:
        raise _UsageError(f"--oracle {args.oracle} needs --clique or a planted graph file")
    if args.oracle == "certificate":
        oracle = PlantedCertificateOracle(clique)
    elif args.oracle == "perturb":
        oracle = PerturbationOracle(clique, seed=args.seed)
    elif args.oracle == "bruteforce":
        oracle = BruteForceOracle(resolution=args.resolution)
    else:
        if args.mixture is None:
            raise _UsageError("--oracle file needs --mixture")
        oracle = FileOracle(args.mixture)

    report = run_reduction(graph, args.sparsity, oracle, parallel=args.parallel)
    print(emit_report(report, args.format, arithmetic="exact", seed=args.seed), end="")
    if not any(r.oracle_ok for r in report.records):
        return EXIT_NOT_FOUND
    return EXIT_OK


def _cmd_lp(args) -> int:
    game = parse_game(args.game)
    solution = lp_optimal_cce(game, objective=args.objective, mode=args.mode)
    print(emit_report(solution, args.format,
                      arithmetic=args.mode or "exact", seed=None), end="")
    if solution.status != "optimal":
        return EXIT_VALIDATION
    if args.output is not None:
        emit_joint(solution.joint, args.output)
    return EXIT_OK


def _cmd_dynamics(args) -> int:
    game = parse_game(args.game)
    mixture, history = mwu_run(game, args.rounds, eta=args.eta, mode=args.mode)
    print(emit_report(history, args.format, arithmetic=args.mode, seed=None), end="")
    if args.output is not None:
        emit_mixture(mixture, args.output)
    return EXIT_OK


def _cmd_plant(args) -> int:
    instance = gen_planted_graph(args.nodes, args.clique_size, args.seed)
    comments = [
        f"seed {args.seed}",
        "planted " + " ".join(str(v) for v in sorted(instance.planted)),
    ]
    emit_graph(instance.graph, args.output, comments=comments)
    return EXIT_OK


def _cmd_dense_extract(args) -> int:
    game = parse_game(args.game)
    mixture = parse_mixture(args.mixture)
    graph = parse_graph(args.graph)
    pair = extract_dense_pair(game, mixture, args.set_size, args.spike)
    if pair is None:
        print("dense pair not found (mixture welfare below the extraction threshold)",
              file=sys.stderr)
        return EXIT_NOT_FOUND
    s, t = pair
    clique = clique_from_dense_pair(graph, s, t, args.target or args.set_size)
    density = dens(graph, s, t)
    doc = {
        "kind": "dense-extract",
        "set_x": sorted(s),
        "set_y": sorted(t),
        "density": rational_to_text(density),
        "clique": sorted(clique),
        "clique_size": len(clique),
    }
    if args.format == "structured":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for key, value in doc.items():
            if isinstance(value, list):
                value = " ".join(str(v) for v in value)
            print(f"{key} = {value}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="sparsecce",
                     description="Sparse coarse-correlated-equilibrium toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="evaluate a mixture's gaps on a game")
    p.add_argument("game")
    p.add_argument("mixture")
    p.add_argument("--max-gap", default=None,
                   help="fail (exit 2) when the coarse gap exceeds this rational")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("construct", help="build a gadget game from a graph")
    p.add_argument("graph")
    p.add_argument("--gadget", choices=("gz", "augmented", "basicemb", "lowprec"),
                   required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=int, default=None, help="target clique size")
    p.add_argument("--gamma", default=None, help="diagonal bonus override (rational)")
    p.add_argument("--sparsity", type=int, default=1)
    p.add_argument("--eps", default="1/4", help="opt-out payoff for basicemb")
    p.add_argument("--spike", type=int, default=None, help="lowprec spike magnitude")
    p.add_argument("--ambient", type=int, default=None, help="lowprec action count")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("clique-cce", help="emit the block-uniform clique certificate")
    p.add_argument("graph")
    p.add_argument("--clique", required=True, help="comma-separated node list")
    p.add_argument("--sparsity", type=int, required=True)
    p.add_argument("--game-size", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_clique_cce)

    p = sub.add_parser("reduce", help="run the clique-extraction pipeline")
    p.add_argument("graph")
    p.add_argument("--sparsity", type=int, required=True)
    p.add_argument("--oracle", choices=("certificate", "perturb", "bruteforce", "file"),
                   required=True)
    p.add_argument("--clique", default=None, help="known clique for certificate oracles")
    p.add_argument("--mixture", default=None,
                   help="mixture path for the file oracle ({k} placeholder allowed)")
    p.add_argument("--resolution", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("lp", help="optimize a linear objective over the CCE polytope")
    p.add_argument("game")
    p.add_argument("--objective", default="welfare",
                   choices=("welfare", "egalitarian-linearized", "player-x", "player-y"))
    p.add_argument("--mode", choices=("exact", "float"), default=None)
    p.add_argument("-o", "--output", default=None, help="write the optimizing joint here")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=_cmd_lp)

    p = sub.add_parser("dynamics", help="run simultaneous multiplicative weights")
    p.add_argument("game")
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--mode", choices=("float", "exact"), default="float")
    p.add_argument("-o", "--output", default=None, help="write the empirical mixture here")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=_cmd_dynamics)

    p = sub.add_parser("plant", help="sample a planted-clique graph")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--clique-size", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_plant)

    p = sub.add_parser("dense-extract",
                       help="mine a dense pair and clique from a mixture")
    p.add_argument("game")
    p.add_argument("mixture")
    p.add_argument("--graph", required=True)
    p.add_argument("--set-size", type=int, required=True)
    p.add_argument("--spike", type=int, required=True)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=_cmd_dense_extract)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
