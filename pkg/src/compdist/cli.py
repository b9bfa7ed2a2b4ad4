"""Command-line entry point: ``compdist <subcommand> ...``.

Exit codes: 0 success, 1 error, 2 an exact solver refused (work budget),
64 usage error. Logs go to stderr; artifacts go to files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .districting import Districting, validate
from .ei import estimate_swing_csv
from .errors import BudgetExceededError, CompdistError
from .exact import (build_conflict_graph, max_brute_cells, solve_brute_force, solve_line,
                    solve_mwis, solve_tree, solve_xconvex_grid)
from .graph import as_fraction
from .hardness import SubsetSumInstance, extend_to_d_districts, generate
from .io import dumps, emit_report, load_assignment, load_graph, save_graph
from .metrics import ScoreWeights, Swing, VoteBand, parse_model, plan_summary
from .optimizer import ChainConfig, run_chains

log = logging.getLogger("compdist")

EXIT_OK, EXIT_ERROR, EXIT_REFUSED, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _model_arg(text: str):
    try:
        return parse_model(text)
    except (CompdistError, ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _resolve_model(args, default="vbc"):
    """--model, or the --vbc DELTA / --swing shorthands; they may not disagree."""
    chosen = []
    if args.model is not None:
        chosen.append(args.model)
    if getattr(args, "vbc", None) is not None:
        chosen.append(VoteBand(args.vbc))
    if getattr(args, "swing", False):
        chosen.append(Swing())
    if len(set(map(str, chosen))) > 1:
        raise UsageError("conflicting model flags: " + ", ".join(map(str, chosen)))
    return chosen[0] if chosen else parse_model(default)


def _add_model_flags(p):
    p.add_argument("--model", type=_model_arg, default=None,
                   help="'swing', 'vbc' (delta 1/20) or 'vbc:DELTA' (default vbc)")
    p.add_argument("--vbc", type=_rational, metavar="DELTA", help="shorthand for --model vbc:DELTA")
    p.add_argument("--swing", action="store_true", help="shorthand for --model swing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compdist", description="Competitive districting toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="weighted single-flip hill climbing with restarts")
    p.add_argument("--graph", required=True)
    p.add_argument("--districts", type=int, required=True)
    _add_model_flags(p)
    p.add_argument("--steps", type=int, default=36_000)
    p.add_argument("--restart", type=int, default=3_000)
    p.add_argument("--w-iso", type=float, default=3.0)
    p.add_argument("--w-comp", type=float, default=1e5,
                   help="weight on the active competitiveness score")
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 20))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True, help="output path prefix")

    p = sub.add_parser("solve-exact", help="exact solvers for small or special graphs")
    p.add_argument("--graph", required=True)
    p.add_argument("--districts", type=int, required=True)
    _add_model_flags(p)
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 20))
    p.add_argument("--solver", choices=["auto", "brute", "line", "tree", "xconvex", "mwis"],
                   default="auto")
    p.add_argument("--depth-bound", type=int, default=None, help="district depth for --solver tree")
    p.add_argument("--out", default=None, help="output path prefix (result JSON, and report when a plan is found)")

    p = sub.add_parser("gen-hard", help="emit a reduction instance with an audit sidecar")
    p.add_argument("--subset-sum", required=True, help='comma-separated integers, e.g. "1,-1,-6,2,4"')
    p.add_argument("--delta", type=_rational, default=Fraction(1, 10))
    p.add_argument("--epsilon", type=_rational, default=Fraction(3, 20))
    p.add_argument("--model", choices=["vbc", "swing"], default="vbc")
    p.add_argument("--extend-to", type=int, default=None, metavar="D",
                   help="add singleton cells to reach D districts")
    p.add_argument("--competitive", type=int, default=None, metavar="K",
                   help="with --extend-to: competitive districts the construction targets (default D)")
    p.add_argument("--out", required=True, help="graph header path, e.g. out/worked.json")

    p = sub.add_parser("score", help="validity and metrics of a given plan")
    p.add_argument("--graph", required=True)
    p.add_argument("--assignment", required=True)
    _add_model_flags(p)
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 20))
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("estimate-swing", help="per-precinct swing estimates from two elections")
    p.add_argument("--input", required=True,
                   help="CSV with columns id,a_1,b_1,other_1,a_2,b_2,other_2")
    p.add_argument("--out", required=True)
    p.add_argument("--diag-weight", type=float, default=10.0)

    p = sub.add_parser("report", help="assignment, metrics and share-bar files for a plan")
    p.add_argument("--graph", required=True)
    p.add_argument("--assignment", required=True)
    _add_model_flags(p)
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 20))
    p.add_argument("--out", required=True, help="output path prefix")
    return parser


def _load_plan(args, graph):
    assignment = load_assignment(args.assignment, graph.ids)
    return Districting.from_assignment(graph, assignment, None, args.epsilon)


def cmd_optimize(args) -> int:
    graph = load_graph(args.graph)
    model = _resolve_model(args)
    delta = model.delta if isinstance(model, VoteBand) else VoteBand().delta
    if isinstance(model, Swing):
        weights = ScoreWeights(args.w_iso, 0.0, args.w_comp, delta)
    else:
        weights = ScoreWeights(args.w_iso, args.w_comp, 0.0, delta)
    out = Path(args.out)
    restart = max(1, min(args.restart, args.steps)) if args.steps else max(1, args.restart)
    config = ChainConfig(districts=args.districts, total_steps=args.steps, restart_every=restart,
                         weights=weights, model=model, seed=args.seed, epsilon=args.epsilon,
                         trace_path=str(out.with_name(out.name + ".trace.jsonl")))
    log.info("optimize: %d cells, d=%d, model=%s, steps=%d, chains=%d", graph.n, args.districts,
             model, args.steps, args.chains)
    rec = run_chains(graph, config, chains=args.chains, workers=args.workers)
    summary = plan_summary(rec.plan, model)
    extra = {"best_step": rec.step, "chain": rec.chain, "seed": args.seed, "chains": args.chains,
             "events": rec.events,
             "interval_bests": [{"interval": ib.interval, "step": ib.step,
                                 "competitive": ib.competitive, "total_iso": ib.total_iso}
                                for ib in rec.interval_bests]}
    emit_report(summary, rec.plan, out, graph.ids, extra)
    log.info("best: %d/%d competitive, total iso %.6g at step %d", rec.competitive,
             args.districts, rec.total_iso, rec.step)
    return EXIT_OK


def _auto_solver(graph) -> str:
    if graph.is_path():
        return "line"
    if graph.n <= max_brute_cells():
        return "brute"
    if graph.is_tree():
        return "tree"
    if graph.grid_shape is not None:
        return "xconvex"
    return "brute"


def cmd_solve(args) -> int:
    graph = load_graph(args.graph)
    model = _resolve_model(args, default="swing")
    solver = args.solver if args.solver != "auto" else _auto_solver(graph)
    log.info("solve-exact: solver=%s, %d cells, d=%d, model=%s", solver, graph.n, args.districts, model)
    if solver == "brute":
        res = solve_brute_force(graph, args.districts, args.epsilon, model)
    elif solver == "line":
        res = solve_line(graph, args.districts, args.epsilon, model)
    elif solver == "tree":
        depth = graph.n if args.depth_bound is None else args.depth_bound
        res = solve_tree(graph, args.districts, args.epsilon, depth, model)
    elif solver == "xconvex":
        res = solve_xconvex_grid(graph, args.districts, args.epsilon, model)
    else:
        res = solve_mwis(build_conflict_graph(graph, args.districts, model), args.epsilon)
    payload = res.to_dict()
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.with_name(out.name + ".result.json").write_text(dumps(payload), encoding="utf-8")
        if res.witness is not None:
            emit_report(plan_summary(res.witness, model), res.witness, out, graph.ids)
    else:
        sys.stdout.write(dumps(payload))
    log.info("best count: %s", res.best_count)
    return EXIT_OK


def cmd_gen_hard(args) -> int:
    inst = generate(SubsetSumInstance.parse(args.subset_sum), args.model, args.epsilon, args.delta)
    if args.extend_to is not None:
        k = args.extend_to if args.competitive is None else args.competitive
        inst = extend_to_d_districts(inst, k, args.extend_to)
    header = save_graph(inst.graph, args.out)
    audit = inst.audit()
    audit["trivial_plan"] = list(inst.trivial_plan().assignment)
    stem = header.name[:-5] if header.name.endswith(".json") else header.name
    sidecar = header.with_name(stem + ".audit.json")
    sidecar.write_text(dumps(audit), encoding="utf-8")
    log.info("gen-hard: %s instance, %d cells, grid %s, bins %s", inst.kind, inst.graph.n,
             inst.graph.grid_shape, list(inst.fpsp.pairs))
    return EXIT_OK


def cmd_score(args) -> int:
    graph = load_graph(args.graph)
    model = _resolve_model(args)
    plan = _load_plan(args, graph)
    violations = validate(plan, graph)
    payload = plan_summary(plan, model).to_dict()
    payload["valid"] = not violations
    payload["violations"] = [{"kind": v.kind, "district": v.district, "message": v.message}
                             for v in violations]
    text = dumps(payload)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_estimate_swing(args) -> int:
    rows = estimate_swing_csv(args.input, args.out, args.diag_weight)
    log.info("estimate-swing: %d precincts", rows)
    return EXIT_OK


def cmd_report(args) -> int:
    graph = load_graph(args.graph)
    model = _resolve_model(args)
    plan = _load_plan(args, graph)
    violations = validate(plan, graph)
    emit_report(plan_summary(plan, model), plan, args.out, graph.ids,
                {"valid": not violations})
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "solve-exact": cmd_solve,
    "gen-hard": cmd_gen_hard,
    "score": cmd_score,
    "estimate-swing": cmd_estimate_swing,
    "report": cmd_report,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"compdist: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as exc:
        print(f"compdist: refused: {exc} (budget {exc.budget_name}={exc.limit})", file=sys.stderr)
        return EXIT_REFUSED
    except (CompdistError, OSError, ValueError) as exc:
        print(f"compdist: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
