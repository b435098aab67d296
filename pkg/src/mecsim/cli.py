"""Command-line front end.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures (bad input
files, refused instances, diverged training).
"""

import argparse
import sys
from pathlib import Path

from .clustering import export_state, place_nodes, run_clustering
from .config import SimConfig, load_config, with_overrides
from .harness import (EXPERIMENTS, BenchSettings, CollectParams, ModelHyper,
                      collect_samples, micro_oracle_config, quick_settings,
                      run_bench, train_model, train_regression_model)
from .network import TrainingDiverged
from .oracle import OracleRefusal, brute_force_oracle
from .radio import EvalContext, evaluate_solution, export_report
from .scenario import export_scenario, generate_scenario, import_scenario
from .scheduling import (HEAD_CLASSIFICATION, HEAD_REGRESSION, OffloadModel,
                         SampleDb, decide_all)
from .swarm import PsoParams, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; this tool reserves 2 for
    # runtime failures, so usage problems exit 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_base_config(args) -> SimConfig:
    config = load_config(args.config) if args.config else SimConfig()
    if getattr(args, "n", None) is not None:
        config = with_overrides(config, n_ue=args.n)
    return config


def _resolve_scenario(args):
    """Scenario from --scenario if given, else generated and placed."""
    if getattr(args, "scenario", None):
        return import_scenario(args.scenario)
    config = _load_base_config(args)
    return place_nodes(generate_scenario(config, args.seed))


def _add_scenario_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="read a scenario file instead of generating")
    p.add_argument("--config", help="simulation config file")
    p.add_argument("--seed", type=int, default=0, help="generation seed")
    p.add_argument("--n", type=int, help="override the UE count")


def _print_report(report) -> None:
    print(f"energy={report.total_energy:.6g} J admitted={report.admitted} "
          f"feasible={report.feasible} violations={len(report.violations)}")


def _cmd_gen(args) -> int:
    config = _load_base_config(args)
    scenario = generate_scenario(config, args.seed)
    if args.place:
        scenario = place_nodes(scenario)
    export_scenario(scenario, args.out)
    print(f"wrote scenario: {config.n_ue} UEs, {config.n_nodes} nodes -> {args.out}")
    return EXIT_OK


def _cmd_place(args) -> int:
    scenario = _resolve_scenario(args) if args.scenario else generate_scenario(
        _load_base_config(args), args.seed)
    state = run_clustering(scenario)
    if args.state_out:
        export_state(state, args.state_out)
    from .clustering import apply_placement, assign_centers_to_nodes
    placed = apply_placement(scenario, assign_centers_to_nodes(state, scenario))
    export_scenario(placed, args.out)
    print(f"placed nodes after {state.iterations} iterations "
          f"(converged={state.converged}) -> {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    scenario = _resolve_scenario(args)
    params = PsoParams(swarm_size=args.particles, max_iter=args.iterations,
                       local_prior="auto")
    result = solve(scenario, params, seed=args.seed)
    _print_report(result.report)
    if args.out:
        export_report(result.report, result.solution, args.out)
    return EXIT_OK


def _cmd_collect(args) -> int:
    config = _load_base_config(args)
    params = CollectParams(n_scenarios=args.scenarios, ue_min=args.ue_min,
                           ue_max=args.ue_max)
    db = collect_samples(config, params, seed=args.seed)
    db.save(args.out)
    print(f"collected {len(db)} samples from {args.scenarios} scenarios -> {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    db = SampleDb.load(args.samples)
    hyper = ModelHyper(hidden_layers=args.depth, hidden_width=args.width,
                       learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    trainer = (train_model if args.head == HEAD_CLASSIFICATION
               else train_regression_model)
    model, report = trainer(db, db.n_features, hyper)
    model.save(args.out)
    if args.loss_out:
        report.to_csv(args.loss_out)
    print(f"trained on {len(db)} samples, final test loss "
          f"{report.final_test_loss:.6g} -> {args.out}")
    return EXIT_OK


def _cmd_decide(args) -> int:
    model = OffloadModel.load(args.model)
    scenario = _resolve_scenario(args)
    result = decide_all(scenario, model, seed=args.seed)
    _print_report(result.report)
    if args.out:
        export_report(result.report, result.solution, args.out)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    if args.scenario:
        scenario = import_scenario(args.scenario)
    else:
        config = micro_oracle_config(load_config(args.config) if args.config
                                     else SimConfig())
        if args.n is not None:
            config = with_overrides(config, n_ue=args.n)
        scenario = place_nodes(generate_scenario(config, args.seed))
    result = brute_force_oracle(scenario)
    if not result.feasible:
        print(f"no feasible assignment among {result.assignments_checked}")
        return EXIT_RUNTIME
    report = evaluate_solution(scenario, result.solution, EvalContext(scenario))
    print(f"oracle energy={result.energy:.6g} J admitted={report.admitted} "
          f"checked={result.assignments_checked}")
    if args.out:
        export_report(report, result.solution, args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _load_base_config(args)
    settings = quick_settings(args.seed) if args.quick else BenchSettings(seed=args.seed)
    results = run_bench(config, args.out, experiments=args.experiment or None,
                        settings=settings)
    print(f"wrote {results}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mecsim",
                     description="Edge-offloading simulator and policies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate a scenario file")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--place", action="store_true",
                   help="also run clustering-based node placement")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("place", help="cluster UEs and position the nodes")
    _add_scenario_source(p)
    p.add_argument("--state-out", help="write the clustering state")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_place)

    p = sub.add_parser("solve", help="swarm-search an assignment")
    _add_scenario_source(p)
    p.add_argument("--particles", type=int, default=10)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("collect", help="build a training sample store")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenarios", type=int, default=200)
    p.add_argument("--ue-min", type=int, default=10)
    p.add_argument("--ue-max", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_collect)

    p = sub.add_parser("train", help="train the decision network")
    p.add_argument("--samples", required=True)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--width", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--head", choices=(HEAD_CLASSIFICATION, HEAD_REGRESSION),
                   default=HEAD_CLASSIFICATION,
                   help="output coding: per-choice probabilities or the "
                        "normalized (label, frequency) pair")
    p.add_argument("--loss-out")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("decide", help="run the trained pipeline on a scenario")
    _add_scenario_source(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_decide)

    p = sub.add_parser("oracle", help="exhaustive search on a small instance")
    p.add_argument("--scenario")
    p.add_argument("--config", help="defaults to a reduced two-node layout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("bench", help="run the experiment suite")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experiment", action="append", choices=EXPERIMENTS,
                   help="repeatable; defaults to all")
    p.add_argument("--quick", action="store_true",
                   help="reduced counts for a fast smoke run")
    p.add_argument("--out", default="bench_out")
    p.set_defaults(fn=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (OracleRefusal, TrainingDiverged, ValueError, OSError) as exc:
        print(f"mecsim: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
