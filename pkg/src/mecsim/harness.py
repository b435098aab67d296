"""End-to-end pipelines, training-sample collection, and experiment runs.

All experiment output lands in one long-format CSV with the columns
(experiment, policy, sweep, seed, metric, value) plus a plain-text manifest
recording the run parameters.  Timings cover only the solve calls; scenario
generation, node placement, and the shared membership matrix are prepared
outside the timed region because every policy consumes them equally.
"""

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import greedy_offload, local_only, random_offload
from .clustering import place_nodes
from .config import FADING_CONSTANT, SimConfig, with_overrides
from .network import (IDENTITY, LOSS_CCE, RELU, SOFTMAX, TrainParams,
                      TrainReport, init_network, train)
from .radio import (EvalContext, EvalReport, MembershipMatrix, Solution,
                    evaluate_solution, interference_membership_matrix)
from .scenario import Scenario, generate_scenario
from .scheduling import (DEFAULT_F_FLOOR, DEFAULT_F_SCALE, HEAD_CLASSIFICATION,
                         HEAD_REGRESSION, OffloadModel, SampleDb, build_dataset,
                         build_label_dataset, decide_all)
from .swarm import PsoParams, solve

_STREAM_COLLECT = 6

POLICY_PSO = "pso"
POLICY_DNN = "dnn"
POLICY_GREEDY = "greedy"
POLICY_RANDOM = "random"
POLICY_LOCAL = "local"
ALL_POLICIES = (POLICY_PSO, POLICY_DNN, POLICY_GREEDY, POLICY_RANDOM, POLICY_LOCAL)

EXPERIMENTS = (
    "oracle_check",
    "arch_sweep",
    "loss_curves",
    "error_hist",
    "sample_source_compare",
    "energy_vs_n",
    "admitted_vs_n",
    "admitted_vs_treq",
    "runtime_compare",
)

# Scenario seeds used for training are offset far away from the small
# integers used for evaluation, keeping held-out scenarios genuinely unseen.
_TRAIN_SEED_BASE = 1_000_000


def prepared_scenario(config: SimConfig, seed: int):
    """Generate, place nodes, and precompute shared state for one slot."""
    scenario = place_nodes(generate_scenario(config, seed))
    ctx = EvalContext(scenario)
    u = interference_membership_matrix(scenario, context=ctx)
    return scenario, ctx, u


@dataclass(frozen=True)
class CollectParams:
    n_scenarios: int = 200
    ue_min: int = 10
    ue_max: int = 50
    target_margin: float = 1.02
    source: str = POLICY_PSO
    max_samples: int | None = None
    # A sharpened roulette keeps the solver's label choice for a given
    # membership row close to deterministic, which a learned map needs.
    pso: PsoParams = field(default_factory=lambda: PsoParams(roulette_power=6.0))


def _source_solution(source: str, scenario: Scenario, ctx: EvalContext,
                     u: MembershipMatrix, pso: PsoParams) -> Solution:
    if source == POLICY_PSO:
        return solve(scenario, pso, membership=u, context=ctx).solution
    if source == POLICY_GREEDY:
        return greedy_offload(scenario, context=ctx)
    if source == POLICY_RANDOM:
        return random_offload(scenario, context=ctx)
    raise ValueError(f"unknown sample source: {source}")


def collect_samples(config: SimConfig, params: CollectParams,
                    seed: int = 0) -> SampleDb:
    """Solve randomized scenarios and store one sample per UE.

    Offload frequency targets are replaced by one shared constant: the
    largest committed requirement across the collection times the margin.
    The solver's raw frequencies are interchangeable within feasibility, so
    a single well-covering target keeps either output head consistent.
    """
    db = SampleDb(config.n_nodes)
    rng = np.random.default_rng([seed, _STREAM_COLLECT])
    offload_rows: list[int] = []
    for s in range(params.n_scenarios):
        if params.max_samples is not None and len(db) >= params.max_samples:
            break
        n = int(rng.integers(params.ue_min, params.ue_max + 1))
        cfg = with_overrides(config, n_ue=n)
        scen_seed = _TRAIN_SEED_BASE + seed * 10_000 + s
        scenario, ctx, u = prepared_scenario(cfg, scen_seed)
        solution = _source_solution(params.source, scenario, ctx, u, params.pso)
        for i in range(n):
            if params.max_samples is not None and len(db) >= params.max_samples:
                break
            if solution.labels[i] > 0:
                offload_rows.append(len(db))
            db.add(u.row(i), solution.labels[i], solution.frequencies[i],
                   seed=scen_seed, ue=i)
    if offload_rows:
        target = params.target_margin * max(
            db.frequencies[r] for r in offload_rows)
        for r in offload_rows:
            db._frequencies[r] = float(target)
    return db


@dataclass(frozen=True)
class ModelHyper:
    hidden_layers: int = 6
    hidden_width: int = 30
    learning_rate: float = 0.01
    epochs: int = 500
    batch_size: int = 32
    seed: int = 0


def train_regression_model(db: SampleDb, n_nodes: int,
                           hyper: ModelHyper | None = None) -> tuple[OffloadModel, TrainReport]:
    """Paired (label, frequency) regression net under MSE."""
    hyper = hyper if hyper is not None else ModelHyper()
    x, t = build_dataset(db, n_nodes)
    sizes = [n_nodes] + [hyper.hidden_width] * hyper.hidden_layers + [2]
    activations = [RELU] * hyper.hidden_layers + [IDENTITY]
    net = init_network(sizes, activations, hyper.seed)
    report = train(net, x, t, TrainParams(
        learning_rate=hyper.learning_rate, epochs=hyper.epochs,
        batch_size=hyper.batch_size, seed=hyper.seed))
    return OffloadModel(net, n_nodes, DEFAULT_F_SCALE), report


def train_model(db: SampleDb, n_nodes: int,
                hyper: ModelHyper | None = None) -> tuple[OffloadModel, TrainReport]:
    """Policy model: softmax over admission choices, cross-entropy loss.

    A scalar label regressed under MSE converges to the conditional mean of
    the admission choice, which rounds to a middle node wherever two nodes
    split the samples; argmax over per-choice probabilities has no such
    collapse.  Admitted frequency requests reuse the shared constant carried
    by the training samples.
    """
    hyper = hyper if hyper is not None else ModelHyper()
    x, t = build_label_dataset(db, n_nodes)
    sizes = [n_nodes] + [hyper.hidden_width] * hyper.hidden_layers + [n_nodes + 1]
    activations = [RELU] * hyper.hidden_layers + [SOFTMAX]
    net = init_network(sizes, activations, hyper.seed)
    report = train(net, x, t, TrainParams(
        learning_rate=hyper.learning_rate, epochs=hyper.epochs,
        batch_size=hyper.batch_size, seed=hyper.seed, loss=LOSS_CCE))
    labels = db.labels
    offloaded = db.frequencies[labels > 0]
    f_target = float(offloaded.max()) if offloaded.size else DEFAULT_F_FLOOR
    return OffloadModel(net, n_nodes, DEFAULT_F_SCALE,
                        head=HEAD_CLASSIFICATION, f_target=f_target), report


def run_policy(policy: str, scenario: Scenario, ctx: EvalContext,
               u: MembershipMatrix, model: OffloadModel | None = None,
               pso: PsoParams | None = None,
               seed: int = 0) -> tuple[Solution, EvalReport]:
    if policy == POLICY_PSO:
        result = solve(scenario, pso or PsoParams(local_prior="auto"),
                       membership=u, context=ctx)
        return result.solution, result.report
    if policy == POLICY_DNN:
        if model is None:
            raise ValueError("dnn policy requires a trained model")
        result = decide_all(scenario, model, membership=u, context=ctx,
                            seed=seed)
        return result.solution, result.report
    if policy == POLICY_GREEDY:
        solution = greedy_offload(scenario, context=ctx)
    elif policy == POLICY_RANDOM:
        solution = random_offload(scenario, context=ctx)
    elif policy == POLICY_LOCAL:
        solution = local_only(scenario)
    else:
        raise ValueError(f"unknown policy: {policy}")
    return solution, evaluate_solution(scenario, solution, ctx)


@dataclass(frozen=True)
class Row:
    experiment: str
    policy: str
    sweep: str
    seed: int
    metric: str
    value: float


def write_rows(rows, path: str | Path) -> None:
    lines = ["experiment,policy,sweep,seed,metric,value"]
    for r in rows:
        lines.append(f"{r.experiment},{r.policy},{r.sweep},{r.seed},"
                     f"{r.metric},{float(r.value)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_rows(path: str | Path) -> list[Row]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "experiment,policy,sweep,seed,metric,value":
        raise ValueError(f"not an experiment results file: {path}")
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        experiment, policy, sweep, seed, metric, value = line.split(",")
        rows.append(Row(experiment, policy, sweep, int(seed), metric, float(value)))
    return rows


@dataclass
class BenchSettings:
    # Experiments run under deterministic channels.  Random per-node fading
    # multiplies whole membership columns, so a single row cannot reveal
    # whether its preferred node is geometrically coverable; every policy
    # shares the same physics, so the comparison stays symmetric.
    fading: str = FADING_CONSTANT
    # The library default weighs co-located interference at full strength,
    # which squeezes shared-node membership entries to ~1e-7 and leaves a
    # learned map nothing to separate them by.  Down-weighting keeps those
    # columns inside the resolvable range without reordering any row.
    interference_weight: float = 1e-6
    seed: int = 0
    eval_seeds: int = 20
    n_sweep: tuple[int, ...] = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
    treq_sweep: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5, 3.0)
    treq_n_ue: int = 100
    runtime_n_ue: int = 100
    runtime_seeds: int = 5
    holdout_scenarios: int = 30
    holdout_n_ue: int = 40
    collect: CollectParams = field(default_factory=lambda: CollectParams(
        n_scenarios=200, ue_min=10, ue_max=100))
    treq_collect: CollectParams = field(default_factory=lambda: CollectParams(n_scenarios=80))
    # Fixed-size small-instance collection for the training-behaviour
    # experiments; deployment models train on the mixed-size family above.
    train_collect: CollectParams = field(default_factory=lambda: CollectParams(
        n_scenarios=200, ue_min=10, ue_max=10, max_samples=2000))
    hyper: ModelHyper = field(default_factory=ModelHyper)
    arch_grid: tuple[tuple[int, int], ...] = ((2, 10), (4, 20), (6, 30), (8, 40))


def quick_settings(seed: int = 0) -> BenchSettings:
    """Reduced counts for smoke runs; trends are not meaningful here."""
    return BenchSettings(
        seed=seed,
        eval_seeds=3,
        n_sweep=(10, 30),
        treq_sweep=(1.0, 2.0),
        treq_n_ue=40,
        runtime_n_ue=40,
        runtime_seeds=2,
        holdout_scenarios=4,
        holdout_n_ue=20,
        collect=CollectParams(n_scenarios=12),
        treq_collect=CollectParams(n_scenarios=8),
        train_collect=CollectParams(n_scenarios=30, ue_min=10, ue_max=10,
                                    max_samples=300),
        hyper=ModelHyper(epochs=60),
        arch_grid=((2, 10), (4, 20)),
    )


FAMILY_POLICY = "policy"
FAMILY_TRAIN = "train"


class Workspace:
    """Caches the collected samples and trained models across experiments."""

    def __init__(self, config: SimConfig, settings: BenchSettings):
        self.config = with_overrides(
            config, fading=settings.fading,
            interference_weight=settings.interference_weight)
        self.settings = settings
        self._dbs: dict[tuple, SampleDb] = {}
        self._models: dict[tuple, tuple[OffloadModel, TrainReport]] = {}

    def db(self, source: str = POLICY_PSO,
           latency_limit: float | None = None,
           family: str = FAMILY_POLICY) -> SampleDb:
        key = (source, latency_limit, family)
        if key not in self._dbs:
            cfg = self.config
            if family == FAMILY_TRAIN:
                collect = self.settings.train_collect
            elif latency_limit is None:
                collect = self.settings.collect
            else:
                cfg = with_overrides(cfg, latency_limit=latency_limit)
                collect = self.settings.treq_collect
            self._dbs[key] = collect_samples(
                cfg, replace(collect, source=source), seed=self.settings.seed)
        return self._dbs[key]

    def model(self, source: str = POLICY_PSO,
              latency_limit: float | None = None,
              hyper: ModelHyper | None = None,
              head: str = HEAD_CLASSIFICATION,
              family: str = FAMILY_POLICY):
        key = (source, latency_limit, hyper, head, family)
        if key not in self._models:
            trainer = (train_model if head == HEAD_CLASSIFICATION
                       else train_regression_model)
            self._models[key] = trainer(
                self.db(source, latency_limit, family), self.config.n_nodes,
                hyper or self.settings.hyper)
        return self._models[key]


def micro_oracle_config(base: SimConfig) -> SimConfig:
    """Two-node instance small enough for the exhaustive oracle."""
    return with_overrides(base, n_uav=1, n_gv=1, n_gs=0, gs_positions=(),
                          fading="constant")


def exp_oracle_check(ws: Workspace) -> list[Row]:
    from .oracle import brute_force_oracle

    rows = []
    base = micro_oracle_config(ws.config)
    pso = PsoParams(local_prior="auto")
    for seed in range(1, 51):
        n = 2 + (seed % 3)  # cycles 3,4,2
        cfg = with_overrides(base, n_ue=n)
        scenario, ctx, u = prepared_scenario(cfg, seed)
        oracle = brute_force_oracle(scenario, context=ctx)
        result = solve(scenario, pso, membership=u, context=ctx)
        rows.append(Row("oracle_check", "oracle", str(n), seed, "energy",
                        oracle.energy))
        rows.append(Row("oracle_check", POLICY_PSO, str(n), seed, "energy",
                        result.report.total_energy))
        within = (result.report.feasible
                  and result.report.total_energy <= 1.05 * oracle.energy)
        rows.append(Row("oracle_check", POLICY_PSO, str(n), seed, "within_5pct",
                        1.0 if within else 0.0))
    return rows


def exp_arch_sweep(ws: Workspace) -> list[Row]:
    rows = []
    for depth, width in ws.settings.arch_grid:
        hyper = replace(ws.settings.hyper, hidden_layers=depth, hidden_width=width)
        _, report = ws.model(hyper=hyper, head=HEAD_REGRESSION,
                             family=FAMILY_TRAIN)
        sweep = f"{depth}x{width}"
        rows.append(Row("arch_sweep", POLICY_DNN, sweep, ws.settings.seed,
                        "final_test_loss", report.final_test_loss))
        rows.append(Row("arch_sweep", POLICY_DNN, sweep, ws.settings.seed,
                        "min_test_loss", report.min_test_loss))
    return rows


def exp_loss_curves(ws: Workspace) -> list[Row]:
    _, report = ws.model(head=HEAD_REGRESSION, family=FAMILY_TRAIN)
    rows = []
    for epoch, (tr, te) in enumerate(zip(report.train_loss, report.test_loss), 1):
        rows.append(Row("loss_curves", POLICY_DNN, str(epoch), ws.settings.seed,
                        "train_loss", tr))
        rows.append(Row("loss_curves", POLICY_DNN, str(epoch), ws.settings.seed,
                        "test_loss", te))
    return rows


def holdout_scenarios(ws: Workspace):
    for seed in range(1, ws.settings.holdout_scenarios + 1):
        cfg = with_overrides(ws.config, n_ue=ws.settings.holdout_n_ue)
        yield seed, prepared_scenario(cfg, 500_000 + seed)


def prediction_errors(ws: Workspace) -> np.ndarray:
    """Raw-output absolute errors on the held-out training split, one row per
    sample, columns (label, frequency), both in normalized units."""
    from .network import forward_trace, split_dataset

    model, _ = ws.model(head=HEAD_REGRESSION, family=FAMILY_TRAIN)
    db = ws.db(family=FAMILY_TRAIN)
    x, t = build_dataset(db, model.n_nodes, model.f_scale)
    _, test_idx = split_dataset(len(db), 0.2, ws.settings.hyper.seed)
    out = forward_trace(model.net, x[test_idx])[1][-1]
    return np.abs(out - t[test_idx])


def exp_error_hist(ws: Workspace) -> list[Row]:
    errors = prediction_errors(ws)
    edges = np.arange(0.0, 0.501, 0.05)
    rows = []
    for column, metric in ((0, "label_abs_error"), (1, "freq_abs_error")):
        counts, _ = np.histogram(errors[:, column], bins=np.append(edges, np.inf))
        for lo, count in zip(edges, counts):
            rows.append(Row("error_hist", POLICY_DNN, f"{lo:.2f}",
                            ws.settings.seed, metric, float(count)))
    return rows


def exp_sample_source_compare(ws: Workspace) -> list[Row]:
    rows = []
    held = list(holdout_scenarios(ws))
    for source in (POLICY_PSO, POLICY_GREEDY, POLICY_RANDOM):
        model, report = ws.model(source=source, family=FAMILY_TRAIN)
        energies = []
        for seed, (scenario, ctx, u) in held:
            result = decide_all(scenario, model, membership=u, context=ctx,
                                seed=seed)
            rows.append(Row("sample_source_compare", source, "energy", seed,
                            "total_energy", result.report.total_energy))
            energies.append(result.report.total_energy)
        rows.append(Row("sample_source_compare", source, "energy", 0,
                        "mean_energy", float(np.mean(energies))))
        rows.append(Row("sample_source_compare", source, "training", 0,
                        "final_test_loss", report.final_test_loss))
    return rows


def sweep_n_rows(ws: Workspace) -> list[Row]:
    model, _ = ws.model()
    pso = PsoParams()
    rows = []
    for n in ws.settings.n_sweep:
        cfg = with_overrides(ws.config, n_ue=n)
        for seed in range(1, ws.settings.eval_seeds + 1):
            scenario, ctx, u = prepared_scenario(cfg, seed)
            for policy in ALL_POLICIES:
                solution, report = run_policy(policy, scenario, ctx, u,
                                              model=model, pso=pso, seed=seed)
                rows.append(Row("energy_vs_n", policy, str(n), seed,
                                "total_energy", report.total_energy))
                rows.append(Row("energy_vs_n", policy, str(n), seed,
                                "feasible", 1.0 if report.feasible else 0.0))
                if policy in (POLICY_DNN, POLICY_GREEDY, POLICY_RANDOM):
                    rows.append(Row("admitted_vs_n", policy, str(n), seed,
                                    "admitted", float(report.admitted)))
    return rows


def exp_energy_vs_n(ws: Workspace) -> list[Row]:
    return [r for r in sweep_n_rows(ws) if r.experiment == "energy_vs_n"]


def exp_admitted_vs_n(ws: Workspace) -> list[Row]:
    return [r for r in sweep_n_rows(ws) if r.experiment == "admitted_vs_n"]


def exp_admitted_vs_treq(ws: Workspace) -> list[Row]:
    rows = []
    for t_req in ws.settings.treq_sweep:
        cfg = with_overrides(ws.config, latency_limit=t_req,
                             n_ue=ws.settings.treq_n_ue)
        model, _ = ws.model(latency_limit=t_req)
        for seed in range(1, ws.settings.eval_seeds + 1):
            scenario, ctx, u = prepared_scenario(cfg, seed)
            for policy in (POLICY_DNN, POLICY_GREEDY, POLICY_RANDOM):
                _, report = run_policy(policy, scenario, ctx, u, model=model,
                                       seed=seed)
                rows.append(Row("admitted_vs_treq", policy, f"{t_req:g}", seed,
                                "admitted", float(report.admitted)))
    return rows


def exp_runtime_compare(ws: Workspace) -> list[Row]:
    model, _ = ws.model()
    pso = PsoParams()
    cfg = with_overrides(ws.config, n_ue=ws.settings.runtime_n_ue)
    rows = []
    for seed in range(1, ws.settings.runtime_seeds + 1):
        scenario, ctx, u = prepared_scenario(cfg, seed)
        start = time.perf_counter()
        solve(scenario, pso, membership=u, context=ctx)
        pso_seconds = time.perf_counter() - start
        start = time.perf_counter()
        decide_all(scenario, model, membership=u, context=ctx, seed=seed)
        dnn_seconds = time.perf_counter() - start
        rows.append(Row("runtime_compare", POLICY_PSO,
                        str(ws.settings.runtime_n_ue), seed, "seconds",
                        pso_seconds))
        rows.append(Row("runtime_compare", POLICY_DNN,
                        str(ws.settings.runtime_n_ue), seed, "seconds",
                        dnn_seconds))
    return rows


_RUNNERS = {
    "oracle_check": exp_oracle_check,
    "arch_sweep": exp_arch_sweep,
    "loss_curves": exp_loss_curves,
    "error_hist": exp_error_hist,
    "sample_source_compare": exp_sample_source_compare,
    "energy_vs_n": exp_energy_vs_n,
    "admitted_vs_n": exp_admitted_vs_n,
    "admitted_vs_treq": exp_admitted_vs_treq,
    "runtime_compare": exp_runtime_compare,
}


def write_manifest(path: Path, config: SimConfig, settings: BenchSettings,
                   experiments) -> None:
    lines = [
        "# mecsim bench manifest v1",
        f"version = {__version__}",
        f"seed = {settings.seed}",
        f"fading = {settings.fading}",
        f"interference_weight = {settings.interference_weight:g}",
        f"eval_seeds = {settings.eval_seeds}",
        f"experiments = {','.join(experiments)}",
        f"n_sweep = {','.join(str(n) for n in settings.n_sweep)}",
        f"treq_sweep = {','.join(f'{t:g}' for t in settings.treq_sweep)}",
        f"collect_scenarios = {settings.collect.n_scenarios}",
        f"train_samples = {settings.train_collect.max_samples}",
        f"hidden = {settings.hyper.hidden_layers}x{settings.hyper.hidden_width}",
        f"epochs = {settings.hyper.epochs}",
        f"n_ue_default = {config.n_ue}",
        f"nodes = {config.n_uav} UAV / {config.n_gv} GV / {config.n_gs} GS",
    ]
    path.write_text("\n".join(lines) + "\n")


def run_bench(config: SimConfig, out_dir: str | Path,
              experiments=None, settings: BenchSettings | None = None) -> Path:
    """Run the requested experiments and write results.csv plus manifest.txt."""
    settings = settings if settings is not None else BenchSettings()
    names = list(experiments) if experiments else list(EXPERIMENTS)
    unknown = set(names) - set(EXPERIMENTS)
    if unknown:
        raise ValueError(f"unknown experiments: {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ws = Workspace(config, settings)
    rows: list[Row] = []
    sweep_cache: list[Row] | None = None
    for name in names:
        if name in ("energy_vs_n", "admitted_vs_n"):
            if sweep_cache is None:
                sweep_cache = sweep_n_rows(ws)
            rows.extend(r for r in sweep_cache if r.experiment == name)
        else:
            rows.extend(_RUNNERS[name](ws))
    results = out / "results.csv"
    write_rows(rows, results)
    write_manifest(out / "manifest.txt", config, settings, names)
    return results
