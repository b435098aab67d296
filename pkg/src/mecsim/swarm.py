"""Membership-seeded particle swarm over joint labels and frequencies.

Particle layout: x = [labels(0..N-1), frequencies(0..N-1)], all continuous.
Labels are rounded half-up only when decoding for evaluation; positions stay
continuous between iterations.
"""

from dataclasses import dataclass

import numpy as np

from .radio import (EvalContext, EvalReport, MembershipMatrix, Solution,
                    evaluate_solution, fast_fitness,
                    interference_membership_matrix, local_frequency,
                    selection_probabilities)
from .scenario import Scenario

_STREAM_PSO_INIT = 3
_STREAM_PSO_STEP = 4
_STREAM_PSO_VELOCITY = 7

LOCAL_PRIOR_AUTO = "auto"


@dataclass(frozen=True)
class PsoParams:
    swarm_size: int = 10
    max_iter: int = 100
    inertia_max: float = 0.9
    inertia_min: float = 0.4
    cognitive: float = 2.0
    social: float = 2.0
    penalty: float = 100.0
    f_floor: float = 1e6
    # "auto" gates the seeding roulette by coverage, reachability, and each
    # node's estimated concurrency, so particles start near a feasible full
    # packing.  None disables the gate; a float additionally starts each UE
    # local with that probability.
    local_prior: float | str | None = LOCAL_PRIOR_AUTO
    # Exponent applied to the membership row before the seeding roulette;
    # 1 draws proportionally, larger values concentrate on the best node.
    roulette_power: float = 1.0


def inertia_at(t: int, params: PsoParams) -> float:
    frac = t / params.max_iter if params.max_iter > 0 else 1.0
    return params.inertia_max - (params.inertia_max - params.inertia_min) * frac


def roulette_select(probabilities: np.ndarray, r: float) -> int:
    """Smallest index whose cumulative probability exceeds r."""
    cumulative = np.cumsum(probabilities)
    idx = int(np.searchsorted(cumulative, r, side="right"))
    return min(idx, len(probabilities) - 1)


def fitness(scenario: Scenario, solution: Solution, penalty: float,
            context: EvalContext | None = None) -> float:
    report = evaluate_solution(scenario, solution, context)
    return report.total_energy + penalty * len(report.violations)


def node_slot_estimate(scenario: Scenario, margin: float = 1.05) -> np.ndarray:
    """Per-node count of concurrently satisfiable offloads at the deadline.

    Co-channel nodes count as a single slot: a second co-channel UE lowers
    the first one's rate below its committed requirement.
    """
    cfg = scenario.config
    per_ue = margin * cfg.cpu_cycles / cfg.latency_limit
    return np.array([
        max(int(node.f_max // per_ue), 1) if node.kind == "UAV" else 1
        for node in scenario.nodes
    ])


def estimated_offload_slots(scenario: Scenario) -> int:
    return int(node_slot_estimate(scenario).sum())


def _resolve_local_prior(params: PsoParams, scenario: Scenario) -> float:
    if params.local_prior is None or params.local_prior == LOCAL_PRIOR_AUTO:
        return 0.0
    return float(params.local_prior)


class Swarm:
    def __init__(self, positions, velocities, pbest, pbest_fitness, gbest,
                 gbest_fitness):
        self.positions = positions
        self.velocities = velocities
        self.pbest = pbest
        self.pbest_fitness = pbest_fitness
        self.gbest = gbest
        self.gbest_fitness = gbest_fitness


def _caps(ctx: EvalContext) -> np.ndarray:
    # index 0 = local cap, 1..c = node caps
    return np.concatenate(([ctx.config.f_local_max], ctx.f_max))


def decode(position: np.ndarray, ctx: EvalContext,
           f_floor: float) -> tuple[np.ndarray, np.ndarray]:
    n = ctx.config.n_ue
    c = ctx.config.n_nodes
    labels = np.clip(np.floor(position[:n] + 0.5).astype(int), 0, c)
    caps = _caps(ctx)[labels]
    freqs = np.clip(position[n:], f_floor, caps)
    return labels, freqs


def init_swarm(scenario: Scenario, membership: MembershipMatrix,
               params: PsoParams, seed: int,
               context: EvalContext | None = None) -> Swarm:
    """Membership-roulette seeding with randomized starting velocities.

    With the automatic prior, the roulette is feasibility-gated: draws skip
    nodes that are out of coverage, unreachable before the deadline, or
    already at their estimated concurrency, so every particle starts at or
    near a feasible full packing.  Seeded offloads take their
    interference-free frequency requirement; locals take the policy
    frequency.
    """
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    n, c = cfg.n_ue, cfg.n_nodes
    prior = _resolve_local_prior(params, scenario)

    gated = params.local_prior == LOCAL_PRIOR_AUTO
    slots = node_slot_estimate(scenario)
    with np.errstate(divide="ignore"):
        upload0 = np.where(ctx.rate0 > 0, ctx.data_bits[:, None] / ctx.rate0,
                           np.inf)
    slack0 = ctx.latency_limit[:, None] - upload0
    need0 = np.where(slack0 > 0, ctx.cpu_cycles[:, None] / np.maximum(slack0, 1e-300),
                     np.inf)
    reachable = ctx.cover & np.isfinite(need0)

    positions = np.zeros((params.swarm_size, 2 * n))
    for p in range(params.swarm_size):
        rng = np.random.default_rng([seed, _STREAM_PSO_INIT, p])
        labels = np.zeros(n, dtype=int)
        seeded = np.zeros(c, dtype=int)
        freqs = np.array([local_frequency(cfg, ue.task) for ue in scenario.ues])
        # Visit order is shuffled per particle so that, at saturation, the
        # slots are not always claimed by the lowest UE indices.
        for i in rng.permutation(n) if gated else range(n):
            if prior > 0.0 and rng.random() < prior:
                continue
            probs = selection_probabilities(membership, i)
            if params.roulette_power != 1.0:
                probs = probs ** params.roulette_power
                probs = probs / probs.sum()
            if gated:
                open_nodes = (seeded < slots) & reachable[i]
                if not np.any(open_nodes & (probs > 0)):
                    continue
                probs = probs * open_nodes
                probs = probs / probs.sum()
            j = roulette_select(probs, rng.random())
            seeded[j] += 1
            labels[i] = 1 + j
            freqs[i] = need0[i, j] if np.isfinite(need0[i, j]) else ctx.f_max[j]
        positions[p, :n] = labels
        positions[p, n:] = freqs

    # Sharp memberships can seed every particle identically, and a swarm
    # whose particles all sit on their own pbest never moves.  A random
    # starting velocity keeps the search alive; the seeded packing survives
    # as the initial pbest either way.
    f_hi = float(_caps(ctx).max())
    velocities = np.empty_like(positions)
    for p in range(params.swarm_size):
        rng = np.random.default_rng([seed, _STREAM_PSO_VELOCITY, p])
        velocities[p, :n] = rng.uniform(-1.0, 1.0, n)
        velocities[p, n:] = rng.uniform(-0.1, 0.1, n) * (f_hi - params.f_floor)
    pbest = positions.copy()
    pbest_fitness = np.empty(params.swarm_size)
    for p in range(params.swarm_size):
        labels, freqs = decode(positions[p], ctx, params.f_floor)
        pbest_fitness[p] = fast_fitness(ctx, labels, freqs, params.penalty)
    best = int(np.argmin(pbest_fitness))
    return Swarm(positions, velocities, pbest, pbest_fitness,
                 pbest[best].copy(), float(pbest_fitness[best]))


def step(swarm: Swarm, t: int, scenario: Scenario, params: PsoParams, seed: int,
         context: EvalContext) -> None:
    """One synchronous update of every particle; strict-improvement bests."""
    cfg = scenario.config
    n, c = cfg.n_ue, cfg.n_nodes
    w = inertia_at(t, params)
    f_hi = float(_caps(context).max())
    v_limit = np.concatenate((np.full(n, float(c)),
                              np.full(n, f_hi - params.f_floor)))
    lo = np.concatenate((np.zeros(n), np.full(n, params.f_floor)))
    hi = np.concatenate((np.full(n, float(c)), np.full(n, f_hi)))

    for p in range(swarm.positions.shape[0]):
        rng = np.random.default_rng([seed, _STREAM_PSO_STEP, t, p])
        r1 = rng.random(2 * n)
        r2 = rng.random(2 * n)
        v = (w * swarm.velocities[p]
             + params.cognitive * r1 * (swarm.pbest[p] - swarm.positions[p])
             + params.social * r2 * (swarm.gbest - swarm.positions[p]))
        np.clip(v, -v_limit, v_limit, out=v)
        swarm.velocities[p] = v
        swarm.positions[p] = np.clip(swarm.positions[p] + v, lo, hi)

        labels, freqs = decode(swarm.positions[p], context, params.f_floor)
        value = fast_fitness(context, labels, freqs, params.penalty)
        if value < swarm.pbest_fitness[p]:
            swarm.pbest_fitness[p] = value
            swarm.pbest[p] = swarm.positions[p].copy()
            if value < swarm.gbest_fitness:
                swarm.gbest_fitness = value
                swarm.gbest = swarm.positions[p].copy()


@dataclass(frozen=True)
class SolveResult:
    solution: Solution
    fitness: float
    report: EvalReport
    trace: tuple[float, ...]
    membership: MembershipMatrix


def solve(scenario: Scenario, params: PsoParams | None = None,
          seed: int | None = None,
          membership: MembershipMatrix | None = None,
          context: EvalContext | None = None) -> SolveResult:
    """Swarm search, then canonical admission of the best label vector.

    The returned assignment is committed UE by UE through the same admission
    layer the learned pipeline uses, which grants minimum feasible
    frequencies and demotes unplaceable UEs to local execution, so the result
    is always feasible.  The trace records the raw penalized best fitness per
    iteration, including the seeded start.
    """
    from .scheduling import commit_labels

    params = params if params is not None else PsoParams()
    seed = scenario.seed if seed is None else seed
    ctx = context if context is not None else EvalContext(scenario)
    u = membership if membership is not None else interference_membership_matrix(
        scenario, context=ctx)

    swarm = init_swarm(scenario, u, params, seed, ctx)
    trace = [swarm.gbest_fitness]
    for t in range(1, params.max_iter + 1):
        step(swarm, t, scenario, params, seed, ctx)
        trace.append(swarm.gbest_fitness)

    labels, _ = decode(swarm.gbest, ctx, params.f_floor)
    committed = commit_labels(scenario, labels, ctx)
    report = committed.report
    value = report.total_energy + params.penalty * len(report.violations)
    return SolveResult(committed.solution, value, report, tuple(trace), u)
