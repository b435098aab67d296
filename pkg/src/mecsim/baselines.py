"""Reference offloading policies: all-local, uniform random, nearest-node.

Random and greedy commit through the same admission machinery as the learned
pipeline, so every returned assignment is feasible; UEs that cannot be placed
run locally.
"""

import numpy as np

from .radio import EvalContext, Solution, local_frequency
from .scenario import Scenario
from .scheduling import CommitState, admission_frequency, decision_layer

_STREAM_RANDOM = 5


def local_only(scenario: Scenario) -> Solution:
    cfg = scenario.config
    freqs = tuple(local_frequency(cfg, ue.task) for ue in scenario.ues)
    return Solution((0,) * cfg.n_ue, freqs)


def _admit_or_local(state: CommitState, ue_index: int, node_index: int):
    freq = admission_frequency(state, ue_index, node_index)
    if not np.isfinite(freq):
        freq = float(state.ctx.f_max[node_index])  # rejected on LATENCY below
    label, freq, _ = decision_layer(state, ue_index, node_index + 1, freq)
    if label > 0:
        state.commit(ue_index, node_index, freq)
    return label, freq


def random_offload(scenario: Scenario, seed: int | None = None,
                   context: EvalContext | None = None) -> Solution:
    """Uniform node draw per UE, kept only when the admission checks pass."""
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    seed = scenario.seed if seed is None else seed
    state = CommitState(ctx)
    labels = []
    freqs = []
    for i in range(cfg.n_ue):
        rng = np.random.default_rng([seed, _STREAM_RANDOM, i])
        node = int(rng.integers(cfg.n_nodes))
        label, freq = _admit_or_local(state, i, node)
        labels.append(label)
        freqs.append(freq)
    return Solution(tuple(labels), tuple(freqs))


def greedy_offload(scenario: Scenario,
                   context: EvalContext | None = None) -> Solution:
    """Nearest node by 3D separation, packed cheapest-requirement first."""
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    n = cfg.n_ue
    labels = np.zeros(n, dtype=int)
    freqs = np.array([local_frequency(cfg, ue.task) for ue in scenario.ues])
    if n == 0 or cfg.n_nodes == 0:
        return Solution(tuple(labels), tuple(float(f) for f in freqs))

    distance = np.sqrt(ctx.horizontal ** 2 + ctx.altitude[None, :] ** 2)
    nearest = np.argmin(distance, axis=1)  # argmin takes the lowest id on ties

    state = CommitState(ctx)
    for j in range(cfg.n_nodes):
        candidates = np.nonzero(nearest == j)[0]
        if candidates.size == 0:
            continue
        # Admit in order of the interference-free requirement; cheaper UEs
        # first maximizes the packed count.
        solo_need = cfg.cpu_cycles / np.maximum(
            ctx.latency_limit[candidates]
            - ctx.data_bits[candidates] / np.maximum(ctx.rate0[candidates, j], 1e-300),
            1e-300)
        for i in candidates[np.argsort(solo_need, kind="stable")]:
            label, freq = _admit_or_local(state, int(i), j)
            if label > 0:
                labels[i] = label
                freqs[i] = freq
    return Solution(tuple(int(x) for x in labels), tuple(float(f) for f in freqs))
