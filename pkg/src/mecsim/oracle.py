"""Exhaustive minimum-energy search for small instances.

Enumerates every label assignment, allocates each offloader its minimum
feasible frequency under the implied co-channel sets, and keeps the cheapest
feasible assignment.  Guarded hard against combinatorial blow-up; callers
wanting larger instances get a refusal, not a stall.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .radio import (REL_TOL, EvalContext, Solution, local_frequency,
                    min_feasible_frequency)
from .scenario import Scenario

MAX_ORACLE_UES = 6
MAX_ORACLE_NODES = 3


class OracleRefusal(ValueError):
    """Raised when an instance exceeds the exhaustive-search guard."""


@dataclass(frozen=True)
class OracleResult:
    solution: Solution | None
    energy: float
    assignments_checked: int

    @property
    def feasible(self) -> bool:
        return self.solution is not None


def brute_force_oracle(scenario: Scenario,
                       context: EvalContext | None = None) -> OracleResult:
    cfg = scenario.config
    n, c = cfg.n_ue, cfg.n_nodes
    if n > MAX_ORACLE_UES or c > MAX_ORACLE_NODES:
        raise OracleRefusal(
            f"instance too large for exhaustive search: {n} UEs, {c} nodes "
            f"(limits {MAX_ORACLE_UES}, {MAX_ORACLE_NODES})")
    ctx = context if context is not None else EvalContext(scenario)

    local_f = np.array([local_frequency(cfg, ue.task) for ue in scenario.ues])
    local_lat = np.where(local_f > 0, ctx.cpu_cycles / local_f, np.inf)
    local_ok = (local_lat <= ctx.latency_limit * (1.0 + REL_TOL)) & (
        local_f <= ctx.f_local_max * (1.0 + REL_TOL))
    local_e = cfg.energy_coeff * local_f ** 2 * ctx.cpu_cycles

    best_energy = math.inf
    best: Solution | None = None
    checked = 0
    for assignment in itertools.product(range(c + 1), repeat=n):
        checked += 1
        labels = np.array(assignment, dtype=int)
        offloaded = labels > 0
        if np.any(~local_ok & ~offloaded):
            continue
        energy = float(local_e[~offloaded].sum())
        if energy >= best_energy:
            continue
        freqs = local_f.copy()
        rates = ctx.rates_for(labels)
        feasible = True
        loads = np.zeros(c)
        for i in np.nonzero(offloaded)[0]:
            j = labels[i] - 1
            if ctx.is_uav[j] and not ctx.cover[i, j]:
                feasible = False
                break
            need = min_feasible_frequency(scenario.ues[i].task, rates[i])
            if not math.isfinite(need):
                feasible = False
                break
            freqs[i] = need
            loads[j] += need
            energy += cfg.tx_power * scenario.ues[i].task.data_bits / rates[i]
        if not feasible:
            continue
        if np.any(loads > ctx.f_max * (1.0 + REL_TOL)):
            continue
        if energy < best_energy:
            best_energy = energy
            best = Solution(tuple(int(x) for x in labels),
                            tuple(float(f) for f in freqs))
    return OracleResult(best, best_energy, checked)
