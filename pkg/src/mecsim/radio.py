"""Channel, rate, energy, and solution-evaluation primitives.

Node labels: 0 means local execution, label j in [1, c] means node index j-1
in the scenario's node tuple.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import LOCAL_POLICY_ENERGY_OPT, SimConfig
from .scenario import KIND_UAV, Scenario, Task

# Stable constraint identifiers used in reports and penalty counting.
EXCLUSIVITY = "EXCLUSIVITY"
LATENCY = "LATENCY"
LOCAL_CAP = "LOCAL_CAP"
NODE_CAP = "NODE_CAP"
COVERAGE = "COVERAGE"

# Relative slack applied to inequality checks so exact-boundary solutions
# (frequencies at the closed-form minimum, sums at capacity) stay feasible.
REL_TOL = 1e-9

MEMBERSHIP_PATH_LOSS = "PATH_LOSS"
MEMBERSHIP_INTERFERENCE = "INTERFERENCE"


def horizontal_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def channel_gain(fading: float, horizontal: float, altitude: float = 0.0) -> float:
    """Power gain alpha / d^2 with d the 3D separation.

    Ground links (altitude 0) are singular at zero horizontal separation.
    """
    if fading < 0:
        raise ValueError("fading must be non-negative")
    d_sq = altitude * altitude + horizontal * horizontal
    if d_sq == 0.0:
        raise ValueError("singular geometry: UE and ground node are co-located")
    return fading / d_sq


def achievable_rate(bandwidth: float, tx_power: float, gain: float,
                    noise_power: float, co_channel_gains=()) -> float:
    """Shannon rate with co-channel interference from same-node UEs."""
    interference = tx_power * float(sum(co_channel_gains))
    sinr = tx_power * gain / (interference + noise_power)
    return bandwidth * math.log2(1.0 + sinr)


def min_feasible_frequency(task: Task, rate: float) -> float:
    """Smallest compute frequency meeting the deadline at this rate.

    Returns inf when the upload alone exceeds the deadline.
    """
    if task.data_bits > 0:
        if rate <= 0.0:
            return math.inf
        upload = task.data_bits / rate
    else:
        upload = 0.0
    slack = task.latency_limit - upload
    if slack <= 0.0:
        return math.inf
    return task.cpu_cycles / slack


def local_energy(energy_coeff: float, frequency: float, cpu_cycles: float) -> float:
    return energy_coeff * frequency * frequency * cpu_cycles


def offload_energy(tx_power: float, data_bits: float, rate: float) -> float:
    if rate <= 0.0:
        return math.inf
    return tx_power * data_bits / rate


def local_frequency(config: SimConfig, task: Task) -> float:
    """Frequency the local-execution policy assigns to a UE."""
    if config.local_policy == LOCAL_POLICY_ENERGY_OPT:
        return min(task.cpu_cycles / task.latency_limit, config.f_local_max)
    return config.f_local_max


def coverage_radius(config: SimConfig) -> float:
    return config.uav_altitude * math.tan(math.radians(config.elevation_angle_deg))


@dataclass(frozen=True)
class Solution:
    labels: tuple[int, ...]
    frequencies: tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.frequencies):
            raise ValueError("labels and frequencies must have equal length")


@dataclass(frozen=True)
class Violation:
    constraint: str
    entity: str  # "ue:<id>" or "node:<id>"
    margin: float


@dataclass(frozen=True)
class EvalReport:
    total_energy: float
    energies: tuple[float, ...]
    latencies: tuple[float, ...]
    admitted: int
    feasible: bool
    violations: tuple[Violation, ...]


class EvalContext:
    """Precomputed geometry for repeated evaluations of one scenario slot."""

    def __init__(self, scenario: Scenario):
        cfg = scenario.config
        self.scenario = scenario
        self.config = cfg
        n, c = cfg.n_ue, cfg.n_nodes
        ue_pos = np.array([u.position for u in scenario.ues], dtype=float).reshape(n, 2)
        node_pos = np.array([nd.position for nd in scenario.nodes], dtype=float).reshape(c, 2)
        self.horizontal = np.hypot(
            ue_pos[:, None, 0] - node_pos[None, :, 0],
            ue_pos[:, None, 1] - node_pos[None, :, 1],
        )
        self.altitude = np.array([nd.altitude for nd in scenario.nodes])
        self.fading = np.array([nd.fading for nd in scenario.nodes])
        self.f_max = np.array([nd.f_max for nd in scenario.nodes])
        self.is_uav = np.array([nd.kind == KIND_UAV for nd in scenario.nodes])
        d_sq = self.altitude[None, :] ** 2 + self.horizontal ** 2
        if np.any(d_sq == 0.0):
            raise ValueError("singular geometry: UE and ground node are co-located")
        self.gains = self.fading[None, :] / d_sq
        self.signal = cfg.tx_power * self.gains
        # Interference-free rates; exact for UAV links, solo shared links.
        self.rate0 = cfg.bandwidth * np.log2(1.0 + self.signal / cfg.noise_power)
        self.cover = np.where(
            self.is_uav[None, :],
            self.horizontal <= coverage_radius(cfg) * (1.0 + REL_TOL),
            True,
        )
        self.data_bits = np.array([u.task.data_bits for u in scenario.ues])
        self.cpu_cycles = np.array([u.task.cpu_cycles for u in scenario.ues])
        self.latency_limit = np.array([u.task.latency_limit for u in scenario.ues])
        self.f_local_max = np.array([u.f_local_max for u in scenario.ues])

    def rates_for(self, labels: np.ndarray) -> np.ndarray:
        """Uplink rate per UE under the co-channel sets implied by labels."""
        cfg = self.config
        n = len(labels)
        rates = np.zeros(n)
        offloaded = labels > 0
        if not np.any(offloaded):
            return rates
        node_idx = labels - 1
        for j in np.unique(node_idx[offloaded]):
            members = offloaded & (node_idx == j)
            if self.is_uav[j]:
                rates[members] = self.rate0[members, j]
                continue
            if cfg.interference_over_all:
                signals = self.signal[:, j]
                total = signals.sum()
                member_signal = self.signal[members, j]
            else:
                member_signal = self.signal[members, j]
                total = member_signal.sum()
            sinr = member_signal / (total - member_signal + cfg.noise_power)
            rates[members] = cfg.bandwidth * np.log2(1.0 + sinr)
        return rates


def evaluate_solution(scenario: Scenario, solution: Solution,
                      context: EvalContext | None = None) -> EvalReport:
    """Energy, latency, and constraint audit of a full assignment."""
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    n, c = cfg.n_ue, cfg.n_nodes
    labels = np.asarray(solution.labels, dtype=int)
    freqs = np.asarray(solution.frequencies, dtype=float)
    if labels.shape != (n,):
        raise ValueError("solution size does not match scenario")

    violations: list[Violation] = []
    valid = (labels >= 0) & (labels <= c)
    for i in np.nonzero(~valid)[0]:
        violations.append(Violation(EXCLUSIVITY, f"ue:{i}", float(labels[i])))
    safe_labels = np.where(valid, labels, 0)

    rates = ctx.rates_for(np.where(valid, labels, 0))
    local = safe_labels == 0
    offloaded = valid & ~local

    with np.errstate(divide="ignore", invalid="ignore"):
        compute_time = np.where(freqs > 0, ctx.cpu_cycles / freqs, np.inf)
        upload_time = np.where(
            offloaded,
            np.where(rates > 0, ctx.data_bits / rates, np.inf),
            0.0,
        )
    latencies = upload_time + compute_time

    energies = np.where(
        offloaded,
        np.where(rates > 0, cfg.tx_power * ctx.data_bits / np.maximum(rates, 1e-300), np.inf),
        cfg.energy_coeff * freqs * freqs * ctx.cpu_cycles,
    )

    limit = ctx.latency_limit * (1.0 + REL_TOL)
    for i in np.nonzero(valid & (latencies > limit))[0]:
        violations.append(Violation(LATENCY, f"ue:{i}",
                                    float(latencies[i] - ctx.latency_limit[i])))
    for i in np.nonzero(local & (freqs > ctx.f_local_max * (1.0 + REL_TOL)))[0]:
        violations.append(Violation(LOCAL_CAP, f"ue:{i}",
                                    float(freqs[i] - ctx.f_local_max[i])))
    for i in np.nonzero(offloaded & (freqs <= 0))[0]:
        violations.append(Violation(NODE_CAP, f"ue:{i}", float(freqs[i])))

    node_idx = safe_labels - 1
    for j in range(c):
        members = offloaded & (node_idx == j)
        if not np.any(members):
            continue
        load = freqs[members].sum()
        if load > ctx.f_max[j] * (1.0 + REL_TOL):
            violations.append(Violation(NODE_CAP, f"node:{j}",
                                        float(load - ctx.f_max[j])))
        if ctx.is_uav[j]:
            for i in np.nonzero(members & ~ctx.cover[:, j])[0]:
                violations.append(Violation(COVERAGE, f"ue:{i}",
                                            float(ctx.horizontal[i, j]
                                                  - coverage_radius(cfg))))

    total = float(energies.sum()) if np.all(np.isfinite(energies)) else math.inf
    return EvalReport(
        total_energy=total,
        energies=tuple(float(e) for e in energies),
        latencies=tuple(float(t) for t in latencies),
        admitted=int(np.count_nonzero(offloaded)),
        feasible=not violations,
        violations=tuple(violations),
    )


def fast_fitness(ctx: EvalContext, labels: np.ndarray, freqs: np.ndarray,
                 penalty: float) -> float:
    """Penalized energy without report objects, for optimizer inner loops.

    Must agree exactly with evaluate_solution-derived fitness (total energy
    plus penalty times the violation count); the equality is under test.
    """
    cfg = ctx.config
    c = cfg.n_nodes
    labels = np.asarray(labels, dtype=int)
    freqs = np.asarray(freqs, dtype=float)

    valid = (labels >= 0) & (labels <= c)
    count = int(np.count_nonzero(~valid))
    safe_labels = np.where(valid, labels, 0)
    rates = ctx.rates_for(safe_labels)
    local = safe_labels == 0
    offloaded = valid & ~local

    with np.errstate(divide="ignore", invalid="ignore"):
        compute_time = np.where(freqs > 0, ctx.cpu_cycles / freqs, np.inf)
        upload_time = np.where(
            offloaded,
            np.where(rates > 0, ctx.data_bits / rates, np.inf),
            0.0,
        )
    latencies = upload_time + compute_time
    energies = np.where(
        offloaded,
        np.where(rates > 0, cfg.tx_power * ctx.data_bits / np.maximum(rates, 1e-300), np.inf),
        cfg.energy_coeff * freqs * freqs * ctx.cpu_cycles,
    )

    count += int(np.count_nonzero(valid & (latencies > ctx.latency_limit * (1.0 + REL_TOL))))
    count += int(np.count_nonzero(local & (freqs > ctx.f_local_max * (1.0 + REL_TOL))))
    count += int(np.count_nonzero(offloaded & (freqs <= 0)))

    node_idx = safe_labels - 1
    if np.any(offloaded):
        loads = np.bincount(node_idx[offloaded], weights=freqs[offloaded],
                            minlength=c)
        occupied = np.bincount(node_idx[offloaded], minlength=c) > 0
        count += int(np.count_nonzero(occupied & (loads > ctx.f_max * (1.0 + REL_TOL))))
        uav_member = offloaded & ctx.is_uav[np.clip(node_idx, 0, c - 1)]
        if np.any(uav_member):
            idx = np.nonzero(uav_member)[0]
            count += int(np.count_nonzero(~ctx.cover[idx, node_idx[idx]]))

    total = float(energies.sum()) if np.all(np.isfinite(energies)) else math.inf
    return total + penalty * count


def export_report(report: EvalReport, solution: Solution, path: str | Path) -> None:
    lines = [
        "# mecsim evaluation v1",
        f"total_energy = {report.total_energy!r}",
        f"admitted = {report.admitted}",
        f"feasible = {report.feasible}",
    ]
    for i, (a, f) in enumerate(zip(solution.labels, solution.frequencies)):
        lines.append("ue %d label %d freq %.17g energy %.17g latency %.17g"
                     % (i, a, f, report.energies[i], report.latencies[i]))
    for v in report.violations:
        lines.append(f"violation {v.constraint} {v.entity} margin {v.margin!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def membership_from_squared(metric: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise fuzzy memberships from a squared-distance-like metric.

    For row q: mu_j = 1 / sum_k (q_j / q_k)^(1/(tau-1)).  Rows containing a
    zero put all mass on the first zero entry.
    """
    metric = np.asarray(metric, dtype=float)
    if np.any(metric < 0):
        raise ValueError("metric entries must be non-negative")
    exponent = 1.0 / (tau - 1.0)
    out = np.empty_like(metric)
    for i, row in enumerate(metric):
        zeros = np.nonzero(row == 0.0)[0]
        if zeros.size:
            out[i] = 0.0
            out[i, zeros[0]] = 1.0
            continue
        inv = row ** -exponent
        out[i] = inv / inv.sum()
    return out


@dataclass(frozen=True)
class MembershipMatrix:
    kind: str
    values: np.ndarray  # shape (n_ue, n_nodes), rows sum to 1

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


def interference_membership_matrix(scenario: Scenario,
                                   context: EvalContext | None = None,
                                   gamma: float | None = None,
                                   tau: float | None = None) -> MembershipMatrix:
    """Channel-quality memberships over nodes, discounting shared channels.

    Metric per (UE, node): (gamma * I + noise) / signal, where I sums the
    received power of every other UE at that node.  UAV links are orthogonal,
    so their interference term is zero.
    """
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    g = cfg.interference_weight if gamma is None else gamma
    t = cfg.tau if tau is None else tau
    signal = ctx.signal
    totals = signal.sum(axis=0, keepdims=True)
    interference = np.where(ctx.is_uav[None, :], 0.0, totals - signal)
    metric = (g * interference + cfg.noise_power) / signal
    return MembershipMatrix(MEMBERSHIP_INTERFERENCE, membership_from_squared(metric, t))


def selection_probabilities(matrix: MembershipMatrix, ue_index: int) -> np.ndarray:
    row = matrix.values[ue_index]
    total = row.sum()
    if total <= 0:
        raise ValueError("membership row sums to zero")
    return row / total
