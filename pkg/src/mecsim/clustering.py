"""Path-loss-weighted fuzzy clustering for movable node placement.

Clusters 0..(J+K-1) are free and end up as UAV/GV positions; the remaining
clusters are pinned to the GS positions and never move.  Free centers are
treated as ground points during iteration because their eventual kind is
decided only by the matching step afterwards.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .radio import membership_from_squared
from .scenario import KIND_GS, Scenario, move_nodes

_STREAM_FCM = 2


def large_scale_distance(ue_pos, center_pos, altitude: float = 0.0) -> float:
    """Squared 3D separation: R^2 for ground centers, H^2 + R^2 for aerial."""
    dx = ue_pos[0] - center_pos[0]
    dy = ue_pos[1] - center_pos[1]
    return altitude * altitude + dx * dx + dy * dy


def _distance_matrix(positions: np.ndarray, centers: np.ndarray,
                     altitudes: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - centers[None, :, :]
    return altitudes[None, :] ** 2 + (diff ** 2).sum(axis=2)


def update_memberships(positions: np.ndarray, centers: np.ndarray, tau: float,
                       altitudes: np.ndarray | None = None) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    centers = np.asarray(centers, dtype=float)
    if altitudes is None:
        altitudes = np.zeros(len(centers))
    return membership_from_squared(
        _distance_matrix(positions, centers, np.asarray(altitudes, dtype=float)), tau
    )


def update_centroids(positions: np.ndarray, memberships: np.ndarray, tau: float,
                     centers: np.ndarray,
                     fixed: np.ndarray | None = None) -> np.ndarray:
    """Weighted means with mu^tau weights; fixed or empty clusters keep
    their previous center."""
    positions = np.asarray(positions, dtype=float)
    memberships = np.asarray(memberships, dtype=float)
    out = np.array(centers, dtype=float, copy=True)
    weights = memberships ** tau
    totals = weights.sum(axis=0)
    for j in range(out.shape[0]):
        if fixed is not None and fixed[j]:
            continue
        if totals[j] <= 0.0:
            continue
        out[j] = weights[:, j] @ positions / totals[j]
    return out


def clustering_objective(positions: np.ndarray, centers: np.ndarray,
                         memberships: np.ndarray, tau: float,
                         altitudes: np.ndarray | None = None) -> float:
    positions = np.asarray(positions, dtype=float)
    centers = np.asarray(centers, dtype=float)
    if altitudes is None:
        altitudes = np.zeros(len(centers))
    d_sq = _distance_matrix(positions, centers, np.asarray(altitudes, dtype=float))
    return float(((np.asarray(memberships, dtype=float) ** tau) * d_sq).sum())


@dataclass(frozen=True)
class FcmState:
    centers: np.ndarray
    memberships: np.ndarray
    fixed: np.ndarray
    objective_trace: tuple[float, ...]
    iterations: int
    converged: bool

    def hard_labels(self) -> np.ndarray:
        return np.argmax(self.memberships, axis=1)


def run_clustering(scenario: Scenario, seed: int | None = None) -> FcmState:
    cfg = scenario.config
    n_free = cfg.n_uav + cfg.n_gv
    c = cfg.n_nodes
    positions = np.array([u.position for u in scenario.ues], dtype=float).reshape(-1, 2)
    fixed = np.zeros(c, dtype=bool)
    fixed[n_free:] = True

    centers = np.zeros((c, 2))
    for m, pos in enumerate(cfg.gs_positions):
        centers[n_free + m] = pos

    rng = np.random.default_rng([scenario.seed if seed is None else seed, _STREAM_FCM])
    if len(positions) >= n_free > 0:
        picks = rng.choice(len(positions), size=n_free, replace=False)
        centers[:n_free] = positions[picks]
    elif n_free > 0:
        angles = rng.random(n_free) * 2 * np.pi
        radii = cfg.area_radius * np.sqrt(rng.random(n_free))
        centers[:n_free, 0] = radii * np.cos(angles)
        centers[:n_free, 1] = radii * np.sin(angles)

    if len(positions) == 0:
        return FcmState(centers, np.zeros((0, c)), fixed, (0.0,), 0, True)

    memberships = update_memberships(positions, centers, cfg.tau)
    trace: list[float] = []
    prev_objective = 0.0
    converged = False
    iterations = 0
    for _ in range(cfg.fcm_max_iter):
        iterations += 1
        centers = update_centroids(positions, memberships, cfg.tau, centers, fixed)
        objective = clustering_objective(positions, centers, memberships, cfg.tau)
        trace.append(objective)
        memberships = update_memberships(positions, centers, cfg.tau)
        if abs(objective - prev_objective) <= cfg.fcm_epsilon:
            converged = True
            break
        prev_objective = objective

    return FcmState(centers, memberships, fixed, tuple(trace), iterations, converged)


@dataclass(frozen=True)
class Placement:
    # node_id -> cluster index, and the operating position per movable node
    node_cluster: dict[int, int]
    node_positions: dict[int, tuple[float, float]]
    ue_cluster: tuple[int, ...]


def assign_centers_to_nodes(state: FcmState, scenario: Scenario) -> Placement:
    """Match free clusters to movable nodes: heaviest compute demand first,
    largest node capacity first."""
    cfg = scenario.config
    labels = state.hard_labels()
    n_free = cfg.n_uav + cfg.n_gv

    demand = np.zeros(n_free)
    for i, ue in enumerate(scenario.ues):
        if labels[i] < n_free:
            demand[labels[i]] += ue.task.cpu_cycles

    # Sort clusters by descending demand, nodes by descending capacity;
    # ties resolve to the lower index for determinism.
    cluster_order = sorted(range(n_free), key=lambda j: (-demand[j], j))
    movable = [nd for nd in scenario.nodes if nd.kind != KIND_GS]
    node_order = sorted(movable, key=lambda nd: (-nd.f_max, nd.node_id))

    node_cluster: dict[int, int] = {}
    node_positions: dict[int, tuple[float, float]] = {}
    for node, cluster in zip(node_order, cluster_order):
        node_cluster[node.node_id] = cluster
        node_positions[node.node_id] = (float(state.centers[cluster, 0]),
                                        float(state.centers[cluster, 1]))
    return Placement(node_cluster, node_positions, tuple(int(x) for x in labels))


def apply_placement(scenario: Scenario, placement: Placement) -> Scenario:
    # Ground-link gain is singular at zero separation, and with very few UEs
    # a converged center can land exactly on one.  Vehicles parked on a UE
    # are shifted east by the smallest clearing step.
    altitude = {nd.node_id: nd.altitude for nd in scenario.nodes}
    ue_xy = {ue.position for ue in scenario.ues}
    positions = {}
    for node_id, (x, y) in placement.node_positions.items():
        if altitude[node_id] == 0.0:
            step = 1e-6
            while (x, y) in ue_xy:
                x += step
                step *= 2.0
        positions[node_id] = (x, y)
    return move_nodes(scenario, positions)


def place_nodes(scenario: Scenario, seed: int | None = None) -> Scenario:
    """Convenience wrapper: cluster, match, and relocate in one call."""
    state = run_clustering(scenario, seed=seed)
    return apply_placement(scenario, assign_centers_to_nodes(state, scenario))


def export_state(state: FcmState, path: str | Path) -> None:
    lines = ["# mecsim clustering v1",
             f"iterations = {state.iterations}",
             f"converged = {state.converged}"]
    for j, (x, y) in enumerate(state.centers):
        lines.append("center %d %.17g %.17g fixed=%d" % (j, x, y, int(state.fixed[j])))
    lines.append("trace " + " ".join("%.17g" % g for g in state.objective_trace))
    Path(path).write_text("\n".join(lines) + "\n")
