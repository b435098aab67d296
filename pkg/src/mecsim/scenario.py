"""Scenario entities, seeded generation, fading slots, and text round-trip."""

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .config import FADING_CONSTANT, SimConfig, _FIELD_TYPES, _decode, _encode

KIND_UAV = "UAV"
KIND_GV = "GV"
KIND_GS = "GS"

# Sub-stream tags so every entity draws from its own child generator.  UE i's
# position does not depend on n_ue, and fading is re-derivable per slot.
_STREAM_UE = 0
_STREAM_FADING = 1


@dataclass(frozen=True)
class Task:
    data_bits: float
    cpu_cycles: float
    latency_limit: float


@dataclass(frozen=True)
class Ue:
    ue_id: int
    position: tuple[float, float]
    task: Task
    f_local_max: float


@dataclass(frozen=True)
class HmecNode:
    node_id: int
    kind: str
    position: tuple[float, float]
    altitude: float
    f_max: float
    fading: float


@dataclass(frozen=True)
class Scenario:
    """One snapshot of the network. Nodes are ordered [UAVs, GVs, GSs]."""

    config: SimConfig
    ues: tuple[Ue, ...]
    nodes: tuple[HmecNode, ...]
    seed: int
    slot: int = 0

    def __post_init__(self):
        kinds = [n.kind for n in self.nodes]
        expected = ([KIND_UAV] * self.config.n_uav + [KIND_GV] * self.config.n_gv
                    + [KIND_GS] * self.config.n_gs)
        if kinds != expected:
            raise ValueError(f"node kinds {kinds} do not match config order {expected}")
        if len(self.ues) != self.config.n_ue:
            raise ValueError("ue count does not match config")


def _draw_fading(config: SimConfig, seed: int, slot: int, node_id: int) -> float:
    if config.fading == FADING_CONSTANT:
        return 1.0
    rng = np.random.default_rng([seed, _STREAM_FADING, slot, node_id])
    return float(rng.exponential(1.0))


def generate_scenario(config: SimConfig, seed: int) -> Scenario:
    """Draw UEs uniformly over the disk and build the node fleet.

    UAVs and GVs start at the origin; their operating positions come from the
    placement stage.  GS positions are fixed by the config.
    """
    task = Task(config.data_bits, config.cpu_cycles, config.latency_limit)
    ues = []
    for i in range(config.n_ue):
        rng = np.random.default_rng([seed, _STREAM_UE, i])
        radius = config.area_radius * math.sqrt(rng.random())
        angle = 2.0 * math.pi * rng.random()
        pos = (radius * math.cos(angle), radius * math.sin(angle))
        ues.append(Ue(i, pos, task, config.f_local_max))

    nodes = []
    node_id = 0
    for _ in range(config.n_uav):
        nodes.append(HmecNode(node_id, KIND_UAV, (0.0, 0.0), config.uav_altitude,
                              config.f_max_uav, _draw_fading(config, seed, 0, node_id)))
        node_id += 1
    for _ in range(config.n_gv):
        nodes.append(HmecNode(node_id, KIND_GV, (0.0, 0.0), 0.0,
                              config.f_max_gv, _draw_fading(config, seed, 0, node_id)))
        node_id += 1
    for pos in config.gs_positions:
        nodes.append(HmecNode(node_id, KIND_GS, pos, 0.0,
                              config.f_max_gs, _draw_fading(config, seed, 0, node_id)))
        node_id += 1

    return Scenario(config=config, ues=tuple(ues), nodes=tuple(nodes), seed=seed)


def resample_fading(scenario: Scenario, slot: int) -> Scenario:
    """Same geometry, fresh per-node fading draws for the given slot."""
    nodes = tuple(
        replace(node, fading=_draw_fading(scenario.config, scenario.seed, slot,
                                          node.node_id))
        for node in scenario.nodes
    )
    return replace(scenario, nodes=nodes, slot=slot)


def move_nodes(scenario: Scenario, positions: dict[int, tuple[float, float]]) -> Scenario:
    """Scenario with selected nodes relocated (GS nodes may not move)."""
    nodes = []
    for node in scenario.nodes:
        if node.node_id in positions:
            if node.kind == KIND_GS:
                raise ValueError(f"node {node.node_id} is a GS and cannot move")
            nodes.append(replace(node, position=tuple(positions[node.node_id])))
        else:
            nodes.append(node)
    return replace(scenario, nodes=tuple(nodes))


def export_scenario(scenario: Scenario, path: str | Path) -> None:
    lines = ["# mecsim scenario v1", f"seed = {scenario.seed}", f"slot = {scenario.slot}"]
    for f in fields(scenario.config):
        lines.append(f"config.{f.name} = {_encode(getattr(scenario.config, f.name))}")
    for ue in scenario.ues:
        t = ue.task
        lines.append(
            "ue %d %.17g %.17g %.17g %.17g %.17g %.17g"
            % (ue.ue_id, ue.position[0], ue.position[1], t.data_bits,
               t.cpu_cycles, t.latency_limit, ue.f_local_max)
        )
    for n in scenario.nodes:
        lines.append(
            "node %d %s %.17g %.17g %.17g %.17g %.17g"
            % (n.node_id, n.kind, n.position[0], n.position[1], n.altitude,
               n.f_max, n.fading)
        )
    Path(path).write_text("\n".join(lines) + "\n")


def import_scenario(path: str | Path) -> Scenario:
    seed = slot = 0
    config_values: dict = {}
    ues: list[Ue] = []
    nodes: list[HmecNode] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("config."):
            key, _, raw = line[len("config."):].partition("=")
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            config_values[key] = _decode(raw, _FIELD_TYPES[key])
        elif line.startswith("seed"):
            seed = int(line.partition("=")[2])
        elif line.startswith("slot"):
            slot = int(line.partition("=")[2])
        elif line.startswith("ue "):
            parts = line.split()
            ues.append(Ue(int(parts[1]), (float(parts[2]), float(parts[3])),
                          Task(float(parts[4]), float(parts[5]), float(parts[6])),
                          float(parts[7])))
        elif line.startswith("node "):
            parts = line.split()
            nodes.append(HmecNode(int(parts[1]), parts[2],
                                  (float(parts[3]), float(parts[4])),
                                  float(parts[5]), float(parts[6]), float(parts[7])))
        else:
            raise ValueError(f"{path}:{lineno}: unrecognised record {line!r}")
    config = SimConfig(**config_values)
    return Scenario(config=config, ues=tuple(ues), nodes=tuple(nodes), seed=seed,
                    slot=slot)
