"""Scenario-level configuration and flat key/value config files."""

from dataclasses import dataclass, fields, replace
from pathlib import Path

FADING_EXPONENTIAL = "exponential"
FADING_CONSTANT = "constant"

LOCAL_POLICY_ENERGY_OPT = "energy_opt"
LOCAL_POLICY_FIXED = "fixed"


@dataclass(frozen=True)
class SimConfig:
    """Physical and algorithmic parameters shared by all pipeline stages.

    Distances are meters, rates bit/s, frequencies cycle/s, powers watt,
    energies joule.
    """

    n_ue: int = 10
    n_uav: int = 3
    n_gv: int = 1
    n_gs: int = 1
    area_radius: float = 100.0
    gs_positions: tuple[tuple[float, float], ...] = ((50.0, 50.0),)
    uav_altitude: float = 20.0
    elevation_angle_deg: float = 80.0
    bandwidth: float = 1e6
    tx_power: float = 1.0
    noise_power: float = 1e-9
    data_bits: float = 8e5
    cpu_cycles: float = 1e9
    latency_limit: float = 2.0
    f_local_max: float = 1e9
    f_max_uav: float = 1e10
    f_max_gv: float = 1e11
    f_max_gs: float = 1e12
    energy_coeff: float = 1e-27
    fading: str = FADING_EXPONENTIAL
    local_policy: str = LOCAL_POLICY_ENERGY_OPT
    # Weight of the co-located interference sum inside the channel-quality
    # membership matrix.  Zero disables the term; the noise floor keeps the
    # ratio finite either way.
    interference_weight: float = 1.0
    # When True, evaluation rates treat every other UE as an interferer on
    # shared nodes instead of only the UEs assigned to the same node.
    interference_over_all: bool = False
    tau: float = 2.0
    fcm_epsilon: float = 1e-4
    fcm_max_iter: int = 100

    def __post_init__(self):
        if self.n_ue < 0 or self.n_uav < 0 or self.n_gv < 0 or self.n_gs < 0:
            raise ValueError("entity counts must be non-negative")
        if len(self.gs_positions) != self.n_gs:
            raise ValueError(
                f"expected {self.n_gs} GS positions, got {len(self.gs_positions)}"
            )
        if self.fading not in (FADING_EXPONENTIAL, FADING_CONSTANT):
            raise ValueError(f"unknown fading mode {self.fading!r}")
        if self.local_policy not in (LOCAL_POLICY_ENERGY_OPT, LOCAL_POLICY_FIXED):
            raise ValueError(f"unknown local policy {self.local_policy!r}")
        if self.tau <= 1.0:
            raise ValueError("tau must exceed 1")
        if self.interference_weight < 0:
            raise ValueError("interference_weight must be non-negative")

    @property
    def n_nodes(self) -> int:
        return self.n_uav + self.n_gv + self.n_gs

    def f_max_for_kind(self, kind: str) -> float:
        return {"UAV": self.f_max_uav, "GV": self.f_max_gv, "GS": self.f_max_gs}[kind]


def _encode(value) -> str:
    if isinstance(value, tuple):
        return ";".join(f"{x},{y}" for x, y in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode(raw: str, kind: type):
    raw = raw.strip()
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is str:
        return raw
    # tuple of x,y pairs
    if raw == "":
        return ()
    return tuple(
        (float(part.split(",")[0]), float(part.split(",")[1]))
        for part in raw.split(";")
    )


_FIELD_TYPES = {
    "n_ue": int, "n_uav": int, "n_gv": int, "n_gs": int,
    "area_radius": float, "gs_positions": tuple, "uav_altitude": float,
    "elevation_angle_deg": float, "bandwidth": float, "tx_power": float,
    "noise_power": float, "data_bits": float, "cpu_cycles": float,
    "latency_limit": float, "f_local_max": float, "f_max_uav": float,
    "f_max_gv": float, "f_max_gs": float, "energy_coeff": float,
    "fading": str, "local_policy": str, "interference_weight": float,
    "interference_over_all": bool, "tau": float, "fcm_epsilon": float,
    "fcm_max_iter": int,
}


def save_config(config: SimConfig, path: str | Path) -> None:
    lines = [f"{f.name} = {_encode(getattr(config, f.name))}" for f in fields(config)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_config(path: str | Path) -> SimConfig:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _decode(raw, _FIELD_TYPES[key])
    return SimConfig(**values)


def with_overrides(config: SimConfig, **overrides) -> SimConfig:
    """Copy of the config with selected fields replaced."""
    return replace(config, **overrides)
