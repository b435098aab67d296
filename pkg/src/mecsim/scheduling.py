"""Prediction-driven admission pipeline and the sample store behind it.

Each UE is decided in ascending index order from its own membership row.  A
predicted offload must pass the constraint layer against the already-committed
state; otherwise the decision layer falls back to local execution.  Committed
offloads are granted exactly the minimum frequency that meets the deadline at
commitment time, the same canonical form the swarm solver returns.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import Network, forward_trace, load_network, save_network
from .radio import (COVERAGE, LATENCY, NODE_CAP, REL_TOL, EvalContext,
                    EvalReport, MembershipMatrix, Solution, evaluate_solution,
                    interference_membership_matrix, local_frequency,
                    min_feasible_frequency)
from .scenario import KIND_UAV, Scenario

VALID_LABEL = "VALID_LABEL"

DEFAULT_F_SCALE = 1e12
DEFAULT_F_FLOOR = 1e6
NOVELTY_DELTA = 0.05

_STREAM_DECIDE = 8
_GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0

HEAD_REGRESSION = "regression"
HEAD_CLASSIFICATION = "classification"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def normalize_label(label: int, n_nodes: int) -> float:
    return label / n_nodes


def denormalize_label(value: float, n_nodes: int) -> int:
    return int(np.clip(round_half_up(value * n_nodes), 0, n_nodes))


def normalize_frequency(freq: float, f_scale: float = DEFAULT_F_SCALE) -> float:
    return freq / f_scale


def denormalize_frequency(value: float, f_scale: float = DEFAULT_F_SCALE,
                          f_floor: float = DEFAULT_F_FLOOR) -> float:
    return float(np.clip(value * f_scale, f_floor, f_scale))


@dataclass
class OffloadModel:
    """Trained network plus the constants that fix its input/output coding.

    Two output codings exist.  The regression head emits the normalized
    (label, frequency) pair directly.  The classification head emits one
    probability per admission choice and always requests ``f_target``, the
    shared frequency its training samples carried.

    The classification head supports two decodes.  Without a generator the
    most probable choice wins.  With one, labels are drawn from the
    predicted distributions raised to ``decode_power``: identical rows then
    spread over nodes the way the solver's own samples did, instead of
    piling onto one node until its capacity rejects the rest.  The draws
    use one equidistributed sequence per slot rather than independent
    uniforms, and an optional per-choice budget retires a choice once drawn
    that many times, so minority choices land close to their expected
    counts.  Choices whose probability falls under ``decode_floor`` times
    the row maximum are excluded from the draw; the tail of a predicted row
    mixes genuinely viable third choices with nodes the constraint layer
    would refuse, and sampling it trades admissions for nothing.
    """

    net: Network
    n_nodes: int
    f_scale: float = DEFAULT_F_SCALE
    f_floor: float = DEFAULT_F_FLOOR
    head: str = HEAD_REGRESSION
    f_target: float = 0.0
    decode_power: float = 1.0
    decode_floor: float = 0.0

    def __post_init__(self):
        out_dim = self.net.layer_sizes[-1]
        if self.head == HEAD_REGRESSION:
            expected = 2
        elif self.head == HEAD_CLASSIFICATION:
            expected = self.n_nodes + 1
            if not self.f_target > 0.0:
                raise ValueError("classification head needs a positive f_target")
        else:
            raise ValueError(f"unknown model head: {self.head}")
        if out_dim != expected:
            raise ValueError(
                f"{self.head} head expects {expected} outputs, net has {out_dim}")

    def predict_batch(self, features: np.ndarray,
                      rng: np.random.Generator | None = None,
                      budgets: np.ndarray | None = None,
                      mask: np.ndarray | None = None):
        out = forward_trace(self.net, np.asarray(features, dtype=float))[1][-1]
        if self.head == HEAD_CLASSIFICATION:
            if rng is None:
                labels = np.argmax(out, axis=1)
            else:
                labels = self._draw_labels(out, rng, budgets, mask)
            freqs = np.full(len(labels), min(self.f_target, self.f_scale))
            return labels, freqs
        labels = np.array([denormalize_label(v, self.n_nodes) for v in out[:, 0]])
        freqs = np.array([denormalize_frequency(v, self.f_scale, self.f_floor)
                          for v in out[:, 1]])
        return labels, freqs

    def _draw_labels(self, out: np.ndarray, rng: np.random.Generator,
                     budgets: np.ndarray | None,
                     mask: np.ndarray | None = None) -> np.ndarray:
        probs = np.maximum(out, 0.0)
        cut = self.decode_floor * probs.max(axis=1, keepdims=True)
        weights = np.power(np.where(probs >= cut, probs, 0.0),
                           self.decode_power)
        if mask is not None:
            weights = np.where(mask, weights, 0.0)
        n_rows, n_classes = weights.shape
        remaining = (np.full(n_classes, np.inf) if budgets is None
                     else np.asarray(budgets, dtype=float).copy())
        remaining[0] = np.inf
        # Low-discrepancy draws; offloading choices from the highest label
        # down, local execution last, so rows with similar predictions probe
        # the same window sequence and duplicate draws of a scarce choice
        # stay near the expected count.
        order = np.arange(n_classes - 1, -1, -1)
        draws = (rng.random() + _GOLDEN_RATIO * np.arange(n_rows)) % 1.0
        labels = np.zeros(n_rows, dtype=int)
        for i in range(n_rows):
            w = np.where(remaining > 0.0, weights[i], 0.0)[order]
            total = w.sum()
            if total <= 0.0:
                continue
            cdf = np.cumsum(w) / total
            label = int(order[np.argmax(cdf >= draws[i])])
            remaining[label] -= 1.0
            labels[i] = label
        return labels

    def predict(self, features) -> tuple[int, float]:
        labels, freqs = self.predict_batch(np.asarray(features)[None, :])
        return int(labels[0]), float(freqs[0])

    def save(self, path: str | Path) -> None:
        save_network(self.net, path, meta={
            "n_nodes": self.n_nodes,
            "f_scale": self.f_scale,
            "f_floor": self.f_floor,
            "head": self.head,
            "f_target": self.f_target,
            "decode_power": self.decode_power,
            "decode_floor": self.decode_floor,
        })

    @classmethod
    def load(cls, path: str | Path) -> "OffloadModel":
        net, meta = load_network(path)
        missing = {"n_nodes", "f_scale", "f_floor"} - set(meta)
        if missing:
            raise ValueError(f"checkpoint lacks metadata {sorted(missing)}: {path}")
        return cls(net, int(meta["n_nodes"]), meta["f_scale"], meta["f_floor"],
                   head=str(meta.get("head", HEAD_REGRESSION)),
                   f_target=float(meta.get("f_target", 0.0)),
                   decode_power=float(meta.get("decode_power", 1.0)),
                   decode_floor=float(meta.get("decode_floor", 0.0)))


class CommitState:
    """Running record of admitted UEs while decisions are made one by one."""

    def __init__(self, ctx: EvalContext):
        self.ctx = ctx
        c = ctx.config.n_nodes
        self.members: list[list[int]] = [[] for _ in range(c)]
        self.frequencies: list[list[float]] = [[] for _ in range(c)]
        self.load = np.zeros(c)

    def commit(self, ue_index: int, node_index: int, freq: float) -> None:
        self.members[node_index].append(ue_index)
        self.frequencies[node_index].append(freq)
        self.load[node_index] += freq

    def shared_rates(self, node_index: int, ue_indices) -> np.ndarray:
        """Co-channel rates for the given UEs if exactly they occupy the node."""
        cfg = self.ctx.config
        signals = self.ctx.signal[list(ue_indices), node_index]
        total = signals.sum()
        if cfg.interference_over_all:
            total = self.ctx.signal[:, node_index].sum()
        sinr = signals / (total - signals + cfg.noise_power)
        return cfg.bandwidth * np.log2(1.0 + sinr)


def admission_frequency(state: CommitState, ue_index: int,
                        node_index: int) -> float:
    """Minimum feasible frequency for this UE if added to the node now."""
    ctx = state.ctx
    ue = ctx.scenario.ues[ue_index]
    if ctx.is_uav[node_index]:
        return min_feasible_frequency(ue.task, ctx.rate0[ue_index, node_index])
    group = state.members[node_index] + [ue_index]
    rates = state.shared_rates(node_index, group)
    return min_feasible_frequency(ue.task, float(rates[-1]))


def constraint_layer(state: CommitState, ue_index: int, label: int,
                     freq: float) -> tuple[str, ...]:
    """Constraint identifiers the proposed decision would violate."""
    ctx = state.ctx
    cfg = ctx.config
    ue = ctx.scenario.ues[ue_index]
    if not 0 <= label <= cfg.n_nodes:
        return (VALID_LABEL,)
    if label == 0:
        latency = math.inf if freq <= 0 else ue.task.cpu_cycles / freq
        if latency > ue.task.latency_limit * (1.0 + REL_TOL):
            return (LATENCY,)
        return ()

    bits: list[str] = []
    j = label - 1
    if ctx.is_uav[j] and not ctx.cover[ue_index, j]:
        bits.append(COVERAGE)

    need = admission_frequency(state, ue_index, j)
    if not math.isfinite(need) or freq < need * (1.0 - REL_TOL):
        bits.append(LATENCY)
    elif not ctx.is_uav[j] and state.members[j]:
        # Extra co-channel traffic lowers every member's rate; committed
        # frequencies have no slack, so any increase in their requirement
        # breaks an admitted deadline.
        group = state.members[j] + [ue_index]
        rates = state.shared_rates(j, group)
        for pos, member in enumerate(state.members[j]):
            old = state.frequencies[j][pos]
            new_need = min_feasible_frequency(ctx.scenario.ues[member].task,
                                              float(rates[pos]))
            if new_need > old * (1.0 + REL_TOL):
                bits.append(LATENCY)
                break

    if state.load[j] + freq > ctx.f_max[j] * (1.0 + REL_TOL):
        bits.append(NODE_CAP)
    return tuple(bits)


def decision_layer(state: CommitState, ue_index: int, label: int,
                   freq: float) -> tuple[int, float, tuple[str, ...]]:
    """Pass the prediction through or fall back to local execution."""
    bits = constraint_layer(state, ue_index, label, freq)
    if bits:
        cfg = state.ctx.config
        return 0, local_frequency(cfg, state.ctx.scenario.ues[ue_index].task), bits
    return label, freq, ()


@dataclass(frozen=True)
class DecisionResult:
    solution: Solution
    report: EvalReport
    predicted_labels: tuple[int, ...]
    fallbacks: tuple[tuple[int, tuple[str, ...]], ...]


def commit_labels(scenario: Scenario, proposed,
                  context: EvalContext | None = None) -> DecisionResult:
    """Admit proposed labels one UE at a time; rejects run locally.

    Admitted UEs are granted their minimum feasible frequency at commitment
    time, so the result is always a feasible assignment.
    """
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    proposed = np.asarray(proposed, dtype=int)
    if proposed.shape != (cfg.n_ue,):
        raise ValueError("label vector does not match the scenario")

    state = CommitState(ctx)
    labels = np.zeros(cfg.n_ue, dtype=int)
    freqs = np.zeros(cfg.n_ue)
    fallbacks: list[tuple[int, tuple[str, ...]]] = []
    for i in range(cfg.n_ue):
        label = int(proposed[i])
        if label <= 0 or label > cfg.n_nodes:
            freq = local_frequency(cfg, scenario.ues[i].task)
            label = 0 if 0 <= label <= cfg.n_nodes else label
        else:
            freq = admission_frequency(state, i, label - 1)
            if not math.isfinite(freq):
                freq = float(ctx.f_max[label - 1])  # rejected below on LATENCY
        label, freq, bits = decision_layer(state, i, label, freq)
        if bits:
            fallbacks.append((i, bits))
        if label > 0:
            state.commit(i, label - 1, freq)
        labels[i] = label
        freqs[i] = freq

    solution = Solution(tuple(int(x) for x in labels),
                        tuple(float(x) for x in freqs))
    report = evaluate_solution(scenario, solution, ctx)
    return DecisionResult(solution, report,
                          tuple(int(x) for x in proposed), tuple(fallbacks))


def draw_budgets(scenario: Scenario, model: OffloadModel):
    """Per-choice draw caps for the stochastic decode.

    A node whose capacity fits k grants of the model's frequency constant
    gets k draws.  Co-channel nodes get one: members hold minimum-feasible
    frequencies, so a second uploader always breaks the first deadline.
    """
    if model.head != HEAD_CLASSIFICATION:
        return None
    f_admit = min(model.f_target, model.f_scale)
    budgets = np.full(len(scenario.nodes) + 1, np.inf)
    for j, node in enumerate(scenario.nodes):
        if node.kind == KIND_UAV:
            budgets[j + 1] = math.floor(node.f_max / f_admit)
        else:
            budgets[j + 1] = 1.0
    return budgets


def decide_all(scenario: Scenario, model: OffloadModel,
               membership: MembershipMatrix | None = None,
               context: EvalContext | None = None,
               seed: int = 0) -> DecisionResult:
    ctx = context if context is not None else EvalContext(scenario)
    cfg = scenario.config
    if model.n_nodes != cfg.n_nodes:
        raise ValueError("model was trained for a different node count")
    u = membership if membership is not None else interference_membership_matrix(
        scenario, context=ctx)
    if cfg.n_ue == 0:
        return commit_labels(scenario, np.zeros(0, dtype=int), ctx)
    rng = np.random.default_rng([seed, _STREAM_DECIDE])
    # Normalized membership rows carry no absolute range, so a dominant but
    # out-of-range node looks like a covered one.  Skip such nodes in the
    # draw; the committed label still passes the full constraint check.
    mask = np.concatenate(
        [np.ones((cfg.n_ue, 1), dtype=bool), ctx.cover], axis=1)
    predicted, _ = model.predict_batch(u.values, rng=rng,
                                       budgets=draw_budgets(scenario, model),
                                       mask=mask)
    return commit_labels(scenario, predicted, ctx)


class SampleDb:
    """Append-only store of (features, label, frequency) training samples."""

    def __init__(self, n_features: int):
        self.n_features = n_features
        self._features: list[np.ndarray] = []
        self._labels: list[int] = []
        self._frequencies: list[float] = []
        self._origins: list[tuple[int, int]] = []  # (scenario seed, ue id)

    def __len__(self) -> int:
        return len(self._labels)

    def add(self, features, label: int, frequency: float,
            seed: int = 0, ue: int = 0) -> None:
        row = np.asarray(features, dtype=float)
        if row.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got {row.shape}")
        self._features.append(row)
        self._labels.append(int(label))
        self._frequencies.append(float(frequency))
        self._origins.append((seed, ue))

    @property
    def features(self) -> np.ndarray:
        if not self._features:
            return np.zeros((0, self.n_features))
        return np.stack(self._features)

    @property
    def labels(self) -> np.ndarray:
        return np.array(self._labels, dtype=int)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array(self._frequencies)

    def nearest(self, features) -> tuple[int, float]:
        """Exact nearest stored sample: (index, Euclidean distance)."""
        if not self._features:
            raise ValueError("sample store is empty")
        row = np.asarray(features, dtype=float)
        dists = np.linalg.norm(self.features - row[None, :], axis=1)
        idx = int(np.argmin(dists))
        return idx, float(dists[idx])

    def is_novel(self, features, delta: float = NOVELTY_DELTA) -> bool:
        """True when no stored sample lies within delta of the features."""
        if not self._features:
            return True
        return self.nearest(features)[1] > delta

    def save(self, path: str | Path) -> None:
        lines = ["# mecsim samples v1", f"n_features = {self.n_features}"]
        for row, label, freq, (seed, ue) in zip(
                self._features, self._labels, self._frequencies, self._origins):
            feats = " ".join("%.17g" % v for v in row)
            lines.append(f"sample {seed} {ue} {label} {freq:.17g} {feats}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SampleDb":
        text = Path(path).read_text().splitlines()
        if not text or text[0].strip() != "# mecsim samples v1":
            raise ValueError(f"not a sample store: {path}")
        db: SampleDb | None = None
        for lineno, raw in enumerate(text[1:], 2):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("n_features = "):
                db = cls(int(line[len("n_features = "):]))
            elif line.startswith("sample "):
                if db is None:
                    raise ValueError(f"{path}:{lineno}: sample before n_features")
                parts = line.split()
                seed, ue, label = int(parts[1]), int(parts[2]), int(parts[3])
                freq = float(parts[4])
                feats = [float(v) for v in parts[5:]]
                db.add(feats, label, freq, seed=seed, ue=ue)
            else:
                raise ValueError(f"{path}:{lineno}: unrecognized line: {line}")
        if db is None:
            raise ValueError(f"incomplete sample store: {path}")
        return db


def build_dataset(db: SampleDb, n_nodes: int,
                  f_scale: float = DEFAULT_F_SCALE):
    """Normalized (inputs, targets) arrays for network training."""
    x = db.features
    labels = db.labels / n_nodes
    freqs = db.frequencies / f_scale
    return x, np.column_stack((labels, freqs))


def build_label_dataset(db: SampleDb, n_nodes: int):
    """(inputs, one-hot admission labels) for the classification head.

    Local rows are dropped: running locally is the decision layer's fallback
    when a proposal fails a constraint check, not a choice worth proposing,
    and a net that proposes it forfeits admissions the commit path could
    still have granted.
    """
    x = db.features
    labels = db.labels
    if labels.size and (labels.min() < 0 or labels.max() > n_nodes):
        raise ValueError("sample label outside the admission range")
    keep = labels > 0
    x, labels = x[keep], labels[keep]
    targets = np.zeros((len(labels), n_nodes + 1))
    targets[np.arange(len(labels)), labels] = 1.0
    return x, targets
