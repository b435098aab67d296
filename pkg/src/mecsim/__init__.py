"""Energy-aware task offloading for a mixed aerial/ground edge deployment.

The package covers the full pipeline: scenario generation, fuzzy clustering
for node placement, interference-discounted membership features, a particle
swarm reference solver, a small hand-rolled network that imitates it, and the
constraint-checked admission layer that turns predictions into feasible
assignments.
"""

__version__ = "0.1.0"

from .config import SimConfig, load_config, save_config, with_overrides
from .scenario import (HmecNode, Scenario, Task, Ue, export_scenario,
                       generate_scenario, import_scenario, move_nodes,
                       resample_fading)
from .radio import (EvalContext, EvalReport, MembershipMatrix, Solution,
                    Violation, achievable_rate, channel_gain, coverage_radius,
                    evaluate_solution, interference_membership_matrix,
                    local_energy, local_frequency, membership_from_squared,
                    min_feasible_frequency, offload_energy,
                    selection_probabilities)
from .clustering import (FcmState, Placement, assign_centers_to_nodes,
                         apply_placement, place_nodes, run_clustering)
from .swarm import PsoParams, SolveResult, solve
from .network import (Network, TrainParams, TrainReport, forward, gradient,
                      init_network, load_network, save_network, train)
from .scheduling import (HEAD_CLASSIFICATION, HEAD_REGRESSION, OffloadModel,
                         SampleDb, constraint_layer, decide_all, decision_layer)
from .baselines import greedy_offload, local_only, random_offload
from .oracle import OracleRefusal, OracleResult, brute_force_oracle
from .harness import (BenchSettings, CollectParams, ModelHyper,
                      collect_samples, run_bench, train_model,
                      train_regression_model)

__all__ = [
    "SimConfig", "load_config", "save_config", "with_overrides",
    "HmecNode", "Scenario", "Task", "Ue", "export_scenario",
    "generate_scenario", "import_scenario", "move_nodes", "resample_fading",
    "EvalContext", "EvalReport", "MembershipMatrix", "Solution", "Violation",
    "achievable_rate", "channel_gain", "coverage_radius", "evaluate_solution",
    "interference_membership_matrix", "local_energy", "local_frequency",
    "membership_from_squared", "min_feasible_frequency", "offload_energy",
    "selection_probabilities",
    "FcmState", "Placement", "assign_centers_to_nodes", "apply_placement",
    "place_nodes", "run_clustering",
    "PsoParams", "SolveResult", "solve",
    "Network", "TrainParams", "TrainReport", "forward", "gradient",
    "init_network", "load_network", "save_network", "train",
    "HEAD_CLASSIFICATION", "HEAD_REGRESSION",
    "OffloadModel", "SampleDb", "constraint_layer", "decide_all",
    "decision_layer",
    "greedy_offload", "local_only", "random_offload",
    "OracleRefusal", "OracleResult", "brute_force_oracle",
    "BenchSettings", "CollectParams", "ModelHyper", "collect_samples",
    "run_bench", "train_model", "train_regression_model",
    "__version__",
]
