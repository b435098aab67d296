import math

import numpy as np
import pytest

from mecsim.config import SimConfig, with_overrides
from mecsim.radio import (COVERAGE, EXCLUSIVITY, LATENCY, LOCAL_CAP, NODE_CAP,
                          EvalContext, MembershipMatrix, Solution,
                          achievable_rate, channel_gain, coverage_radius,
                          evaluate_solution, fast_fitness,
                          interference_membership_matrix, local_energy,
                          membership_from_squared, min_feasible_frequency,
                          offload_energy, selection_probabilities)
from mecsim.scenario import (KIND_GS, KIND_GV, KIND_UAV, HmecNode, Scenario,
                             Task, Ue, generate_scenario)

BANDWIDTH = 1e6
NOISE = 1e-9
TASK = Task(data_bits=8e5, cpu_cycles=1e9, latency_limit=2.0)


def manual_scenario(ue_positions, uav_positions=((0.0, 0.0),),
                    gv_positions=((10.0, 10.0),), fading=1.0, **overrides):
    """Scenario with hand-placed entities; one GS fixed at (50, 50)."""
    cfg = with_overrides(
        SimConfig(), n_ue=len(ue_positions), n_uav=len(uav_positions),
        n_gv=len(gv_positions), fading="constant", **overrides)
    task = Task(cfg.data_bits, cfg.cpu_cycles, cfg.latency_limit)
    ues = tuple(Ue(i, tuple(p), task, cfg.f_local_max)
                for i, p in enumerate(ue_positions))
    nodes = []
    for p in uav_positions:
        nodes.append(HmecNode(len(nodes), KIND_UAV, tuple(p),
                              cfg.uav_altitude, cfg.f_max_uav, fading))
    for p in gv_positions:
        nodes.append(HmecNode(len(nodes), KIND_GV, tuple(p), 0.0,
                              cfg.f_max_gv, fading))
    if cfg.n_gs:
        nodes.append(HmecNode(len(nodes), KIND_GS, (50.0, 50.0), 0.0,
                              cfg.f_max_gs, fading))
    return Scenario(config=cfg, ues=ues, nodes=tuple(nodes), seed=0)


def test_channel_gain_aerial_includes_altitude():
    assert channel_gain(1.0, 30.0, 40.0) == pytest.approx(1.0 / 2500.0)
    assert channel_gain(2.0, 0.0, 20.0) == pytest.approx(2.0 / 400.0)


def test_channel_gain_ground_is_inverse_square():
    assert channel_gain(1.0, 10.0) == pytest.approx(0.01)


def test_channel_gain_singular_at_contact():
    with pytest.raises(ValueError, match="singular"):
        channel_gain(1.0, 0.0, 0.0)


def test_channel_gain_rejects_negative_fading():
    with pytest.raises(ValueError):
        channel_gain(-0.5, 10.0)


def test_achievable_rate_matches_shannon():
    rate = achievable_rate(BANDWIDTH, 1.0, 1e-6, NOISE)
    assert rate == pytest.approx(BANDWIDTH * math.log2(1.0 + 1e-6 / NOISE))


def test_achievable_rate_with_interferers():
    rate = achievable_rate(BANDWIDTH, 1.0, 1e-6, NOISE, co_channel_gains=[1e-6])
    sinr = 1e-6 / (1e-6 + NOISE)
    assert rate == pytest.approx(BANDWIDTH * math.log2(1.0 + sinr))


def test_min_feasible_frequency_closed_form():
    # 0.8 s of upload leaves 1.2 s for 1e9 cycles.
    assert min_feasible_frequency(TASK, 1e6) == pytest.approx(1e9 / 1.2)


def test_min_feasible_frequency_deadline_exhausted():
    assert min_feasible_frequency(TASK, 4e5) == math.inf
    assert min_feasible_frequency(TASK, 0.0) == math.inf


def test_min_feasible_frequency_no_upload():
    weightless = Task(0.0, 1e9, 2.0)
    assert min_feasible_frequency(weightless, 0.0) == pytest.approx(5e8)


def test_local_energy_reference_point():
    # The deadline-exact local frequency costs a quarter joule per device.
    assert local_energy(1e-27, 5e8, 1e9) == pytest.approx(0.25)


def test_offload_energy():
    assert offload_energy(1.0, 8e5, 1e7) == pytest.approx(0.08)
    assert offload_energy(1.0, 8e5, 0.0) == math.inf


def test_coverage_radius_default_geometry():
    assert coverage_radius(SimConfig()) == pytest.approx(113.42563, abs=1e-4)


def test_membership_rows_from_metric():
    out = membership_from_squared(np.array([[1.0, 1.0]]), tau=2.0)
    assert out[0] == pytest.approx([0.5, 0.5])
    out = membership_from_squared(np.array([[1.0, 2.0]]), tau=2.0)
    assert out[0] == pytest.approx([2.0 / 3.0, 1.0 / 3.0])
    out = membership_from_squared(np.array([[1.0, 2.0]]), tau=3.0)
    expected = np.array([1.0, 2.0 ** -0.5])
    assert out[0] == pytest.approx(expected / expected.sum())


def test_membership_zero_entry_takes_all_mass():
    out = membership_from_squared(np.array([[0.0, 5.0], [0.0, 0.0]]), tau=2.0)
    assert out[0] == pytest.approx([1.0, 0.0])
    assert out[1] == pytest.approx([1.0, 0.0])


def test_membership_rejects_negative_metric():
    with pytest.raises(ValueError):
        membership_from_squared(np.array([[-1.0, 1.0]]), tau=2.0)


def test_eval_context_geometry():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    assert ctx.horizontal[0, 0] == pytest.approx(30.0)
    assert ctx.gains[0, 0] == pytest.approx(1.0 / (400.0 + 900.0))
    assert ctx.cover[0, 0]  # 30 m < 113.4 m
    assert ctx.cover[0, 1] and ctx.cover[0, 2]  # ground nodes always covered


def test_eval_context_rejects_colocated_ground_node():
    with pytest.raises(ValueError, match="singular"):
        EvalContext(manual_scenario([(10.0, 10.0)]))


def test_rates_for_shared_node_interference():
    sc = manual_scenario([(10.0, 0.0), (20.0, 0.0)], gv_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    rates = ctx.rates_for(np.array([2, 2]))
    s0, s1 = 0.01, 0.0025
    assert rates[0] == pytest.approx(BANDWIDTH * math.log2(1 + s0 / (s1 + NOISE)))
    assert rates[1] == pytest.approx(BANDWIDTH * math.log2(1 + s1 / (s0 + NOISE)))
    solo = ctx.rates_for(np.array([2, 0]))
    assert solo[0] == pytest.approx(BANDWIDTH * math.log2(1 + s0 / NOISE))
    assert solo[1] == 0.0


def test_rates_for_uav_is_interference_free():
    sc = manual_scenario([(10.0, 0.0), (20.0, 0.0)], uav_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    both = ctx.rates_for(np.array([1, 1]))
    assert both[0] == pytest.approx(ctx.rate0[0, 0])
    assert both[1] == pytest.approx(ctx.rate0[1, 0])


def test_evaluate_local_solution():
    sc = manual_scenario([(30.0, 0.0)])
    report = evaluate_solution(sc, Solution((0,), (5e8,)))
    assert report.feasible
    assert report.admitted == 0
    assert report.total_energy == pytest.approx(0.25)
    assert report.latencies[0] == pytest.approx(2.0)


def test_evaluate_offload_solution():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    rate = BANDWIDTH * math.log2(1.0 + (1.0 / 1300.0) / NOISE)
    f_min = 1e9 / (2.0 - 8e5 / rate)
    report = evaluate_solution(sc, Solution((1,), (f_min,)))
    assert report.feasible
    assert report.admitted == 1
    assert report.total_energy == pytest.approx(8e5 / rate)
    assert report.latencies[0] == pytest.approx(2.0)


def test_evaluate_flags_latency():
    sc = manual_scenario([(30.0, 0.0)])
    report = evaluate_solution(sc, Solution((1,), (1e6,)))
    assert not report.feasible
    assert {v.constraint for v in report.violations} == {LATENCY}


def test_evaluate_flags_coverage():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(200.0, 0.0)])
    report = evaluate_solution(sc, Solution((1,), (1e10,)))
    assert COVERAGE in {v.constraint for v in report.violations}


def test_evaluate_flags_node_cap():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    report = evaluate_solution(sc, Solution((1,), (2e10,)))
    assert NODE_CAP in {v.constraint for v in report.violations}


def test_evaluate_flags_local_cap():
    sc = manual_scenario([(30.0, 0.0)])
    report = evaluate_solution(sc, Solution((0,), (2e9,)))
    assert {v.constraint for v in report.violations} == {LOCAL_CAP}


def test_evaluate_flags_exclusivity():
    sc = manual_scenario([(30.0, 0.0)])
    report = evaluate_solution(sc, Solution((7,), (5e8,)))
    assert EXCLUSIVITY in {v.constraint for v in report.violations}


def test_fast_fitness_matches_report_fitness():
    cfg = with_overrides(SimConfig(), n_ue=8, fading="constant")
    sc = generate_scenario(cfg, seed=13)
    ctx = EvalContext(sc)
    rng = np.random.default_rng(7)
    for _ in range(50):
        labels = rng.integers(-1, cfg.n_nodes + 2, size=cfg.n_ue)
        freqs = rng.uniform(0, 2e9, size=cfg.n_ue)
        report = evaluate_solution(sc, Solution(tuple(int(x) for x in labels),
                                                tuple(float(f) for f in freqs)),
                                   ctx)
        expected = report.total_energy + 100.0 * len(report.violations)
        assert fast_fitness(ctx, labels, freqs, 100.0) == pytest.approx(expected)


def test_interference_membership_rows_sum_to_one():
    cfg = with_overrides(SimConfig(), n_ue=12)
    sc = generate_scenario(cfg, seed=2)
    u = interference_membership_matrix(sc)
    assert u.values.shape == (12, 5)
    assert u.values.sum(axis=1) == pytest.approx(np.ones(12), abs=1e-9)
    assert np.all(u.values >= 0)


def test_interference_membership_metric_by_hand():
    sc = manual_scenario([(10.0, 0.0), (0.0, 10.0)], gv_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    u = interference_membership_matrix(sc, context=ctx, gamma=1.0, tau=2.0)
    signal = ctx.signal
    totals = signal.sum(axis=0)
    metric = np.empty((2, 3))
    for i in range(2):
        for j in range(3):
            interference = 0.0 if j == 0 else totals[j] - signal[i, j]
            metric[i, j] = (interference + NOISE) / signal[i, j]
    inv = 1.0 / metric
    expected = inv / inv.sum(axis=1, keepdims=True)
    assert u.values == pytest.approx(expected)


def test_membership_gamma_zero_reduces_to_path_loss_ranking():
    sc = manual_scenario([(10.0, 0.0)], gv_positions=[(0.0, 0.0)])
    u = interference_membership_matrix(sc, gamma=0.0, tau=2.0)
    ctx = EvalContext(sc)
    order = np.argsort(-u.values[0])
    assert list(order) == list(np.argsort(-ctx.signal[0]))


def test_selection_probabilities_normalize():
    matrix = MembershipMatrix("test", np.array([[0.2, 0.3, 0.5]]))
    assert selection_probabilities(matrix, 0) == pytest.approx([0.2, 0.3, 0.5])
    with pytest.raises(ValueError):
        selection_probabilities(MembershipMatrix("test", np.zeros((1, 3))), 0)
