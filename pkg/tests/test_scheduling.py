import math

import numpy as np
import pytest

from mecsim.config import SimConfig, with_overrides
from mecsim.network import IDENTITY, SOFTMAX, Layer, Network, init_network, RELU
from mecsim.radio import (COVERAGE, LATENCY, NODE_CAP, EvalContext,
                          interference_membership_matrix)
from mecsim.scenario import generate_scenario
from mecsim.scheduling import (DEFAULT_F_SCALE, HEAD_CLASSIFICATION,
                               HEAD_REGRESSION, NOVELTY_DELTA, CommitState,
                               OffloadModel, SampleDb, VALID_LABEL,
                               admission_frequency, build_dataset,
                               build_label_dataset, commit_labels,
                               constraint_layer, decide_all, decision_layer,
                               denormalize_frequency, denormalize_label,
                               draw_budgets, normalize_frequency,
                               normalize_label, round_half_up)

from test_radio import manual_scenario


def linear_net(weights, biases, activation=IDENTITY) -> Network:
    return Network([Layer(np.asarray(weights, dtype=float),
                          np.asarray(biases, dtype=float), activation)])


def classifier_stub(n_nodes: int, favored: int, f_target: float = 5e8,
                    **kwargs) -> OffloadModel:
    """Model whose softmax output always peaks on one class."""
    biases = np.zeros(n_nodes + 1)
    biases[favored] = 5.0
    net = linear_net(np.zeros((n_nodes + 1, n_nodes)), biases, SOFTMAX)
    return OffloadModel(net, n_nodes, head=HEAD_CLASSIFICATION,
                        f_target=f_target, **kwargs)


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(2.49) == 2
    assert round_half_up(-0.5) == 0


def test_label_normalization_round_trip():
    for label in range(6):
        assert denormalize_label(normalize_label(label, 5), 5) == label
    assert denormalize_label(-0.3, 5) == 0
    assert denormalize_label(1.7, 5) == 5


def test_frequency_normalization():
    assert normalize_frequency(5e8) == pytest.approx(5e-4)
    assert denormalize_frequency(5e-4) == pytest.approx(5e8)
    assert denormalize_frequency(-1.0) == pytest.approx(1e6)  # floored
    assert denormalize_frequency(2.0) == pytest.approx(1e12)  # capped


def test_model_validates_head_and_shape():
    reg_net = init_network([5, 4, 2], [RELU, IDENTITY], seed=0)
    OffloadModel(reg_net, 5)  # fine
    with pytest.raises(ValueError, match="expects 6 outputs"):
        OffloadModel(reg_net, 5, head=HEAD_CLASSIFICATION, f_target=1e8)
    cls_net = init_network([5, 4, 6], [RELU, SOFTMAX], seed=0)
    with pytest.raises(ValueError, match="positive f_target"):
        OffloadModel(cls_net, 5, head=HEAD_CLASSIFICATION)
    with pytest.raises(ValueError, match="unknown model head"):
        OffloadModel(reg_net, 5, head="quantile")


def test_regression_predictions_denormalize():
    # Constant output (0.4, 5e-4) decodes to label 2 and 5e8 cycle/s.
    net = linear_net(np.zeros((2, 5)), [0.4, 5e-4])
    model = OffloadModel(net, 5)
    labels, freqs = model.predict_batch(np.zeros((3, 5)))
    assert labels.tolist() == [2, 2, 2]
    assert freqs == pytest.approx([5e8] * 3)
    label, freq = model.predict(np.zeros(5))
    assert (label, freq) == (2, pytest.approx(5e8))


def test_classification_argmax_without_rng():
    model = classifier_stub(5, favored=3)
    labels, freqs = model.predict_batch(np.zeros((4, 5)))
    assert labels.tolist() == [3, 3, 3, 3]
    assert freqs == pytest.approx([5e8] * 4)


def test_classification_f_target_capped_by_scale():
    model = classifier_stub(5, favored=1, f_target=5e12)
    _, freqs = model.predict_batch(np.zeros((1, 5)))
    assert freqs[0] == pytest.approx(DEFAULT_F_SCALE)


def test_draw_spreads_over_near_tied_choices():
    # Two near-equal choices; the equidistributed draws split rows between
    # them instead of sending every row to the argmax.
    biases = np.array([-30.0, 3.0, 3.0, -30.0, -30.0, -30.0])
    net = linear_net(np.zeros((6, 5)), biases, SOFTMAX)
    model = OffloadModel(net, 5, head=HEAD_CLASSIFICATION, f_target=5e8)
    rng = np.random.default_rng(0)
    labels, _ = model.predict_batch(np.zeros((40, 5)), rng=rng)
    counts = np.bincount(labels, minlength=6)
    assert counts[1] + counts[2] == 40
    assert 15 <= counts[1] <= 25


def test_draw_respects_budgets():
    # The floor leaves the favored class as the only live weight; once its
    # three draws are spent the remaining rows have nowhere to go but local.
    model = classifier_stub(5, favored=2, decode_floor=0.5)
    budgets = np.full(6, np.inf)
    budgets[2] = 3.0
    rng = np.random.default_rng(1)
    labels, _ = model.predict_batch(np.zeros((10, 5)), rng=rng, budgets=budgets)
    assert labels.tolist()[:3] == [2, 2, 2]
    assert labels.tolist()[3:] == [0] * 7
    assert np.all(budgets == np.array([np.inf, np.inf, 3.0, np.inf, np.inf, np.inf]))


def test_local_budget_is_never_consumed():
    model = classifier_stub(5, favored=0)
    budgets = np.ones(6)
    rng = np.random.default_rng(2)
    labels, _ = model.predict_batch(np.zeros((8, 5)), rng=rng, budgets=budgets)
    assert labels.tolist() == [0] * 8


def test_draw_respects_mask():
    model = classifier_stub(5, favored=4)
    mask = np.ones((6, 6), dtype=bool)
    mask[:, 4] = False
    rng = np.random.default_rng(3)
    labels, _ = model.predict_batch(np.zeros((6, 5)), rng=rng, mask=mask)
    assert 4 not in labels.tolist()


def test_decode_floor_prunes_tail():
    biases = np.log(np.array([0.05, 0.6, 0.3, 0.03, 0.01, 0.01]))
    net = linear_net(np.zeros((6, 5)), biases, SOFTMAX)
    model = OffloadModel(net, 5, head=HEAD_CLASSIFICATION, f_target=5e8,
                         decode_floor=0.4)
    rng = np.random.default_rng(4)
    labels, _ = model.predict_batch(np.zeros((50, 5)), rng=rng)
    assert set(labels.tolist()) <= {1, 2}


def test_decode_power_sharpens():
    biases = np.log(np.array([1e-9, 0.7, 0.3, 1e-9, 1e-9, 1e-9]))
    net = linear_net(np.zeros((6, 5)), biases, SOFTMAX)
    sharp = OffloadModel(net, 5, head=HEAD_CLASSIFICATION, f_target=5e8,
                         decode_power=50.0)
    rng = np.random.default_rng(5)
    labels, _ = sharp.predict_batch(np.zeros((30, 5)), rng=rng)
    assert labels.tolist() == [1] * 30


def test_draw_budgets_default_layout():
    sc = generate_scenario(with_overrides(SimConfig(), fading="constant"), seed=0)
    model = classifier_stub(5, favored=1, f_target=5.25e8)
    budgets = draw_budgets(sc, model)
    assert budgets[0] == math.inf
    assert budgets[1:4].tolist() == [19.0, 19.0, 19.0]  # 1e10 // 5.25e8
    assert budgets[4:].tolist() == [1.0, 1.0]


def test_draw_budgets_regression_head_is_unlimited():
    sc = generate_scenario(SimConfig(), seed=0)
    net = linear_net(np.zeros((2, 5)), [0.0, 0.0])
    assert draw_budgets(sc, OffloadModel(net, 5)) is None


def test_admission_frequency_uav_uses_solo_rate():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    state = CommitState(ctx)
    rate = ctx.rate0[0, 0]
    expected = 1e9 / (2.0 - 8e5 / rate)
    assert admission_frequency(state, 0, 0) == pytest.approx(expected)


def test_admission_frequency_shared_node_accounts_for_members():
    sc = manual_scenario([(10.0, 0.0), (20.0, 0.0)], gv_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    state = CommitState(ctx)
    solo = admission_frequency(state, 1, 1)
    state.commit(0, 1, admission_frequency(state, 0, 1))
    shared = admission_frequency(state, 1, 1)
    assert shared > solo  # the incumbent's interference slows the upload


def test_constraint_layer_local_cases():
    sc = manual_scenario([(30.0, 0.0)])
    state = CommitState(EvalContext(sc))
    assert constraint_layer(state, 0, 0, 5e8) == ()
    assert constraint_layer(state, 0, 0, 1e6) == (LATENCY,)
    assert constraint_layer(state, 0, 7, 5e8) == (VALID_LABEL,)
    assert constraint_layer(state, 0, -1, 5e8) == (VALID_LABEL,)


def test_constraint_layer_coverage():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(200.0, 0.0)])
    state = CommitState(EvalContext(sc))
    bits = constraint_layer(state, 0, 1, 1e9)
    assert COVERAGE in bits


def test_constraint_layer_latency_on_underfunded_offload():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    state = CommitState(EvalContext(sc))
    assert constraint_layer(state, 0, 1, 1e6) == (LATENCY,)


def test_constraint_layer_node_cap():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    state = CommitState(EvalContext(sc))
    assert constraint_layer(state, 0, 1, 2e10) == (NODE_CAP,)


def test_constraint_layer_protects_committed_member():
    # The far UE holds a zero-slack grant on the ground vehicle.  The near
    # UE could meet its own deadline there, but its stronger signal would
    # drown the member's upload, so the layer refuses.
    sc = manual_scenario([(10.0, 0.0), (20.0, 0.0)], gv_positions=[(0.0, 0.0)])
    ctx = EvalContext(sc)
    state = CommitState(ctx)
    first = admission_frequency(state, 1, 1)
    assert constraint_layer(state, 1, 2, first) == ()
    state.commit(1, 1, first)
    need = admission_frequency(state, 0, 1)
    assert math.isfinite(need)
    assert LATENCY in constraint_layer(state, 0, 2, need)


def test_decision_layer_fallback_frequency():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(200.0, 0.0)])
    state = CommitState(EvalContext(sc))
    label, freq, bits = decision_layer(state, 0, 1, 1e9)
    assert label == 0
    assert freq == pytest.approx(5e8)
    assert bits == (COVERAGE,)


def test_decision_layer_passes_valid():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    state = CommitState(EvalContext(sc))
    need = admission_frequency(state, 0, 0)
    label, freq, bits = decision_layer(state, 0, 1, need)
    assert (label, freq, bits) == (1, need, ())


def test_commit_labels_grants_minimum_feasible():
    sc = manual_scenario([(30.0, 0.0)], uav_positions=[(0.0, 0.0)])
    result = commit_labels(sc, [1])
    assert result.report.feasible
    assert result.solution.labels == (1,)
    assert result.report.latencies[0] == pytest.approx(2.0)  # zero slack
    assert result.fallbacks == ()
    assert result.predicted_labels == (1,)


def test_commit_labels_rejects_out_of_range():
    sc = manual_scenario([(30.0, 0.0)])
    result = commit_labels(sc, [9])
    assert result.solution.labels == (0,)
    assert result.fallbacks[0][0] == 0
    assert VALID_LABEL in result.fallbacks[0][1]
    assert result.report.feasible


def test_commit_labels_always_feasible_on_random_proposals():
    cfg = with_overrides(SimConfig(), n_ue=12, fading="constant")
    sc = generate_scenario(cfg, seed=2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        proposal = rng.integers(-1, 7, size=12)
        result = commit_labels(sc, proposal)
        assert result.report.feasible


def test_commit_labels_shape_check():
    sc = manual_scenario([(30.0, 0.0)])
    with pytest.raises(ValueError, match="label vector"):
        commit_labels(sc, [1, 1])


def test_decide_all_requires_matching_node_count():
    sc = generate_scenario(SimConfig(), seed=0)
    model = classifier_stub(3, favored=1)
    with pytest.raises(ValueError, match="different node count"):
        decide_all(sc, model)


def test_decide_all_deterministic_and_feasible():
    cfg = with_overrides(SimConfig(), n_ue=15, fading="constant",
                         interference_weight=1e-6)
    sc = generate_scenario(cfg, seed=6)
    model = classifier_stub(5, favored=1)
    a = decide_all(sc, model, seed=3)
    b = decide_all(sc, model, seed=3)
    assert a.solution == b.solution
    assert a.report.feasible


def test_decide_all_empty_scenario():
    cfg = with_overrides(SimConfig(), n_ue=0, fading="constant")
    sc = generate_scenario(cfg, seed=0)
    model = classifier_stub(5, favored=1)
    result = decide_all(sc, model)
    assert result.solution.labels == ()
    assert result.report.feasible


def test_decide_all_masks_out_of_range_draws():
    # Every row favors UAV 1, parked far outside its range; the mask reroutes
    # the draws, so nothing has to fall back.
    sc = manual_scenario([(30.0, 0.0), (35.0, 5.0)],
                         uav_positions=[(400.0, 0.0), (0.0, 0.0)])
    model = classifier_stub(4, favored=1)
    result = decide_all(sc, model, seed=0)
    assert result.report.feasible
    assert 1 not in result.solution.labels
    assert result.fallbacks == ()


def test_sample_db_round_trip(tmp_path):
    db = SampleDb(5)
    rng = np.random.default_rng(1)
    for k in range(7):
        db.add(rng.random(5), int(rng.integers(0, 6)),
               float(rng.uniform(1e6, 1e9)), seed=100 + k, ue=k)
    path = tmp_path / "samples.txt"
    db.save(path)
    loaded = SampleDb.load(path)
    assert len(loaded) == 7
    assert np.array_equal(loaded.features, db.features)
    assert np.array_equal(loaded.labels, db.labels)
    assert np.array_equal(loaded.frequencies, db.frequencies)


def test_sample_db_validates_feature_count():
    db = SampleDb(5)
    with pytest.raises(ValueError, match="expected 5 features"):
        db.add(np.ones(4), 1, 1e8)


def test_sample_db_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("nope\n")
    with pytest.raises(ValueError, match="not a sample store"):
        SampleDb.load(path)
    path.write_text("# mecsim samples v1\nwhat 1 2\n")
    with pytest.raises(ValueError, match="unrecognized line"):
        SampleDb.load(path)


def test_novelty_check_thresholds():
    db = SampleDb(5)
    assert db.is_novel(np.zeros(5))  # empty store
    db.add(np.zeros(5), 0, 1e8)
    near = np.zeros(5)
    near[0] = 0.03
    far = np.zeros(5)
    far[0] = 0.06
    assert not db.is_novel(near)
    assert db.is_novel(far)
    boundary = np.zeros(5)
    boundary[0] = NOVELTY_DELTA
    assert not db.is_novel(boundary)  # strict inequality
    # 0.06^2 + 0.06^2 under the default radius: distance 0.0849 is novel.
    diag = np.zeros(5)
    diag[0] = diag[1] = 0.06
    idx, dist = db.nearest(diag)
    assert idx == 0
    assert dist == pytest.approx(0.0849, abs=1e-4)
    assert db.is_novel(diag)


def test_build_dataset_normalizes():
    db = SampleDb(5)
    db.add(np.full(5, 0.2), 3, 5e8)
    x, t = build_dataset(db, 5)
    assert x.shape == (1, 5)
    assert t[0] == pytest.approx([0.6, 5e-4])


def test_build_label_dataset_drops_local_rows():
    db = SampleDb(5)
    db.add(np.full(5, 0.1), 0, 5e8)
    db.add(np.full(5, 0.2), 2, 5e8)
    x, t = build_label_dataset(db, 5)
    assert x.shape == (1, 5)
    assert t.shape == (1, 6)
    assert t[0].tolist() == [0, 0, 1, 0, 0, 0]


def test_build_label_dataset_rejects_out_of_range():
    db = SampleDb(5)
    db.add(np.full(5, 0.1), 7, 5e8)
    with pytest.raises(ValueError, match="outside the admission range"):
        build_label_dataset(db, 5)


def test_model_checkpoint_round_trip(tmp_path):
    model = classifier_stub(5, favored=2, decode_power=2.0, decode_floor=0.1)
    path = tmp_path / "model.txt"
    model.save(path)
    loaded = OffloadModel.load(path)
    assert loaded.head == HEAD_CLASSIFICATION
    assert loaded.n_nodes == 5
    assert loaded.f_target == pytest.approx(5e8)
    assert loaded.decode_power == pytest.approx(2.0)
    assert loaded.decode_floor == pytest.approx(0.1)
    x = np.random.default_rng(0).random((4, 5))
    a, _ = model.predict_batch(x)
    b, _ = loaded.predict_batch(x)
    assert np.array_equal(a, b)


def test_model_load_rejects_incomplete_meta(tmp_path):
    from mecsim.network import save_network
    net = init_network([5, 2], [IDENTITY], seed=0)
    path = tmp_path / "model.txt"
    save_network(net, path, meta={"n_nodes": 5})
    with pytest.raises(ValueError, match="lacks metadata"):
        OffloadModel.load(path)
