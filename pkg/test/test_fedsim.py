#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import csv
import itertools
from collections import Counter

import numpy as np
import pytest

from fedsketch.data import SyntheticSpec, generate_synthetic
from fedsketch.experiment_manager import SKETCH_SEED_TAG
from fedsketch.fedsim import FedConfig, FedAvgServer, SketchedFedAvgServer, aggregate_sketches, run_fedavg, \
    run_fedavg_sketch, sample_devices, emit_metrics_csv, centralized_oracle, dense_payload_bytes, FedConfigError, \
    TrainingDivergedError
from fedsketch.fedsim.server import INIT_TAG, NOISE_TAG
from fedsketch.model import SgdConfig, LinearModel, build_model, local_train
from fedsketch.privacy import DpParams
from fedsketch.sketch import SketchConfig, HashSpec, sketch_new, SketchInputError
from fedsketch.util.utils import Utils


def _dataset(num_devices=4, feature_dim=19, samples_mean=30, seed=0, **kwargs):
    return generate_synthetic(SyntheticSpec(num_devices=num_devices, samples_mean=samples_mean, samples_stdev=5,
                                            feature_dim=feature_dim, seed=seed, **kwargs))


def _collision_free_config(n, width, rows=5):
    """ Sketch config whose hashes leave every coordinate alone in a majority of rows """
    for seed in range(1000):
        config = SketchConfig(rows=rows, width=width, domain_size=n, seed=seed)
        buckets = HashSpec.for_config(config).buckets
        shared = np.zeros(n, dtype=int)
        for row in buckets:
            counts = np.bincount(row, minlength=width)
            shared += counts[row] > 1
        if np.all(shared < (rows + 1) // 2):
            return config
    raise AssertionError("no collision-free seed found")


def test_sample_all_devices():
    assert sorted(sample_devices([5, 1, 9, 2], 4, 123)) == [0, 1, 2, 3]


def test_sample_single_device_frequency():
    counts = Counter(sample_devices([100, 50, 50], 1, seed)[0] for seed in range(10000))
    assert abs(counts[0] / 10000 - 0.5) <= 0.02


def test_sample_pair_frequency():
    trials = 30000
    counts = Counter(tuple(sorted(sample_devices([1, 1, 1], 2, seed))) for seed in range(trials))
    for pair in itertools.combinations(range(3), 2):
        assert abs(counts[pair] / trials - 1 / 3) <= 0.02


def test_sample_invalid():
    with pytest.raises(FedConfigError):
        sample_devices([1, 2], 3, 0)
    with pytest.raises(FedConfigError):
        sample_devices([1, 2], 0, 0)
    with pytest.raises(FedConfigError):
        sample_devices([1, 0], 1, 0)


def test_sample_is_deterministic():
    weights = list(range(1, 31))
    assert sample_devices(weights, 10, 77) == sample_devices(weights, 10, 77)
    assert len(set(sample_devices(weights, 10, 77))) == 10


def test_vanilla_averages_trained_models():
    ds = _dataset(num_devices=2, feature_dim=1)
    server = FedAvgServer(cfg=FedConfig(num_rounds=1, devices_per_round=2), ds=ds, model=LinearModel(feature_dim=1))
    server.train_devices = lambda starts: {0: np.array([1.0, 3.0]), 1: np.array([3.0, 5.0])}
    metrics = server.step()
    assert np.array_equal(server.state.global_params, [2.0, 4.0])
    assert metrics.bytes_uplink == metrics.bytes_downlink == 2 * dense_payload_bytes(2) == 32


def test_zero_rounds():
    ds = _dataset()
    server = FedAvgServer(cfg=FedConfig(num_rounds=0, devices_per_round=2), ds=ds, model=LinearModel(feature_dim=19))
    assert server.run() == []
    assert np.array_equal(server.state.global_params, server.initial_params)


def test_vanilla_close_to_centralized_oracle():
    spec = SyntheticSpec(num_devices=30, feature_dim=10, heterogeneity_alpha=0.5, heterogeneity_beta=0.5, seed=2)
    ds = generate_synthetic(spec)
    cfg = FedConfig(num_rounds=100, devices_per_round=10, rng_seed=5, sgd=SgdConfig(learning_rate=0.05))
    log = run_fedavg(cfg, ds, "linear")
    assert len(log) == 100
    _, oracle_accuracy, _ = centralized_oracle(ds)
    assert abs(log[-1].test_accuracy - oracle_accuracy) <= 0.03


def test_vanilla_is_deterministic_across_workers():
    ds = _dataset(num_devices=6)
    serial = run_fedavg(FedConfig(num_rounds=4, devices_per_round=3, rng_seed=1), ds, "linear")
    pooled = run_fedavg(FedConfig(num_rounds=4, devices_per_round=3, rng_seed=1, workers=4), ds, "linear")
    assert [m.to_row() for m in serial] == [m.to_row() for m in pooled]


def test_invalid_fed_config():
    ds = _dataset(num_devices=4)
    with pytest.raises(FedConfigError) as e:
        run_fedavg(FedConfig(devices_per_round=5), ds, "linear")
    assert "devices_per_round" in str(e.value)
    with pytest.raises(FedConfigError):
        run_fedavg(FedConfig(devices_per_round=2, algorithm="sketched"), ds, "linear")
    with pytest.raises(FedConfigError):
        run_fedavg_sketch(FedConfig(devices_per_round=2, algorithm="sketched",
                                    sketch=SketchConfig(width=8, domain_size=7)), ds, "linear")
    with pytest.raises(FedConfigError):
        run_fedavg_sketch(FedConfig(devices_per_round=2, algorithm="sketched"), ds, "linear")


def test_sketched_recovers_true_average_update():
    ds = _dataset(num_devices=4, feature_dim=19)
    model = LinearModel(feature_dim=19)
    sketch = _collision_free_config(20, 200)
    cfg = FedConfig(num_rounds=5, devices_per_round=4, algorithm="sketched", sketch=sketch, topk_fraction=1.0,
                    rng_seed=3, audit=True)
    server = SketchedFedAvgServer(cfg=cfg, ds=ds, model=model)
    for t in range(cfg.num_rounds):
        start = server.state.global_params.copy()
        metrics = server.step()
        trained = [local_train(model, start, ds.shards[i], cfg.sgd.with_seed(Utils.derive_seed(cfg.rng_seed, t, i)))
                   for i in metrics.sampled_device_ids]
        true_mean = np.mean([w - start for w in trained], axis=0)
        assert np.linalg.norm(server.pending_delta - true_mean) <= 0.05 * np.linalg.norm(true_mean)
        assert metrics.replica_drift == 0.0
        assert metrics.audit_error <= 1e-12

    vanilla = run_fedavg(FedConfig(num_rounds=5, devices_per_round=4, rng_seed=3), ds, model)
    assert np.allclose([m.test_accuracy for m in server.state.metrics_log], [m.test_accuracy for m in vanilla])


def test_resynced_sketched_trajectory_matches_vanilla():
    ds = _dataset(num_devices=10, feature_dim=19)
    model = LinearModel(feature_dim=19)
    base = dict(num_rounds=20, devices_per_round=3, rng_seed=8)
    vanilla = FedAvgServer(cfg=FedConfig(**base), ds=ds, model=model)
    sketched = SketchedFedAvgServer(cfg=FedConfig(algorithm="sketched", sketch=_collision_free_config(20, 2000),
                                                  topk_fraction=1.0, resync_full_model=True, audit=True, **base),
                                    ds=ds, model=model)
    for _ in range(20):
        expected, actual = vanilla.step(), sketched.step()
        assert actual.sampled_device_ids == expected.sampled_device_ids
        assert actual.audit_error < 1e-9
        reference = vanilla.state.global_params
        gap = np.linalg.norm(sketched.state.global_params - reference)
        assert gap <= 1e-6 * np.linalg.norm(reference)


def _default_scale_dataset():
    # 30 devices, 60 features, 61 parameters with the bias
    return generate_synthetic(SyntheticSpec())


def _compressed_config(ratio, rounds=200):
    sketch = SketchConfig(width=SketchConfig.width_for_compression(domain_size=61, ratio=ratio), domain_size=61,
                          seed=Utils.derive_seed(0, SKETCH_SEED_TAG))
    return FedConfig(num_rounds=rounds, devices_per_round=10, algorithm="sketched", sketch=sketch)


def test_default_sgd_tracks_centralized_oracle():
    ds = _default_scale_dataset()
    log = run_fedavg(FedConfig(num_rounds=200, devices_per_round=10), ds, "linear")
    _, oracle_accuracy, _ = centralized_oracle(ds)
    assert np.isfinite(log[-1].test_loss)
    assert abs(log[-1].test_accuracy - oracle_accuracy) <= 0.03


def test_compressed_runs_do_not_beat_dense_baseline():
    ds = _default_scale_dataset()
    dense = run_fedavg(FedConfig(num_rounds=200, devices_per_round=10), ds, "linear")
    for ratio in (10, 25):
        log = run_fedavg_sketch(_compressed_config(ratio), ds, "linear")
        assert len(log) == 200
        assert log[-1].test_accuracy <= dense[-1].test_accuracy + 0.02
        assert log[-1].cumulative_bytes < dense[-1].cumulative_bytes


def test_diverging_training_is_reported():
    ds = _dataset(num_devices=4, feature_dim=4)
    cfg = FedConfig(num_rounds=200, devices_per_round=2, sgd=SgdConfig(learning_rate=1000.0))
    with pytest.raises(TrainingDivergedError) as e:
        run_fedavg(cfg, ds, "linear")
    assert "learning_rate" in str(e.value)


def test_stream_tags_never_match_round_seeds():
    round_seeds = {Utils.derive_seed(7, t) for t in range(30000)}
    for tag in (INIT_TAG, NOISE_TAG, SKETCH_SEED_TAG):
        assert Utils.derive_seed(7, tag) not in round_seeds


def test_sketched_payload_bytes():
    ds = _dataset(num_devices=2, feature_dim=6009, samples_mean=3)
    sketch = SketchConfig(rows=5, width=120, domain_size=6010)
    cfg = FedConfig(num_rounds=1, devices_per_round=2, algorithm="sketched", sketch=sketch)
    log = run_fedavg_sketch(cfg, ds, "linear")
    assert len(log) == 1
    assert log[0].bytes_uplink == 2 * 4832
    assert log[0].bytes_downlink == 2 * 48080
    assert log[0].cumulative_bytes == 2 * 4832 + 2 * 48080
    dense = run_fedavg(FedConfig(num_rounds=1, devices_per_round=2), ds, "linear")
    assert dense[0].bytes_uplink == 2 * 48080


@pytest.mark.parametrize("resync", [False, True])
def test_sketched_downlink_and_drift(resync):
    ds = _dataset(num_devices=3, feature_dim=4)
    sketch = SketchConfig(rows=5, width=4, domain_size=5, seed=1)
    cfg = FedConfig(num_rounds=10, devices_per_round=1, algorithm="sketched", sketch=sketch, rng_seed=4,
                    resync_full_model=resync)
    log = run_fedavg_sketch(cfg, ds, "linear")
    dense, payload = dense_payload_bytes(5), sketch_new(sketch).payload_bytes()
    last_synced = {}
    for t, metrics in enumerate(log):
        (device,) = metrics.sampled_device_ids
        previous = last_synced.get(device)
        if t == 0:
            expected, stale = dense, False
        elif resync and previous != t - 1:
            expected, stale = dense, False
        elif previous is None:
            expected, stale = dense + payload, t >= 2
        else:
            expected, stale = payload, previous != t - 1
        assert metrics.bytes_downlink == expected
        assert metrics.bytes_uplink == payload
        if stale:
            assert metrics.replica_drift > 0.0
        else:
            assert metrics.replica_drift == 0.0
        last_synced[device] = t
    assert all(b >= a for a, b in zip([m.cumulative_bytes for m in log], [m.cumulative_bytes for m in log][1:]))


def test_sketched_with_negligible_noise():
    ds = _dataset(num_devices=4, feature_dim=4)
    sketch = SketchConfig(rows=5, width=8, domain_size=5, seed=2)
    base = dict(num_rounds=3, devices_per_round=2, algorithm="sketched", sketch=sketch, rng_seed=6)
    plain = run_fedavg_sketch(FedConfig(**base), ds, "linear")
    noised = run_fedavg_sketch(FedConfig(dp=DpParams(epsilon=1e12), **base), ds, "linear")
    assert np.allclose([m.test_loss for m in plain], [m.test_loss for m in noised], rtol=1e-6)
    loud = run_fedavg_sketch(FedConfig(dp=DpParams(epsilon=0.1, clip_norm=1.0), **base), ds, "linear")
    assert [m.test_loss for m in loud] != [m.test_loss for m in plain]


def test_sketched_mlp_runs():
    ds = generate_synthetic(SyntheticSpec(num_devices=5, samples_mean=20, samples_stdev=4, feature_dim=6,
                                          task="multiclass", num_classes=3))
    n = 6 * 8 + 8 + 8 * 3 + 3
    cfg = FedConfig(num_rounds=3, devices_per_round=2, algorithm="sketched",
                    sketch=SketchConfig(width=20, domain_size=n), sgd=SgdConfig(learning_rate=0.1))
    model = build_model(kind="mlp", feature_dim=6, hidden_dim=8, num_classes=3)
    server = SketchedFedAvgServer(cfg=cfg, ds=ds, model=model)
    assert server.topk_fraction == 0.2
    log = server.run()
    assert len(log) == 3
    assert all(0.0 <= m.test_accuracy <= 1.0 for m in log)
    assert np.count_nonzero(server.pending_delta) == int(np.ceil(0.2 * n))


def test_aggregate_sketches():
    config = SketchConfig(width=16, domain_size=30, seed=5)
    rng = np.random.default_rng(0)
    sketches = []
    for _ in range(3):
        sketch = sketch_new(config)
        sketch.insert_vector(rng.normal(size=30))
        sketches.append(sketch)
    assert aggregate_sketches(sketches[:1], 1) == sketches[0]
    aggregate = aggregate_sketches(sketches, 3)
    expected = (sketches[0].counters + sketches[1].counters + sketches[2].counters) / 3
    assert np.allclose(aggregate.counters, expected, rtol=1e-9, atol=1e-12)

    u = rng.normal(size=30)
    positive, negative = sketch_new(config), sketch_new(config)
    positive.insert_vector(u)
    negative.insert_vector(-u)
    assert np.allclose(aggregate_sketches([positive, negative], 2).counters, 0.0, atol=1e-9)
    with pytest.raises(SketchInputError):
        aggregate_sketches([], 1)
    with pytest.raises(SketchInputError):
        aggregate_sketches(sketches, 2)


def test_metrics_csv(tmp_path):
    path = tmp_path / "metrics.csv"
    emit_metrics_csv([], str(path))
    assert path.read_text().splitlines() == ["round,test_accuracy,test_loss,bytes_uplink,bytes_downlink,"
                                             "cumulative_bytes,sampled_devices"]

    log = run_fedavg(FedConfig(num_rounds=3, devices_per_round=2), _dataset(), "linear")
    emit_metrics_csv(log, str(path))
    with open(path) as stream:
        rows = list(csv.DictReader(stream))
    assert len(rows) == 3
    assert [int(r["round"]) for r in rows] == [0, 1, 2]
    cumulative = [int(r["cumulative_bytes"]) for r in rows]
    assert cumulative == sorted(cumulative)
    assert rows[0]["sampled_devices"] == ";".join(str(i) for i in log[0].sampled_device_ids)
