#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import math

import numpy as np
import pytest

from fedsketch.model import Batch, LinearModel, MlpModel, SgdConfig, build_model, local_train, delta, \
    apply_delta, ModelInputError


def test_linear_loss():
    model = LinearModel(feature_dim=3)
    rng = np.random.default_rng(0)
    batch = Batch(features=rng.normal(size=(20, 3)), labels=rng.choice([-1.0, 1.0], size=20))
    assert model.loss(np.zeros(4), batch) == 1.0

    params = np.array([0.5, -1.0, 2.0, 0.25])
    consistent = Batch(features=batch.features, labels=model.augment(batch.features) @ params)
    assert model.loss(params, consistent) == pytest.approx(0.0, abs=1e-24)


def test_mlp_uniform_output_loss():
    model = MlpModel(layer_dims=[4, 3, 5])
    batch = Batch(features=np.random.default_rng(1).normal(size=(6, 4)), labels=[0, 1, 2, 3, 4, 0])
    assert model.loss(np.zeros(model.num_params), batch) == pytest.approx(math.log(5))


def test_linear_gradient():
    model = LinearModel(feature_dim=2, bias=False)
    batch = Batch(features=[[2.0, 1.0]], labels=[1.0])
    assert np.array_equal(model.gradient(np.array([1.0, 0.0]), batch), [4.0, 2.0])
    assert np.array_equal(model.gradient(np.array([0.5, 0.0]), batch), [0.0, 0.0])


def _central_differences(model, params, batch, h=1e-5):
    grad = np.zeros_like(params)
    for i in range(params.shape[0]):
        step = np.zeros_like(params)
        step[i] = h
        grad[i] = (model.loss(params + step, batch) - model.loss(params - step, batch)) / (2 * h)
    return grad


def test_linear_gradient_matches_finite_differences():
    model = LinearModel(feature_dim=3)
    rng = np.random.default_rng(2)
    batch = Batch(features=rng.normal(size=(5, 3)), labels=rng.choice([-1.0, 1.0], size=5))
    params = rng.normal(size=4)
    analytic = model.gradient(params, batch)
    numeric = _central_differences(model, params, batch)
    assert np.linalg.norm(analytic - numeric) <= 1e-6 * np.linalg.norm(analytic)


def test_mlp_gradient_matches_finite_differences():
    model = MlpModel(layer_dims=[4, 2, 2])
    checked = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        params = model.init_params(seed=seed) + rng.normal(scale=0.1, size=model.num_params)
        batch = Batch(features=rng.normal(size=(3, 4)), labels=rng.integers(0, 2, size=3))
        w1, b1, _, _ = model.unflatten(params)
        if np.min(np.abs(batch.features @ w1 + b1)) < 1e-3:
            continue
        analytic = model.gradient(params, batch)
        numeric = _central_differences(model, params, batch)
        assert np.linalg.norm(analytic - numeric) <= 1e-6 * max(np.linalg.norm(analytic), 1e-12)
        checked += 1
    assert checked > 0


def test_mlp_flat_layout():
    model = MlpModel(layer_dims=[3, 4, 2])
    assert model.num_params == 3 * 4 + 4 + 4 * 2 + 2
    params = np.arange(model.num_params, dtype=np.float64)
    w1, b1, w2, b2 = model.unflatten(params)
    assert w1.shape == (3, 4) and w2.shape == (4, 2)
    assert np.array_equal(MlpModel.flatten(w1, b1, w2, b2), params)


def test_invalid_inputs():
    model = LinearModel(feature_dim=2)
    batch = Batch(features=[[1.0, 2.0]], labels=[1.0])
    with pytest.raises(ModelInputError):
        model.loss(np.zeros(2), batch)
    with pytest.raises(ModelInputError):
        model.loss(np.zeros(3), Batch(features=[[1.0, 2.0, 3.0]], labels=[1.0]))
    with pytest.raises(ModelInputError):
        Batch(features=[[1.0, 2.0]], labels=[1.0, -1.0])
    with pytest.raises(ModelInputError):
        MlpModel(layer_dims=[3, 4, 2]).loss(np.zeros(26), Batch(features=[[0.0, 0.0, 0.0]], labels=[2]))
    with pytest.raises(ModelInputError):
        build_model(kind="cnn", feature_dim=2)


def test_sgd_zero_learning_rate_is_noop():
    model = LinearModel(feature_dim=2)
    rng = np.random.default_rng(3)
    shard = Batch(features=rng.normal(size=(12, 2)), labels=rng.choice([-1.0, 1.0], size=12))
    params = rng.normal(size=3)
    trained = local_train(model, params, shard, SgdConfig(learning_rate=0.0, batch_size=5, local_epochs=3))
    assert np.array_equal(trained, params)


def test_sgd_single_full_batch_step():
    model = LinearModel(feature_dim=2)
    rng = np.random.default_rng(4)
    shard = Batch(features=rng.normal(size=(8, 2)), labels=rng.choice([-1.0, 1.0], size=8))
    params = rng.normal(size=3)
    trained = local_train(model, params, shard, SgdConfig(learning_rate=0.1, batch_size=8, local_epochs=1))
    assert np.allclose(trained, params - 0.1 * model.gradient(params, shard), rtol=1e-12, atol=1e-12)
    assert not np.array_equal(trained, params)


def test_sgd_descends_on_separable_data():
    model = LinearModel(feature_dim=2)
    rng = np.random.default_rng(5)
    features = rng.normal(size=(60, 2))
    shard = Batch(features=features, labels=np.where(features[:, 0] + features[:, 1] >= 0, 1.0, -1.0))
    start = model.init_params(seed=0)
    trained = local_train(model, start, shard, SgdConfig(learning_rate=0.01, batch_size=10, local_epochs=50))
    assert model.loss(trained, shard) < model.loss(start, shard)


def test_sgd_is_deterministic():
    model = MlpModel(layer_dims=[3, 4, 3])
    rng = np.random.default_rng(6)
    shard = Batch(features=rng.normal(size=(25, 3)), labels=rng.integers(0, 3, size=25))
    cfg = SgdConfig(learning_rate=0.05, batch_size=4, local_epochs=2, rng_seed=99)
    params = model.init_params(seed=1)
    first = local_train(model, params, shard, cfg)
    assert np.array_equal(first, local_train(model, params, shard, cfg))
    assert np.array_equal(params, model.init_params(seed=1))


def test_invalid_sgd_config():
    model = LinearModel(feature_dim=1)
    shard = Batch(features=[[1.0]], labels=[1.0])
    for cfg in (SgdConfig(learning_rate=-1.0), SgdConfig(batch_size=0), SgdConfig(local_epochs=0)):
        with pytest.raises(ModelInputError):
            local_train(model, np.zeros(2), shard, cfg)


def test_evaluate():
    model = LinearModel(feature_dim=2, bias=False)
    rng = np.random.default_rng(7)
    features = rng.normal(size=(200, 2))
    params = np.array([1.0, -2.0])
    separable = Batch(features=features, labels=np.where(features @ params >= 0, 1.0, -1.0))
    accuracy, loss = model.evaluate(params, separable)
    assert accuracy == 1.0
    assert loss >= 0.0

    noise = Batch(features=rng.normal(size=(1000, 2)), labels=rng.choice([-1.0, 1.0], size=1000))
    accuracy, _ = model.evaluate(np.zeros(2), noise)
    assert 0.4 <= accuracy <= 0.6

    mlp = MlpModel(layer_dims=[2, 3, 4])
    accuracy, _ = mlp.evaluate(mlp.init_params(seed=3), Batch(features=features, labels=rng.integers(0, 4, size=200)))
    assert 0.0 <= accuracy <= 1.0


def test_delta_and_apply_delta():
    rng = np.random.default_rng(8)
    w, v = rng.normal(size=10), rng.normal(size=10)
    assert not delta(w, w).any()
    assert np.array_equal(apply_delta(w, np.zeros(10)), w)
    assert np.allclose(apply_delta(v, delta(w, v)), w, rtol=1e-12, atol=1e-12)
    with pytest.raises(ModelInputError):
        delta(w, np.zeros(3))
