#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from fedsketch.model.batch import Batch
from fedsketch.model.exceptions import ModelInputError


class Model(ABC):
    """
    A model architecture over a flat float64 parameter vector. Instances hold no
    parameters, so a single instance is shared by every simulated device.
    """
    kind = None

    @property
    @abstractmethod
    def num_params(self) -> int:
        pass

    @property
    @abstractmethod
    def input_dim(self) -> int:
        pass

    @abstractmethod
    def init_params(self, *, seed: int) -> np.ndarray:
        pass

    @abstractmethod
    def _loss_and_gradient(self, params: np.ndarray, batch: Batch, with_gradient: bool):
        pass

    @abstractmethod
    def predict(self, params, features) -> np.ndarray:
        pass

    def _check(self, params, batch: Batch) -> np.ndarray:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.num_params,):
            raise ModelInputError(f"Expected {self.num_params} parameters, got shape {params.shape}")
        if len(batch) == 0:
            raise ModelInputError("Batch is empty")
        if batch.feature_dim != self.input_dim:
            raise ModelInputError(f"Feature dimension {batch.feature_dim} does not match model input {self.input_dim}")
        return params

    def loss(self, params, batch: Batch) -> float:
        """
        Mean per-example loss over the batch
        """
        params = self._check(params, batch)
        return float(self._loss_and_gradient(params, batch, False)[0])

    def gradient(self, params, batch: Batch) -> np.ndarray:
        """
        Mean per-example gradient over the batch
        """
        params = self._check(params, batch)
        return self._loss_and_gradient(params, batch, True)[1]

    def evaluate(self, params, test_set: Batch) -> Tuple[float, float]:
        """
        @return (accuracy in [0, 1], mean loss) on the test set
        """
        params = self._check(params, test_set)
        predictions = self.predict(params, test_set.features)
        accuracy = float(np.mean(predictions == test_set.labels))
        return accuracy, float(self._loss_and_gradient(params, test_set, False)[0])


class LinearModel(Model):
    """
    Squared-loss linear classifier: F(w; x, y) = (w . x - y)^2 with labels in {-1, +1},
    prediction sign(w . x) with 0 mapped to +1. With bias, a constant 1.0 feature is
    appended so the last parameter is the intercept.
    """
    kind = "linear"

    def __init__(self, *, feature_dim: int, bias: bool = True):
        if feature_dim < 1:
            raise ModelInputError(f"Invalid feature_dim: {feature_dim}")
        self.feature_dim = feature_dim
        self.bias = bias

    @property
    def num_params(self) -> int:
        return self.feature_dim + (1 if self.bias else 0)

    @property
    def input_dim(self) -> int:
        return self.feature_dim

    def init_params(self, *, seed: int = 0) -> np.ndarray:
        return np.zeros(self.num_params, dtype=np.float64)

    def augment(self, features) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if not self.bias:
            return features
        return np.hstack([features, np.ones((features.shape[0], 1))])

    def _loss_and_gradient(self, params: np.ndarray, batch: Batch, with_gradient: bool):
        x = self.augment(batch.features)
        residual = x @ params - batch.labels
        loss = np.mean(residual ** 2)
        if not with_gradient:
            return loss, None
        # per example: 2 (w.x - y) x
        return loss, 2.0 * (x.T @ residual) / len(batch)

    def predict(self, params, features) -> np.ndarray:
        scores = self.augment(features) @ np.asarray(params, dtype=np.float64)
        return np.where(scores >= 0.0, 1.0, -1.0)


class MlpModel(Model):
    """
    Two-layer perceptron: input -> hidden (ReLU) -> output, softmax cross-entropy loss.
    Flat layout: W1 (in x hidden), b1 (hidden), W2 (hidden x out), b2 (out), row-major.
    """
    kind = "mlp"

    def __init__(self, *, layer_dims):
        layer_dims = tuple(int(d) for d in layer_dims)
        if len(layer_dims) != 3 or min(layer_dims) < 1:
            raise ModelInputError(f"layer_dims must be [in, hidden, out] positive integers, got {layer_dims}")
        self.layer_dims = layer_dims

    @property
    def num_params(self) -> int:
        n_in, hidden, out = self.layer_dims
        return n_in * hidden + hidden + hidden * out + out

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def num_classes(self) -> int:
        return self.layer_dims[2]

    def unflatten(self, params) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n_in, hidden, out = self.layer_dims
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.num_params,):
            raise ModelInputError(f"Expected {self.num_params} parameters, got shape {params.shape}")
        offsets = np.cumsum([0, n_in * hidden, hidden, hidden * out, out])
        w1 = params[offsets[0]:offsets[1]].reshape(n_in, hidden)
        b1 = params[offsets[1]:offsets[2]]
        w2 = params[offsets[2]:offsets[3]].reshape(hidden, out)
        b2 = params[offsets[3]:offsets[4]]
        return w1, b1, w2, b2

    @staticmethod
    def flatten(w1, b1, w2, b2) -> np.ndarray:
        return np.concatenate([np.ravel(w1), np.ravel(b1), np.ravel(w2), np.ravel(b2)]).astype(np.float64)

    def init_params(self, *, seed: int = 0) -> np.ndarray:
        n_in, hidden, out = self.layer_dims
        rng = np.random.default_rng(seed)
        w1 = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, hidden))
        w2 = rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden, out))
        return self.flatten(w1, np.zeros(hidden), w2, np.zeros(out))

    def _class_index(self, labels: np.ndarray) -> np.ndarray:
        classes = labels.astype(np.int64)
        if np.any(classes != labels) or np.any(classes < 0) or np.any(classes >= self.num_classes):
            raise ModelInputError(f"Labels must be class indices in [0, {self.num_classes})")
        return classes

    def _forward(self, params, features):
        w1, b1, w2, b2 = self.unflatten(params)
        pre = features @ w1 + b1
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ w2 + b2
        return pre, hidden, logits

    def _loss_and_gradient(self, params: np.ndarray, batch: Batch, with_gradient: bool):
        classes = self._class_index(batch.labels)
        m = len(batch)
        pre, hidden, logits = self._forward(params, batch.features)
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        loss = -np.mean(log_probs[np.arange(m), classes])
        if not with_gradient:
            return loss, None

        _, _, w2, _ = self.unflatten(params)
        grad_logits = np.exp(log_probs)
        grad_logits[np.arange(m), classes] -= 1.0
        grad_logits /= m
        grad_w2 = hidden.T @ grad_logits
        grad_b2 = grad_logits.sum(axis=0)
        grad_pre = (grad_logits @ w2.T) * (pre > 0.0)
        grad_w1 = batch.features.T @ grad_pre
        grad_b1 = grad_pre.sum(axis=0)
        return loss, self.flatten(grad_w1, grad_b1, grad_w2, grad_b2)

    def predict(self, params, features) -> np.ndarray:
        _, _, logits = self._forward(params, np.atleast_2d(np.asarray(features, dtype=np.float64)))
        return np.argmax(logits, axis=1).astype(np.float64)


def build_model(*, kind: str, feature_dim: int, hidden_dim: int = 32, num_classes: int = 2,
                bias: bool = True) -> Model:
    """
    Construct a model by kind name
    @param kind linear or mlp
    @param feature_dim input feature dimension
    @param hidden_dim hidden units (mlp)
    @param num_classes output classes (mlp)
    @param bias append a bias feature (linear)
    """
    if kind == LinearModel.kind:
        return LinearModel(feature_dim=feature_dim, bias=bias)
    if kind == MlpModel.kind:
        return MlpModel(layer_dims=[feature_dim, hidden_dim, num_classes])
    raise ModelInputError(f"Unknown model kind: {kind}")
