#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from fedsketch.model.batch import Batch
from fedsketch.model.exceptions import ModelInputError
from fedsketch.model.models import Model


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    batch_size: int = 10
    local_epochs: int = 1
    rng_seed: int = 0

    def validate(self) -> "SgdConfig":
        # learning_rate == 0 is accepted as the degenerate no-op step
        if not math.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ModelInputError(f"Invalid SGD configuration: learning_rate={self.learning_rate}")
        if self.batch_size < 1:
            raise ModelInputError(f"Invalid SGD configuration: batch_size={self.batch_size}")
        if self.local_epochs < 1:
            raise ModelInputError(f"Invalid SGD configuration: local_epochs={self.local_epochs}")
        return self

    def with_seed(self, rng_seed: int) -> "SgdConfig":
        return replace(self, rng_seed=rng_seed)


def local_train(model: Model, params, shard: Batch, cfg: SgdConfig) -> np.ndarray:
    """
    Shuffled mini-batch SGD for cfg.local_epochs passes over the shard. Each epoch draws a
    fresh permutation from a generator seeded with cfg.rng_seed, so the result is a pure
    function of (params, shard, cfg). The input vector is not modified.
    @param model model architecture
    @param params starting parameters
    @param shard local examples
    @param cfg SGD settings
    @return trained parameters
    @raises ModelInputError on an empty shard
    """
    cfg.validate()
    if len(shard) == 0:
        raise ModelInputError("Cannot train on an empty shard")
    rng = np.random.default_rng(cfg.rng_seed)
    weights = np.array(params, dtype=np.float64, copy=True)
    size = len(shard)
    for _ in range(cfg.local_epochs):
        order = rng.permutation(size)
        for start in range(0, size, cfg.batch_size):
            batch = shard.subset(order[start:start + cfg.batch_size])
            weights = weights - cfg.learning_rate * model.gradient(weights, batch)
    logging.debug(f"local_train: {cfg.local_epochs} epoch(s) over {size} examples")
    return weights
