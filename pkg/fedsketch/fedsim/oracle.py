#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
from typing import Tuple

import numpy as np

from fedsketch.data import FederatedDataset
from fedsketch.model import LinearModel


def centralized_oracle(ds: FederatedDataset, *, bias: bool = True) -> Tuple[np.ndarray, float, float]:
    """
    Closed-form least squares over all shards pooled, scored on the test set
    @return (parameters, test accuracy, test loss)
    """
    model = LinearModel(feature_dim=ds.feature_dim, bias=bias)
    pooled = ds.pooled()
    params, _, _, _ = np.linalg.lstsq(model.augment(pooled.features), pooled.labels, rcond=None)
    accuracy, loss = model.evaluate(params, ds.test_set)
    return params, accuracy, loss
