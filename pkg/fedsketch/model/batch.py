#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
from dataclasses import dataclass

import numpy as np

from fedsketch.model.exceptions import ModelInputError


@dataclass(eq=False)
class Batch:
    """
    A set of examples: features is (m, dim), labels is (m,). Labels are +/-1 for the
    binary task and class indices for the multiclass task.
    """
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ModelInputError(f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels")

    def __len__(self):
        return int(self.labels.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, index: np.ndarray) -> "Batch":
        return Batch(features=self.features[index], labels=self.labels[index])
