#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import numpy as np

from fedsketch.model.exceptions import ModelInputError


def _check_lengths(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ModelInputError(f"Parameter vector length mismatch: {a.shape} vs {b.shape}")


def delta(new, old) -> np.ndarray:
    """
    Model update new - old
    """
    new = np.asarray(new, dtype=np.float64)
    old = np.asarray(old, dtype=np.float64)
    _check_lengths(new, old)
    return new - old


def apply_delta(params, update) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    update = np.asarray(update, dtype=np.float64)
    _check_lengths(params, update)
    return params + update
