#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fedsketch.privacy.exceptions import PrivacyInputError
from fedsketch.sketch import FrequencySketch


@dataclass(frozen=True)
class DpParams:
    """
    Laplace mechanism settings. sensitivity is the max L1 change of the counters when one
    input element changes; it is supplied by the caller, and clip_norm (L2, applied to an
    update before sketching) is the knob that bounds it.
    """
    epsilon: float
    sensitivity: float = 1.0
    clip_norm: Optional[float] = None

    def validate(self) -> "DpParams":
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise PrivacyInputError(f"Invalid privacy configuration: epsilon={self.epsilon} must be positive")
        if not (math.isfinite(self.sensitivity) and self.sensitivity > 0):
            raise PrivacyInputError(f"Invalid privacy configuration: sensitivity={self.sensitivity} must be positive")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise PrivacyInputError(f"Invalid privacy configuration: clip_norm={self.clip_norm} must be positive")
        return self

    @property
    def scale(self) -> float:
        """
        Laplace scale b = sensitivity / epsilon
        """
        return self.sensitivity / self.epsilon


def laplace_noise(*, scale: float, size, seed: int) -> np.ndarray:
    """
    Laplace(0, scale) samples by inverse CDF over a seeded uniform stream
    """
    if not scale > 0:
        raise PrivacyInputError(f"Laplace scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    u = rng.random(size) - 0.5
    tail = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(np.float64).tiny)
    return -scale * np.sign(u) * np.log(tail)


def add_laplace_noise(sk: FrequencySketch, dp: DpParams, noise_seed: int) -> FrequencySketch:
    """
    Copy of the sketch with independent Laplace(sensitivity/epsilon) noise on every counter
    @param sk sketch, left unmodified
    @param dp mechanism settings
    @param noise_seed seed of the noise stream
    @raises PrivacyInputError for epsilon <= 0
    """
    dp.validate()
    noisy = sk.copy()
    noisy.counters = noisy.counters + laplace_noise(scale=dp.scale, size=noisy.counters.shape, seed=noise_seed)
    return noisy


def clip_l2(vector, clip_norm: Optional[float]) -> np.ndarray:
    """
    Scale vector down to L2 norm clip_norm if it is longer; None disables clipping
    """
    vector = np.asarray(vector, dtype=np.float64)
    if clip_norm is None:
        return vector
    if not clip_norm > 0:
        raise PrivacyInputError(f"clip_norm must be positive, got {clip_norm}")
    norm = float(np.linalg.norm(vector))
    if norm <= clip_norm:
        return vector
    return vector * (clip_norm / norm)
