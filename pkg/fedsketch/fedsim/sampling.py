#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
from typing import List, Sequence

import numpy as np

from fedsketch.fedsim.exceptions import FedConfigError


def sample_devices(weights: Sequence[float], k: int, round_seed: int) -> List[int]:
    """
    Weighted sampling without replacement by successive draws: each draw picks a remaining
    device with probability proportional to its weight, then removes it and renormalizes.
    @param weights per-device sample counts, all >= 1
    @param k number of devices to choose
    @param round_seed seed of this round's draw
    @return k distinct positions into weights, in draw order
    @raises FedConfigError when k exceeds the number of devices
    """
    weights = np.asarray(weights, dtype=np.float64)
    if not 1 <= k <= weights.shape[0]:
        raise FedConfigError(f"devices_per_round={k} must lie in [1, {weights.shape[0]}]")
    if np.any(weights < 1):
        raise FedConfigError("Every device weight must be >= 1")
    rng = np.random.default_rng(round_seed)
    remaining = list(range(weights.shape[0]))
    chosen = []
    for _ in range(k):
        cumulative = np.cumsum(weights[remaining])
        position = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        chosen.append(remaining.pop(min(position, len(remaining) - 1)))
    return chosen
