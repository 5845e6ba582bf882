#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import functools
import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from fedsketch.sketch.sketch_config import SketchConfig
from fedsketch.util.constants import Constants
from fedsketch.util.utils import Utils

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(values: np.ndarray) -> np.ndarray:
    """
    Vectorized form of Utils.mix64 over a uint64 array; arithmetic wraps modulo 2^64
    """
    with np.errstate(over="ignore"):
        z = values.astype(np.uint64) + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class HashSpec:
    """
    Per-row bucket and sign functions of a sketch, tabulated over the whole domain.
    buckets[j, i] = h_j(i) in [0, width); signs[j, i] = s_j(i) in {-1.0, +1.0}.
    Bucket and sign of a row use distinct derived seeds.
    """
    bucket_seeds: tuple
    sign_seeds: tuple
    buckets: np.ndarray
    signs: np.ndarray

    @staticmethod
    def row_seeds(*, seed: int, rows: int) -> tuple:
        bucket_seeds = tuple(Utils.derive_seed(seed, 2 * j) for j in range(rows))
        sign_seeds = tuple(Utils.derive_seed(seed, 2 * j + 1) for j in range(rows))
        return bucket_seeds, sign_seeds

    @staticmethod
    @functools.lru_cache(maxsize=64)
    def for_config(config: SketchConfig) -> "HashSpec":
        bucket_seeds, sign_seeds = HashSpec.row_seeds(seed=config.seed, rows=config.rows)
        if config.hash_family == Constants.HASH_SHA256:
            buckets, signs = _sha256_tables(config=config)
        else:
            buckets, signs = _mix64_tables(config=config, bucket_seeds=bucket_seeds, sign_seeds=sign_seeds)
        buckets.setflags(write=False)
        signs.setflags(write=False)
        return HashSpec(bucket_seeds=bucket_seeds, sign_seeds=sign_seeds, buckets=buckets, signs=signs)


def _mix64_tables(*, config: SketchConfig, bucket_seeds: tuple, sign_seeds: tuple):
    index = np.arange(config.domain_size, dtype=np.uint64)
    buckets = np.empty((config.rows, config.domain_size), dtype=np.int64)
    signs = np.empty((config.rows, config.domain_size), dtype=np.float64)
    width = np.uint64(config.width)
    for j in range(config.rows):
        h = mix64(index ^ np.uint64(bucket_seeds[j]))
        buckets[j] = ((h >> np.uint64(32)) % width).astype(np.int64)
        g = mix64(index ^ np.uint64(sign_seeds[j]))
        signs[j] = 1.0 - 2.0 * (g & np.uint64(1)).astype(np.float64)
    return buckets, signs


def _sha256_tables(*, config: SketchConfig):
    buckets = np.empty((config.rows, config.domain_size), dtype=np.int64)
    signs = np.empty((config.rows, config.domain_size), dtype=np.float64)
    for j in range(config.rows):
        for i in range(config.domain_size):
            digest = hashlib.sha256(struct.pack("<QIQ", config.seed, j, i)).digest()
            buckets[j, i] = int.from_bytes(digest[:8], "little") % config.width
            signs[j, i] = -1.0 if digest[8] & 1 else 1.0
    return buckets, signs
