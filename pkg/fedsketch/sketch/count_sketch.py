#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import functools
import math
import numbers
import operator
import struct
from abc import ABC, abstractmethod

import numpy as np

from fedsketch.sketch.exceptions import SketchDomainError, SketchInputError, IncompatibleSketchError, \
    SketchDeserializationError, SketchConfigError
from fedsketch.sketch.hashing import HashSpec
from fedsketch.sketch.sketch_config import SketchConfig
from fedsketch.util.constants import Constants

_HASH_CODES = {Constants.HASH_MIX64: 0, Constants.HASH_SHA256: 1}


class FrequencySketch(ABC):
    """
    Linear sketch of a length-n real vector held in a rows x width matrix of float64 counters.
    Inserting value v at index i adds s_j(i) * v to counters[j, h_j(i)] for every row j.
    Single writer; concurrent queries are safe once writes stop.
    """
    KIND = None
    KIND_CODE = None

    def __init__(self, *, config: SketchConfig, counters: np.ndarray = None):
        self.config = config.validate()
        self.hashes = HashSpec.for_config(config)
        shape = (config.rows, config.width)
        if counters is None:
            self.counters = np.zeros(shape, dtype=np.float64)
        else:
            counters = np.array(counters, dtype=np.float64)
            if counters.shape != shape:
                raise SketchConfigError(f"Counter matrix shape {counters.shape} does not match {shape}")
            self.counters = counters

    @property
    @abstractmethod
    def signs(self) -> np.ndarray:
        """ rows x n sign table applied on insert and query """

    @abstractmethod
    def _combine_rows(self, estimates: np.ndarray) -> np.ndarray:
        """ Reduce per-row estimates (axis 0) to one estimate per coordinate """

    @property
    def domain_size(self) -> int:
        return self.config.domain_size

    def _check_index(self, index) -> int:
        try:
            index = operator.index(index)
        except TypeError:
            raise SketchDomainError(f"Index {index!r} is not an integer")
        if not 0 <= index < self.config.domain_size:
            raise SketchDomainError(f"Index {index} out of range [0, {self.config.domain_size})")
        return index

    def _check_compatible(self, other: "FrequencySketch"):
        if type(other) is not type(self):
            raise IncompatibleSketchError(f"Cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.config != self.config:
            raise IncompatibleSketchError(f"Incompatible sketch configurations: {self.config} != {other.config}")

    def copy(self) -> "FrequencySketch":
        return type(self)(config=self.config, counters=self.counters.copy())

    def insert(self, index: int, value: float):
        """
        Add value at index
        @param index coordinate in [0, n)
        @param value finite float
        @raises SketchDomainError for an index out of range
        @raises SketchInputError for a non-finite value
        """
        index = self._check_index(index)
        value = float(value)
        if not math.isfinite(value):
            raise SketchInputError(f"Non-finite value {value} at index {index}")
        rows = np.arange(self.config.rows)
        self.counters[rows, self.hashes.buckets[:, index]] += self.signs[:, index] * value

    def insert_vector(self, vector):
        """
        Insert every non-zero coordinate of a dense vector; same counters as calling
        insert(i, vector[i]) in ascending i
        @param vector length-n array
        """
        vector = np.asarray(vector, dtype=np.float64)
        if vector.ndim != 1 or vector.shape[0] != self.config.domain_size:
            raise SketchDomainError(f"Vector of shape {vector.shape} does not match domain size "
                                    f"{self.config.domain_size}")
        if not np.all(np.isfinite(vector)):
            raise SketchInputError("Vector contains non-finite values")
        nonzero = np.flatnonzero(vector)
        if nonzero.size == 0:
            return
        values = vector[nonzero]
        for j in range(self.config.rows):
            np.add.at(self.counters[j], self.hashes.buckets[j, nonzero], self.signs[j, nonzero] * values)

    def _row_estimates(self, index=None) -> np.ndarray:
        rows = np.arange(self.config.rows)[:, None]
        if index is None:
            return self.signs * self.counters[rows, self.hashes.buckets]
        return self.signs[:, index] * self.counters[rows[:, 0], self.hashes.buckets[:, index]]

    def query(self, index: int) -> float:
        index = self._check_index(index)
        return float(self._combine_rows(self._row_estimates(index)[:, None])[0])

    def query_vector(self) -> np.ndarray:
        return self._combine_rows(self._row_estimates())

    def top_fraction(self, fraction: float) -> np.ndarray:
        """
        Recover the ceil(fraction * n) coordinates with largest estimated magnitude and
        zero the rest; ties go to the lower index
        @param fraction in (0, 1]
        @return length-n recovered vector
        """
        if isinstance(fraction, bool) or not (isinstance(fraction, numbers.Real) and 0 < fraction <= 1):
            raise SketchInputError(f"Top-k fraction {fraction!r} must lie in (0, 1]")
        estimates = self.query_vector()
        n = self.config.domain_size
        k = min(n, math.ceil(round(fraction * n, 9)))
        if k == n:
            return estimates
        order = np.lexsort((np.arange(n), -np.abs(estimates)))
        recovered = np.zeros(n, dtype=np.float64)
        keep = order[:k]
        recovered[keep] = estimates[keep]
        return recovered

    def merge(self, other: "FrequencySketch") -> "FrequencySketch":
        """
        Counter-wise sum of two sketches with identical configuration
        @raises IncompatibleSketchError on any config or kind mismatch
        """
        self._check_compatible(other)
        return type(self)(config=self.config, counters=self.counters + other.counters)

    def scale(self, factor: float) -> "FrequencySketch":
        factor = float(factor)
        if not math.isfinite(factor):
            raise SketchInputError(f"Non-finite scale factor {factor}")
        return type(self)(config=self.config, counters=self.counters * factor)

    def payload_bytes(self) -> int:
        return Constants.SKETCH_HEADER_SIZE + self.config.counters * Constants.COUNTER_SIZE

    def _flags(self) -> int:
        return self.KIND_CODE | (_HASH_CODES[self.config.hash_family] << 8)

    def serialize(self) -> bytes:
        header = struct.pack(Constants.SKETCH_HEADER_FORMAT, Constants.SKETCH_MAGIC, Constants.SKETCH_VERSION,
                             self._flags(), self.config.rows, self.config.width, self.config.domain_size,
                             self.config.seed)
        return header + self.counters.astype("<f8").tobytes(order="C")

    def __eq__(self, other):
        return type(other) is type(self) and other.config == self.config and \
            np.array_equal(other.counters, self.counters)

    def __repr__(self):
        return f"{type(self).__name__}(rows={self.config.rows}, width={self.config.width}, " \
               f"domain_size={self.config.domain_size}, seed={self.config.seed})"


class CountSketch(FrequencySketch):
    """
    Count Sketch: signed counters, median of the sign-corrected row estimates.
    Unbiased; a single inserted coordinate is recovered exactly. With an even number of
    rows the median is the mean of the two middle estimates.
    """
    KIND = Constants.SKETCH_COUNT
    KIND_CODE = 0

    @property
    def signs(self) -> np.ndarray:
        return self.hashes.signs

    def _combine_rows(self, estimates: np.ndarray) -> np.ndarray:
        return np.median(estimates, axis=0)


class CountMinSketch(FrequencySketch):
    """
    Count-Min: unsigned counters, minimum over rows; never underestimates a
    non-negative stream
    """
    KIND = Constants.SKETCH_COUNT_MIN
    KIND_CODE = 1

    @functools.cached_property
    def signs(self) -> np.ndarray:
        return np.ones_like(self.hashes.signs)

    def _combine_rows(self, estimates: np.ndarray) -> np.ndarray:
        return np.min(estimates, axis=0)


SKETCH_TYPES = {CountSketch.KIND: CountSketch, CountMinSketch.KIND: CountMinSketch}


def sketch_new(config: SketchConfig, *, kind: str = Constants.SKETCH_COUNT) -> FrequencySketch:
    """
    Create an all-zero sketch
    @param config sketch configuration
    @param kind count_sketch or count_min
    @raises SketchConfigError on invalid geometry or unknown kind
    """
    sketch_type = SKETCH_TYPES.get(kind)
    if sketch_type is None:
        raise SketchConfigError(f"Unknown sketch kind: {kind}")
    return sketch_type(config=config)


def deserialize(data: bytes) -> FrequencySketch:
    """
    Decode a serialized sketch
    @param data bytes produced by FrequencySketch.serialize
    @raises SketchDeserializationError naming the offset of the first bad field
    """
    size = Constants.SKETCH_HEADER_SIZE
    if len(data) < size:
        raise SketchDeserializationError(f"Truncated header: {len(data)} of {size} bytes", offset=len(data))
    magic, version, flags, rows, width, domain_size, seed = struct.unpack_from(Constants.SKETCH_HEADER_FORMAT,
                                                                               data, 0)
    if magic != Constants.SKETCH_MAGIC:
        raise SketchDeserializationError(f"Bad magic {magic!r}", offset=0)
    if version != Constants.SKETCH_VERSION:
        raise SketchDeserializationError(f"Unsupported version {version}", offset=4)
    kind_code, hash_code = flags & 0xFF, flags >> 8
    sketch_type = next((t for t in SKETCH_TYPES.values() if t.KIND_CODE == kind_code), None)
    hash_family = next((name for name, code in _HASH_CODES.items() if code == hash_code), None)
    if sketch_type is None or hash_family is None:
        raise SketchDeserializationError(f"Unknown sketch flags 0x{flags:04x}", offset=6)
    if domain_size > Constants.MAX_DOMAIN_SIZE:
        raise SketchDeserializationError(f"Domain size {domain_size} exceeds {Constants.MAX_DOMAIN_SIZE}",
                                         offset=Constants.DOMAIN_SIZE_OFFSET)
    expected = size + rows * width * Constants.COUNTER_SIZE
    if len(data) != expected:
        raise SketchDeserializationError(f"Payload length {len(data)} does not match expected {expected}",
                                         offset=min(len(data), expected))
    try:
        config = SketchConfig(rows=rows, width=width, domain_size=domain_size, seed=seed,
                              hash_family=hash_family).validate()
    except SketchConfigError as e:
        raise SketchDeserializationError(f"Invalid geometry: {e}", offset=8)
    counters = np.frombuffer(data, dtype="<f8", offset=size).reshape(rows, width).astype(np.float64)
    return sketch_type(config=config, counters=counters)

