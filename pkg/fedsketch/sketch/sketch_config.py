#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import math
from dataclasses import dataclass

from fedsketch.sketch.exceptions import SketchConfigError
from fedsketch.util.constants import Constants


@dataclass(frozen=True)
class SketchConfig:
    """
    Geometry and hashing of a sketch: rows (d) independent counter arrays of width (w)
    counters each, over a domain of domain_size (n) coordinates.
    Two sketches can only be merged when their configs are equal.
    """
    width: int
    domain_size: int
    rows: int = Constants.DEFAULT_SKETCH_ROWS
    seed: int = 0
    hash_family: str = Constants.HASH_MIX64

    def validate(self) -> "SketchConfig":
        for name in ("rows", "width", "domain_size"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise SketchConfigError(f"Invalid sketch configuration: {name}={value!r} must be a positive integer")
        if self.rows >= 1 << 32 or self.width >= 1 << 32:
            raise SketchConfigError(f"Invalid sketch configuration: rows={self.rows}, width={self.width} "
                                    f"must fit in 32 bits")
        if self.domain_size > Constants.MAX_DOMAIN_SIZE:
            raise SketchConfigError(f"Invalid sketch configuration: domain_size={self.domain_size} exceeds "
                                    f"{Constants.MAX_DOMAIN_SIZE}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 1 << 64:
            raise SketchConfigError(f"Invalid sketch configuration: seed={self.seed!r} "
                                    f"must be a 64-bit unsigned integer")
        if self.hash_family not in (Constants.HASH_MIX64, Constants.HASH_SHA256):
            raise SketchConfigError(f"Invalid sketch configuration: hash_family={self.hash_family!r}")
        return self

    @property
    def counters(self) -> int:
        return self.rows * self.width

    @property
    def compression_ratio(self) -> float:
        """
        Dense coordinate count over total counter count
        """
        return self.domain_size / self.counters

    @staticmethod
    def width_for_compression(*, domain_size: int, ratio: float, rows: int = Constants.DEFAULT_SKETCH_ROWS) -> int:
        """
        Width that yields the requested compression ratio: ceil(n / (d * ratio))
        @param domain_size n
        @param ratio compression ratio, > 0
        @param rows d
        @return width
        """
        if ratio <= 0:
            raise SketchConfigError(f"Invalid compression ratio: {ratio}")
        return max(1, math.ceil(round(domain_size / (rows * ratio), 9)))
