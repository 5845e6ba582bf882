#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
from dataclasses import dataclass, field
from typing import Optional, List

import numpy as np

from fedsketch.fedsim.exceptions import FedConfigError
from fedsketch.model import SgdConfig, ModelException
from fedsketch.privacy import DpParams, PrivacyException
from fedsketch.sketch import SketchConfig, SketchException, SKETCH_TYPES
from fedsketch.util.constants import Constants


@dataclass(frozen=True)
class FedConfig:
    """
    Protocol hyperparameters shared by the vanilla and the sketched FedAvg.
    topk_fraction None resolves to 1.0 for the linear model and 0.2 for the MLP.
    """
    num_rounds: int = 100
    devices_per_round: int = 10
    sgd: SgdConfig = field(default_factory=SgdConfig)
    sketch: Optional[SketchConfig] = None
    sketch_kind: str = Constants.SKETCH_COUNT
    topk_fraction: Optional[float] = None
    algorithm: str = Constants.ALGORITHM_VANILLA
    rng_seed: int = 0
    resync_full_model: bool = False
    audit: bool = False
    workers: int = 1
    dp: Optional[DpParams] = None

    def resolved_topk(self, model_kind: str) -> float:
        if self.topk_fraction is not None:
            return self.topk_fraction
        if model_kind == Constants.MODEL_MLP:
            return Constants.DEFAULT_TOPK_MLP
        return Constants.DEFAULT_TOPK_LINEAR

    def validate(self, *, num_devices: int, num_params: int) -> "FedConfig":
        """
        Check every field and the cross-field constraints against a dataset and model
        @raises FedConfigError naming the field
        """
        if self.num_rounds < 0:
            raise FedConfigError(f"Invalid fed configuration: num_rounds={self.num_rounds}")
        if not 1 <= self.devices_per_round <= num_devices:
            raise FedConfigError(f"Invalid fed configuration: devices_per_round={self.devices_per_round} must lie "
                                 f"in [1, {num_devices}] (number of devices)")
        if self.topk_fraction is not None and not 0 < self.topk_fraction <= 1:
            raise FedConfigError(f"Invalid fed configuration: topk_fraction={self.topk_fraction} must lie in (0, 1]")
        if self.algorithm not in (Constants.ALGORITHM_VANILLA, Constants.ALGORITHM_SKETCHED):
            raise FedConfigError(f"Invalid fed configuration: algorithm={self.algorithm}")
        if self.workers < 1:
            raise FedConfigError(f"Invalid fed configuration: workers={self.workers}")
        try:
            self.sgd.validate()
            if self.dp is not None:
                self.dp.validate()
        except (ModelException, PrivacyException) as e:
            raise FedConfigError(str(e))
        if self.algorithm == Constants.ALGORITHM_SKETCHED:
            if self.sketch is None:
                raise FedConfigError("Invalid fed configuration: sketch is required for the sketched algorithm")
            if self.sketch_kind not in SKETCH_TYPES:
                raise FedConfigError(f"Invalid fed configuration: sketch_kind={self.sketch_kind}")
            try:
                self.sketch.validate()
            except SketchException as e:
                raise FedConfigError(str(e))
            if self.sketch.domain_size != num_params:
                raise FedConfigError(f"Invalid fed configuration: sketch domain_size={self.sketch.domain_size} does "
                                     f"not match model parameter count {num_params}")
        return self


@dataclass
class RoundMetrics:
    round: int
    test_accuracy: float
    test_loss: float
    bytes_uplink: int
    bytes_downlink: int
    cumulative_bytes: int
    sampled_device_ids: List[int]
    replica_drift: float = 0.0
    audit_error: Optional[float] = None

    def to_row(self) -> list:
        return [self.round, repr(float(self.test_accuracy)), repr(float(self.test_loss)), self.bytes_uplink,
                self.bytes_downlink, self.cumulative_bytes, ";".join(str(i) for i in self.sampled_device_ids)]


@dataclass(eq=False)
class ServerState:
    """
    round is the number of completed rounds; global_params is w^round
    """
    global_params: np.ndarray
    round: int = 0
    metrics_log: List[RoundMetrics] = field(default_factory=list)

    @property
    def cumulative_bytes(self) -> int:
        return self.metrics_log[-1].cumulative_bytes if self.metrics_log else 0


def dense_payload_bytes(n: int) -> int:
    return Constants.DENSE_HEADER_SIZE + Constants.COUNTER_SIZE * n
