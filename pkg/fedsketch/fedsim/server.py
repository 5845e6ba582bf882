#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Union

import numpy as np

from fedsketch.data import FederatedDataset
from fedsketch.fedsim.exceptions import FedConfigError, TrainingDivergedError
from fedsketch.fedsim.fed_config import FedConfig, RoundMetrics, ServerState, dense_payload_bytes
from fedsketch.fedsim.sampling import sample_devices
from fedsketch.model import Model, build_model, local_train, delta, apply_delta
from fedsketch.privacy import add_laplace_noise, clip_l2
from fedsketch.sketch import FrequencySketch, sketch_new, SketchInputError
from fedsketch.util.constants import Constants
from fedsketch.util.utils import Utils

# Stream tags sit above any round number, so they never coincide with a per-round seed
INIT_TAG = 0x8000_0000_0000_1517
NOISE_TAG = 0x8000_0000_0000_501E


def aggregate_sketches(sketches: List[FrequencySketch], k: int) -> FrequencySketch:
    """
    (1/K) times the fold-merge of the sketches in list order (callers pass ascending device id)
    @param sketches one sketch per chosen device
    @param k number of devices K
    @raises IncompatibleSketchError on mismatched configs
    @raises SketchInputError on an empty list
    """
    if not sketches or len(sketches) != k:
        raise SketchInputError(f"Cannot aggregate {len(sketches)} sketches with K={k}")
    total = sketches[0]
    for sketch in sketches[1:]:
        total = total.merge(sketch)
    return total.scale(1.0 / k)


def resolve_model(model_kind: Union[str, Model], ds: FederatedDataset, hidden_dim: int = 32) -> Model:
    if isinstance(model_kind, Model):
        return model_kind
    return build_model(kind=model_kind, feature_dim=ds.feature_dim, hidden_dim=hidden_dim,
                       num_classes=ds.spec.output_classes)


class FedAvgServer:
    """
    Vanilla FedAvg: each round samples K devices with probability proportional to their
    sample counts, sends w^t densely, and sets w^{t+1} to the mean of the locally trained
    models, summed in ascending device id.
    Sampling and local shuffling use seeds derived from (rng_seed, round[, device id]),
    so two servers on the same config see identical random streams.
    """
    def __init__(self, *, cfg: FedConfig, ds: FederatedDataset, model: Model, initial_params: np.ndarray = None):
        self.logger = logging.getLogger()
        self.cfg = cfg.validate(num_devices=ds.num_devices, num_params=model.num_params)
        self.ds = ds
        self.model = model
        if initial_params is None:
            initial_params = model.init_params(seed=Utils.derive_seed(cfg.rng_seed, INIT_TAG))
        self.initial_params = np.array(initial_params, dtype=np.float64)
        if self.initial_params.shape != (model.num_params,):
            raise FedConfigError(f"Initial parameters of shape {self.initial_params.shape} do not match model "
                                 f"parameter count {model.num_params}")
        self.state = ServerState(global_params=self.initial_params.copy())
        self.shards = {shard.device_id: shard for shard in ds.shards}
        self.device_ids = [shard.device_id for shard in ds.shards]

    @property
    def num_params(self) -> int:
        return self.model.num_params

    def sample(self) -> List[int]:
        """
        Device ids chosen for the current round, ascending
        """
        positions = sample_devices(self.ds.sample_counts, self.cfg.devices_per_round,
                                   Utils.derive_seed(self.cfg.rng_seed, self.state.round))
        return sorted(self.device_ids[p] for p in positions)

    def _train_one(self, device_id: int, start: np.ndarray) -> np.ndarray:
        sgd = self.cfg.sgd.with_seed(Utils.derive_seed(self.cfg.rng_seed, self.state.round, device_id))
        return local_train(self.model, start, self.shards[device_id], sgd)

    def train_devices(self, starts: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
        """
        Local training of every chosen device from its start parameters; runs in a thread
        pool when cfg.workers > 1, the result does not depend on scheduling
        """
        ids = sorted(starts)
        if self.cfg.workers > 1 and len(ids) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                trained = list(pool.map(lambda i: self._train_one(i, starts[i]), ids))
        else:
            trained = [self._train_one(i, starts[i]) for i in ids]
        for device_id, params in zip(ids, trained):
            if not np.all(np.isfinite(params)):
                raise TrainingDivergedError(f"Local training diverged at round {self.state.round} on device "
                                            f"{device_id}; lower sgd.learning_rate "
                                            f"(currently {self.cfg.sgd.learning_rate})")
        return dict(zip(ids, trained))

    def _round(self, ids: List[int]) -> dict:
        w = self.state.global_params
        trained = self.train_devices({i: w for i in ids})
        total = np.zeros(self.num_params, dtype=np.float64)
        for i in ids:
            total = total + trained[i]
        self.state.global_params = total / len(ids)
        dense = dense_payload_bytes(self.num_params)
        return {"bytes_uplink": len(ids) * dense, "bytes_downlink": len(ids) * dense}

    def step(self) -> RoundMetrics:
        """
        Run one round and append its metrics
        """
        ids = self.sample()
        outcome = self._round(ids)
        accuracy, loss = self.model.evaluate(self.state.global_params, self.ds.test_set)
        traffic = outcome["bytes_uplink"] + outcome["bytes_downlink"]
        metrics = RoundMetrics(round=self.state.round, test_accuracy=accuracy, test_loss=loss,
                               bytes_uplink=outcome["bytes_uplink"], bytes_downlink=outcome["bytes_downlink"],
                               cumulative_bytes=self.state.cumulative_bytes + traffic, sampled_device_ids=ids,
                               replica_drift=outcome.get("replica_drift", 0.0),
                               audit_error=outcome.get("audit_error"))
        self.state.metrics_log.append(metrics)
        self.state.round += 1
        self.logger.info(f"round={metrics.round} accuracy={accuracy:.4f} loss={loss:.5f} "
                         f"up={metrics.bytes_uplink} down={metrics.bytes_downlink} "
                         f"cumulative={metrics.cumulative_bytes} drift={metrics.replica_drift:.3g}")
        self.logger.debug(f"round={metrics.round} devices={ids}")
        return metrics

    def run(self) -> List[RoundMetrics]:
        for _ in range(self.cfg.num_rounds):
            self.step()
        return self.state.metrics_log


class SketchedFedAvgServer(FedAvgServer):
    """
    FedAvg with sketched updates. Devices upload S(delta w_k); the server aggregates
    (1/K) sum_k S(delta w_k) and, from the next round on, sends that sketch to the chosen
    devices, each of which recovers delta w with top_fraction and applies it to its
    replica. The server reference model w^t is w^0 plus every recovered delta.

    Round 0 sends w^0 densely. A device chosen for the first time later also receives
    w^0 densely and then applies the current delta. A device's replica is the global model
    it last synchronized to, so one that skipped rounds drifts from w^t; with
    resync_full_model such a device receives w^t densely instead.
    """
    def __init__(self, *, cfg: FedConfig, ds: FederatedDataset, model: Model, initial_params: np.ndarray = None):
        super().__init__(cfg=cfg, ds=ds, model=model, initial_params=initial_params)
        if cfg.algorithm != Constants.ALGORITHM_SKETCHED:
            raise FedConfigError(f"Invalid fed configuration: algorithm={cfg.algorithm} for a sketched run")
        self.topk_fraction = cfg.resolved_topk(model.kind)
        self.replicas: Dict[int, np.ndarray] = {}
        self.synced_round: Dict[int, int] = {}
        self.pending_sketch: FrequencySketch = None
        self.pending_delta: np.ndarray = None

    def _synchronize(self, ids: List[int]) -> int:
        """
        Bring the chosen devices' replicas to the current round; returns downlink bytes
        """
        t = self.state.round
        dense = dense_payload_bytes(self.num_params)
        downlink = 0
        for i in ids:
            if t == 0:
                replica = self.initial_params.copy()
                downlink += dense
            elif self.cfg.resync_full_model and self.synced_round.get(i) != t - 1:
                replica = self.state.global_params.copy()
                downlink += dense
            else:
                replica = self.replicas.get(i)
                if replica is None:
                    replica = self.initial_params.copy()
                    downlink += dense
                replica = apply_delta(replica, self.pending_delta)
                downlink += self.pending_sketch.payload_bytes()
            self.replicas[i] = replica
            self.synced_round[i] = t
        return downlink

    def _upload(self, device_id: int, update: np.ndarray) -> FrequencySketch:
        sketch = sketch_new(self.cfg.sketch, kind=self.cfg.sketch_kind)
        sketch.insert_vector(update)
        if self.cfg.dp is not None:
            noise_seed = Utils.derive_seed(self.cfg.rng_seed, self.state.round, device_id, NOISE_TAG)
            sketch = add_laplace_noise(sketch, self.cfg.dp, noise_seed)
        return sketch

    def _round(self, ids: List[int]) -> dict:
        downlink = self._synchronize(ids)
        drift = max(float(np.linalg.norm(self.replicas[i] - self.state.global_params)) for i in ids)
        trained = self.train_devices({i: self.replicas[i] for i in ids})

        updates = {}
        for i in ids:
            updates[i] = delta(trained[i], self.replicas[i])
            if self.cfg.dp is not None:
                updates[i] = clip_l2(updates[i], self.cfg.dp.clip_norm)
        sketches = [self._upload(i, updates[i]) for i in ids]
        uplink = sum(s.payload_bytes() for s in sketches)

        aggregate = aggregate_sketches(sketches, len(ids))
        recovered = aggregate.top_fraction(self.topk_fraction)
        audit_error = None
        if self.cfg.audit:
            true_mean = np.zeros(self.num_params, dtype=np.float64)
            for i in ids:
                true_mean = true_mean + updates[i]
            true_mean = true_mean / len(ids)
            audit_error = float(np.max(np.abs(aggregate.query_vector() - true_mean)))
            self.logger.debug(f"round={self.state.round} audit max abs error={audit_error:.3g}")

        self.pending_sketch = aggregate
        self.pending_delta = recovered
        self.state.global_params = apply_delta(self.state.global_params, recovered)
        return {"bytes_uplink": uplink, "bytes_downlink": downlink, "replica_drift": drift,
                "audit_error": audit_error}


def run_fedavg(cfg: FedConfig, ds: FederatedDataset, model_kind: Union[str, Model],
               hidden_dim: int = 32) -> List[RoundMetrics]:
    """
    Vanilla FedAvg for cfg.num_rounds rounds
    @return metrics log, one entry per round
    """
    if cfg.algorithm != Constants.ALGORITHM_VANILLA:
        raise FedConfigError(f"Invalid fed configuration: algorithm={cfg.algorithm} for a vanilla run")
    return FedAvgServer(cfg=cfg, ds=ds, model=resolve_model(model_kind, ds, hidden_dim)).run()


def run_fedavg_sketch(cfg: FedConfig, ds: FederatedDataset, model_kind: Union[str, Model],
                      hidden_dim: int = 32) -> List[RoundMetrics]:
    """
    Sketched FedAvg for cfg.num_rounds rounds
    @return metrics log, one entry per round
    """
    return SketchedFedAvgServer(cfg=cfg, ds=ds, model=resolve_model(model_kind, ds, hidden_dim)).run()
