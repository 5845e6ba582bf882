#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import copy
import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field, fields, asdict, replace
from typing import Optional, List, Tuple

from fedsketch.data import SyntheticSpec, FederatedDataset, generate_synthetic, load_csv, DataException
from fedsketch.fedsim import FedConfig, RoundMetrics, FedAvgServer, SketchedFedAvgServer, emit_metrics_csv, \
    FedSimException
from fedsketch.model import SgdConfig, Model, build_model, ModelException
from fedsketch.privacy import DpParams, AttackReport, guessing_attack_experiment, PrivacyException, \
    ADVERSARY_UNIFORM, ADVERSARY_SEEDED
from fedsketch.sketch import SketchConfig, SketchException
from fedsketch.util.constants import Constants
from fedsketch.util.utils import Utils

SKETCH_SEED_TAG = 0x8000_0000_0000_5EED


class ExperimentConfigException(Exception):
    """ Invalid experiment configuration; the message names the offending field """


@dataclass(frozen=True)
class ModelSettings:
    kind: str = Constants.MODEL_LINEAR
    hidden_dim: int = 32
    bias: bool = True


@dataclass(frozen=True)
class AttackConfig:
    trials: int = 10000
    seed: int = 0
    adversary: str = ADVERSARY_UNIFORM
    n: Optional[int] = None
    rows: int = Constants.DEFAULT_SKETCH_ROWS
    width: int = 64


_FED_NESTED = ("sgd", "sketch", "dp")
_SKETCH_KEYS = ("rows", "width", "seed", "hash_family", "domain_size")
_TOP_LEVEL = ("data", "data_dir", "model", "sgd", "fed", "sketch", "compression", "dp", "attack", "output_dir")


def _build(cls, raw, section: str, exclude=()):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ExperimentConfigException(f"Section '{section}' must be a JSON object")
    allowed = {f.name for f in fields(cls)} - set(exclude)
    for key in raw:
        if key not in allowed:
            raise ExperimentConfigException(f"Unknown field '{section}.{key}'")
    try:
        return cls(**raw)
    except TypeError as e:
        raise ExperimentConfigException(f"Invalid section '{section}': {e}")


@dataclass
class ExperimentConfig:
    """
    One experiment as a JSON document: data (or data_dir), model, sgd, fed, sketch,
    compression, dp, attack and output_dir. compression and explicit sketch rows/width
    are mutually exclusive.
    """
    data: SyntheticSpec = field(default_factory=SyntheticSpec)
    data_dir: Optional[str] = None
    model: ModelSettings = field(default_factory=ModelSettings)
    sgd: SgdConfig = field(default_factory=SgdConfig)
    fed: FedConfig = field(default_factory=FedConfig)
    sketch: Optional[dict] = None
    compression: Optional[float] = None
    dp: Optional[DpParams] = None
    attack: Optional[AttackConfig] = None
    output_dir: Optional[str] = None

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ExperimentConfigException("Experiment configuration must be a JSON object")
        for key in raw:
            if key not in _TOP_LEVEL:
                raise ExperimentConfigException(f"Unknown field '{key}'")
        sketch = raw.get("sketch")
        if sketch is not None:
            if not isinstance(sketch, dict):
                raise ExperimentConfigException("Section 'sketch' must be a JSON object")
            for key in sketch:
                if key not in _SKETCH_KEYS:
                    raise ExperimentConfigException(f"Unknown field 'sketch.{key}'")
        compression = raw.get("compression")
        if compression is not None and (isinstance(compression, bool) or not isinstance(compression, (int, float))):
            raise ExperimentConfigException(f"Invalid field 'compression': {compression!r}")
        return ExperimentConfig(data=_build(SyntheticSpec, raw.get("data"), "data"),
                                data_dir=raw.get("data_dir"),
                                model=_build(ModelSettings, raw.get("model"), "model"),
                                sgd=_build(SgdConfig, raw.get("sgd"), "sgd"),
                                fed=_build(FedConfig, raw.get("fed"), "fed", exclude=_FED_NESTED),
                                sketch=dict(sketch) if sketch is not None else None,
                                compression=compression,
                                dp=_build(DpParams, raw["dp"], "dp") if raw.get("dp") is not None else None,
                                attack=_build(AttackConfig, raw["attack"], "attack")
                                if raw.get("attack") is not None else None,
                                output_dir=raw.get("output_dir"))

    @staticmethod
    def load(path: str, *, overrides: List[Tuple[str, str]] = None) -> "ExperimentConfig":
        """
        Read a JSON config and apply dotted overrides such as ("fed.devices_per_round", "10")
        @param path config file; None starts from the defaults
        @param overrides (dotted key, raw value) pairs; values are parsed as JSON, else kept as strings
        """
        raw = {}
        if path is not None:
            if not os.path.exists(path):
                raise ExperimentConfigException(f"Config file '{path}' does not exist!")
            with open(path, "r") as stream:
                try:
                    raw = json.loads(stream.read())
                except json.JSONDecodeError as e:
                    raise ExperimentConfigException(f"Malformed config '{path}' line {e.lineno}: {e.msg}")
            if not isinstance(raw, dict):
                raise ExperimentConfigException(f"Config '{path}' must hold a JSON object")
        for key, value in overrides or []:
            ExperimentConfig.apply_override(raw, key, value)
        return ExperimentConfig.from_dict(raw)

    @staticmethod
    def apply_override(raw: dict, key: str, value):
        parts = key.split(".")
        if any(not p for p in parts):
            raise ExperimentConfigException(f"Invalid override key '{key}'")
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError:
                pass
        target = raw
        for part in parts[:-1]:
            if target.get(part) is None:
                target[part] = {}
            target = target[part]
            if not isinstance(target, dict):
                raise ExperimentConfigException(f"Override '{key}' does not address a section")
        target[parts[-1]] = value

    def to_dict(self) -> dict:
        fed = {f.name: getattr(self.fed, f.name) for f in fields(FedConfig) if f.name not in _FED_NESTED}
        return {"data": asdict(self.data), "data_dir": self.data_dir, "model": asdict(self.model),
                "sgd": asdict(self.sgd), "fed": fed, "sketch": copy.deepcopy(self.sketch),
                "compression": self.compression, "dp": asdict(self.dp) if self.dp else None,
                "attack": asdict(self.attack) if self.attack else None, "output_dir": self.output_dir}


@dataclass(eq=False)
class ResolvedExperiment:
    config: ExperimentConfig
    dataset: FederatedDataset
    model: Model
    fed: FedConfig


class ExperimentManager:
    """
    Resolves an ExperimentConfig (data, model, sketch geometry, cross-field checks), runs
    the chosen algorithm and writes resolved_config.json, metrics.csv and, when an attack
    section is present, attack_report.csv into the output directory.
    """
    def __init__(self, *, config: ExperimentConfig, output_dir: str = None):
        self.logger = logging.getLogger()
        self.config = config
        if output_dir is None:
            output_dir = config.output_dir
        if output_dir is None:
            output_dir = os.environ.get(Constants.FEDSKETCH_OUTPUT_DIR)
        if output_dir is None:
            raise ExperimentConfigException("Invalid field 'output_dir': an output directory must be specified")
        self.output_dir = output_dir

    def _sketch_config(self, *, num_params: int, rng_seed: int) -> Optional[SketchConfig]:
        config = self.config
        sketch = dict(config.sketch or {})
        if config.compression is not None:
            if config.compression <= 0 or not math.isfinite(config.compression):
                raise ExperimentConfigException(f"Invalid field 'compression': {config.compression} must be > 0")
            if "rows" in sketch or "width" in sketch:
                raise ExperimentConfigException("Invalid field 'compression': mutually exclusive with explicit "
                                                "'sketch.rows'/'sketch.width'")
            if config.compression == 1:
                return None
            sketch["rows"] = Constants.DEFAULT_SKETCH_ROWS
            sketch["width"] = SketchConfig.width_for_compression(domain_size=num_params, ratio=config.compression)
        elif config.fed.algorithm != Constants.ALGORITHM_SKETCHED:
            return None
        if "width" not in sketch:
            raise ExperimentConfigException("Invalid field 'sketch.width': required for the sketched algorithm")
        sketch.setdefault("domain_size", num_params)
        sketch.setdefault("seed", Utils.derive_seed(rng_seed, SKETCH_SEED_TAG))
        return SketchConfig(**sketch)

    def resolve(self) -> ResolvedExperiment:
        """
        Build and check everything before any training
        @raises ExperimentConfigException naming the offending field
        """
        config = self.config
        try:
            config.data.validate()
            if config.data_dir is not None:
                dataset = load_csv(config.data_dir)
                data_spec = dataset.spec
            else:
                dataset = None
                data_spec = config.data
            if config.fed.devices_per_round > data_spec.num_devices or config.fed.devices_per_round < 1:
                raise ExperimentConfigException(f"Invalid field 'fed.devices_per_round': "
                                                f"{config.fed.devices_per_round} must lie in "
                                                f"[1, {data_spec.num_devices}] (data.num_devices)")
            if config.model.kind == Constants.MODEL_MLP and data_spec.task != Constants.TASK_MULTICLASS:
                raise ExperimentConfigException("Invalid field 'model.kind': mlp requires data.task=multiclass")
            if config.model.kind == Constants.MODEL_LINEAR and data_spec.task != Constants.TASK_BINARY:
                raise ExperimentConfigException("Invalid field 'model.kind': linear requires data.task=binary")
            model = build_model(kind=config.model.kind, feature_dim=data_spec.feature_dim,
                                hidden_dim=config.model.hidden_dim, num_classes=data_spec.output_classes,
                                bias=config.model.bias)
            sketch = self._sketch_config(num_params=model.num_params, rng_seed=config.fed.rng_seed)
            algorithm = config.fed.algorithm
            if config.compression is not None:
                algorithm = Constants.ALGORITHM_SKETCHED if sketch is not None else Constants.ALGORITHM_VANILLA
            fed = replace(config.fed, sgd=config.sgd, sketch=sketch, dp=config.dp, algorithm=algorithm,
                          topk_fraction=config.fed.resolved_topk(model.kind))
            fed.validate(num_devices=data_spec.num_devices, num_params=model.num_params)
            if config.attack is not None:
                self._attack_geometry(num_params=model.num_params)
        except (DataException, FedSimException, ModelException, PrivacyException, SketchException, TypeError,
                ValueError) as e:
            raise ExperimentConfigException(Utils.extract_error_message(exception=e))
        if dataset is None:
            dataset = generate_synthetic(config.data)
        return ResolvedExperiment(config=config, dataset=dataset, model=model, fed=fed)

    def resolved_config(self, resolved: ResolvedExperiment) -> dict:
        """
        Fully resolved configuration: explicit sketch geometry and seed, algorithm, top-k
        fraction, no compression shorthand
        """
        document = resolved.config.to_dict()
        fed = resolved.fed
        document["fed"].update(algorithm=fed.algorithm, topk_fraction=fed.topk_fraction)
        document["sketch"] = None if fed.sketch is None else asdict(fed.sketch)
        document["compression"] = None
        document["output_dir"] = self.output_dir
        return document

    def run(self) -> List[RoundMetrics]:
        resolved = self.resolve()
        os.makedirs(self.output_dir, exist_ok=True)
        Utils.atomic_write(path=os.path.join(self.output_dir, Constants.RESOLVED_CONFIG_FILE),
                           data=json.dumps(self.resolved_config(resolved), indent=2, sort_keys=True) + "\n")
        server_type = SketchedFedAvgServer if resolved.fed.algorithm == Constants.ALGORITHM_SKETCHED \
            else FedAvgServer
        self.logger.info(f"Running {resolved.fed.algorithm} FedAvg: {resolved.fed.num_rounds} rounds, "
                         f"K={resolved.fed.devices_per_round}, n={resolved.model.num_params}, "
                         f"sketch={resolved.fed.sketch}")
        log = server_type(cfg=resolved.fed, ds=resolved.dataset, model=resolved.model).run()
        emit_metrics_csv(log, os.path.join(self.output_dir, Constants.METRICS_FILE))
        if resolved.config.attack is not None:
            self.run_attack(resolved)
        return log

    def _attack_geometry(self, *, num_params: int) -> Tuple[int, SketchConfig]:
        """
        Dimension and sketch geometry of the configured attack
        @raises ExperimentConfigException naming the offending attack field
        """
        attack = self.config.attack
        if isinstance(attack.trials, bool) or not isinstance(attack.trials, int) or attack.trials < 1:
            raise ExperimentConfigException(f"Invalid field 'attack.trials': {attack.trials!r}")
        if attack.adversary not in (ADVERSARY_UNIFORM, ADVERSARY_SEEDED):
            raise ExperimentConfigException(f"Invalid field 'attack.adversary': {attack.adversary!r}")
        n = attack.n if attack.n is not None else num_params
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ExperimentConfigException(f"Invalid field 'attack.n': {attack.n!r}")
        try:
            geometry = SketchConfig(rows=attack.rows, width=attack.width, domain_size=n).validate()
        except SketchException as e:
            raise ExperimentConfigException(f"Invalid field 'attack': {Utils.extract_error_message(exception=e)}")
        return n, geometry

    def run_attack(self, resolved: ResolvedExperiment) -> AttackReport:
        attack = resolved.config.attack
        n, geometry = self._attack_geometry(num_params=resolved.model.num_params)
        try:
            report = guessing_attack_experiment(n, geometry, attack.trials, attack.seed, adversary=attack.adversary,
                                                kind=resolved.fed.sketch_kind)
        except (PrivacyException, SketchException) as e:
            raise ExperimentConfigException(Utils.extract_error_message(exception=e))
        Utils.atomic_write(path=os.path.join(self.output_dir, Constants.ATTACK_REPORT_FILE),
                           data=f"{AttackReport.csv_header()}\n{report.to_csv_line()}\n")
        return report

    def sweep(self, ratios: List[float]) -> List[dict]:
        """
        One run per compression ratio (1 is the dense baseline) in a ratio_<r> subdirectory,
        plus sweep.csv with ratio, final_accuracy, total_bytes
        """
        for ratio in ratios:
            if isinstance(ratio, bool) or not ratio > 0:
                raise ExperimentConfigException(f"Invalid field 'compression': ratio {ratio} must be > 0")
        rows = []
        for ratio in ratios:
            config = replace(self.config, compression=float(ratio))
            output_dir = os.path.join(self.output_dir, f"ratio_{ratio:g}")
            log = ExperimentManager(config=config, output_dir=output_dir).run()
            rows.append({"ratio": ratio, "final_accuracy": log[-1].test_accuracy if log else float("nan"),
                         "total_bytes": log[-1].cumulative_bytes if log else 0})
        stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(Constants.SWEEP_HEADER)
        for row in rows:
            writer.writerow([f"{row['ratio']:g}", repr(float(row["final_accuracy"])), row["total_bytes"]])
        Utils.atomic_write(path=os.path.join(self.output_dir, Constants.SWEEP_FILE), data=stream.getvalue())
        return rows
