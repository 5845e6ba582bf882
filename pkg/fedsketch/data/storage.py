#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import csv
import io
import json
import logging
import os

import numpy as np

from fedsketch.data.exceptions import DatasetNotFoundError, DataParseError, DataException
from fedsketch.data.synthetic import FederatedDataset, DeviceShard, SyntheticSpec
from fedsketch.model.batch import Batch
from fedsketch.util.constants import Constants
from fedsketch.util.utils import Utils


def _format(value: float) -> str:
    return format(float(value), ".17g")


def _to_csv(batch: Batch) -> str:
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([f"feature_{i}" for i in range(batch.feature_dim)] + ["label"])
    for features, label in zip(batch.features, batch.labels):
        writer.writerow([_format(v) for v in features] + [_format(label)])
    return stream.getvalue()


def save_csv(ds: FederatedDataset, directory: str):
    """
    Persist a dataset as one CSV per shard, a pooled test CSV and manifest.json
    @param ds dataset
    @param directory output directory, created if needed
    """
    os.makedirs(directory, exist_ok=True)
    shards = []
    for shard in ds.shards:
        file_name = Constants.SHARD_FILE_FORMAT.format(shard.device_id)
        Utils.atomic_write(path=os.path.join(directory, file_name), data=_to_csv(shard))
        shards.append({"device_id": shard.device_id, "file": file_name, "num_samples": shard.num_samples})
    Utils.atomic_write(path=os.path.join(directory, Constants.TEST_SET_FILE), data=_to_csv(ds.test_set))
    manifest = {"spec": ds.spec.to_dict(), "shards": shards, "test_file": Constants.TEST_SET_FILE}
    Utils.atomic_write(path=os.path.join(directory, Constants.MANIFEST_FILE), data=json.dumps(manifest, indent=2))
    logging.info(f"Saved {len(shards)} shards and test set to {directory}")


def _read_csv(path: str) -> Batch:
    if not os.path.exists(path):
        raise DatasetNotFoundError(f"Data file '{path}' does not exist!")
    features, labels = [], []
    with open(path, "r", newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader, None)
        if not header or header[-1] != "label":
            raise DataParseError("Missing header row ending in 'label'", path=path, line=1)
        width = len(header)
        for row in reader:
            line = reader.line_num
            if len(row) != width:
                raise DataParseError(f"Expected {width} fields, found {len(row)}", path=path, line=line)
            try:
                values = [float(v) for v in row]
            except ValueError as e:
                raise DataParseError(f"Malformed number: {e}", path=path, line=line)
            features.append(values[:-1])
            labels.append(values[-1])
    if not labels:
        raise DataParseError("No examples", path=path, line=2)
    return Batch(features=np.array(features, dtype=np.float64), labels=np.array(labels, dtype=np.float64))


def load_csv(directory: str) -> FederatedDataset:
    """
    Load a dataset written by save_csv
    @param directory dataset directory
    @raises DatasetNotFoundError when the directory or manifest is missing
    @raises DataParseError naming the file and line of a malformed row
    """
    manifest_path = os.path.join(directory, Constants.MANIFEST_FILE)
    if not os.path.isdir(directory) or not os.path.exists(manifest_path):
        raise DatasetNotFoundError(f"No dataset manifest found in '{directory}'")
    with open(manifest_path, "r") as stream:
        try:
            manifest = json.loads(stream.read())
        except json.JSONDecodeError as e:
            raise DataParseError(f"Malformed manifest: {e.msg}", path=manifest_path, line=e.lineno)
    try:
        spec = SyntheticSpec(**manifest["spec"])
        entries = manifest["shards"]
        test_file = manifest["test_file"]
    except (KeyError, TypeError) as e:
        raise DataException(f"Incomplete manifest '{manifest_path}': {e}")

    shards = []
    for entry in entries:
        batch = _read_csv(os.path.join(directory, entry["file"]))
        shards.append(DeviceShard(features=batch.features, labels=batch.labels, device_id=int(entry["device_id"])))
    test_set = _read_csv(os.path.join(directory, test_file))
    return FederatedDataset(shards=shards, test_set=test_set, spec=spec)
