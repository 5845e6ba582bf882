#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.


class Constants:
    FEDSKETCH_CONFIG = "FEDSKETCH_CONFIG"
    FEDSKETCH_OUTPUT_DIR = "FEDSKETCH_OUTPUT_DIR"

    # Sketch geometry and wire format
    DEFAULT_SKETCH_ROWS = 5
    SKETCH_MAGIC = b"SKFD"
    SKETCH_VERSION = 1
    SKETCH_HEADER_FORMAT = "<4sHHIIQQ"
    SKETCH_HEADER_SIZE = 32
    COUNTER_SIZE = 8
    DENSE_HEADER_SIZE = 0
    # hash tables hold rows x domain_size entries
    MAX_DOMAIN_SIZE = 1 << 24
    DOMAIN_SIZE_OFFSET = 16

    # Top-k recovery
    DEFAULT_TOPK_LINEAR = 1.0
    DEFAULT_TOPK_MLP = 0.2

    # Experiment outputs
    METRICS_FILE = "metrics.csv"
    RESOLVED_CONFIG_FILE = "resolved_config.json"
    ATTACK_REPORT_FILE = "attack_report.csv"
    SWEEP_FILE = "sweep.csv"
    MANIFEST_FILE = "manifest.json"
    TEST_SET_FILE = "test.csv"
    SHARD_FILE_FORMAT = "shard_{:03d}.csv"

    ALGORITHM_VANILLA = "vanilla"
    ALGORITHM_SKETCHED = "sketched"
    MODEL_LINEAR = "linear"
    MODEL_MLP = "mlp"
    SKETCH_COUNT = "count_sketch"
    SKETCH_COUNT_MIN = "count_min"
    HASH_MIX64 = "mix64"
    HASH_SHA256 = "sha256"
    TASK_BINARY = "binary"
    TASK_MULTICLASS = "multiclass"

    METRICS_HEADER = ["round", "test_accuracy", "test_loss", "bytes_uplink", "bytes_downlink",
                      "cumulative_bytes", "sampled_devices"]
    SWEEP_HEADER = ["ratio", "final_accuracy", "total_bytes"]
    ATTACK_HEADER = ["trials", "successes", "success_rate", "baseline_rate"]
