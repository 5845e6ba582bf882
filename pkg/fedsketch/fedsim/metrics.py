#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import csv
import io
from typing import List

from fedsketch.fedsim.fed_config import RoundMetrics
from fedsketch.util.constants import Constants
from fedsketch.util.utils import Utils


def metrics_csv(log: List[RoundMetrics]) -> str:
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(Constants.METRICS_HEADER)
    for metrics in log:
        writer.writerow(metrics.to_row())
    return stream.getvalue()


def emit_metrics_csv(log: List[RoundMetrics], path: str):
    """
    Write the metrics log as CSV, atomically
    @param log metrics log
    @param path destination file
    @raises OSError if the path is not writable
    """
    Utils.atomic_write(path=path, data=metrics_csv(log))
