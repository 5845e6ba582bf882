#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import logging
from dataclasses import dataclass, replace

import numpy as np

from fedsketch.privacy.exceptions import PrivacyInputError
from fedsketch.sketch import SketchConfig, sketch_new
from fedsketch.util.constants import Constants
from fedsketch.util.utils import Utils

ADVERSARY_UNIFORM = "uniform"
ADVERSARY_SEEDED = "seeded"


@dataclass(frozen=True)
class AttackReport:
    trials: int
    successes: int
    success_rate: float
    baseline_rate: float
    adversary: str = ADVERSARY_UNIFORM

    def to_csv_line(self) -> str:
        return f"{self.trials},{self.successes},{self.success_rate!r},{self.baseline_rate!r}"

    @staticmethod
    def csv_header() -> str:
        return ",".join(Constants.ATTACK_HEADER)


def reconstruction_bound(n: int) -> float:
    """
    Probability that an adversary who can recover every value of an n-dimensional update,
    but not which coordinate it belongs to, attributes a value to the right coordinate
    @param n update dimension, >= 1
    @return 1/n
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise PrivacyInputError(f"Dimension must be a positive integer, got {n!r}")
    return 1.0 / n


def guessing_attack_experiment(n: int, sketch_cfg: SketchConfig, trials: int, seed: int,
                               adversary: str = ADVERSARY_UNIFORM,
                               kind: str = Constants.SKETCH_COUNT) -> AttackReport:
    """
    Identity-recovery experiment. Each trial plants value 1.0 at a uniformly random index
    of an otherwise zero length-n update and sketches it under a hash seed the adversary
    does not get. The uniform adversary sees only counters and geometry and guesses an
    index uniformly; the seeded adversary is handed the seed and decodes with the arg-max
    of |query_vector| (lowest index on ties). Success means the guess is the planted index.
    @param n update dimension
    @param sketch_cfg geometry (rows, width, hash family); domain_size and seed are replaced per trial
    @param trials number of trials, >= 1
    @param seed experiment seed
    @param adversary uniform or seeded
    @param kind sketch kind
    """
    reconstruction_bound(n)
    if trials < 1:
        raise PrivacyInputError(f"trials must be >= 1, got {trials}")
    if adversary not in (ADVERSARY_UNIFORM, ADVERSARY_SEEDED):
        raise PrivacyInputError(f"Unknown adversary: {adversary}")

    successes = 0
    for trial in range(trials):
        trial_seed = Utils.derive_seed(seed, trial)
        rng = np.random.default_rng(trial_seed)
        planted = int(rng.integers(n))
        hidden = replace(sketch_cfg, domain_size=n, seed=Utils.derive_seed(trial_seed, 1))
        sketch = sketch_new(hidden, kind=kind)
        sketch.insert(planted, 1.0)
        if adversary == ADVERSARY_SEEDED:
            guess = int(np.argmax(np.abs(sketch.query_vector())))
        else:
            guess = int(rng.integers(n))
        successes += int(guess == planted)

    report = AttackReport(trials=trials, successes=successes, success_rate=successes / trials,
                          baseline_rate=reconstruction_bound(n), adversary=adversary)
    logging.info(f"Guessing attack ({adversary}): {successes}/{trials} successes, baseline {report.baseline_rate:.6g}")
    return report
