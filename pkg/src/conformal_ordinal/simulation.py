"""Monte-Carlo checks of the coverage guarantee on synthetic classifiers.

Each synthetic record draws a "true" probability vector from a symmetric
Dirichlet, samples its label from that vector, and then reports a tempered
version ``p ** (1 / distortion)`` (renormalised). With ``distortion == 1`` the
reported probabilities are perfectly calibrated; larger values flatten them
while leaving the argmax, and hence accuracy, unchanged.

Trial seeds come from ``numpy.random.SeedSequence(seed).spawn(trials)``; each
trial's sequence is spawned once more into a calibration and a test stream.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

from .conformal import calibrate, conformal_rank, predict_mask
from .dataset import RecordSet
from .errors import ValidationError
from .labels import LabelSpace

__all__ = ["SimConfig", "SimResult", "generate_exchangeable", "run_coverage_experiment", "expected_coverage"]

SeedLike = Union[int, np.random.SeedSequence]


def _label_space(K: int) -> LabelSpace:
    return LabelSpace(tuple(f"c{i}" for i in range(K)))


def generate_exchangeable(
    K: int,
    n: int,
    sharpness: float = 1.0,
    distortion: float = 1.0,
    seed: SeedLike = 0,
) -> RecordSet:
    """Draw ``n`` i.i.d. labelled probability records over ``K`` classes.

    ``sharpness`` is the Dirichlet concentration: small values give peaked
    vectors, large values give near-uniform ones.
    """
    if K < 2:
        raise ValidationError(f"K must be >= 2, got {K}")
    if n < 0:
        raise ValidationError(f"n must be >= 0, got {n}")
    if not sharpness > 0:
        raise ValidationError(f"sharpness must be positive, got {sharpness}")
    if not distortion >= 1:
        raise ValidationError(f"distortion must be >= 1, got {distortion}")
    rng = np.random.default_rng(seed)
    true_probs = rng.dirichlet(np.full(K, float(sharpness)), size=n)
    u = rng.random(n)
    labels = np.minimum((u[:, None] >= np.cumsum(true_probs, axis=1)).sum(axis=1), K - 1)
    reported = true_probs if distortion == 1 else true_probs ** (1.0 / distortion)
    reported = reported / reported.sum(axis=1, keepdims=True)
    ids = [f"r{i:07d}" for i in range(n)]
    return RecordSet(_label_space(K), ids, reported, labels)


def expected_coverage(n_calibration: int, alpha: float) -> float:
    """Exact mean coverage ``ceil((n+1)(1-alpha)) / (n+1)`` for continuous scores."""
    return min(conformal_rank(n_calibration, alpha), n_calibration + 1) / (n_calibration + 1)


@dataclass(frozen=True)
class SimConfig:
    K: int = 3
    n_calibration: int = 1815
    n_test: int = 1815
    trials: int = 200
    alpha: float = 0.1
    sharpness: float = 1.0
    distortion: float = 1.0
    seed: int = 42
    force_nonempty: bool = False

    def __post_init__(self):
        if self.K < 2:
            raise ValidationError("K must be >= 2")
        if self.trials < 1 or self.n_calibration < 1 or self.n_test < 1:
            raise ValidationError("trials, n_calibration and n_test must all be >= 1")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.sharpness > 0 or not self.distortion >= 1:
            raise ValidationError("need sharpness > 0 and distortion >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    per_trial_coverage: tuple
    per_trial_avg_size: tuple
    mean_coverage: float
    mean_avg_size: float

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "mean_coverage": self.mean_coverage,
            "mean_avg_size": self.mean_avg_size,
            "expected_coverage": expected_coverage(self.config.n_calibration, self.config.alpha),
            "per_trial_coverage": list(self.per_trial_coverage),
            "per_trial_avg_size": list(self.per_trial_avg_size),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def per_trial_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial", "coverage", "avg_set_size"])
        for t, (c, s) in enumerate(zip(self.per_trial_coverage, self.per_trial_avg_size)):
            writer.writerow([t, repr(c), repr(s)])
        return buf.getvalue()


def _run_trial(config: SimConfig, seq: np.random.SeedSequence):
    cal_seq, test_seq = seq.spawn(2)
    gen = dict(K=config.K, sharpness=config.sharpness, distortion=config.distortion)
    cal = generate_exchangeable(n=config.n_calibration, seed=cal_seq, **gen)
    test = generate_exchangeable(n=config.n_test, seed=test_seq, **gen)
    model = calibrate(cal, config.alpha, force_nonempty=config.force_nonempty)
    mask = predict_mask(model, test.probs)
    covered = mask[np.arange(len(test)), test.labels]
    return float(covered.mean()), float(mask.sum(axis=1).mean())


def run_coverage_experiment(config: SimConfig) -> SimResult:
    """Repeat calibrate-then-test on fresh synthetic data and aggregate."""
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    results = [_run_trial(config, child) for child in children]
    cov = tuple(r[0] for r in results)
    size = tuple(r[1] for r in results)
    return SimResult(config, cov, size, float(np.mean(cov)), float(np.mean(size)))
