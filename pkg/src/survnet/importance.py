"""Variable importance from per-sample input gradients of the loss."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

ABS_MEAN = "abs_mean"
SQUARE_MEAN = "square_mean"
KINDS = (ABS_MEAN, SQUARE_MEAN)


@dataclass(frozen=True)
class ImportanceVector:
    scores: np.ndarray
    kind: str
    scaled: bool = False

    def __len__(self):
        return len(self.scores)


def _gradients(gradients):
    g = np.asarray(gradients, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] == 0 or g.shape[1] == 0:
        raise ConfigError(f"need a non-empty (n, d) gradient matrix, got {g.shape}")
    return g


def score_abs_mean(gradients):
    """Mean absolute gradient per column."""
    return ImportanceVector(np.abs(_gradients(gradients)).mean(axis=0), ABS_MEAN)


def score_square_mean(gradients):
    """Mean squared gradient per column."""
    g = _gradients(gradients)
    return ImportanceVector((g * g).mean(axis=0), SQUARE_MEAN)


def score(gradients, kind=SQUARE_MEAN):
    if kind == ABS_MEAN:
        return score_abs_mean(gradients)
    if kind == SQUARE_MEAN:
        return score_square_mean(gradients)
    raise ConfigError(f"unknown score kind {kind!r}")


def apply_scale_correction(importance, X):
    """Rescale scores for inputs on different ranges.

    Absolute-mean scores are multiplied by each column's sample standard
    deviation, square-mean scores by its sample variance. Constant
    columns end up with a score of 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(importance):
        raise ConfigError(f"need one data column per score, got {X.shape}")
    sd = X.std(axis=0, ddof=1)
    factor = sd if importance.kind == ABS_MEAN else sd ** 2
    return ImportanceVector(importance.scores * factor, importance.kind, scaled=True)


def rank_ascending(scores):
    """Indices from least to most important; ties keep index order."""
    s = scores.scores if isinstance(scores, ImportanceVector) else np.asarray(scores)
    return np.argsort(s, kind="stable")


def write_scores_csv(path, variable_ids, scores):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["variable_id", "score"])
        for v, s in zip(variable_ids, scores):
            w.writerow([int(v), repr(float(s))])
