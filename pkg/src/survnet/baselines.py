"""Per-variable two-class tests used for comparison with the network
selection: Welch t-test, Bartlett's variance test, BH step-up, logFC."""

from __future__ import annotations

import csv
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from .errors import ConfigError


class TestResult(NamedTuple):
    __test__ = False  # not a pytest class

    variable: int
    statistic: float
    p_value: float
    flagged: bool = False


def _two_groups(X, labels):
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if len(classes) != 2:
        raise ConfigError(f"need exactly two classes, got {len(classes)}")
    a, b = X[labels == classes[0]], X[labels == classes[1]]
    if len(a) < 2 or len(b) < 2:
        raise ConfigError("each class needs at least two samples")
    return a, b


def t_test_per_variable(X, labels):
    """Welch two-sample t-test for every column.

    Two-sided p-values use the normal approximation to the t tail, which
    is accurate for the thousands of samples per class used here.
    Columns with zero variance in both classes get p = 1 and a flag.
    """
    a, b = _two_groups(X, labels)
    se2 = a.var(axis=0, ddof=1) / len(a) + b.var(axis=0, ddof=1) / len(b)
    diff = a.mean(axis=0) - b.mean(axis=0)
    degenerate = ~(se2 > 0)
    t = np.where(degenerate, 0.0, diff / np.sqrt(np.where(degenerate, 1.0, se2)))
    p = np.where(degenerate, 1.0, special.erfc(np.abs(t) / np.sqrt(2.0)))
    return [TestResult(j, float(t[j]), float(min(p[j], 1.0)), bool(degenerate[j]))
            for j in range(len(t))]


def bartlett_test(X, labels):
    """Bartlett's test for equal variances, two groups, per column.

    Columns with zero within-class variance get a NaN p-value and a flag.
    """
    groups = _two_groups(X, labels)
    k = len(groups)
    ns = np.array([len(g) for g in groups], dtype=np.float64)
    variances = np.array([g.var(axis=0, ddof=1) for g in groups])
    N = ns.sum()
    dof = ns - 1
    degenerate = ~(variances > 0).all(axis=0)
    v = np.where(degenerate, 1.0, variances)
    pooled = (dof[:, None] * v).sum(axis=0) / (N - k)
    num = (N - k) * np.log(pooled) - (dof[:, None] * np.log(v)).sum(axis=0)
    den = 1.0 + (np.sum(1.0 / dof) - 1.0 / (N - k)) / (3.0 * (k - 1))
    chi2 = num / den
    p = stats.chi2.sf(chi2, k - 1)
    return [TestResult(j, float("nan") if degenerate[j] else float(chi2[j]),
                       float("nan") if degenerate[j] else float(p[j]), bool(degenerate[j]))
            for j in range(len(chi2))]


def log_fold_change(X, labels):
    """|mean difference| between classes of already log-scaled values."""
    a, b = _two_groups(X, labels)
    return np.abs(a.mean(axis=0) - b.mean(axis=0))


def bh_select(p_values, level=0.1):
    """Benjamini-Hochberg step-up: ids of the rejected hypotheses, sorted."""
    if not 0 < level < 1:
        raise ConfigError(f"level must lie in (0, 1), got {level}")
    p = np.asarray(p_values, dtype=np.float64)
    m = p.size
    if m == 0:
        return np.array([], dtype=np.int64)
    order = np.argsort(p, kind="stable")
    below = p[order] <= level * np.arange(1, m + 1) / m
    if not below.any():
        return np.array([], dtype=np.int64)
    k = np.flatnonzero(below)[-1]
    return np.sort(order[: k + 1])


def p_values(results):
    return np.array([r.p_value for r in results])


def write_results_csv(path, results, selected=()):
    chosen = set(int(s) for s in selected)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "statistic", "p_value", "selected"])
        for r in results:
            w.writerow([r.variable, repr(r.statistic), repr(r.p_value), int(r.variable in chosen)])
