"""Surrogate null variables and the active-column bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BookkeepingError, ConfigError


@dataclass(frozen=True)
class AugmentedDataset:
    """Original columns ``0..p-1`` followed by surrogates ``p..p+q-1``.

    Column ids are global and never renumbered; elimination only flips
    entries of ``active``.
    """

    data: np.ndarray
    p: int
    q: int
    active: np.ndarray
    rng_seed: int = 0

    @property
    def is_surrogate(self):
        return np.arange(self.p + self.q) >= self.p

    @property
    def active_ids(self):
        return np.flatnonzero(self.active)

    @property
    def active_originals(self):
        return np.flatnonzero(self.active[: self.p])


def draw_surrogates(X, q, rng):
    """n x q block of entries resampled from all entries of ``X``.

    q == p permutes the entries, q < p samples without replacement and
    q > p samples with replacement. Targets are never consulted.
    """
    n, p = X.shape
    flat = X.ravel()
    if q == p:
        picked = rng.permutation(flat)
    else:
        picked = rng.choice(flat, size=n * q, replace=q > p)
    return picked.reshape(n, q)


def augment(X, q=None, seed=0):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ConfigError(f"X must be 2-D, got {X.shape}")
    n, p = X.shape
    q = p if q is None else int(q)
    if q < 1:
        raise ConfigError(f"need at least one surrogate variable, got q={q}")
    if p < 1 or n < 2:
        raise ConfigError(f"need p >= 1 and n >= 2, got n={n}, p={p}")
    block = draw_surrogates(X, q, np.random.default_rng(seed))
    return AugmentedDataset(np.hstack([X, block]), p, q,
                            np.ones(p + q, dtype=bool), rng_seed=seed)


def counts(state):
    """(r, r0): active columns and active surrogate columns."""
    r = int(state.active.sum())
    r0 = int(state.active[state.p:].sum())
    return r, r0


def deactivate(state, column_ids):
    ids = np.asarray(column_ids, dtype=np.int64).ravel()
    if ids.size == 0:
        return state
    if len(np.unique(ids)) != ids.size:
        raise BookkeepingError("duplicate column ids in one elimination")
    if ids.min() < 0 or ids.max() >= len(state.active):
        raise BookkeepingError("column id out of range")
    if not state.active[ids].all():
        raise BookkeepingError(f"already inactive: {ids[~state.active[ids]].tolist()}")
    active = state.active.copy()
    active[ids] = False
    return replace(state, active=active)
