"""FDR estimate from surviving surrogates and the elimination step size.

With r active columns of which r0 are surrogates, the fraction r0/q of
surrogates still present stands in for the fraction of null originals
still present. Bounding the unknown null count p0 by p gives

    eta_hat = r0 / (r - r0) * p / q.

Eliminating m columns can at best remove m surrogates, so the smallest
reachable estimate is (1 - m/r0) * eta_hat; the step size is the least
m whose best case meets the target, damped by the elimination rate.
"""

from __future__ import annotations

import math

from .errors import BookkeepingError, ConfigError


def estimate_fdr(r, r0, p, q):
    """Estimated FDR of the r - r0 surviving originals.

    Returns ``math.inf`` once no originals remain but surrogates do.
    """
    if r0 < 0 or r < r0:
        raise BookkeepingError(f"need r >= r0 >= 0, got r={r}, r0={r0}")
    if p < 1 or q < 1:
        raise ConfigError(f"need p, q >= 1, got p={p}, q={q}")
    if r0 == 0:
        return 0.0
    if r == r0:
        return math.inf
    return r0 / (r - r0) * (p / q)


def oracle_fdr(r, r0, p0, q):
    """Estimate using the true null count ``p0``; only computable on
    simulated data, and bounded above by :func:`estimate_fdr`."""
    if r == r0:
        return math.inf if r0 else 0.0
    return (r0 / q) * p0 / (r - r0)


def next_fdr(r, r0, p, q, m, m0):
    """Estimate after eliminating m columns of which m0 are surrogates."""
    if not (0 <= m0 <= m and m0 <= r0 and m - m0 <= r - r0):
        raise ConfigError(f"infeasible elimination m={m}, m0={m0} from r={r}, r0={r0}")
    return estimate_fdr(r - m, r0 - m0, p, q)


def min_next_fdr(m, r0, eta_hat):
    """Smallest estimate reachable by eliminating m columns."""
    if not 0 <= m <= r0:
        raise ConfigError(f"need 0 <= m <= r0, got m={m}, r0={r0}")
    if r0 == 0:
        return eta_hat
    return (1 - m / r0) * eta_hat


def step_size(eta_hat, eta_star, r0, epsilon=1.0):
    """Number of columns to eliminate next: ceil(eps * (1 - eta*/eta_hat) * r0)."""
    if not eta_hat > eta_star:
        raise BookkeepingError(f"eta_hat={eta_hat} already at or below target {eta_star}")
    if r0 < 1:
        raise BookkeepingError("no surrogates left to eliminate")
    if not 0 < epsilon <= 1:
        raise ConfigError(f"elimination rate must lie in (0, 1], got {epsilon}")
    frac = 1.0 if math.isinf(eta_hat) else 1 - eta_star / eta_hat
    m = math.ceil(epsilon * frac * r0)
    return min(max(m, 1), r0)


def verify_theorem1(r, r0, p, q, m, tol=1e-12):
    """Brute-force check of the best-case bound for one (r, r0, p, q, m).

    Enumerates every feasible surrogate count m0 among the m eliminated
    columns; true iff the minimum estimate equals (1 - m/r0) * eta_hat and
    is attained at m0 = m.
    """
    if not 1 <= m <= r0 < r:
        raise ConfigError(f"need 1 <= m <= r0 < r, got m={m}, r0={r0}, r={r}")
    eta_hat = estimate_fdr(r, r0, p, q)
    lo, hi = max(0, m - (r - r0)), min(m, r0)
    values = {m0: next_fdr(r, r0, p, q, m, m0) for m0 in range(lo, hi + 1)}
    best = min(values.values())
    bound = min_next_fdr(m, r0, eta_hat)
    return abs(best - bound) <= tol * max(1.0, abs(bound)) and \
        abs(values[m] - best) <= tol * max(1.0, abs(best))
