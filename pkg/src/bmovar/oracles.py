"""Brute-force reference computations used to cross-check the fast paths.

Each routine enumerates its search space explicitly and shares no code with
the implementation it checks.
"""
from __future__ import annotations

import itertools

import numpy as np


def all_pairs_sup(values) -> float:
    """``max |u_a - u_b|`` over all pairs."""
    v = list(values)
    return max((abs(a - b) for a, b in itertools.combinations(v, 2)), default=0.0)


def subsequence_variation(values, rho: float) -> float:
    """Max over every subsequence (kept in order) of ``(sum |consecutive diffs|^rho)^{1/rho}``."""
    v = list(values)
    best = 0.0
    for mask in range(1, 1 << len(v)):
        chosen = [v[k] for k in range(len(v)) if mask >> k & 1]
        s = sum(abs(chosen[j + 1] - chosen[j]) ** rho for j in range(len(chosen) - 1))
        best = max(best, s)
    return best ** (1.0 / rho)


def windows_maximum(terms, lo: int, hi: int, offset: int) -> float:
    """``max_{lo <= N1 < N2 <= hi} |sum_{i=N1}^{N2} terms[i + offset]|``."""
    best = 0.0
    for n1 in range(lo, hi + 1):
        for n2 in range(n1 + 1, hi + 1):
            s = sum(terms[i + offset] for i in range(n1, n2 + 1))
            best = max(best, abs(s))
    return best


def per_interval_oscillation(values, interval_indices) -> float:
    """``(sum over intervals of all-pairs sup^2)^{1/2}``."""
    return float(np.sqrt(sum(all_pairs_sup([values[k] for k in idx]) ** 2 for idx in interval_indices)))


def exhaustive_ball_min(values, mask) -> float:
    best = np.inf
    for v, m in zip(np.ravel(values), np.ravel(mask)):
        if m and v < best:
            best = v
    return float(best)
