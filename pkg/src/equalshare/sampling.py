"""Seeded randomness utilities.

All stochastic code draws from numpy Generators spawned from a single
SeedSequence per run, one child stream per role, so runs are reproducible
and roles (learner, opponents, schedule, evaluation) stay independent.
"""

from __future__ import annotations

import numpy as np

ROLES = ("schedule", "learner", "opponents", "evaluation")


def role_rngs(seed: int) -> dict[str, np.random.Generator]:
    """One independent generator per role, derived from a single seed."""
    children = np.random.SeedSequence(seed).spawn(len(ROLES))
    return {role: np.random.default_rng(ss) for role, ss in zip(ROLES, children)}


def sample_actions(rng: np.random.Generator, probs: np.ndarray, size: int | None = None):
    """Inverse-CDF sampling of action indices in stored order.

    Cumulative sums are clamped to 1 so a strategy summing to 1 - 1e-9 can
    still emit its last action.
    """
    cdf = np.minimum(np.cumsum(probs), 1.0)
    cdf[-1] = 1.0
    if size is None:
        return int(np.searchsorted(cdf, rng.random(), side="right").clip(0, len(probs) - 1))
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right").clip(0, len(probs) - 1)


def sample_actions_rows(rng: np.random.Generator, probs_rows: np.ndarray, draws: int) -> np.ndarray:
    """Vectorized inverse-CDF sampling, one row of probabilities per run.

    probs_rows: (R, A); returns (R, draws) int action indices.
    """
    cdf = np.minimum(np.cumsum(probs_rows, axis=1), 1.0)
    cdf[:, -1] = 1.0
    u = rng.random((probs_rows.shape[0], draws))
    idx = np.empty_like(u, dtype=np.int64)
    for r in range(probs_rows.shape[0]):
        idx[r] = np.searchsorted(cdf[r], u[r], side="right")
    return idx.clip(0, probs_rows.shape[1] - 1)


def counts_from_actions(actions: np.ndarray, num_actions: int) -> np.ndarray:
    return np.bincount(actions, minlength=num_actions)
