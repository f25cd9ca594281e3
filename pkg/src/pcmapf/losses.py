"""Training-objective values: cross-entropies, returns, advantages, policy loss.

Pure numeric functions on probability vectors, labels, rewards, and value
estimates; no gradients or training machinery. Probabilities are clamped to
[1e-12, 1 - 1e-12] before any logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

N_ACTIONS = 5
CLAMP_EPS = 1e-12
ALPHA_IMP_DEFAULT = 0.5
ENTROPY_WEIGHT_DEFAULT = 0.01


def check_prob_vector(v: Sequence[float]) -> np.ndarray:
    """Validate a length-5 probability vector (non-negative, sums to 1 within 1e-9)."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (N_ACTIONS,):
        raise ValueError(f"probability vector must have length {N_ACTIONS}")
    if (arr < 0).any():
        raise ValueError("probabilities must be non-negative")
    if abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    return arr


def _clamped_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.clip(p, CLAMP_EPS, 1.0 - CLAMP_EPS))


def imitation_loss(targets: Sequence[Sequence[float]],
                   predictions: Sequence[Sequence[float]]) -> float:
    """Mean categorical cross-entropy between one-hot targets and predictions."""
    if len(targets) != len(predictions) or not targets:
        raise ValueError("need equal, nonzero numbers of targets and predictions")
    t = np.asarray(targets, dtype=float)
    if t.shape != (len(targets), N_ACTIONS) or not (
        ((t == 0) | (t == 1)).all() and (t.sum(axis=1) == 1).all()
    ):
        raise ValueError("targets must be one-hot vectors of length 5")
    p = np.stack([check_prob_vector(row) for row in predictions])
    return float(-(t * _clamped_log(p)).sum(axis=1).mean())


def priority_loss(targets: Sequence[int], predictions: Sequence[float]) -> float:
    """Mean binary cross-entropy for the 0/1 priority labels."""
    if len(targets) != len(predictions) or not targets:
        raise ValueError("need equal, nonzero numbers of targets and predictions")
    t = np.asarray(targets, dtype=float)
    if not ((t == 0) | (t == 1)).all():
        raise ValueError("targets must be 0 or 1")
    p = np.asarray(predictions, dtype=float)
    if ((p < 0) | (p > 1)).any():
        raise ValueError("predictions must lie in [0, 1]")
    return float(-(t * _clamped_log(p) + (1 - t) * _clamped_log(1 - p)).mean())


def combined_priority_loss(l_imp: float, l_imt: float,
                           alpha_imp: float = ALPHA_IMP_DEFAULT) -> float:
    """Weighted sum alpha_imp * l_imp + l_imt."""
    if alpha_imp < 0:
        raise ValueError("alpha_imp must be non-negative")
    return alpha_imp * l_imp + l_imt


@dataclass
class RewardTrace:
    """Per-step rewards with a bootstrap value for the cut-off state."""

    rewards: list[float]
    gamma: float
    bootstrap_value: float = 0.0

    def __post_init__(self):
        if not self.rewards:
            raise ValueError("rewards must be non-empty")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")


def discounted_return(trace: RewardTrace) -> list[float]:
    """Discounted return at every step via R_t = r_t + gamma * R_{t+1}.

    The recursion bottoms out at gamma * bootstrap_value past the last
    reward, so cut-off episodes are handled by construction.
    """
    out = [0.0] * len(trace.rewards)
    acc = trace.bootstrap_value
    for t in range(len(trace.rewards) - 1, -1, -1):
        acc = trace.rewards[t] + trace.gamma * acc
        out[t] = acc
    return out


def value_loss(predicted: Sequence[float], returns: Sequence[float]) -> float:
    """Mean squared error between value predictions and discounted returns."""
    if len(predicted) != len(returns) or not predicted:
        raise ValueError("need equal, nonzero numbers of predictions and returns")
    p = np.asarray(predicted, dtype=float)
    r = np.asarray(returns, dtype=float)
    return float(((p - r) ** 2).mean())


def advantage(trace: RewardTrace, values: Sequence[float]) -> list[float]:
    """Bootstrapped advantage: discounted return minus the predicted value."""
    if len(values) != len(trace.rewards):
        raise ValueError("need one value per reward")
    returns = discounted_return(trace)
    return [r - v for r, v in zip(returns, values)]


def entropy(dist: Sequence[float]) -> float:
    """Shannon entropy (nats) of an action distribution."""
    p = check_prob_vector(dist)
    mask = p > 0
    return float(-(p[mask] * np.log(p[mask])).sum())


def policy_loss(log_probs_of_taken_actions: Sequence[float],
                advantages: Sequence[float],
                policy_dists: Sequence[Sequence[float]],
                entropy_weight: float = ENTROPY_WEIGHT_DEFAULT) -> float:
    """Entropy-regularized policy-gradient loss (advantages held constant).

    -mean(log_prob * advantage) with an entropy bonus subtracted, so larger
    entropy lowers the loss and discourages premature convergence.
    """
    if not (len(log_probs_of_taken_actions) == len(advantages) == len(policy_dists)):
        raise ValueError("batch inputs must have equal lengths")
    if not log_probs_of_taken_actions:
        raise ValueError("batch must be non-empty")
    if entropy_weight < 0:
        raise ValueError("entropy_weight must be non-negative")
    lp = np.asarray(log_probs_of_taken_actions, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    ent = np.asarray([entropy(d) for d in policy_dists])
    return float(-(lp * adv).mean() - entropy_weight * ent.mean())
