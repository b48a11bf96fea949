"""One-bit logistic feedback model.

A node answers happy (+1) or unhappy (-1) about an offloaded task with
probability 1 / (1 + exp(-y * w^T x)), where both the feature vector x and
the node's weight vector w live in the Euclidean unit ball.  This module
provides the probability, a sampler, the per-observation log-likelihood
and its gradient.  All functions are pure; callers own their random
streams.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "UNIT_BALL_TOL",
    "unit_ball_vector",
    "check_feedback",
    "happy_probability",
    "sample_feedback",
    "log_likelihood",
    "grad_log_likelihood",
]

UNIT_BALL_TOL = 1e-12


def unit_ball_vector(values, name: str = "vector") -> np.ndarray:
    """Validate a 1-D real vector with ||v||_2 <= 1 (+ tolerance)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if norm > 1.0 + UNIT_BALL_TOL:
        raise ValueError(f"{name} must lie in the unit ball, got norm {norm}")
    return v


def check_feedback(y: int) -> int:
    """Validate a feedback bit; only +1 and -1 are admissible."""
    if y == 1:
        return 1
    if y == -1:
        return -1
    raise ValueError(f"feedback must be +1 or -1, got {y!r}")


def _check_pair(w, x) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.shape != x.shape or w.ndim != 1:
        raise ValueError(f"dimension mismatch: w {w.shape} vs x {x.shape}")
    return w, x


def _sigmoid(z: float) -> float:
    # Branch on sign so exp never overflows; |z| <= 1 here anyway.
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def happy_probability(w, x, y: int) -> float:
    """Probability of observing feedback y under the logit model."""
    w, x = _check_pair(w, x)
    y = check_feedback(y)
    return _sigmoid(y * float(w @ x))


def sample_feedback(w, x, rng: np.random.Generator) -> int:
    """Draw one feedback bit; consumes exactly one uniform draw."""
    w, x = _check_pair(w, x)
    p_happy = _sigmoid(float(w @ x))
    return 1 if rng.random() < p_happy else -1


def log_likelihood(w, x, y: int) -> float:
    """log Pr[y | x, w] = -log(1 + exp(-y * w^T x))."""
    w, x = _check_pair(w, x)
    y = check_feedback(y)
    z = y * float(w @ x)
    # -log(1 + exp(-z)), stable on both signs of z.
    if z >= 0.0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


def grad_log_likelihood(w, x, y: int) -> np.ndarray:
    """Gradient in w of the log-likelihood: y * x * sigmoid(-y * w^T x)."""
    w, x = _check_pair(w, x)
    y = check_feedback(y)
    z = y * float(w @ x)
    return (y * _sigmoid(-z)) * x
