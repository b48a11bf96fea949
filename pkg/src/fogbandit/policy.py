"""The TOOF learner and its baselines.

TOOF (task offloading with one-bit feedback) keeps, per fog node, an online
Newton-step estimate ``w_bar`` of the node's weight vector together with a
PD matrix ``Z`` accumulating explored feature directions.  Each slot it
offloads to the node maximizing ``w_bar^T x + sqrt(gamma) * ||x||_{Z^-1}``
and then updates only the chosen node's state from the one-bit feedback.

Baselines share the same surface: Greedy is TOOF with ``Z`` frozen at its
initial value (zero exploration bonus under the tuned gamma schedule),
Round-Robin cycles through nodes, and the oracle picks the truly best node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feedback import grad_log_likelihood
from .quadform import PsdMatrix

__all__ = [
    "BETA_DEFAULT",
    "ToofConfig",
    "Decision",
    "ArmState",
    "init_arm_states",
    "gamma_theoretical",
    "gamma_tuned",
    "toof_select",
    "toof_update",
    "greedy_select",
    "greedy_update",
    "round_robin_select",
    "oracle_select",
]

# Curvature constant of the logistic loss on the unit ball: 1 / (2(1+e)).
BETA_DEFAULT = 1.0 / (2.0 * (1.0 + math.e))

GAMMA_MODES = ("theoretical", "tuned")


@dataclass(frozen=True)
class ToofConfig:
    """Learner parameters.

    lam is the initial regularizer (Z starts at lam * I), beta the curvature
    constant scaling the rank-one Z updates, and gamma_mode picks the
    exploration schedule: "theoretical" uses the high-probability confidence
    width with failure probability delta, "tuned" uses c * log-det ratio.
    """

    lam: float = 1.0
    beta: float = BETA_DEFAULT
    gamma_mode: str = "tuned"
    delta: float = 0.05
    c: float = 0.01

    def __post_init__(self):
        if not (self.lam > 0.0):
            raise ValueError(f"lam must be positive, got {self.lam!r}")
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ValueError(f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not (self.c > 0.0):
            raise ValueError(f"c must be positive, got {self.c!r}")


@dataclass(frozen=True)
class Decision:
    """Outcome of one arm selection."""

    arm: int
    score: float
    bonus: float
    gamma: float


@dataclass
class ArmState:
    """Per-node learner state: estimate, design matrix, pull count."""

    w_bar: np.ndarray
    z: PsdMatrix
    pulls: int = 0

    @classmethod
    def fresh(cls, dim: int, lam: float) -> "ArmState":
        return cls(w_bar=np.zeros(dim), z=PsdMatrix.scaled_identity(dim, lam))


def init_arm_states(num_arms: int, dim: int, lam: float) -> list[ArmState]:
    if num_arms < 1:
        raise ValueError(f"need at least one arm, got {num_arms}")
    return [ArmState.fresh(dim, lam) for _ in range(num_arms)]


def gamma_theoretical(t: int, logdet_ratio: float, cfg: ToofConfig) -> float:
    """High-probability confidence width at slot t.

    gamma = [8 + (8/beta + 16/3) tau + (2/beta) logdet_ratio] + lam with
    tau = log(2 ceil(2 log2 t) t^2 / delta).  At t = 1 the ceil term is 0
    and tau is undefined, so t is clamped to 2 there; the warm-up phase
    makes the t = 1 value irrelevant to selection anyway.
    """
    if t < 1:
        raise ValueError(f"slot index must be >= 1, got {t}")
    tt = max(int(t), 2)
    tau = math.log(2.0 * math.ceil(2.0 * math.log2(tt)) * tt * tt / cfg.delta)
    return 8.0 + (8.0 / cfg.beta + 16.0 / 3.0) * tau + (2.0 / cfg.beta) * logdet_ratio + cfg.lam


def gamma_tuned(logdet_ratio: float, c: float) -> float:
    """Tuned exploration width c * log-det ratio (same order, smaller constant)."""
    if not (c > 0.0):
        raise ValueError(f"c must be positive, got {c!r}")
    return c * logdet_ratio


def _gamma(t: int, logdet_ratio: float, cfg: ToofConfig) -> float:
    if cfg.gamma_mode == "theoretical":
        return gamma_theoretical(t, logdet_ratio, cfg)
    return gamma_tuned(logdet_ratio, cfg.c)


def _decision_for(arm: int, state: ArmState, x, t: int, cfg: ToofConfig) -> Decision:
    gamma = _gamma(t, state.z.logdet_ratio(), cfg)
    bonus = math.sqrt(gamma) * math.sqrt(state.z.quad_inv(x))
    score = float(state.w_bar @ x) + bonus
    return Decision(arm=arm, score=score, bonus=bonus, gamma=gamma)


def toof_select(states, features, t: int, cfg: ToofConfig) -> Decision:
    """Pick the arm with the largest optimistic score at slot t (1-indexed).

    During warm-up (t <= K) arm t-1 is forced so every node is tried once;
    its score and bonus are still computed and recorded.  Ties break toward
    the lowest arm index.
    """
    num_arms = len(states)
    if num_arms == 0:
        raise ValueError("arm list must be nonempty")
    if len(features) != num_arms:
        raise ValueError(f"got {num_arms} arm states but {len(features)} feature vectors")
    if t <= num_arms:
        forced = t - 1
        return _decision_for(forced, states[forced], features[forced], t, cfg)
    best: Decision | None = None
    for i in range(num_arms):
        dec = _decision_for(i, states[i], features[i], t, cfg)
        if best is None or dec.score > best.score:
            best = dec
    return best


def toof_update(state: ArmState, x, y: int, cfg: ToofConfig) -> None:
    """Online Newton step on the chosen arm's state.

    The surrogate maximizer w_bar + Z^{-1} grad is projected back onto the
    unit ball under the pre-update Z metric; Z then absorbs beta/2 * x x^T.
    Arms not chosen this slot must not be passed here.
    """
    g = grad_log_likelihood(state.w_bar, x, y)
    w_raw = state.w_bar + state.z.m_inv @ g
    state.w_bar = state.z.project_unit_ball(w_raw)
    state.z.rank_one_update(x, 0.5 * cfg.beta)
    state.pulls += 1


def greedy_select(states, features, t: int, cfg: ToofConfig) -> Decision:
    """Same rule as TOOF; with Z frozen the tuned bonus stays at zero."""
    return toof_select(states, features, t, cfg)


def greedy_update(state: ArmState, x, y: int, cfg: ToofConfig) -> None:
    """Weight step with Z held at its initial value (fixed-pace update)."""
    g = grad_log_likelihood(state.w_bar, x, y)
    w_raw = state.w_bar + state.z.m_inv @ g
    state.w_bar = state.z.project_unit_ball(w_raw)
    state.pulls += 1


def round_robin_select(t: int, num_arms: int) -> int:
    """Cycle through arms regardless of state; t is 1-indexed."""
    if num_arms < 1:
        raise ValueError(f"need at least one arm, got {num_arms}")
    return (t - 1) % num_arms


def oracle_select(true_weights, features) -> int:
    """Best arm under perfect knowledge: argmax_i w_i^T x_i, lowest index wins ties."""
    if len(true_weights) == 0:
        raise ValueError("arm list must be nonempty")
    if len(features) != len(true_weights):
        raise ValueError(
            f"got {len(true_weights)} weight vectors but {len(features)} feature vectors"
        )
    values = np.einsum("kd,kd->k", np.asarray(true_weights), np.asarray(features))
    return int(np.argmax(values))
