"""Synthetic fog-network environment.

One task arrives per slot and is offloaded to one of K nodes.  Each node
carries a hidden weight vector with a fixed sign semantic: task length,
task complexity and queue backlog depress happiness, CPU frequency and
channel quality raise it.  Features are normalized into the unit ball,
feedback is sampled from the logistic model, and only the chosen node's
queue absorbs the task.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feedback import sample_feedback
from .policy import oracle_select

__all__ = [
    "EnvParams",
    "NodeState",
    "TaskSpec",
    "SlotObservation",
    "sign_pattern",
    "draw_true_weights",
    "gen_slot",
    "advance_queues",
    "instantaneous_regret",
    "FogEnvironment",
]

# Canonical five features, in order: data length, task complexity, queue
# backlog, CPU frequency, channel quality.  The first three hurt, the last
# two help.
_BASE_SIGNS = (-1.0, -1.0, -1.0, 1.0, 1.0)

DATA_KB_MIN = 1.0
DATA_KB_MAX = 15.0

# Node statics: helpers are capable compute nodes (CPU frequency within
# ~15% of the maximum, so service keeps up with offload concentration),
# while channel quality is right-skewed (product of two uniform fading
# factors: most links mediocre, a few excellent).
CPU_FREQ_MIN = 0.85


@dataclass
class EnvParams:
    """Environment knobs exposed through the run configuration."""

    q_max_kb: float = 100.0
    service_kb_per_slot: float = 6.0
    cqi_jitter: float = 0.1

    def __post_init__(self):
        if not (self.q_max_kb > 0.0):
            raise ValueError(f"q_max_kb must be positive, got {self.q_max_kb!r}")
        if self.service_kb_per_slot < 0.0:
            raise ValueError(
                f"service_kb_per_slot must be non-negative, got {self.service_kb_per_slot!r}"
            )
        if self.cqi_jitter < 0.0:
            raise ValueError(f"cqi_jitter must be non-negative, got {self.cqi_jitter!r}")


@dataclass
class NodeState:
    """Mutable per-node status: backlog plus static capabilities."""

    queue_kb: float = 0.0
    cpu_freq: float = 1.0
    cqi_mean: float = 1.0

    def __post_init__(self):
        if self.queue_kb < 0.0:
            raise ValueError(f"queue_kb must be non-negative, got {self.queue_kb!r}")
        if not (0.0 < self.cpu_freq <= 1.0):
            raise ValueError(f"cpu_freq must lie in (0, 1], got {self.cpu_freq!r}")
        if not (0.0 < self.cqi_mean <= 1.0):
            raise ValueError(f"cqi_mean must lie in (0, 1], got {self.cqi_mean!r}")


@dataclass(frozen=True)
class TaskSpec:
    """One task: payload size in KB and normalized cycles-per-bit complexity."""

    data_kb: float
    complexity: float

    def __post_init__(self):
        if not (DATA_KB_MIN <= self.data_kb <= DATA_KB_MAX):
            raise ValueError(
                f"data_kb must lie in [{DATA_KB_MIN}, {DATA_KB_MAX}], got {self.data_kb!r}"
            )
        if not (0.0 < self.complexity <= 1.0):
            raise ValueError(f"complexity must lie in (0, 1], got {self.complexity!r}")


@dataclass(frozen=True)
class SlotObservation:
    """All K feature vectors of a slot, produced before any decision."""

    features: np.ndarray  # (K, d), every row in the unit ball
    task: TaskSpec


def sign_pattern(dim: int) -> np.ndarray:
    """Feature sign semantics, the canonical 5-pattern cycled to length dim."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return np.array([_BASE_SIGNS[i % len(_BASE_SIGNS)] for i in range(dim)])


def draw_true_weights(rng: np.random.Generator, num_arms: int, dim: int = 5) -> np.ndarray:
    """Hidden per-node weights: signed magnitudes rescaled to norm in [0.5, 1].

    Coordinate magnitudes are uniform on (0, 1], the sign pattern is applied,
    and each row is rescaled to a radius drawn uniformly from [0.5, 1], so
    every weight vector lies in the unit ball with the stated sign semantics.
    """
    if num_arms < 1:
        raise ValueError(f"need at least one arm, got {num_arms}")
    signs = sign_pattern(dim)
    mags = 1.0 - rng.random((num_arms, dim))  # uniform on (0, 1]
    w = signs[None, :] * mags
    radii = rng.uniform(0.5, 1.0, size=num_arms)
    w *= (radii / np.linalg.norm(w, axis=1))[:, None]
    return w


def _gen_slot_core(
    rng: np.random.Generator,
    queues: np.ndarray,
    cpu: np.ndarray,
    cqi: np.ndarray,
    params: EnvParams,
    dim: int,
) -> SlotObservation:
    num_arms = queues.shape[0]
    data_kb = float(rng.uniform(DATA_KB_MIN, DATA_KB_MAX))
    complexity = 1.0 - float(rng.random())  # uniform on (0, 1]
    jitter = rng.uniform(-params.cqi_jitter, params.cqi_jitter, size=num_arms)
    extra = rng.random((num_arms, dim - 5)) if dim > 5 else None

    task = TaskSpec(data_kb=data_kb, complexity=complexity)
    raw = np.empty((num_arms, dim))
    raw[:, 0] = data_kb / DATA_KB_MAX
    if dim >= 2:
        raw[:, 1] = complexity
    if dim >= 3:
        raw[:, 2] = np.minimum(queues, params.q_max_kb) / params.q_max_kb
    if dim >= 4:
        raw[:, 3] = cpu
    if dim >= 5:
        raw[:, 4] = np.clip(cqi + jitter, 0.0, 1.0)
    if extra is not None:
        raw[:, 5:] = extra
    norms = np.sqrt(np.einsum("ij,ij->i", raw, raw))
    features = raw / np.maximum(1.0, norms)[:, None]
    return SlotObservation(features=features, task=task)


def gen_slot(
    rng: np.random.Generator,
    nodes: list[NodeState],
    t: int,
    params: EnvParams | None = None,
    dim: int = 5,
) -> SlotObservation:
    """Draw one task and build every node's normalized feature vector.

    Raw coordinates all live in [0, 1]: data_kb/15, complexity, clamped
    queue fraction, CPU frequency, jittered channel quality (plus uniform
    filler coordinates when dim > 5).  Each raw vector is then capped to
    the Euclidean unit ball (divided by max(1, its norm)), which keeps the
    coordinates at full scale whenever the vector already fits.
    """
    if not nodes:
        raise ValueError("node list must be nonempty")
    if params is None:
        params = EnvParams()
    queues = np.array([n.queue_kb for n in nodes])
    cpu = np.array([n.cpu_freq for n in nodes])
    cqi = np.array([n.cqi_mean for n in nodes])
    return _gen_slot_core(rng, queues, cpu, cqi, params, dim)


def advance_queues(nodes: list[NodeState], chosen: int, task: TaskSpec, params: EnvParams | None = None) -> None:
    """FIFO backlog step: arrival at the chosen node, then service everywhere.

    The chosen node's queue grows by the task size; every node then drains
    service_kb_per_slot scaled by its CPU frequency, floored at zero.
    """
    if params is None:
        params = EnvParams()
    if not (0 <= chosen < len(nodes)):
        raise ValueError(f"chosen arm {chosen} out of range for {len(nodes)} nodes")
    nodes[chosen].queue_kb += task.data_kb
    for node in nodes:
        node.queue_kb = max(0.0, node.queue_kb - params.service_kb_per_slot * node.cpu_freq)


def instantaneous_regret(true_weights, obs: SlotObservation, chosen: int) -> float:
    """Value gap between the oracle-best node and the chosen one."""
    num_arms = len(true_weights)
    if not (0 <= chosen < num_arms):
        raise ValueError(f"chosen arm {chosen} out of range for {num_arms} arms")
    values = np.einsum("kd,kd->k", np.asarray(true_weights), obs.features)
    return float(values.max() - values[chosen])


class FogEnvironment:
    """A fog network over one run: hidden weights, node dynamics, feedback.

    Owns two random streams: ``env_rng`` drives node statics and per-slot
    feature noise, ``feedback_rng`` drives the one-bit answers (one uniform
    per slot), so runs with the same seed stay comparable across policies.
    Feedback is revealed only for the chosen arm.
    """

    def __init__(
        self,
        true_weights: np.ndarray,
        env_rng: np.random.Generator,
        feedback_rng: np.random.Generator,
        params: EnvParams | None = None,
        dim: int | None = None,
    ):
        self.true_weights = np.asarray(true_weights, dtype=float)
        self.num_arms = self.true_weights.shape[0]
        self.dim = int(dim) if dim is not None else self.true_weights.shape[1]
        if self.true_weights.shape != (self.num_arms, self.dim):
            raise ValueError(
                f"true_weights shape {self.true_weights.shape} does not match "
                f"({self.num_arms}, {self.dim})"
            )
        self.params = params if params is not None else EnvParams()
        self._env_rng = env_rng
        self._feedback_rng = feedback_rng
        self._cpu = CPU_FREQ_MIN + (1.0 - CPU_FREQ_MIN) * (1.0 - env_rng.random(self.num_arms))
        self._cqi = (1.0 - env_rng.random(self.num_arms)) ** 2  # right-skewed on (0, 1]
        self._queues = np.zeros(self.num_arms)
        self._service = self.params.service_kb_per_slot * self._cpu

    @property
    def nodes(self) -> list[NodeState]:
        """Current node states as value objects (inspection / public ops)."""
        return [
            NodeState(
                queue_kb=float(self._queues[i]),
                cpu_freq=float(self._cpu[i]),
                cqi_mean=float(self._cqi[i]),
            )
            for i in range(self.num_arms)
        ]

    def observe(self, t: int) -> SlotObservation:
        """All K feature vectors for slot t, ahead of the decision."""
        return _gen_slot_core(
            self._env_rng, self._queues, self._cpu, self._cqi, self.params, self.dim
        )

    def sample_feedback(self, chosen: int, obs: SlotObservation) -> int:
        """One-bit happy/unhappy answer of the chosen node only."""
        if not (0 <= chosen < self.num_arms):
            raise ValueError(f"chosen arm {chosen} out of range for {self.num_arms} arms")
        return sample_feedback(self.true_weights[chosen], obs.features[chosen], self._feedback_rng)

    def advance(self, chosen: int, task: TaskSpec) -> None:
        if not (0 <= chosen < self.num_arms):
            raise ValueError(f"chosen arm {chosen} out of range for {self.num_arms} arms")
        self._queues[chosen] += task.data_kb
        np.maximum(self._queues - self._service, 0.0, out=self._queues)

    def oracle_arm(self, obs: SlotObservation) -> int:
        return oracle_select(self.true_weights, obs.features)

    def regret(self, obs: SlotObservation, chosen: int) -> float:
        return instantaneous_regret(self.true_weights, obs, chosen)
