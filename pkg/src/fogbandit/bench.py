"""Experiment runner, metrics, self-checks, aggregation, and file output.

An episode plays one algorithm for ``horizon`` slots against a seeded fog
environment, recording per-slot choices, feedback, regret, and learner
internals.  Runs across seeds aggregate into mean/std curves of average
regret and average reward, the theoretical regret-bound trajectory, and
coverage/identity self-checks that the guarantees can be verified against.

Random-stream discipline: one master seed spawns three named sub-streams
(weights, environment, feedback), so every algorithm under the same seed
faces the identical environment and feedback randomness and curves are
directly comparable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .fogsim import EnvParams, FogEnvironment, draw_true_weights
from .policy import (
    ArmState,
    ToofConfig,
    gamma_theoretical,
    greedy_select,
    greedy_update,
    init_arm_states,
    round_robin_select,
    toof_select,
    toof_update,
)
from .quadform import NumericsError

__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "RunConfig",
    "SlotRecord",
    "EpisodeResult",
    "DeterminantReport",
    "CheckReport",
    "Summary",
    "AlgorithmCurves",
    "load_config",
    "config_from_dict",
    "toof_config",
    "run_episode",
    "run_traces",
    "average_regret",
    "average_reward",
    "prop2_bound",
    "check_determinant_identities",
    "run_checks",
    "aggregate",
    "export_trace_csv",
    "export_summary_csv",
    "TRACE_HEADER",
    "SUMMARY_HEADER",
]

ALGORITHMS = ("toof", "greedy", "round_robin", "optimal")
_LEARNERS = ("toof", "greedy")

TRACE_HEADER = (
    "algorithm,seed,t,arm,y,r_t,cum_regret,avg_regret,avg_reward,bonus,gamma,logdet_ratio"
)
SUMMARY_HEADER = (
    "algorithm,t,mean_avg_regret,std_avg_regret,mean_avg_reward,std_avg_reward,"
    "mean_y,prop2_bound_mean,bound_satisfied_frac"
)

# Relative tolerance for the telescoping determinant identity and the
# Monte-Carlo slack applied to coverage/bound pass fractions.
TELESCOPING_RTOL = 1e-6
MC_SLACK = 0.03


class ConfigError(ValueError):
    """Run configuration is malformed."""


@dataclass(frozen=True)
class RunConfig:
    """One benchmark configuration (defaults match the canonical experiment)."""

    arms: int = 10
    features: int = 5
    horizon: int = 2000
    seeds: tuple[int, ...] = (0,)
    algorithms: tuple[str, ...] = ALGORITHMS
    lam: float = 1.0
    delta: float = 0.05
    gamma_mode: str = "tuned"
    c: float = 0.01
    env: EnvParams = field(default_factory=EnvParams)
    output_dir: str = "out"

    def __post_init__(self):
        if self.arms < 1:
            raise ConfigError(f"arms must be >= 1, got {self.arms}")
        if self.features < 1:
            raise ConfigError(f"features must be >= 1, got {self.features}")
        if self.horizon < self.arms:
            raise ConfigError(
                f"horizon must be >= arms, got horizon={self.horizon} arms={self.arms}"
            )
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if not self.algorithms:
            raise ConfigError("algorithms must be nonempty")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms must not repeat")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must not repeat")
        try:
            toof_config(self)
        except ValueError as e:
            raise ConfigError(str(e)) from e


def toof_config(cfg: RunConfig) -> ToofConfig:
    return ToofConfig(
        lam=cfg.lam, gamma_mode=cfg.gamma_mode, delta=cfg.delta, c=cfg.c
    )


_TOP_KEYS = {
    "arms", "features", "horizon", "seeds", "algorithms", "lambda", "delta",
    "gamma_mode", "c", "env", "output_dir",
}
_ENV_KEYS = {"q_max_kb", "service_kb_per_slot", "cqi_jitter"}


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from parsed JSON; unknown keys are an error."""
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    env_data = data.get("env", {})
    if not isinstance(env_data, dict):
        raise ConfigError("env must be a JSON object")
    unknown_env = sorted(set(env_data) - _ENV_KEYS)
    if unknown_env:
        raise ConfigError(f"unknown env keys: {', '.join(unknown_env)}")
    kwargs = {}
    try:
        if "arms" in data:
            kwargs["arms"] = int(data["arms"])
        if "features" in data:
            kwargs["features"] = int(data["features"])
        if "horizon" in data:
            kwargs["horizon"] = int(data["horizon"])
        if "seeds" in data:
            kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        if "algorithms" in data:
            kwargs["algorithms"] = tuple(str(a) for a in data["algorithms"])
        if "lambda" in data:
            kwargs["lam"] = float(data["lambda"])
        if "delta" in data:
            kwargs["delta"] = float(data["delta"])
        if "gamma_mode" in data:
            kwargs["gamma_mode"] = str(data["gamma_mode"])
        if "c" in data:
            kwargs["c"] = float(data["c"])
        if "output_dir" in data:
            kwargs["output_dir"] = str(data["output_dir"])
        if env_data:
            kwargs["env"] = EnvParams(**{k: float(v) for k, v in env_data.items()})
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad config value: {e}") from e
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return config_from_dict(data)


@dataclass(slots=True)
class SlotRecord:
    """One slot of one episode.

    ``gamma``/``bonus`` are the values used at selection time; ``logdet_ratio``
    is the chosen arm's value after the slot's update.  ``quad_inv_chosen``
    (the chosen arm's pre-update squared inverse-metric feature norm) and the
    post-slot ``sum_logdet_ratio``/``max_logdet_ratio`` across arms are kept
    in memory for the identity checks and bound trajectory; they are not part
    of the trace CSV schema.
    """

    algorithm: str
    seed: int
    t: int
    arm: int
    y: int
    r_t: float
    cum_regret: float
    avg_regret: float
    avg_reward: float
    bonus: float
    gamma: float
    logdet_ratio: float
    quad_inv_chosen: float | None = None
    sum_logdet_ratio: float | None = None
    max_logdet_ratio: float | None = None


@dataclass
class EpisodeResult:
    algorithm: str
    seed: int
    records: list[SlotRecord]
    # All-slot, all-arm confidence containment of the true weights, or None
    # when coverage tracking was off / the algorithm keeps no learner state.
    coverage_ok: bool | None = None


def run_episode(
    cfg: RunConfig, algorithm: str, seed: int, track_coverage: bool = False
) -> EpisodeResult:
    """Play one algorithm for ``cfg.horizon`` slots; deterministic per seed.

    With ``track_coverage`` on (learner algorithms only), each slot verifies
    that the updated arm's estimate stays inside its theoretical confidence
    ellipsoid around the true weights.  Arms untouched in a slot need no
    re-check: their estimate and log-det ratio are unchanged while the width
    only grows with t, so the all-arm, all-slot event reduces to checking
    the arm updated each slot.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    num_arms, dim, horizon = cfg.arms, cfg.features, cfg.horizon
    weights_ss, env_ss, feedback_ss = np.random.SeedSequence(seed).spawn(3)
    true_weights = draw_true_weights(np.random.default_rng(weights_ss), num_arms, dim)
    env = FogEnvironment(
        true_weights,
        np.random.default_rng(env_ss),
        np.random.default_rng(feedback_ss),
        cfg.env,
        dim,
    )
    tcfg = toof_config(cfg)
    is_learner = algorithm in _LEARNERS
    states: list[ArmState] | None = init_arm_states(num_arms, dim, cfg.lam) if is_learner else None
    coverage_cfg = replace(tcfg, gamma_mode="theoretical") if track_coverage else None
    coverage_ok: bool | None = True if (track_coverage and is_learner) else None

    records: list[SlotRecord] = []
    cum_regret = 0.0
    happy_count = 0
    arm = -1
    for t in range(1, horizon + 1):
        obs = env.observe(t)
        try:
            if is_learner:
                select = toof_select if algorithm == "toof" else greedy_select
                dec = select(states, obs.features, t, tcfg)
                arm, bonus, gamma = dec.arm, dec.bonus, dec.gamma
                quad_chosen = states[arm].z.quad_inv(obs.features[arm])
            elif algorithm == "round_robin":
                arm = round_robin_select(t, num_arms)
                bonus = gamma = 0.0
                quad_chosen = None
            else:
                arm = env.oracle_arm(obs)
                bonus = gamma = 0.0
                quad_chosen = None
            r_t = env.regret(obs, arm)
            y = env.sample_feedback(arm, obs)
            if algorithm == "toof":
                toof_update(states[arm], obs.features[arm], y, tcfg)
            elif algorithm == "greedy":
                greedy_update(states[arm], obs.features[arm], y, tcfg)
        except NumericsError as e:
            raise NumericsError(
                f"{algorithm} episode (seed {seed}) aborted at slot {t}, arm {arm}: {e}"
            ) from e
        env.advance(arm, obs.task)

        cum_regret += r_t
        happy_count += 1 if y == 1 else 0
        if is_learner:
            ldrs = [st.z.logdet_ratio() for st in states]
            ldr_chosen = ldrs[arm]
            sum_ldr: float | None = sum(ldrs)
            max_ldr: float | None = max(ldrs)
        else:
            ldr_chosen = 0.0
            sum_ldr = max_ldr = None
        if coverage_ok:
            st = states[arm]
            err = st.z.quad(st.w_bar - true_weights[arm])
            if err > gamma_theoretical(t, ldr_chosen, coverage_cfg):
                coverage_ok = False
        records.append(
            SlotRecord(
                algorithm=algorithm,
                seed=seed,
                t=t,
                arm=arm,
                y=y,
                r_t=r_t,
                cum_regret=cum_regret,
                avg_regret=cum_regret / t,
                avg_reward=happy_count / t,
                bonus=bonus,
                gamma=gamma,
                logdet_ratio=ldr_chosen,
                quad_inv_chosen=quad_chosen,
                sum_logdet_ratio=sum_ldr,
                max_logdet_ratio=max_ldr,
            )
        )
    return EpisodeResult(algorithm=algorithm, seed=seed, records=records, coverage_ok=coverage_ok)


def run_traces(
    cfg: RunConfig, track_coverage: bool = False
) -> dict[str, list[EpisodeResult]]:
    """All (algorithm, seed) episodes of a config, in config order."""
    return {
        alg: [run_episode(cfg, alg, seed, track_coverage) for seed in cfg.seeds]
        for alg in cfg.algorithms
    }


def average_regret(records: Sequence[SlotRecord], upto: int) -> float:
    """Prefix mean of per-slot regret over the first ``upto`` slots."""
    if not (1 <= upto <= len(records)):
        raise ValueError(f"upto must lie in [1, {len(records)}], got {upto}")
    return sum(rec.r_t for rec in records[:upto]) / upto


def average_reward(records: Sequence[SlotRecord], upto: int) -> float:
    """Prefix mean of the happy indicator (y mapped {+1,-1} -> {1,0})."""
    if not (1 <= upto <= len(records)):
        raise ValueError(f"upto must lie in [1, {len(records)}], got {upto}")
    return sum(1 if rec.y == 1 else 0 for rec in records[:upto]) / upto


def prop2_bound(gamma_max: float, beta: float, horizon: int, logdet_ratios) -> float:
    """High-probability average-regret bound 4 sqrt(gamma/(beta T) * sum_i ldr_i)."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not (beta > 0.0):
        raise ValueError(f"beta must be positive, got {beta!r}")
    return _prop2_from_sum(gamma_max, beta, horizon, float(sum(logdet_ratios)))


def _prop2_from_sum(gamma_max: float, beta: float, horizon: int, ldr_sum: float) -> float:
    return 4.0 * math.sqrt(gamma_max / (beta * horizon) * ldr_sum)


@dataclass
class DeterminantReport:
    """Outcome of the determinant-telescoping and sum-min identity checks."""

    passed: bool
    max_telescoping_rel_err: float
    min_inequality_margin: float
    num_slots: int


def check_determinant_identities(records: Sequence[SlotRecord], beta: float) -> DeterminantReport:
    """Verify the two determinant facts behind the regret bound on a trace.

    (a) Telescoping: each arm's maintained log-det ratio equals the running
        sum of log(1 + (beta/2) * quad) over its chosen slots, within
        relative error 1e-6.
    (b) At every prefix length, sum_t min((beta/2) * quad_t, 1) is at most
        twice the total log-det ratio across arms.

    Requires traces recorded with learner internals (a TOOF-style run);
    records lacking them are rejected.
    """
    if len(records) == 0:
        return DeterminantReport(
            passed=True, max_telescoping_rel_err=0.0, min_inequality_margin=0.0, num_slots=0
        )
    acc: dict[int, float] = {}
    lhs = 0.0
    max_rel_err = 0.0
    min_margin = math.inf
    for rec in records:
        if rec.quad_inv_chosen is None or rec.sum_logdet_ratio is None:
            raise ValueError(
                f"record at t={rec.t} lacks learner internals; "
                "determinant checks need a learner trace"
            )
        step = 0.5 * beta * rec.quad_inv_chosen
        acc[rec.arm] = acc.get(rec.arm, 0.0) + math.log1p(step)
        rel_err = abs(acc[rec.arm] - rec.logdet_ratio) / max(abs(rec.logdet_ratio), 1e-300)
        max_rel_err = max(max_rel_err, rel_err)
        lhs += min(step, 1.0)
        margin = 2.0 * rec.sum_logdet_ratio - lhs
        min_margin = min(min_margin, margin)
    passed = max_rel_err <= TELESCOPING_RTOL and min_margin >= 0.0
    return DeterminantReport(
        passed=passed,
        max_telescoping_rel_err=max_rel_err,
        min_inequality_margin=min_margin,
        num_slots=len(records),
    )


@dataclass
class CheckReport:
    """Aggregate self-check outcome across seeds."""

    identities_passed: bool
    max_telescoping_rel_err: float
    min_inequality_margin: float
    coverage_fraction: float
    coverage_threshold: float
    bound_fraction: float
    bound_threshold: float

    @property
    def passed(self) -> bool:
        return (
            self.identities_passed
            and self.coverage_fraction >= self.coverage_threshold
            and self.bound_fraction >= self.bound_threshold
        )


def run_checks(cfg: RunConfig) -> CheckReport:
    """Run the theory self-checks over the config's seeds.

    Episodes use the theoretical gamma schedule (the guarantees are stated
    for it) regardless of the configured mode.  Checks: determinant identities
    per seed, confidence coverage across seeds, and the final-slot
    regret-bound containment across seeds, the latter two against the
    1 - delta level minus Monte-Carlo slack.
    """
    check_cfg = replace(cfg, gamma_mode="theoretical", algorithms=("toof",))
    tcfg = toof_config(check_cfg)
    threshold = 1.0 - cfg.delta - MC_SLACK
    identities_passed = True
    max_rel_err = 0.0
    min_margin = math.inf
    covered = 0
    bounded = 0
    for seed in cfg.seeds:
        ep = run_episode(check_cfg, "toof", seed, track_coverage=True)
        report = check_determinant_identities(ep.records, tcfg.beta)
        identities_passed = identities_passed and report.passed
        max_rel_err = max(max_rel_err, report.max_telescoping_rel_err)
        min_margin = min(min_margin, report.min_inequality_margin)
        covered += 1 if ep.coverage_ok else 0
        last = ep.records[-1]
        gamma_max = gamma_theoretical(last.t, last.max_logdet_ratio, tcfg)
        bound = _prop2_from_sum(gamma_max, tcfg.beta, last.t, last.sum_logdet_ratio)
        bounded += 1 if last.avg_regret <= bound else 0
    n = len(cfg.seeds)
    return CheckReport(
        identities_passed=identities_passed,
        max_telescoping_rel_err=max_rel_err,
        min_inequality_margin=min_margin,
        coverage_fraction=covered / n,
        coverage_threshold=threshold,
        bound_fraction=bounded / n,
        bound_threshold=threshold,
    )


@dataclass
class AlgorithmCurves:
    """Cross-seed aggregate curves for one algorithm, all of length horizon."""

    algorithm: str
    mean_avg_regret: np.ndarray
    std_avg_regret: np.ndarray
    mean_avg_reward: np.ndarray
    std_avg_reward: np.ndarray
    mean_y: np.ndarray
    prop2_bound_mean: np.ndarray
    bound_satisfied_frac: np.ndarray


@dataclass
class Summary:
    horizon: int
    num_seeds: int
    curves: dict[str, AlgorithmCurves]


def _sample_std(arr: np.ndarray) -> np.ndarray:
    if arr.shape[0] < 2:
        return np.zeros(arr.shape[1])
    return arr.std(axis=0, ddof=1)


def aggregate(traces: Mapping[str, Sequence[Sequence[SlotRecord]]], cfg: RunConfig) -> Summary:
    """Pointwise mean/std curves across seeds, plus the bound trajectory.

    The regret-bound trajectory is evaluated per seed with the theoretical
    gamma at the running max/sum of the learner's log-det ratios (zero, and
    hence a zero bound, for policies that keep no design matrix), and
    ``bound_satisfied_frac`` is the per-slot fraction of seeds whose average
    regret stays below their bound.
    """
    if not traces:
        raise ValueError("need at least one algorithm's traces")
    horizon = None
    for alg, runs in traces.items():
        if len(runs) == 0:
            raise ValueError(f"algorithm {alg!r} has no traces")
        for records in runs:
            if horizon is None:
                horizon = len(records)
            elif len(records) != horizon:
                raise ValueError(
                    f"trace length mismatch: expected {horizon}, got {len(records)} for {alg!r}"
                )
    theory_cfg = replace(toof_config(cfg), gamma_mode="theoretical")
    slots = np.arange(1, horizon + 1, dtype=float)
    curves: dict[str, AlgorithmCurves] = {}
    for alg, runs in traces.items():
        n = len(runs)
        regret = np.empty((n, horizon))
        reward = np.empty((n, horizon))
        y_prefix = np.empty((n, horizon))
        bound = np.empty((n, horizon))
        for s, records in enumerate(runs):
            regret[s] = [rec.avg_regret for rec in records]
            reward[s] = [rec.avg_reward for rec in records]
            y_prefix[s] = np.cumsum([rec.y for rec in records]) / slots
            bound[s] = [
                _prop2_from_sum(
                    gamma_theoretical(rec.t, rec.max_logdet_ratio or 0.0, theory_cfg),
                    theory_cfg.beta,
                    rec.t,
                    rec.sum_logdet_ratio or 0.0,
                )
                for rec in records
            ]
        curves[alg] = AlgorithmCurves(
            algorithm=alg,
            mean_avg_regret=regret.mean(axis=0),
            std_avg_regret=_sample_std(regret),
            mean_avg_reward=reward.mean(axis=0),
            std_avg_reward=_sample_std(reward),
            mean_y=y_prefix.mean(axis=0),
            prop2_bound_mean=bound.mean(axis=0),
            bound_satisfied_frac=(regret <= bound).mean(axis=0),
        )
    return Summary(horizon=horizon, num_seeds=max(len(r) for r in traces.values()), curves=curves)


def export_trace_csv(traces: Mapping[str, Sequence[Sequence[SlotRecord]]], path) -> Path:
    """Write all per-slot records, ordered by (algorithm, seed, t)."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER.split(","))
            for runs in traces.values():
                for records in runs:
                    for rec in records:
                        writer.writerow(
                            [
                                rec.algorithm,
                                rec.seed,
                                rec.t,
                                rec.arm,
                                rec.y,
                                rec.r_t,
                                rec.cum_regret,
                                rec.avg_regret,
                                rec.avg_reward,
                                rec.bonus,
                                rec.gamma,
                                rec.logdet_ratio,
                            ]
                        )
    except OSError as e:
        raise OSError(f"cannot write trace CSV {path}: {e}") from e
    return path


def export_summary_csv(summary: Summary, path) -> Path:
    """Write cross-seed aggregate curves, one row per (algorithm, t)."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_HEADER.split(","))
            for alg, cur in summary.curves.items():
                for i in range(summary.horizon):
                    writer.writerow(
                        [
                            alg,
                            i + 1,
                            float(cur.mean_avg_regret[i]),
                            float(cur.std_avg_regret[i]),
                            float(cur.mean_avg_reward[i]),
                            float(cur.std_avg_reward[i]),
                            float(cur.mean_y[i]),
                            float(cur.prop2_bound_mean[i]),
                            float(cur.bound_satisfied_frac[i]),
                        ]
                    )
    except OSError as e:
        raise OSError(f"cannot write summary CSV {path}: {e}") from e
    return path
