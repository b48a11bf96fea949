"""Acceptance suite: one test per release criterion, printed as it runs.

The canonical benchmark configuration is K=10 arms, d=5 features, T=2000
slots, tuned exploration (c=0.01), lambda=1, seeds 0..49; the theory checks
run the theoretical schedule at delta=0.05 over seeds 0..199.
"""

import hashlib
import math
import time

import numpy as np
import pytest

from fogbandit.bench import (
    RunConfig,
    _prop2_from_sum,
    aggregate,
    check_determinant_identities,
    export_summary_csv,
    export_trace_csv,
    run_episode,
    run_traces,
    toof_config,
)
from fogbandit.feedback import grad_log_likelihood, log_likelihood
from fogbandit.policy import BETA_DEFAULT, gamma_theoretical
from fogbandit.quadform import PsdMatrix

CANONICAL_SEEDS = tuple(range(50))
THEORY_SEEDS = tuple(range(200))

CANONICAL = RunConfig(
    arms=10, features=5, horizon=2000, seeds=CANONICAL_SEEDS,
    algorithms=("toof", "greedy", "round_robin", "optimal"),
    lam=1.0, gamma_mode="tuned", c=0.01,
)
THEORY = RunConfig(
    arms=10, features=5, horizon=2000, seeds=THEORY_SEEDS,
    algorithms=("toof",), lam=1.0, gamma_mode="theoretical", delta=0.05,
)


def report(criterion, passed, detail):
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")


@pytest.fixture(scope="module")
def canonical_runs():
    t0 = time.perf_counter()
    results = run_traces(CANONICAL)
    elapsed = time.perf_counter() - t0
    final = {}
    at200 = {}
    reward_final = {}
    reward_at200 = {}
    for alg, eps in results.items():
        final[alg] = np.array([ep.records[-1].avg_regret for ep in eps])
        at200[alg] = np.array([ep.records[199].avg_regret for ep in eps])
        reward_final[alg] = np.array([ep.records[-1].avg_reward for ep in eps])
        reward_at200[alg] = np.array([ep.records[199].avg_reward for ep in eps])
    return dict(
        results=results, elapsed=elapsed, final=final, at200=at200,
        reward_final=reward_final, reward_at200=reward_at200,
    )


@pytest.fixture(scope="module")
def theory_runs():
    tcfg = toof_config(THEORY)
    t0 = time.perf_counter()
    covered = 0
    bounded = 0
    identities_ok = True
    worst_rel_err = 0.0
    worst_margin = math.inf
    for seed in THEORY.seeds:
        ep = run_episode(THEORY, "toof", seed, track_coverage=True)
        covered += 1 if ep.coverage_ok else 0
        last = ep.records[-1]
        gamma_max = gamma_theoretical(last.t, last.max_logdet_ratio, tcfg)
        bound = _prop2_from_sum(gamma_max, tcfg.beta, last.t, last.sum_logdet_ratio)
        bounded += 1 if last.avg_regret <= bound else 0
        rep = check_determinant_identities(ep.records, tcfg.beta)
        identities_ok = identities_ok and rep.passed
        worst_rel_err = max(worst_rel_err, rep.max_telescoping_rel_err)
        worst_margin = min(worst_margin, rep.min_inequality_margin)
    elapsed = time.perf_counter() - t0
    return dict(
        covered=covered, bounded=bounded, elapsed=elapsed,
        identities_ok=identities_ok, worst_rel_err=worst_rel_err, worst_margin=worst_margin,
    )


class TestCriterion1Ordering:
    def test_regret_ordering_with_margin(self, canonical_runs):
        n = len(CANONICAL_SEEDS)
        toof = canonical_runs["final"]["toof"]
        greedy = canonical_runs["final"]["greedy"]
        rr = canonical_runs["final"]["round_robin"]
        pooled_se = math.sqrt(toof.var(ddof=1) / n + greedy.var(ddof=1) / n)
        margin = greedy.mean() - toof.mean()
        ordered = toof.mean() < greedy.mean() < rr.mean()
        passed = ordered and margin > pooled_se
        elapsed = canonical_runs["elapsed"]
        within_budget = elapsed < 60.0
        report(
            1, passed and within_budget,
            f"mean R(2000) toof={toof.mean():.4f} greedy={greedy.mean():.4f} "
            f"round_robin={rr.mean():.4f}; margin={margin:.4f} "
            f"({margin / pooled_se:.2f} pooled SE); runtime {elapsed:.1f}s (< 60s)",
        )
        assert ordered
        assert margin > pooled_se
        assert within_budget

    def test_regret_within_unit_ball_bound(self, canonical_runs):
        for alg, eps in canonical_runs["results"].items():
            for ep in eps[:5]:
                for rec in ep.records:
                    assert 0.0 <= rec.r_t <= 2.0


class TestCriterion2RegretDecay:
    def test_prefix_average_decays(self, canonical_runs):
        r2000 = canonical_runs["final"]["toof"].mean()
        r200 = canonical_runs["at200"]["toof"].mean()
        ratio = r2000 / r200
        passed = r2000 <= 0.6 * r200
        report(
            2, passed,
            f"toof mean R(2000)={r2000:.4f} vs 0.6 * mean R(200)={0.6 * r200:.4f} "
            f"(ratio {ratio:.3f}, need <= 0.6)",
        )
        assert passed


class TestCriterion3OptimalTracking:
    def test_reward_gap_shrinks(self, canonical_runs):
        gap200 = (
            canonical_runs["reward_at200"]["optimal"] - canonical_runs["reward_at200"]["toof"]
        ).mean()
        gap2000 = (
            canonical_runs["reward_final"]["optimal"] - canonical_runs["reward_final"]["toof"]
        ).mean()
        passed = gap2000 < gap200
        report(
            3, passed,
            f"mean reward gap to optimal: {gap200:.4f} at T=200 -> {gap2000:.4f} at T=2000",
        )
        assert passed


class TestCriterion4Coverage:
    def test_ellipsoid_containment(self, theory_runs):
        covered = theory_runs["covered"]
        elapsed = theory_runs["elapsed"]
        need = math.ceil(0.92 * len(THEORY_SEEDS))
        passed = covered >= need and elapsed < 300.0
        report(
            4, passed,
            f"coverage {covered}/{len(THEORY_SEEDS)} seeds (need >= {need}); "
            f"runtime {elapsed:.0f}s (< 300s)",
        )
        assert covered >= need
        assert elapsed < 300.0


class TestCriterion5RegretBound:
    def test_final_regret_below_bound(self, theory_runs):
        bounded = theory_runs["bounded"]
        need = math.ceil(0.92 * len(THEORY_SEEDS))
        passed = bounded >= need
        report(5, passed, f"R(T) <= bound in {bounded}/{len(THEORY_SEEDS)} seeds (need >= {need})")
        assert passed


class TestCriterion6DeterminantIdentities:
    def test_canonical_runs_satisfy_identities(self, canonical_runs):
        beta = BETA_DEFAULT
        worst_rel = 0.0
        worst_margin = math.inf
        for ep in canonical_runs["results"]["toof"]:
            rep = check_determinant_identities(ep.records, beta)
            worst_rel = max(worst_rel, rep.max_telescoping_rel_err)
            worst_margin = min(worst_margin, rep.min_inequality_margin)
            assert rep.passed
        passed = worst_rel <= 1e-6 and worst_margin >= 0.0
        report(
            6, passed,
            f"telescoping rel err <= {worst_rel:.2e} (tol 1e-6); "
            f"min sum-min inequality margin {worst_margin:.6f} (>= 0)",
        )
        assert passed

    def test_theory_runs_satisfy_identities(self, theory_runs):
        assert theory_runs["identities_ok"]
        assert theory_runs["worst_rel_err"] <= 1e-6
        assert theory_runs["worst_margin"] >= 0.0


class TestCriterion7Numerics:
    def test_projection_grid_oracle(self):
        step = 1e-3
        grid = np.arange(-1.0, 1.0 + step, step)
        w1, w2 = np.meshgrid(grid, grid, indexing="ij")
        mask = w1**2 + w2**2 <= 1.0
        g1, g2 = w1[mask], w2[mask]
        rng = np.random.default_rng(7777)
        worst = 0.0
        for _ in range(100):
            z = PsdMatrix.scaled_identity(2, 1.0)
            for _ in range(int(rng.integers(5, 60))):
                x = rng.normal(size=2)
                x /= max(1.0, np.linalg.norm(x))
                z.rank_one_update(x, 2.0 * rng.random())
            w_raw = rng.normal(scale=1.2, size=2)
            if np.linalg.norm(w_raw) <= 1.0:
                w_raw *= 1.6 / np.linalg.norm(w_raw)
            proj = z.project_unit_ball(w_raw)
            a, b, c = z.m[0, 0], z.m[0, 1], z.m[1, 1]

            def objective(u1, u2):
                d1, d2 = u1 - w_raw[0], u2 - w_raw[1]
                return a * d1 * d1 + 2 * b * d1 * d2 + c * d2 * d2

            err = float(objective(proj[0], proj[1]) - np.min(objective(g1, g2)))
            worst = max(worst, err)
        passed = worst <= 1e-5
        report(7, passed, f"projection vs 1e-3 grid oracle: worst objective excess {worst:.2e} "
                          f"(tol 1e-5); inverse drift and gradient checks follow")
        assert passed

    def test_inverse_drift_after_2000_updates(self):
        rng = np.random.default_rng(4242)
        z = PsdMatrix.scaled_identity(5, 1.0)
        for _ in range(2000):
            x = rng.normal(size=5)
            x /= max(1.0, np.linalg.norm(x))
            z.rank_one_update(x, rng.random())
        drift = float(np.max(np.abs(z.m @ z.m_inv - np.eye(5))))
        assert drift <= 1e-8

    def test_gradient_finite_differences_1000(self):
        rng = np.random.default_rng(31415)
        h = 1e-6
        worst = 0.0
        for _ in range(1000):
            dim = int(rng.integers(2, 6))
            w = rng.normal(size=dim)
            w *= rng.random() / np.linalg.norm(w)
            x = rng.normal(size=dim)
            x *= rng.random() / np.linalg.norm(x)
            y = 1 if rng.random() < 0.5 else -1
            g = grad_log_likelihood(w, x, y)
            for j in range(dim):
                e = np.zeros(dim)
                e[j] = h
                fd = (log_likelihood(w + e, x, y) - log_likelihood(w - e, x, y)) / (2 * h)
                worst = max(worst, abs(float(g[j]) - fd))
        assert worst <= 1e-6


class TestCriterion8Determinism:
    def test_byte_identical_csvs(self, tmp_path):
        cfg = RunConfig(
            arms=10, features=5, horizon=2000, seeds=tuple(range(4)),
            algorithms=("toof", "greedy", "round_robin", "optimal"),
        )

        def produce(tag):
            results = run_traces(cfg)
            traces = {alg: [ep.records for ep in eps] for alg, eps in results.items()}
            summary = aggregate(traces, cfg)
            tp = export_trace_csv(traces, tmp_path / f"trace_{tag}.csv")
            sp = export_summary_csv(summary, tmp_path / f"summary_{tag}.csv")
            return (
                hashlib.sha256(tp.read_bytes()).hexdigest(),
                hashlib.sha256(sp.read_bytes()).hexdigest(),
            )

        h1 = produce("a")
        h2 = produce("b")
        passed = h1 == h2
        report(8, passed, f"trace sha256 {h1[0][:16]}..., summary sha256 {h1[1][:16]}...; "
                          f"re-run hashes {'match' if passed else 'differ'}")
        assert passed


class TestCriterion9Warmup:
    def test_first_k_decisions(self, canonical_runs):
        ok = True
        for alg in ("toof", "greedy"):
            for ep in canonical_runs["results"][alg]:
                arms = [rec.arm for rec in ep.records[: CANONICAL.arms]]
                ok = ok and arms == list(range(CANONICAL.arms))
        report(9, ok, "first K decisions of toof and greedy are arms 0..K-1 on all 50 seeds")
        assert ok
