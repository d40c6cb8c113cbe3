"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
(and immediately with ``-s``). Run on their own with

    pytest tests/test_acceptance.py -v -s
"""
import math
import time
from collections import Counter
from functools import lru_cache

import numpy as np
import pytest
from scipy.stats import chisquare

from uavcrew.cli import main as cli_main
from uavcrew.coverage import CoverageModel, count_served
from uavcrew.ddpg import (ApcHarness, CrewTask, DdpgAgent, actor_policy, apc_run, evaluate, frozen_after,
                          grid_oracle, rollout)
from uavcrew.energy import DEFAULT_ATTENUATION, EnergyModel, solar_intensity
from uavcrew.marl import DqnAgentSet, DqnConfig, train_marl
from uavcrew.scenarios import (SCHEDULER_DDPG, SINGLE_CLUSTER_DDPG, centre_quit, single_cluster, toy,
                               tradeoff)
from uavcrew.solar import (Mode, audit_profile, build_mapping, enumerate_optimal, make_problem, policy_profile,
                           train_scheduler)
from uavcrew.world import Scenario, WorldConfig

from conftest import ACCEPTANCE_LINES
from oracles import brute_force, finite_difference_grads, greedy_served, schedule_value

SEEDS = range(5)
LETTER = {Mode.SERVE: "S", Mode.CHARGE: "C", Mode.IDLE: "I"}


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print("\n" + line)
    return ok


# --- 1. gradients -----------------------------------------------------------------

def _kink_free_inputs(net, rng, rows, margin=2e-2):
    """Inputs whose hidden pre-activations all sit at least ``margin`` from
    the ReLU kink, where central differences are valid."""
    out = []
    while len(out) < rows:
        x = rng.normal(size=net.sizes[0])
        h, ok = x, True
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            z = h @ w + b
            if np.min(np.abs(z)) < margin:
                ok = False
                break
            h = np.maximum(z, 0.0)
        if ok:
            out.append(x)
    return np.array(out)


def _architectures(seed):
    """The networks the agents actually build: crew actor and critic (3 UAVs),
    scheduler actor (3 UAVs) and the per-UAV Q-network."""
    crew = DdpgAgent(13, 6, SINGLE_CLUSTER_DDPG, seed=seed)
    sched = DdpgAgent(13, 3, SCHEDULER_DDPG, seed=seed)
    q = DqnAgentSet(1, DqnConfig(), seed=seed)[0].net
    return {"crew actor": crew.actor, "crew critic": crew.critic, "scheduler actor": sched.actor, "q-net": q}


def test_c01_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = {}
    for seed in range(20):
        for name, net in _architectures(seed).items():
            x = _kink_free_inputs(net, rng, 2)
            up = rng.normal(size=(2, net.sizes[-1]))
            analytic = net.backward(x, up).params
            numeric = finite_difference_grads(net, x, up, eps=1e-4)
            err = max(float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-7)))
                      for a, n in zip(analytic, numeric))
            worst[name] = max(worst.get(name, 0.0), err)
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and dt < 60
    record(1, ok, "max rel err " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" ({dt:.0f} s)")
    assert ok


# --- 2. coverage oracle ------------------------------------------------------------

def test_c02_count_served_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(1000):
        users = rng.uniform(0, 400, size=(rng.integers(0, 21), 2))
        k = rng.integers(1, 5)
        uavs = np.column_stack([rng.uniform(0, 400, size=(k, 2)), rng.uniform(20, 150, size=k)])
        cap = int(rng.integers(1, 7))
        ap = float(rng.choice([60.0, 90.0, 120.0]))
        got = count_served(users, uavs, CoverageModel(aperture_deg=ap, capacity=cap))
        total, assignment = greedy_served(users.tolist(), uavs.tolist(), math.radians(ap), cap)
        mismatches += got.total != total or list(got.assignment) != assignment
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 60
    record(2, ok, f"{mismatches} mismatches over 1000 instances ({dt:.0f} s)")
    assert ok


# --- 3. energy calibration ---------------------------------------------------------

def test_c03_attenuation_and_monotonicity():
    model = EnergyModel()
    tenfold = abs(math.exp(-model.attenuation_k * 300.0) - 0.1)
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(10_000):
        hour = rng.uniform(0, 24)
        d1, d2 = np.sort(rng.uniform(0, 1000, size=2))
        bad += solar_intensity(hour, d1, model) < solar_intensity(hour, d2, model)
    ok = tenfold < 1e-9 and bad == 0 and model.attenuation_k == DEFAULT_ATTENUATION
    record(3, ok, f"|exp(-300k) - 0.1| = {tenfold:.1e}, {bad} monotonicity breaks in 10^4 pairs")
    assert ok


# --- 4. single-cluster competence ---------------------------------------------------

def test_c04_ddpg_vs_grid_oracle():
    t0 = time.perf_counter()
    sc = single_cluster()
    task = CrewTask(sc)
    env = task.make()
    ratios = []
    for seed in SEEDS:
        agent = DdpgAgent(env.state_dim, env.action_dim, SINGLE_CLUSTER_DDPG, seed=seed)
        apc_run(ApcHarness.build(task, 1, agent, seed=seed), 300)
        served = evaluate(agent, task, [1000 + seed])["summary"]["mean_served"]
        ratios.append(served / grid_oracle(sc, 1000 + seed)[0])
    dt = time.perf_counter() - t0
    wins = sum(r >= 0.9 for r in ratios)
    ok = wins >= 4 and dt < 15 * 60
    record(4, ok, f"{wins}/5 seeds at >= 0.9 of grid oracle {[round(r, 3) for r in ratios]} ({dt:.0f} s)")
    assert ok


# --- 5. responsive quit ------------------------------------------------------------

def test_c05_quit_beats_frozen_baseline():
    t0 = time.perf_counter()
    sc = centre_quit()
    half = sc.world.slots // 2
    task = CrewTask(sc)
    env = task.make()
    pairs = []
    for seed in SEEDS:
        agent = DdpgAgent(env.state_dim, env.action_dim, SINGLE_CLUSTER_DDPG, seed=seed)
        apc_run(ApcHarness.build(task, 1, agent, seed=seed), 600)
        policy = actor_policy(agent.actor)
        evals = [1000 + 10 * seed + k for k in range(3)]
        post = [rollout(task, policy, s, window=10).windows[0]["post"] for s in evals]
        held = [rollout(task, frozen_after(policy, half), s, window=10).windows[0]["post"] for s in evals]
        pairs.append((float(np.mean(post)), float(np.mean(held))))
    dt = time.perf_counter() - t0
    wins = sum(a > b for a, b in pairs)
    ok = wins >= 4 and dt < 30 * 60
    shown = ", ".join(f"{a:.1f} vs {b:.1f}" for a, b in pairs)
    record(5, ok, f"{wins}/5 seeds beat frozen baseline after the quit [{shown}] ({dt:.0f} s)")
    assert ok


# --- 6. dual-copy partition ----------------------------------------------------------

def test_c06_dual_copy_partition():
    t0 = time.perf_counter()
    n = 5
    sc = Scenario(WorldConfig(n_max=n, slots=30, total_users=60, quit_fraction=0.0), CoverageModel(capacity=20))
    firsts, broken = Counter(), []
    everyone = set(range(n))

    def check(episode, res):
        firsts[episode.schedule[0][1]] += 1
        for a, b in res.partition:
            if a & b or (a | b) != everyone:
                broken.append((a, b))

    curve = train_marl(DqnAgentSet(n, DqnConfig(), seed=0), sc, 1000, seed=0, on_episode=check)
    reported = sum(r["violations"] for r in curve)
    p = chisquare([firsts[i] for i in range(n)]).pvalue
    dt = time.perf_counter() - t0
    ok = len(curve) == 1000 and not broken and reported == 0 and p > 0.01
    record(6, ok, f"{len(broken)} partition breaks (env reports {reported}) over {len(curve)} episodes, "
                  f"first-quitter chi-square p = {p:.3f} ({dt:.0f} s)")
    assert ok


# --- shared scheduler runs (criteria 7 and 9) --------------------------------------

@lru_cache(maxsize=None)
def _tradeoff_problem():
    sc, cfg = tradeoff()
    return make_problem(build_mapping(sc, cfg, seed=0), sc, cfg)


@lru_cache(maxsize=None)
def _tradeoff_runs():
    p = _tradeoff_problem()
    return {(coeff, seed): train_scheduler(p, coeff, 300, seed=seed, cfg=SCHEDULER_DDPG)
            for coeff in (0.1, 0.9) for seed in SEEDS}


def _oracle_rollout(p, b0, letters, coeff):
    e = p.energy
    return schedule_value(p.mapping.users, p.demand, letters, b0=b0, prev0=[LETTER[p.initial_status]] * p.n,
                          coeff=coeff, p_min=p.p_min, b_max=e.b_max, hover=e.hover_cost, serve=e.serve_cost,
                          idle=e.idle_cost, climb=e.climb_cost, pv=e.pv_rate, cloud_top=e.cloud_top,
                          serve_alt=p.serve_altitude, idle_alt=p.idle_altitude, reserve=e.reserve,
                          start_hour=p.start_hour, penalty=p.violation_penalty)


# --- 7. scheduler feasibility --------------------------------------------------------

def test_c07_no_silent_violations():
    t0 = time.perf_counter()
    p = _tradeoff_problem()
    runs = _tradeoff_runs()
    # two UAVs serving while the third charges keeps every constraint from
    # a start the oracle accepts; that certifies the scenario feasible
    reference = [["S", "S", "C"]] * p.hours
    rng = np.random.default_rng(77)
    hours = silent = feasible = infeasible = feasible_violations = recorded = 0

    def one(key, b0):
        nonlocal hours, silent, feasible, infeasible, feasible_violations, recorded
        coeff = key[0]
        prof = policy_profile(runs[key].agent, p, coeff, batteries=b0)
        hours += len(prof.served)
        letters = [[LETTER[prof.modes[i][h]] for i in range(p.n)] for h in range(len(prof.served))]
        bad = _oracle_rollout(p, b0, letters, coeff)[2]
        logged = sorted({v["hour"] for v in prof.violations})
        silent += audit_profile(p, prof) != prof.violations or logged != bad
        recorded += bool(prof.violations)
        if _oracle_rollout(p, b0, reference, coeff)[2]:
            infeasible += 1
        else:
            feasible += 1
            feasible_violations += bool(prof.violations)

    nominal = np.array(p.initial_batteries)
    while hours < 10_000:
        for key in runs:
            one(key, list(nominal * (1.0 - p.battery_jitter * rng.random(p.n))))
    for _ in range(20):  # stressed starts, many of them infeasible
        for key in runs:
            one(key, list(p.energy.b_max * rng.uniform(0.0, 1.0, p.n)))
    dt = time.perf_counter() - t0
    ok = hours >= 10_000 and silent == 0 and feasible_violations == 0
    record(7, ok, f"{hours} rollout hours, {silent} silent violations, {recorded} rollouts with recorded "
                  f"violations ({infeasible} uncertified starts), {feasible_violations} violations in "
                  f"{feasible} certified-feasible rollouts ({dt:.0f} s incl. training)")
    assert ok


# --- 8. toy-scale optimality --------------------------------------------------------

def test_c08_toy_optimality():
    t0 = time.perf_counter()
    sc, cfg = toy()
    p = make_problem(build_mapping(sc, cfg, seed=0), sc, cfg)
    best, values = enumerate_optimal(p, cfg.coeff)
    b0 = list(p.initial_batteries)
    check, _ = brute_force(lambda prof: _oracle_rollout(p, b0, prof, cfg.coeff)[0], p.n, p.hours)
    ratios = []
    for seed in SEEDS:
        res = train_scheduler(p, cfg.coeff, 1000, seed=seed, cfg=SCHEDULER_DDPG)
        ratios.append(res.profile.objective / best.objective)
    dt = time.perf_counter() - t0
    wins = sum(r >= 0.9 for r in ratios)
    agree = len(values) == 6561 and abs(check - best.objective) < 1e-9
    ok = wins >= 4 and agree and dt < 10 * 60
    record(8, ok, f"{wins}/5 seeds at >= 0.9 of optimum {best.objective:.4f} (oracle {check:.4f}, "
                  f"{len(values)} profiles) {[round(r, 3) for r in ratios]} ({dt:.0f} s)")
    assert ok


# --- 9. coeff trade-off ------------------------------------------------------------

def test_c09_coeff_tradeoff():
    runs = _tradeoff_runs()
    energy = {c: float(np.median([runs[c, s].profile.final_energy for s in SEEDS])) for c in (0.1, 0.9)}
    served = {c: float(np.median([runs[c, s].profile.total_served for s in SEEDS])) for c in (0.1, 0.9)}
    ok = energy[0.9] > energy[0.1] and served[0.9] < served[0.1]
    record(9, ok, f"median final energy {energy[0.1]:.1f} -> {energy[0.9]:.1f}, median served "
                  f"{served[0.1]:.0f} -> {served[0.9]:.0f} (coeff 0.1 -> 0.9; runs shared with criterion 7)")
    assert ok


# --- 10. reproducibility -------------------------------------------------------------

TINY = ["scenario.world.n_max=2", "scenario.world.slots=8", "scenario.world.total_users=20",
        "agent.ddpg.hidden=[16]", "agent.ddpg.batch=8", "agent.ddpg.warmup=8",
        "agent.dqn.hidden=[16]", "agent.dqn.batch=8", "agent.dqn.warmup=8",
        "scheduler.n_uavs=2", "scheduler.hours=3", "scheduler.restarts=2", "scheduler.p_min=0.3"]
SKIP = {"manifest.json", "config.toml"}  # both embed the run directory


def _sets():
    out = []
    for s in TINY:
        out += ["--set", s]
    return out


def _session(root):
    assert cli_main(["train", "ddpg", "--episodes", "4", "--seed", "3", "--workers", "1",
                     "--out", str(root / "ddpg")] + _sets()) == 0
    assert cli_main(["eval", str(root / "ddpg" / "checkpoint"), "--seeds", "5", "6",
                     "--out", str(root / "ddpg_eval")] + _sets()) == 0
    assert cli_main(["train", "marl", "--episodes", "3", "--seed", "3", "--out", str(root / "marl")] + _sets()) == 0
    assert cli_main(["eval", str(root / "marl" / "checkpoint"), "--seeds", "5",
                     "--out", str(root / "marl_eval")] + _sets()) == 0
    assert cli_main(["mapping", "--seed", "3", "--out", str(root / "map")] + _sets()) == 0
    assert cli_main(["train", "scheduler", "--episodes", "3", "--seed", "3", "--workers", "1",
                     "--mapping", str(root / "map" / "mapping.csv"), "--out", str(root / "sched")] + _sets()) == 0
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file() and p.name not in SKIP}


def test_c10_bit_identical_runs(tmp_path, capsys):
    a = _session(tmp_path / "a")
    b = _session(tmp_path / "b")
    capsys.readouterr()
    differ = sorted(str(k) for k in set(a) | set(b) if a.get(k) != b.get(k))
    kinds = {k.suffix for k in a}
    ok = not differ and {".csv", ".jsonl", ".bin"} <= kinds
    record(10, ok, f"{len(a)} artifacts (curves, traces, checkpoints) compared, {len(differ)} differ {differ[:3]}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
