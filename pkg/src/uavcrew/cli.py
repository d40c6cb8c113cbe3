"""Command-line driver: training, evaluation, mapping tables, baselines,
brute-force optima and run reports."""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash, dump_config, load_config, to_dict
from .ddpg import ApcHarness, CrewTask, DdpgAgent, apc_run, evaluate
from .marl import DqnAgentSet, evaluate_random_crew, train_marl
from .nn import ChecksumError
from .solar import (InfeasibleError, MappingTable, TooLargeError, baseline_min_uavs, build_mapping,
                    enumerate_optimal, make_problem, policy_profile, train_scheduler)
from .world import ConfigError


class CliError(Exception):
    pass


def _out_dir(path) -> Path:
    """Runs are write-once: refuse a directory that already holds files."""
    out = Path(path)
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise CliError(f"output directory {out} already exists and is not empty")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"run.seed={args.seed}")
    if getattr(args, "workers", None) is not None:
        overrides.append(f"run.workers={args.workers}")
    if getattr(args, "episodes", None) is not None:
        overrides.append(f"run.episodes={args.episodes}")
    if getattr(args, "out", None) is not None:
        overrides.append(f"run.out={json.dumps(str(args.out))}")
    return load_config(args.config, overrides)


def _manifest(out: Path, command: str, cfg: ExperimentConfig, extra: Optional[dict] = None) -> None:
    man = {
        "command": command,
        "config_hash": config_hash(cfg),
        "config": to_dict(cfg),
        "seeds": {"run": cfg.run.seed, "eval": list(cfg.run.eval_seeds)},
        "workers": cfg.run.workers,
        "versions": {"uavcrew": __version__, "python": platform.python_version(), "numpy": np.__version__},
    }
    man.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    (out / "config.toml").write_text(dump_config(cfg))


def _write_csv(path: Path, rows: list) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def _mapping_for(cfg: ExperimentConfig, mapping_path) -> MappingTable:
    if mapping_path:
        return MappingTable.from_csv(mapping_path)
    return build_mapping(cfg.scenario.build(), cfg.scheduler, seed=cfg.run.seed, ddpg_cfg=cfg.agent.ddpg)


# --- commands ---------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenario.build()
    run = cfg.run
    budget = run.wall_budget or None
    if args.kind == "ddpg":
        task = CrewTask(scenario, cfg.agent.ddpg.beta)
        env = task.make()
        agent = DdpgAgent(env.state_dim, env.action_dim, cfg.agent.ddpg, seed=run.seed)
        out = _out_dir(run.out)
        res = apc_run(ApcHarness.build(task, run.workers, agent, seed=run.seed), run.episodes, budget)
        _write_csv(out / "curve.csv", res.curve)
        agent.save(out / "checkpoint", {"task": "crew"})
        _manifest(out, "train ddpg", cfg, {"episodes_run": len(res.curve), "train_steps": res.train_steps})
    elif args.kind == "marl":
        agents = DqnAgentSet(scenario.world.n_max, cfg.agent.dqn, seed=run.seed)
        out = _out_dir(run.out)
        curve = train_marl(agents, scenario, run.episodes, seed=run.seed)
        _write_csv(out / "curve.csv", curve)
        agents.save(out / "checkpoint", {"task": "crew"})
        _manifest(out, "train marl", cfg, {"episodes_run": len(curve)})
    else:
        mapping = _mapping_for(cfg, args.mapping)
        problem = make_problem(mapping, scenario, cfg.scheduler)
        out = _out_dir(run.out)
        res = train_scheduler(problem, cfg.scheduler.coeff, run.episodes, seed=run.seed, cfg=cfg.agent.ddpg,
                              workers=run.workers)
        mapping.to_csv(out / "mapping.csv")
        res.profile.to_csv(out / "profile.csv")
        _write_csv(out / "curve.csv", res.curve)
        res.agent.save(out / "checkpoint", {"task": "scheduler"})
        _manifest(out, "train scheduler", cfg, {
            "episodes_run": len(res.curve), "objective": res.profile.objective,
            "final_energy": res.profile.final_energy, "served": res.profile.total_served,
            "violations": res.profile.violations})
    print(f"wrote {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenario.build()
    seeds = args.seeds if args.seeds else cfg.run.eval_seeds
    ckpt = Path(args.checkpoint)
    kind = json.loads((ckpt / "manifest.json").read_text()).get("meta", {}).get("kind") \
        if (ckpt / "manifest.json").exists() else None
    if kind is None:
        raise ChecksumError(f"no readable checkpoint at {ckpt}")
    task_kind = json.loads((ckpt / "manifest.json").read_text())["meta"].get("task")
    if kind == "marl":
        agents = DqnAgentSet.load(ckpt, cfg.agent.dqn)
        if len(agents) != scenario.world.n_max:
            raise ConfigError(f"checkpoint has {len(agents)} agents, scenario expects {scenario.world.n_max}")
        out = _out_dir(cfg.run.out)
        res = evaluate_random_crew(agents, scenario, seeds, trace_dir=out, window=cfg.run.window)
        summary = {"mean_served": res["summary"]["mean_served"],
                   "per_seed": {r["seed"]: r["mean_served"] for r in res["runs"]}}
        windows = [c for r in res["runs"] for c in r["changes"]]
        if windows:
            summary["event_windows"] = windows
    elif task_kind == "scheduler":
        agent = DdpgAgent.load(ckpt, cfg.agent.ddpg)
        problem = make_problem(_mapping_for(cfg, args.mapping), scenario, cfg.scheduler)
        expected = 4 * problem.n + 1
        if agent.state_dim != expected or agent.action_dim != problem.n:
            raise ConfigError(f"checkpoint dims (state {agent.state_dim}, action {agent.action_dim}) do not "
                              f"match scenario (state {expected}, action {problem.n})")
        out = _out_dir(cfg.run.out)
        prof = policy_profile(agent, problem, cfg.scheduler.coeff)
        prof.to_csv(out / "profile.csv")
        summary = {"objective": prof.objective, "served": prof.total_served, "final_energy": prof.final_energy,
                   "violations": prof.violations}
    else:
        agent = DdpgAgent.load(ckpt, cfg.agent.ddpg)
        task = CrewTask(scenario, cfg.agent.ddpg.beta)
        env = task.make()
        if agent.state_dim != env.state_dim or agent.action_dim != env.action_dim:
            raise ConfigError(f"checkpoint dims (state {agent.state_dim}, action {agent.action_dim}) do not "
                              f"match scenario (state {env.state_dim}, action {env.action_dim})")
        out = _out_dir(cfg.run.out)
        summary = evaluate(agent, task, seeds, trace_dir=out, window=cfg.run.window)["summary"]
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _manifest(out, "eval", cfg, {"checkpoint": str(ckpt), "eval_seeds": list(seeds)})
    print(json.dumps({k: v for k, v in summary.items() if k != "event_windows"}, sort_keys=True))
    return 0


def cmd_mapping(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenario.build()
    out = _out_dir(cfg.run.out)
    table = build_mapping(scenario, cfg.scheduler, backend=args.backend, seed=cfg.run.seed,
                          ddpg_cfg=cfg.agent.ddpg)
    table.to_csv(out / "mapping.csv")
    _manifest(out, "mapping", cfg)
    print(f"wrote {out / 'mapping.csv'}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _load(args)
    table = _mapping_for(cfg, args.mapping)
    k_min = baseline_min_uavs(table, table.demand, cfg.scheduler.p_min)
    out = _out_dir(cfg.run.out)
    _write_csv(out / "baseline.csv", [{"hour": h, "k_min": int(k)} for h, k in enumerate(k_min)])
    _manifest(out, "baseline", cfg)
    print(" ".join(str(int(k)) for k in k_min))
    return 0


def cmd_enumerate(args) -> int:
    cfg = _load(args)
    sc = cfg.scheduler
    n_profiles = 3 ** (sc.n_uavs * sc.hours)
    if n_profiles > args.limit:
        raise TooLargeError(f"refusing to enumerate 3^{sc.n_uavs * sc.hours} = {n_profiles} profiles "
                            f"(limit {args.limit})")
    problem = make_problem(_mapping_for(cfg, args.mapping), cfg.scenario.build(), sc)
    best, values = enumerate_optimal(problem, sc.coeff, limit=args.limit)
    out = _out_dir(cfg.run.out)
    best.to_csv(out / "profile.csv")
    report = {"objective": best.objective, "profiles": int(values.size), "served": best.total_served,
              "final_energy": best.final_energy, "violations": best.violations, "coeff": sc.coeff}
    (out / "optimum.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _manifest(out, "enumerate", cfg)
    print(json.dumps(report, sort_keys=True))
    return 0


def _read_csv(path: Path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_report(args) -> int:
    run = Path(args.run)
    if not run.is_dir():
        raise CliError(f"no run directory at {run}")
    lines = [f"run: {run}"]
    man = run / "manifest.json"
    if man.exists():
        m = json.loads(man.read_text())
        lines.append(f"command: {m.get('command')}  config: {m.get('config_hash', '')[:12]}")
    if (run / "curve.csv").exists():
        rows = _read_csv(run / "curve.csv")
        if rows:
            rets = [float(r["return"]) for r in rows]
            tail = rets[-max(1, len(rets) // 10):]
            lines.append(f"episodes: {len(rets)}  first return: {rets[0]:.4f}  last-10% mean: {np.mean(tail):.4f}")
    if (run / "mapping.csv").exists():
        table = MappingTable.from_csv(run / "mapping.csv")
        lines.append(f"mapping: k=0..{table.n_max}, {table.hours} hours, monotone={table.is_monotone()}")
        for k in range(table.n_max + 1):
            lines.append(f"  k={k}: " + " ".join(str(int(u)) for u in table.users[k]))
    if (run / "profile.csv").exists():
        rows = _read_csv(run / "profile.csv")
        uavs = sorted({int(r["uav"]) for r in rows})
        lines.append("profile (S=serve C=charge I=idle):")
        for i in uavs:
            mine = sorted((r for r in rows if int(r["uav"]) == i), key=lambda r: int(r["hour"]))
            lines.append(f"  uav {i}: " + "".join(r["status"][0] for r in mine)
                         + f"  final battery {float(mine[-1]['battery']):.1f}")
    if (run / "summary.json").exists():
        s = json.loads((run / "summary.json").read_text())
        lines.append("summary: " + json.dumps({k: v for k, v in s.items() if k != "event_windows"}, sort_keys=True))
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavcrew", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="TOML experiment config")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted config override")
        sp.add_argument("--seed", type=int)
        if out:
            sp.add_argument("--out", help="run directory (must be new or empty)")

    t = sub.add_parser("train", help="train a positioning or scheduling agent")
    t.add_argument("kind", choices=["ddpg", "marl", "scheduler"])
    common(t)
    t.add_argument("--workers", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--mapping", help="mapping-table CSV (scheduler only)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="noise-free rollouts of a checkpoint")
    e.add_argument("checkpoint")
    common(e)
    e.add_argument("--seeds", type=int, nargs="+")
    e.add_argument("--mapping", help="mapping-table CSV (scheduler checkpoints)")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("mapping", help="tabulate served users per crew size and hour")
    common(m)
    m.add_argument("--backend", choices=["oracle", "ddpg"])
    m.set_defaults(func=cmd_mapping)

    b = sub.add_parser("baseline", help="minimum crew per hour meeting the service floor")
    common(b)
    b.add_argument("--mapping")
    b.set_defaults(func=cmd_baseline)

    n = sub.add_parser("enumerate", help="brute-force optimal charging profile (tiny instances)")
    common(n)
    n.add_argument("--mapping")
    n.add_argument("--limit", type=int, default=10**6)
    n.set_defaults(func=cmd_enumerate)

    r = sub.add_parser("report", help="summarize a run directory")
    r.add_argument("run")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(json.dumps({"error": "infeasible", "infeasible_hours": exc.hours, "message": str(exc)}),
              file=sys.stderr)
        return 3
    except (ConfigError, CliError, ChecksumError, TooLargeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
