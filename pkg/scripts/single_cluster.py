"""Train the single-UAV positioning agent on several seeds and compare its
noise-free served count with the best static placement on a 20x20 grid."""
import argparse
import json

from uavcrew.ddpg import ApcHarness, CrewTask, DdpgAgent, apc_run, evaluate, grid_oracle
from uavcrew.scenarios import SINGLE_CLUSTER_DDPG, single_cluster


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--episodes", type=int, default=300)
    args = ap.parse_args()
    sc = single_cluster()
    task = CrewTask(sc)
    env = task.make()
    rows = []
    for seed in args.seeds:
        agent = DdpgAgent(env.state_dim, env.action_dim, SINGLE_CLUSTER_DDPG, seed=seed)
        apc_run(ApcHarness.build(task, 1, agent, seed=seed), args.episodes)
        served = evaluate(agent, task, [1000 + seed])["summary"]["mean_served"]
        best, xy = grid_oracle(sc, 1000 + seed)
        rows.append({"seed": seed, "served": served, "oracle": best, "oracle_xy": xy, "ratio": served / best})
        print(json.dumps(rows[-1]), flush=True)


if __name__ == "__main__":
    main()
