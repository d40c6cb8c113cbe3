"""Train on the centre-quit scenario and compare the post-quit served count
with the same policy frozen in place from the quit onward."""
import argparse
import json

import numpy as np

from uavcrew.ddpg import ApcHarness, CrewTask, DdpgAgent, actor_policy, apc_run, frozen_after, rollout
from uavcrew.scenarios import SINGLE_CLUSTER_DDPG, centre_quit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--episodes", type=int, default=600)
    ap.add_argument("--evals", type=int, default=3, help="evaluation episodes per seed")
    args = ap.parse_args()
    sc = centre_quit()
    task = CrewTask(sc)
    env = task.make()
    half = sc.world.slots // 2
    for seed in args.seeds:
        agent = DdpgAgent(env.state_dim, env.action_dim, SINGLE_CLUSTER_DDPG, seed=seed)
        apc_run(ApcHarness.build(task, 1, agent, seed=seed), args.episodes)
        policy = actor_policy(agent.actor)
        evals = [1000 + 10 * seed + k for k in range(args.evals)]
        live = [rollout(task, policy, s).windows[0] for s in evals]
        held = [rollout(task, frozen_after(policy, half), s).windows[0] for s in evals]
        print(json.dumps({"seed": seed, "pre": np.mean([w["pre"] for w in live]),
                          "post": np.mean([w["post"] for w in live]),
                          "frozen_post": np.mean([w["post"] for w in held])}), flush=True)


if __name__ == "__main__":
    main()
