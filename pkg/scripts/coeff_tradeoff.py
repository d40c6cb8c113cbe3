"""Train the charging scheduler at several coeff values and report the
median served users and final residual energy across seeds."""
import argparse
import json

import numpy as np

from uavcrew.scenarios import SCHEDULER_DDPG, tradeoff
from uavcrew.solar import build_mapping, make_problem, train_scheduler


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--coeffs", type=float, nargs="+", default=[0.1, 0.5, 0.9])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--episodes", type=int, default=300)
    args = ap.parse_args()
    sc, cfg = tradeoff()
    problem = make_problem(build_mapping(sc, cfg, seed=0), sc, cfg)
    for coeff in args.coeffs:
        energy, served = [], []
        for seed in args.seeds:
            prof = train_scheduler(problem, coeff, args.episodes, seed=seed, cfg=SCHEDULER_DDPG).profile
            energy.append(prof.final_energy)
            served.append(prof.total_served)
            modes = ["".join(m.value[0] for m in row) for row in prof.modes]
            print(json.dumps({"coeff": coeff, "seed": seed, "served": served[-1], "final_energy": energy[-1],
                              "violations": len(prof.violations), "modes": modes}), flush=True)
        print(json.dumps({"coeff": coeff, "median_served": float(np.median(served)),
                          "median_final_energy": float(np.median(energy))}), flush=True)


if __name__ == "__main__":
    main()
