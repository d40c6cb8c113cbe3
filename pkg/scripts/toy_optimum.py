"""Enumerate every charging profile of the two-UAV, four-hour toy and
compare trained schedulers against the optimum."""
import argparse
import json

from uavcrew.scenarios import SCHEDULER_DDPG, toy
from uavcrew.solar import build_mapping, enumerate_optimal, make_problem, train_scheduler


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--episodes", type=int, default=1000)
    args = ap.parse_args()
    sc, cfg = toy()
    problem = make_problem(build_mapping(sc, cfg, seed=0), sc, cfg)
    best, values = enumerate_optimal(problem, cfg.coeff)
    print(json.dumps({"optimum": best.objective, "profiles": len(values),
                      "modes": ["".join(m.value[0] for m in row) for row in best.modes]}), flush=True)
    for seed in args.seeds:
        prof = train_scheduler(problem, cfg.coeff, args.episodes, seed=seed, cfg=SCHEDULER_DDPG).profile
        print(json.dumps({"seed": seed, "objective": prof.objective, "ratio": prof.objective / best.objective,
                          "modes": ["".join(m.value[0] for m in row) for row in prof.modes]}), flush=True)


if __name__ == "__main__":
    main()
