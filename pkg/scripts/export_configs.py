"""Write the named scenarios in uavcrew.scenarios to configs/*.toml so the
CLI can run them."""
from pathlib import Path

from uavcrew.config import AgentBlock, ExperimentConfig, RunBlock, ScenarioBlock, dump_config
from uavcrew.scenarios import SCHEDULER_DDPG, SINGLE_CLUSTER_DDPG, centre_quit, single_cluster, toy, tradeoff

OUT = Path(__file__).resolve().parent.parent / "configs"


def crew(scenario, ddpg, episodes, name):
    return ExperimentConfig(
        scenario=ScenarioBlock(scenario.world, scenario.coverage, scenario.energy),
        agent=AgentBlock(ddpg=ddpg),
        run=RunBlock(episodes=episodes, out=f"runs/{name}"))


def main():
    OUT.mkdir(exist_ok=True)
    configs = {
        "single_cluster": crew(single_cluster(), SINGLE_CLUSTER_DDPG, 300, "single_cluster"),
        "centre_quit": crew(centre_quit(), SINGLE_CLUSTER_DDPG, 600, "centre_quit"),
    }
    for name, (sc, sched), episodes in (("tradeoff", tradeoff(), 300), ("toy", toy(), 1000)):
        cfg = crew(sc, SCHEDULER_DDPG, episodes, name)
        cfg.scheduler = sched
        configs[name] = cfg
    for name, cfg in configs.items():
        (OUT / f"{name}.toml").write_text(dump_config(cfg))
        print(OUT / f"{name}.toml")


if __name__ == "__main__":
    main()
