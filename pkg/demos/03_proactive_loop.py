# %% [markdown]
# # Proactive decision loop
# Trains the forecaster and the dueling DQN, inspects one six-node decision
# cycle, and compares all three autoscalers on seed 42.
# Takes about 20 s.

# %%
import json

from autoscale_sim.harness import ExperimentConfig, compare, run_experiment
from autoscale_sim.harness.training import train_agent, train_forecaster
from autoscale_sim.graph import NimbusController

cfg = ExperimentConfig(seed=42)
forecaster = train_forecaster(cfg).model
fit = train_agent(cfg, forecaster, episodes=150, seed=0)
print("episode reward, first/last 5:", [round(r, 2) for r in fit.episode_rewards[:5]],
      [round(r, 2) for r in fit.episode_rewards[-5:]])

# %%
ctl = NimbusController(agent=fit.agent, forecaster=forecaster, reward_config=cfg.reward)
nimbus = run_experiment(cfg.with_overrides(autoscaler="nimbus"), controller=ctl)
print(json.dumps(ctl.cycles[-1].to_dict()["nodes"], indent=1))

# %%
baselines = [run_experiment(cfg.with_overrides(autoscaler=n)) for n in ("hpa", "keda")]
print(compare([nimbus, *baselines]).render())

# %% [markdown]
# ## Where the reward peaks
# The learned policy follows the reward. Scoring fixed replica counts with
# the same reward (KeepSame every cycle, no forecast term) shows the
# optimum sits near two or three pods, so a reward-maximizing agent has no
# reason to over-provision the way the published testbed did.

# %%
from autoscale_sim.agent import ScalingAction
from autoscale_sim.reward import compute_reward


class Fixed:
    interval = 15

    def __init__(self, n):
        self.n = n

    def decide(self, t, current, sample):
        return self.n


for n in (1, 2, 3, 4, 6, 8):
    r = run_experiment(cfg.with_overrides(autoscaler="hpa"), controller=Fixed(n))
    total = sum(compute_reward(ScalingAction.KEEP_SAME, row["cpu_pct"] / 100, row["mem_pct"] / 100, None, 1.0,
                               [], row["replicas"], cfg.reward).r_total
                for row in r.timeline[2::2])
    print(f"fixed {n}: reward per episode {total:6.2f}  avg replicas {r.avg_replicas:.2f}")
