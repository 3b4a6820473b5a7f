# %% [markdown]
# # Simulator and reactive baselines
# One seeded four-phase load plan replayed against the HPA-style and
# KEDA-style controllers. Run with `python3 demos/01_simulator_and_baselines.py`.

# %%
from autoscale_sim.harness import ExperimentConfig, compare, run_experiment

cfg = ExperimentConfig(seed=42)
plan = cfg.plan()
for phase, start, end in plan.windows():
    print(f"{phase.name:<10} {start:>4}-{end:<4}s  users {phase.concurrent_users:>2}  requests {phase.total_requests}")

# %% [markdown]
# Each run ticks the cluster once per second and scrapes every 15 s. The
# replica timeline below is sampled at scrape resolution.

# %%
reports = {name: run_experiment(cfg.with_overrides(autoscaler=name)) for name in ("hpa", "keda")}
for name, r in reports.items():
    line = "".join(str(row["replicas"]) if row["replicas"] < 10 else "+" for row in r.timeline)
    print(f"{name:<5} {line}   jobs {r.jobs}")

# %%
print(compare(list(reports.values())).render())

# %% [markdown]
# Per-phase breakdown: both controllers grow during the peak and shrink
# back once the cooldown traffic drains.

# %%
for name, r in reports.items():
    for phase, m in r.per_phase.items():
        print(f"{name:<5} {phase:<10} avg {m['avg_replicas']:.2f}  pod-s {m['resource_integral']:>5.0f}  events {m['scaling_events']}")
