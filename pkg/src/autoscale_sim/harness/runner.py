"""Run one phased experiment and summarize it."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..baselines import HpaController, KedaController
from ..graph import NimbusController
from ..loadgen import generate_arrivals
from ..metrics import SeriesStore, scrape, utilization
from ..simcore import new_cluster, route_request, set_desired_replicas, tick
from .config import AUTOSCALERS, ExperimentConfig

# Figures reported for the original testbed (480-510 s run on a KinD
# cluster).  Carried into reports for side-by-side reading; never asserted.
PUBLISHED_BASELINE = {
    "nimbus": {"avg_replicas": 5.44, "resource_integral": 2775.0, "scaling_events": 8},
    "hpa": {"avg_replicas": 3.05, "resource_integral": None, "scaling_events": 4},
    "keda": {"avg_replicas": 2.93, "resource_integral": None, "scaling_events": 4},
}

TIMELINE_FIELDS = ("t", "pod_count", "cpu_pct", "mem_pct", "replicas")
REWARD_FIELDS = ("t", "r_cpu", "r_mem", "r_current", "r_forecast", "w_current", "w_forecast",
                 "r_combined", "r_stability", "r_action_bonus", "r_cost_penalty", "r_total",
                 "workload_class")


class MissingModel(FileNotFoundError):
    pass


class EmptyTimeline(ValueError):
    pass


class MismatchedPlans(ValueError):
    pass


def summarize(replicas: Sequence[float], dt: float) -> tuple[float, float, int]:
    """(average replicas, resource integral in pod-seconds, scaling events) of a uniform timeline."""
    if len(replicas) == 0:
        raise EmptyTimeline("cannot summarize an empty timeline")
    integral = float(sum(replicas)) * dt
    events = sum(1 for a, b in zip(replicas, replicas[1:]) if a != b)
    return integral / (len(replicas) * dt), integral, events


@dataclass
class RunReport:
    autoscaler: str
    seed: int
    plan: dict
    scrape_interval: int
    timeline: list[dict]
    avg_replicas: float
    resource_integral: float
    scaling_events: int
    per_phase: dict[str, dict]
    jobs: dict[str, int]
    decisions: list[dict] = field(default_factory=list)
    rewards: list[dict] = field(default_factory=list)
    published_baseline: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "autoscaler": self.autoscaler,
            "seed": self.seed,
            "plan": self.plan,
            "scrape_interval": self.scrape_interval,
            "avg_replicas": self.avg_replicas,
            "resource_integral": self.resource_integral,
            "scaling_events": self.scaling_events,
            "per_phase": self.per_phase,
            "jobs": self.jobs,
            "published_baseline": self.published_baseline,
            "timeline": self.timeline,
            "decisions": self.decisions,
            "rewards": self.rewards,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunReport":
        return cls(**{k: doc.get(k) for k in (
            "autoscaler", "seed", "plan", "scrape_interval", "timeline", "avg_replicas",
            "resource_integral", "scaling_events", "per_phase", "jobs")},
            decisions=doc.get("decisions") or [], rewards=doc.get("rewards") or [],
            published_baseline=doc.get("published_baseline"))

    def timeline_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TIMELINE_FIELDS)
        for row in self.timeline:
            w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in TIMELINE_FIELDS])
        return buf.getvalue()

    def rewards_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REWARD_FIELDS)
        for row in self.rewards:
            w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in REWARD_FIELDS])
        return buf.getvalue()

    def decisions_jsonl(self) -> str:
        return "".join(json.dumps(d) + "\n" for d in self.decisions)


def write_outputs(report: RunReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "timeline.csv").write_text(report.timeline_csv())
    (out / "decisions.jsonl").write_text(report.decisions_jsonl())
    (out / "rewards.csv").write_text(report.rewards_csv())
    return out


def load_report(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text()))


def build_controller(config: ExperimentConfig, forecaster=None, agent=None):
    if config.autoscaler == "hpa":
        return HpaController(config.hpa)
    if config.autoscaler == "keda":
        return KedaController(config.keda)
    from .training import load_agent, load_forecaster

    if forecaster is None:
        if not Path(config.forecaster_path).exists():
            raise MissingModel(f"forecaster archive not found: {config.forecaster_path}")
        forecaster = load_forecaster(config.forecaster_path)
    if agent is None:
        if not Path(config.agent_path).exists():
            raise MissingModel(f"agent archive not found: {config.agent_path}")
        agent = load_agent(config.agent_path, config.agent)
    return NimbusController(agent=agent, forecaster=forecaster, reward_config=config.reward,
                            decision_interval=config.decision_interval)


def run_experiment(config: ExperimentConfig, forecaster=None, agent=None,
                   controller=None) -> RunReport:
    """Replay the load plan against the simulator under one autoscaler.

    ``controller`` may be supplied directly (training loops do this);
    otherwise it is built from ``config``, loading model archives for the
    proactive autoscaler.
    """
    config.validate()
    plan = config.plan()
    if controller is None:
        controller = build_controller(config, forecaster, agent)
    interval = config.controller_interval()
    arrivals = generate_arrivals(plan, config.sim)
    cluster = new_cluster(config.resources, config.sim, strict=config.strict)
    store = SeriesStore(scrape_interval=config.scrape_interval)
    timeline: list[dict] = []
    nimbus = isinstance(controller, NimbusController)

    nxt = 0
    for t in range(plan.total_duration):
        on_scrape = t % config.scrape_interval == 0
        if on_scrape:
            store.append(scrape(cluster))
        if t % interval == 0:
            sample = store.latest()
            if nimbus:
                controller.run_cycle(cluster, store, t)
            else:
                set_desired_replicas(cluster, controller.decide(t, cluster.desired_replicas, sample))
        if on_scrape:
            sample = store.latest()
            cpu_pct, mem_pct = utilization(sample)
            timeline.append({"t": t, "pod_count": sample.pod_count, "cpu_pct": cpu_pct,
                             "mem_pct": mem_pct, "replicas": cluster.desired_replicas,
                             "total_mem_mib": sample.total_mem_mib})
        while nxt < len(arrivals) and arrivals[nxt][0] < t + 1:
            route_request(cluster, arrivals[nxt][1])
            nxt += 1
        tick(cluster)
    if nimbus:
        controller.close_episode(cluster, store)

    replicas = [row["replicas"] for row in timeline]
    avg, integral, events = summarize(replicas, config.scrape_interval)
    per_phase = {}
    for phase, start, end in plan.windows():
        idx = [i for i, row in enumerate(timeline) if start <= row["t"] < end]
        p_avg, p_int, _ = summarize([replicas[i] for i in idx], config.scrape_interval)
        p_events = sum(1 for i in idx if i > 0 and replicas[i] != replicas[i - 1])
        per_phase[phase.name] = {"avg_replicas": p_avg, "resource_integral": p_int,
                                 "scaling_events": p_events}
    report = RunReport(
        autoscaler=config.autoscaler, seed=config.seed, plan=plan.to_dict(),
        scrape_interval=config.scrape_interval, timeline=timeline, avg_replicas=avg,
        resource_integral=integral, scaling_events=events, per_phase=per_phase,
        jobs={"injected": cluster.injected, "completed": cluster.completed,
              "in_flight": cluster.in_flight_count(), "queued": len(cluster.pending_queue)},
        published_baseline=PUBLISHED_BASELINE[config.autoscaler],
    )
    if nimbus:
        report.decisions = [c.to_dict() for c in controller.cycles]
        report.rewards = [{"t": t, **r.as_dict()} for t, r in controller.rewards]
    if config.out_dir:
        write_outputs(report, config.out_dir)
    return report


@dataclass
class ComparisonTable:
    rows: list[dict]
    flags: dict[str, str]

    def render(self) -> str:
        head = f"{'autoscaler':<10} {'avg':>7} {'d_avg':>7} {'pod_s':>9} {'d_pod_s':>9} {'events':>6} {'d_ev':>5}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r['autoscaler']:<10} {r['avg_replicas']:>7.2f} {r['delta_avg_replicas']:>+7.2f} "
                         f"{r['resource_integral']:>9.0f} {r['delta_resource_integral']:>+9.0f} "
                         f"{r['scaling_events']:>6d} {r['delta_scaling_events']:>+5d}")
        lines.append("")
        lines += [f"{k}: {v}" for k, v in self.flags.items()]
        ref = [r for r in self.rows if r.get("published")]
        if ref:
            lines.append("")
            lines.append("published reference (original testbed):")
            for r in ref:
                p = r["published"]
                integ = "n/a" if p["resource_integral"] is None else f"{p['resource_integral']:.0f}"
                lines.append(f"  {r['autoscaler']:<8} avg {p['avg_replicas']:.2f}  pod_s {integ}  events {p['scaling_events']}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"rows": self.rows, "flags": self.flags}


_METRICS = ("avg_replicas", "resource_integral", "scaling_events")


def compare(reports: Sequence[RunReport]) -> ComparisonTable:
    """Side-by-side metrics; deltas are measured from the lowest value in each column."""
    if len(reports) < 2:
        raise ValueError("need at least two reports to compare")
    plan = reports[0].plan
    if any(r.plan != plan for r in reports[1:]):
        raise MismatchedPlans("reports were produced from different load plans")
    order = {name: i for i, name in enumerate(AUTOSCALERS)}
    ordered = sorted(reports, key=lambda r: order.get(r.autoscaler, len(order)))
    floors = {m: min(getattr(r, m) for r in ordered) for m in _METRICS}
    rows = []
    for r in ordered:
        row = {"autoscaler": r.autoscaler}
        for m in _METRICS:
            row[m] = getattr(r, m)
            row[f"delta_{m}"] = getattr(r, m) - floors[m]
        row["published"] = r.published_baseline
        rows.append(row)

    def top(metric):
        return max(rows, key=lambda row: row[metric])["autoscaler"]

    flags = {"highest_avg_replicas": top("avg_replicas"),
             "largest_resource_integral": top("resource_integral"),
             "most_scaling_events": top("scaling_events")}
    return ComparisonTable(rows=rows, flags=flags)
