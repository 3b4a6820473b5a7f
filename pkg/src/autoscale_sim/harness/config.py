"""Experiment configuration, loadable from a single JSON document.

Every section is optional; omitted fields keep their defaults::

    {
      "autoscaler": "nimbus",
      "seed": 42,
      "phase_duration": 120,
      "sim": {"request_work": 2400.0},
      "reward": {"sigma": 0.15},
      "agent": {"lr": 0.001},
      "forecaster_path": "models/forecaster.nbg.json"
    }
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..agent import AgentConfig
from ..baselines import HpaConfig, KedaConfig
from ..loadgen import LoadPlan, PhaseSpec, default_plan
from ..reward import RewardConfig
from ..simcore import ResourceSpec, SimConfig

AUTOSCALERS = ("hpa", "keda", "nimbus")
DEFAULT_FORECASTER_PATH = "models/forecaster.nbg.json"
DEFAULT_AGENT_PATH = "models/agent.nbg.json"


class ConfigInvalid(ValueError):
    pass


@dataclass
class ExperimentConfig:
    autoscaler: str = "hpa"
    seed: int = 42
    phase_duration: int = 120
    phases: Optional[list[dict]] = None  # overrides the default four-phase plan
    scrape_interval: int = 15
    decision_interval: int = 30
    resources: ResourceSpec = field(default_factory=ResourceSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    hpa: HpaConfig = field(default_factory=HpaConfig)
    keda: KedaConfig = field(default_factory=KedaConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    forecaster_path: str = DEFAULT_FORECASTER_PATH
    agent_path: str = DEFAULT_AGENT_PATH
    out_dir: Optional[str] = None
    strict: bool = False

    def plan(self) -> LoadPlan:
        if self.phases is None:
            return default_plan(self.seed, self.phase_duration)
        return LoadPlan(phases=tuple(PhaseSpec(**p) for p in self.phases), seed=self.seed)

    def controller_interval(self) -> int:
        return {"hpa": self.hpa.sync_period, "keda": self.keda.polling_interval,
                "nimbus": self.decision_interval}[self.autoscaler]

    def validate(self) -> "ExperimentConfig":
        if self.autoscaler not in AUTOSCALERS:
            raise ConfigInvalid(f"autoscaler must be one of {AUTOSCALERS}, got {self.autoscaler!r}")
        try:
            plan = self.plan()
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad load plan: {exc}") from exc
        if self.scrape_interval <= 0 or self.decision_interval <= 0:
            raise ConfigInvalid("intervals must be positive")
        if self.decision_interval % self.scrape_interval:
            raise ConfigInvalid("scrape interval must divide the decision interval")
        ctl = self.controller_interval()
        if ctl % self.scrape_interval:
            raise ConfigInvalid("scrape interval must divide the controller interval")
        for phase in plan.phases:
            if phase.duration % self.scrape_interval or phase.duration % ctl:
                raise ConfigInvalid(f"phase {phase.name!r}: intervals must divide its duration")
        bounds = (self.sim.min_replicas, self.sim.max_replicas)
        for name, cfg in (("hpa", self.hpa), ("keda", self.keda), ("reward", self.reward)):
            if (cfg.min_replicas, cfg.max_replicas) != bounds:
                raise ConfigInvalid(f"{name} replica bounds differ from the simulator's {bounds}")
        if self.agent.max_replicas != self.sim.max_replicas:
            raise ConfigInvalid("agent max_replicas differs from the simulator's")
        return self

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_SECTIONS = {"resources": ResourceSpec, "sim": SimConfig, "hpa": HpaConfig, "keda": KedaConfig,
             "reward": RewardConfig, "agent": AgentConfig}


def _bounds_from(doc: dict) -> dict:
    sim = doc.get("sim") or {}
    return {k: sim[k] for k in ("min_replicas", "max_replicas") if k in sim}


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigInvalid(f"unknown configuration keys: {unknown}")
    kwargs = {}
    bounds = _bounds_from(doc)
    for key, value in doc.items():
        if key in _SECTIONS:
            cls = _SECTIONS[key]
            section = dict(value or {})
            # Replica bounds set once under "sim" propagate to every controller.
            for bk, bv in bounds.items():
                if key in ("hpa", "keda", "reward"):
                    section.setdefault(bk, bv)
            if key == "agent" and "max_replicas" in bounds:
                section.setdefault("max_replicas", bounds["max_replicas"])
            try:
                kwargs[key] = cls(**section)
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid(f"section {key!r}: {exc}") from exc
        else:
            kwargs[key] = value
    for key in ("hpa", "keda", "reward"):
        if key not in kwargs and bounds:
            kwargs[key] = _SECTIONS[key](**bounds)
    if "agent" not in kwargs and "max_replicas" in bounds:
        kwargs["agent"] = AgentConfig(max_replicas=bounds["max_replicas"])
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)
