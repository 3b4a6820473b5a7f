"""Offline training of the forecaster and the agent, plus archive conversion."""
from __future__ import annotations

import dataclasses
import datetime as _dt
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import forecaster as fc
from .. import store
from ..agent import DQN_TENSORS, AgentConfig, DqnAgent
from ..graph import NimbusController
from .config import ExperimentConfig
from .runner import run_experiment

log = logging.getLogger(__name__)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


# ---------------------------------------------------------------- archives

def forecaster_to_archive(model: fc.Forecaster, metadata: Optional[dict] = None) -> store.ModelArchive:
    return store.ModelArchive(kind="lstm", tensors={k: model.params[k] for k in fc.LSTM_TENSORS},
                              scaler=model.scaler, metadata={"created_at": _now(), **(metadata or {})})


def forecaster_from_archive(archive: store.ModelArchive) -> fc.Forecaster:
    if archive.kind != "lstm" or archive.scaler is None:
        raise store.SchemaMismatch("archive does not hold a forecaster with its scaler")
    return fc.Forecaster(params=dict(archive.tensors), scaler=archive.scaler)


def agent_to_archive(agent: DqnAgent, metadata: Optional[dict] = None) -> store.ModelArchive:
    return store.ModelArchive(kind="dqn", tensors={k: agent.main[k] for k in DQN_TENSORS},
                              metadata={"created_at": _now(), **(metadata or {})})


def agent_from_archive(archive: store.ModelArchive, config: Optional[AgentConfig] = None) -> DqnAgent:
    if archive.kind != "dqn":
        raise store.SchemaMismatch("archive does not hold a DQN")
    main = dict(archive.tensors)
    return DqnAgent(config=config or AgentConfig(), main=main, target={k: v.copy() for k, v in main.items()})


def load_forecaster(path) -> fc.Forecaster:
    return forecaster_from_archive(store.load(path))


def load_agent(path, config: Optional[AgentConfig] = None) -> DqnAgent:
    return agent_from_archive(store.load(path), config)


# ---------------------------------------------------------------- forecaster

def bootstrap_series(config: ExperimentConfig, seeds: Sequence[int]) -> list[np.ndarray]:
    """Scraped ``(total_mem_mib, pod_count)`` series from HPA-driven runs, one per seed."""
    out = []
    for seed in seeds:
        cfg = config.with_overrides(autoscaler="hpa", seed=int(seed), out_dir=None)
        report = run_experiment(cfg)
        rows = [(row["total_mem_mib"], row["pod_count"]) for row in report.timeline]
        out.append(np.array(rows, dtype=float))
    return out


@dataclass
class ForecasterFit:
    model: fc.Forecaster
    train_mape: float
    test_mape: float
    test_r2: float
    n_train: int
    n_test: int
    losses: list[float]

    def summary(self) -> dict:
        return {"train_mape": self.train_mape, "test_mape": self.test_mape, "test_r2": self.test_r2,
                "n_train": self.n_train, "n_test": self.n_test,
                "final_loss": self.losses[-1] if self.losses else None}


def train_forecaster(config: ExperimentConfig, seeds: Sequence[int] = (0, 1, 2, 3, 4),
                     epochs: int = 1500, lr: float = 0.1, holdout_runs: int = 1,
                     init_seed: int = 0) -> ForecasterFit:
    """Fit the LSTM on bootstrap runs; the last ``holdout_runs`` runs are held out whole.

    Holding out complete runs keeps overlapping windows of one trace from
    landing on both sides of the split.
    """
    if not 0 < holdout_runs < len(seeds):
        raise ValueError("need at least one training run and one held-out run")
    series = bootstrap_series(config, seeds)
    train_set, test_set = [], []
    for i, s in enumerate(series):
        (test_set if i >= len(series) - holdout_runs else train_set).extend(fc.make_windows(s))
    if not train_set:
        raise fc.EmptyDataset("bootstrap runs are too short for the lookback window")
    scaler = fc.fit_scaler(np.concatenate([w for w, _ in train_set]))
    params = fc.init_params(np.random.default_rng(init_seed))
    params, losses = fc.train(params, scaler, train_set, epochs, lr)
    model = fc.Forecaster(params, scaler)
    tr_pred = model.predict_many([w for w, _ in train_set])
    te_pred = model.predict_many([w for w, _ in test_set])
    te_act = [y for _, y in test_set]
    return ForecasterFit(model=model,
                         train_mape=fc.mape(tr_pred, [y for _, y in train_set]),
                         test_mape=fc.mape(te_pred, te_act), test_r2=fc.r2_score(te_pred, te_act),
                         n_train=len(train_set), n_test=len(test_set), losses=losses)


# ---------------------------------------------------------------- agent

@dataclass
class AgentFit:
    agent: DqnAgent
    episode_rewards: list[float]
    episode_avg_replicas: list[float]
    seeds: list[int]

    def reward_curve_csv(self) -> str:
        lines = ["episode,seed,total_reward,avg_replicas,epsilon_end"]
        for i, (seed, r, a) in enumerate(zip(self.seeds, self.episode_rewards, self.episode_avg_replicas)):
            lines.append(f"{i},{seed},{r!r},{a!r},")
        lines[-1] += repr(self.agent.epsilon)
        return "\n".join(lines) + "\n"


def train_agent(config: ExperimentConfig, model: Optional[fc.Forecaster], episodes: int = 150,
                seed: int = 0, agent: Optional[DqnAgent] = None) -> AgentFit:
    """Episodic training: one full phased run per episode, each on a fresh load seed."""
    agent = agent or DqnAgent(config=config.agent, seed=seed)
    seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(episodes, dtype=np.uint32)]
    rewards, avgs = [], []
    for ep, ep_seed in enumerate(seeds):
        cfg = config.with_overrides(autoscaler="nimbus", seed=ep_seed, out_dir=None)
        ctl = NimbusController(agent=agent, forecaster=model, reward_config=cfg.reward,
                               training=True, decision_interval=cfg.decision_interval)
        report = run_experiment(cfg, controller=ctl)
        rewards.append(float(sum(r.r_total for _, r in ctl.rewards)))
        avgs.append(report.avg_replicas)
        log.debug("episode %d seed %d reward %.3f avg %.2f eps %.3f", ep, ep_seed, rewards[-1],
                  avgs[-1], agent.epsilon)
    return AgentFit(agent=agent, episode_rewards=rewards, episode_avg_replicas=avgs, seeds=seeds)


def agent_config_dict(cfg: AgentConfig) -> dict:
    return dataclasses.asdict(cfg)
