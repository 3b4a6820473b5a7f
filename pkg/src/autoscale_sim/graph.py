"""Six-node decision cycle of the proactive autoscaler.

Each decision interval runs, in order::

    Collect -> FeatureProcess -> Infer -> Validate -> Execute -> Learn

Validation is pluggable.  :func:`rule_validator` is a deterministic
stand-in for a language-model reviewer: it sees the proposed action and the
same context such a reviewer would and answers Approve / Override / Reject.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

from .agent import DqnAgent, Experience, ScalingAction, StateVector
from .forecaster import LOOKBACK, ForecastResult, Forecaster, confidence
from .metrics import InsufficientHistory, MetricsSample, SeriesStore, utilization, window
from .reward import RewardBreakdown, RewardConfig, compute_reward
from .simcore import ClusterState, set_desired_replicas

NODES = ("Collect", "FeatureProcess", "Infer", "Validate", "Execute", "Learn")


@dataclass(frozen=True)
class Approve:
    kind: str = "Approve"


@dataclass(frozen=True)
class Override:
    action: ScalingAction
    reason: str
    kind: str = "Override"


@dataclass(frozen=True)
class Reject:
    reason: str
    kind: str = "Reject"


ValidationVerdict = Union[Approve, Override, Reject]


@dataclass(frozen=True)
class ValidationContext:
    state_vec: StateVector
    forecast: Optional[ForecastResult]
    current_replicas: int
    min_replicas: int
    max_replicas: int
    mem_target: float = 0.80


Validator = Callable[[ScalingAction, ValidationContext], ValidationVerdict]


def rule_validator(proposed: ScalingAction, ctx: ValidationContext) -> ValidationVerdict:
    if proposed is ScalingAction.KEEP_SAME:
        return Approve()
    if proposed is ScalingAction.SCALE_DOWN and ctx.state_vec.predicted_mem_pct > ctx.mem_target * 100.0:
        return Reject("predicted memory pressure")
    if proposed is ScalingAction.SCALE_UP and ctx.current_replicas >= ctx.max_replicas:
        return Reject("at max replicas")
    if proposed is ScalingAction.SCALE_DOWN and ctx.current_replicas <= ctx.min_replicas:
        return Reject("at min replicas")
    return Approve()


def resolve(proposed: ScalingAction, verdict: ValidationVerdict) -> ScalingAction:
    if isinstance(verdict, Override):
        return ScalingAction(verdict.action)
    if isinstance(verdict, Reject):
        return ScalingAction.KEEP_SAME
    return proposed


def _verdict_dict(v: ValidationVerdict) -> dict:
    out = {"kind": v.kind}
    if isinstance(v, Override):
        out.update(action=int(v.action), reason=v.reason)
    elif isinstance(v, Reject):
        out["reason"] = v.reason
    return out


@dataclass
class CycleState:
    t: int
    sample: Optional[MetricsSample] = None
    forecast: Optional[ForecastResult] = None
    state_vec: Optional[StateVector] = None
    proposed: Optional[ScalingAction] = None
    verdict: Optional[ValidationVerdict] = None
    executed: Optional[int] = None
    reward: Optional[RewardBreakdown] = None
    trace: list[tuple[str, dict]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "state_vec": None if self.state_vec is None else self.state_vec.as_list(),
            "forecast": None if self.forecast is None else {
                "predicted_total_mem_mib": self.forecast.predicted_total_mem_mib,
                "horizon": self.forecast.horizon, "confidence": self.forecast.confidence},
            "proposed": None if self.proposed is None else int(self.proposed),
            "verdict": None if self.verdict is None else _verdict_dict(self.verdict),
            "executed_replicas": self.executed,
            "reward": None if self.reward is None else self.reward.as_dict(),
            "nodes": [{"node": name, **summary} for name, summary in self.trace],
        }


@dataclass
class NimbusController:
    """Owns the per-deployment state the decision cycle carries between intervals."""

    agent: DqnAgent
    forecaster: Optional[Forecaster] = None
    reward_config: RewardConfig = field(default_factory=RewardConfig)
    validator: Validator = rule_validator
    training: bool = False
    eval_epsilon: float = 0.0
    decision_interval: int = 30
    lookback: int = LOOKBACK
    confidence_window: int = 5

    def __post_init__(self):
        self.prev_state: Optional[StateVector] = None
        self.prev_action: Optional[ScalingAction] = None
        self.executed_actions: list[ScalingAction] = []
        self.pending_forecasts: list[tuple[int, float]] = []
        self.abs_pct_errors: list[float] = []
        self.cycles: list[CycleState] = []
        self.rewards: list[tuple[int, RewardBreakdown]] = []

    @property
    def interval(self) -> int:
        return self.decision_interval

    # -- nodes ---------------------------------------------------------------

    def _collect(self, cs: CycleState, cluster: ClusterState, store: SeriesStore) -> dict:
        cs.sample = store.latest()
        if cs.sample is None:
            raise RuntimeError("decision cycle needs at least one scrape")
        self._realize_forecasts(store)
        conf = self.forecast_confidence()
        summary: dict[str, Any] = {"sample_t": cs.sample.t, "confidence": conf}
        if self.forecaster is None:
            summary["forecast"] = "omitted: no forecaster"
            return summary
        try:
            rows = window(store, cs.t, self.lookback)
        except InsufficientHistory as exc:
            summary["forecast"] = f"omitted: {exc}"
            return summary
        cs.forecast = self.forecaster.predict([[s.total_mem_mib, s.pod_count] for s in rows], conf)
        self.pending_forecasts.append((cs.sample.t + cs.forecast.horizon, cs.forecast.predicted_total_mem_mib))
        summary["forecast"] = cs.forecast.predicted_total_mem_mib
        return summary

    def _feature_process(self, cs: CycleState, cluster: ClusterState) -> dict:
        cpu_pct, mem_pct = utilization(cs.sample)
        if cs.forecast is not None and cs.sample.total_mem_limit > 0:
            s1 = cs.forecast.predicted_total_mem_mib / cs.sample.total_mem_limit * 100.0
        else:
            s1 = mem_pct
        cs.state_vec = StateVector(predicted_mem_pct=s1, cpu_pct=cpu_pct, mem_pct=mem_pct,
                                   replicas=cluster.desired_replicas)
        return {"state": cs.state_vec.as_list()}

    def _infer(self, cs: CycleState) -> dict:
        eps = self.agent.epsilon if self.training else self.eval_epsilon
        cs.proposed = self.agent.act(cs.state_vec, eps)
        return {"action": int(cs.proposed), "epsilon": eps,
                "q": [float(v) for v in self.agent.q(cs.state_vec)]}

    def _validate(self, cs: CycleState, cluster: ClusterState) -> dict:
        ctx = ValidationContext(state_vec=cs.state_vec, forecast=cs.forecast,
                                current_replicas=cluster.desired_replicas,
                                min_replicas=cluster.min_replicas, max_replicas=cluster.max_replicas,
                                mem_target=self.reward_config.mem_target)
        cs.verdict = self.validator(cs.proposed, ctx)
        return _verdict_dict(cs.verdict)

    def _execute(self, cs: CycleState, cluster: ClusterState) -> dict:
        action = resolve(cs.proposed, cs.verdict)
        before = cluster.desired_replicas
        set_desired_replicas(cluster, before + int(action))
        cs.executed = cluster.desired_replicas
        self._pending_action = action
        return {"action": int(action), "replicas_before": before, "replicas_after": cs.executed}

    def _learn(self, cs: CycleState) -> dict:
        summary: dict[str, Any] = {}
        if self.prev_state is not None:
            cs.reward = self._transition(cs.t, cs.state_vec, cs.forecast, done=False, summary=summary)
        else:
            summary["reward"] = "omitted: first cycle"
        self.prev_state = cs.state_vec
        self.prev_action = self._pending_action
        self.executed_actions.append(self._pending_action)
        if self.training:
            self.agent.decay_epsilon()
        return summary

    # -- helpers -------------------------------------------------------------

    def _transition(self, t: int, state: StateVector, forecast: Optional[ForecastResult],
                    done: bool, summary: dict) -> RewardBreakdown:
        pred_frac = None if forecast is None else state.predicted_mem_pct / 100.0
        reward = compute_reward(self.prev_action, state.cpu_pct / 100.0, state.mem_pct / 100.0,
                                pred_frac, self.forecast_confidence(), self.executed_actions[:-1],
                                state.replicas, self.reward_config)
        self.agent.remember(Experience(self.prev_state, self.prev_action, reward.r_total, state, done))
        self.rewards.append((t, reward))
        summary["reward"] = reward.r_total
        if self.training:
            loss = self.agent.train_step()
            summary["loss"] = loss
        return reward

    def _realize_forecasts(self, store: SeriesStore) -> None:
        by_t = {s.t: s for s in store.samples}
        still = []
        for target_t, predicted in self.pending_forecasts:
            if target_t in by_t:
                actual = by_t[target_t].total_mem_mib
                if actual >= 1.0:
                    self.abs_pct_errors.append(abs(predicted - actual) / actual * 100.0)
            elif target_t > store.samples[-1].t:
                still.append((target_t, predicted))
        self.pending_forecasts = still

    def forecast_confidence(self) -> float:
        recent = self.abs_pct_errors[-self.confidence_window:]
        if len(recent) < self.confidence_window:
            return 1.0
        return confidence(sum(recent) / len(recent))

    # -- public --------------------------------------------------------------

    def run_cycle(self, cluster: ClusterState, store: SeriesStore, t: int) -> CycleState:
        if t % self.decision_interval:
            raise ValueError(f"t={t} is not on the {self.decision_interval}s decision grid")
        cs = CycleState(t=t)
        steps = (
            lambda: self._collect(cs, cluster, store),
            lambda: self._feature_process(cs, cluster),
            lambda: self._infer(cs),
            lambda: self._validate(cs, cluster),
            lambda: self._execute(cs, cluster),
            lambda: self._learn(cs),
        )
        for name, step in zip(NODES, steps):
            cs.trace.append((name, step()))
        self.cycles.append(cs)
        return cs

    def decide(self, t: int, cluster: ClusterState, store: SeriesStore) -> int:
        return self.run_cycle(cluster, store, t).executed

    def close_episode(self, cluster: ClusterState, store: SeriesStore) -> Optional[RewardBreakdown]:
        """Score the last executed action against the final scrape as a terminal transition."""
        if self.prev_state is None or store.latest() is None:
            return None
        sample = store.latest()
        cpu_pct, mem_pct = utilization(sample)
        state = StateVector(predicted_mem_pct=mem_pct, cpu_pct=cpu_pct, mem_pct=mem_pct,
                            replicas=cluster.desired_replicas)
        reward = self._transition(sample.t, state, None, done=True, summary={})
        self.prev_state = None
        return reward


def run_cycle(controller: NimbusController, cluster: ClusterState, store: SeriesStore, t: int) -> CycleState:
    return controller.run_cycle(cluster, store, t)
