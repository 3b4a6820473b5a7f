"""Context-aware multi-objective reward.

Utilizations are fractions (0.7 == 70 %).  Every additive term is kept in a
:class:`RewardBreakdown` so the total can be audited term by term::

    total = combined + stability + action_bonus - cost_penalty
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .agent import ScalingAction


class WorkloadClass(str, enum.Enum):
    LOW = "Low"
    NOMINAL = "Nominal"
    HIGH = "High"


CLASS_MULTIPLIER = {WorkloadClass.HIGH: 1.0, WorkloadClass.NOMINAL: 0.8, WorkloadClass.LOW: 0.6}


@dataclass(frozen=True)
class RewardConfig:
    cpu_target: float = 0.70
    mem_target: float = 0.80
    sigma: float = 0.15
    w_cpu: float = 0.5
    w_mem: float = 0.5
    forecast_weight_base: float = 0.7
    bonus_up: float = 0.2
    bonus_down: float = 0.15
    penalty_unnecessary: float = -0.3
    penalty_thrash: float = -0.5
    stability_bonus: float = 0.1
    cost_coeff: float = 0.1
    healthy_band: float = 0.10
    thrash_window: int = 2
    high_load: float = 0.80
    low_load: float = 0.30
    min_replicas: int = 1
    max_replicas: int = 10

    def __post_init__(self):
        for name in ("w_cpu", "w_mem", "forecast_weight_base"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not math.isclose(self.w_cpu + self.w_mem, 1.0):
            raise ValueError("w_cpu + w_mem must equal 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class RewardBreakdown:
    r_cpu: float
    r_mem: float
    r_current: float
    r_forecast: float
    w_current: float
    w_forecast: float
    r_combined: float
    r_stability: float
    r_action_bonus: float
    r_cost_penalty: float
    r_total: float
    workload_class: str = WorkloadClass.NOMINAL.value

    def as_dict(self) -> dict:
        return asdict(self)


def gaussian_reward(u: float, target: float, sigma: float) -> float:
    return math.exp(-((u - target) ** 2) / (2.0 * sigma * sigma))


def r_current(u_cpu: float, u_mem: float, cfg: RewardConfig) -> float:
    return (cfg.w_cpu * gaussian_reward(u_cpu, cfg.cpu_target, cfg.sigma)
            + cfg.w_mem * gaussian_reward(u_mem, cfg.mem_target, cfg.sigma))


def r_forecast(predicted_mem_util: float, u_cpu: float, cfg: RewardConfig) -> float:
    # No CPU forecast exists, so the CPU term reuses the current reading.
    return r_current(u_cpu, predicted_mem_util, cfg)


def classify_workload(u_cpu: float, u_mem: float, cfg: RewardConfig | None = None) -> WorkloadClass:
    cfg = cfg or RewardConfig()
    peak = max(u_cpu, u_mem)
    if peak > cfg.high_load:
        return WorkloadClass.HIGH
    if peak < cfg.low_load:
        return WorkloadClass.LOW
    return WorkloadClass.NOMINAL


def combine(r_cur: float, r_fc: Optional[float], workload: WorkloadClass, confidence: float,
            cfg: RewardConfig) -> tuple[float, float, float]:
    """Blend current and forecast rewards; returns (combined, w_current, w_forecast)."""
    if not 0.0 <= confidence <= 1.0:
        raise ValueError("confidence must lie in [0, 1]")
    if r_fc is None:
        return r_cur, 1.0, 0.0
    w_fc = cfg.forecast_weight_base * confidence * CLASS_MULTIPLIER[workload]
    w_cur = 1.0 - w_fc
    return w_cur * r_cur + w_fc * r_fc, w_cur, w_fc


def _in_band(u: float, target: float, band: float) -> bool:
    return abs(u - target) <= band


def action_shaping(action: ScalingAction, u_cpu: float, u_mem: float,
                   predicted_mem_util: Optional[float], history: Sequence[ScalingAction],
                   cfg: RewardConfig) -> tuple[float, float]:
    """(action bonus or penalty, stability reward) for the action just taken.

    ``history`` lists earlier executed actions, oldest first, excluding
    ``action`` itself.
    """
    action = ScalingAction(action)
    band = cfg.healthy_band
    if action is not ScalingAction.KEEP_SAME:
        for prev in list(history)[-cfg.thrash_window:]:
            if prev is not ScalingAction.KEEP_SAME and int(prev) == -int(action):
                return cfg.penalty_thrash, 0.0

    pred = u_mem if predicted_mem_util is None else predicted_mem_util
    overloaded = (u_cpu > cfg.cpu_target + band or u_mem > cfg.mem_target + band
                  or pred > cfg.mem_target + band)
    underloaded = (u_cpu < cfg.cpu_target - band and u_mem < cfg.mem_target - band
                   and pred < cfg.mem_target - band)
    healthy = _in_band(u_cpu, cfg.cpu_target, band) and _in_band(u_mem, cfg.mem_target, band)

    if action is ScalingAction.KEEP_SAME:
        return 0.0, (cfg.stability_bonus if healthy else 0.0)
    if action is ScalingAction.SCALE_UP and overloaded:
        return cfg.bonus_up, 0.0
    if action is ScalingAction.SCALE_DOWN and underloaded:
        return cfg.bonus_down, 0.0
    if healthy:
        return cfg.penalty_unnecessary, 0.0
    return 0.0, 0.0


def cost_penalty(replicas: int, cfg: RewardConfig) -> float:
    return cfg.cost_coeff * max(0, replicas - cfg.min_replicas) / cfg.max_replicas


def total_reward(r_cpu: float, r_mem: float, r_cur: float, r_fc: Optional[float],
                 w_current: float, w_forecast: float, r_combined: float, r_stability: float,
                 r_action_bonus: float, replicas: int, cfg: RewardConfig,
                 workload: WorkloadClass = WorkloadClass.NOMINAL) -> RewardBreakdown:
    cost = cost_penalty(replicas, cfg)
    return RewardBreakdown(
        r_cpu=r_cpu, r_mem=r_mem, r_current=r_cur,
        r_forecast=r_cur if r_fc is None else r_fc,
        w_current=w_current, w_forecast=w_forecast, r_combined=r_combined,
        r_stability=r_stability, r_action_bonus=r_action_bonus, r_cost_penalty=cost,
        r_total=r_combined + r_stability + r_action_bonus - cost,
        workload_class=WorkloadClass(workload).value,
    )


def compute_reward(action: ScalingAction, u_cpu: float, u_mem: float,
                   predicted_mem_util: Optional[float], confidence: float,
                   history: Sequence[ScalingAction], replicas: int,
                   cfg: RewardConfig) -> RewardBreakdown:
    """Full reward for one transition, observed after ``action`` took effect."""
    r_cpu = gaussian_reward(u_cpu, cfg.cpu_target, cfg.sigma)
    r_mem = gaussian_reward(u_mem, cfg.mem_target, cfg.sigma)
    r_cur = cfg.w_cpu * r_cpu + cfg.w_mem * r_mem
    r_fc = None if predicted_mem_util is None else r_forecast(predicted_mem_util, u_cpu, cfg)
    workload = classify_workload(u_cpu, u_mem, cfg)
    combined, w_cur, w_fc = combine(r_cur, r_fc, workload, confidence, cfg)
    bonus, stability = action_shaping(action, u_cpu, u_mem, predicted_mem_util, history, cfg)
    return total_reward(r_cpu, r_mem, r_cur, r_fc, w_cur, w_fc, combined, stability, bonus,
                        replicas, cfg, workload)
