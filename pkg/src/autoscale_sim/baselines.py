"""Reactive baselines: an HPA-style and a KEDA-style controller.

The decision functions are pure.  :class:`HpaController` and
:class:`KedaController` carry the little state each one needs between
invocations (recent recommendations, time of the last scaling event).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .metrics import MetricsSample, utilization

# Float guard for ratios that are exact in decimal: 1.05/0.70 evaluates to
# 1.5000000000000002 and 0.77/0.70 to 1.1000000000000003.
_EPS = 1e-9


@dataclass(frozen=True)
class HpaConfig:
    cpu_target: float = 0.70
    mem_target: float = 0.80
    tolerance: float = 0.10
    stabilization_window: int = 30
    sync_period: int = 15
    min_replicas: int = 1
    max_replicas: int = 10

    def __post_init__(self):
        if not (0 < self.cpu_target < 1 and 0 < self.mem_target < 1):
            raise ValueError("utilization targets must lie in (0, 1)")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")


@dataclass(frozen=True)
class KedaConfig:
    polling_interval: int = 30
    cooldown: int = 30
    cpu_target: float = 0.70
    tolerance: float = 0.10  # applied by the HPA that KEDA drives
    min_replicas: int = 1
    max_replicas: int = 10

    def __post_init__(self):
        if self.polling_interval <= 0:
            raise ValueError("polling_interval must be positive")
        if not 0 < self.cpu_target < 1:
            raise ValueError("cpu_target must lie in (0, 1)")


def _clamp(n: int, lo: int, hi: int) -> int:
    return min(max(n, lo), hi)


def _proportional(current: int, ratio: float, tolerance: float) -> int:
    if abs(ratio - 1.0) <= tolerance + _EPS:
        return current
    return math.ceil(current * ratio - _EPS)


def hpa_desired(cfg: HpaConfig, current: int, cpu_frac: float, mem_frac: float) -> int:
    """Kubernetes HPA recommendation: ceil(current * max metric ratio), with tolerance."""
    ratio = max(cpu_frac / cfg.cpu_target, mem_frac / cfg.mem_target)
    return _clamp(_proportional(current, ratio, cfg.tolerance), cfg.min_replicas, cfg.max_replicas)


def hpa_decide(cfg: HpaConfig, history: list[tuple[float, int]], t: float, current: int,
               sample: MetricsSample) -> int:
    """Apply scale-down stabilization to the raw recommendation.

    ``history`` holds ``(time, raw recommendation)`` from earlier syncs.
    Scale-ups take effect at once; a scale-down can go no lower than the
    highest recommendation made within the stabilization window.
    """
    cpu_pct, mem_pct = utilization(sample)
    raw = hpa_desired(cfg, current, cpu_pct / 100.0, mem_pct / 100.0)
    if raw >= current:
        return raw
    cutoff = t - cfg.stabilization_window
    recent = [r for ts, r in history if ts > cutoff]
    return min(current, max([raw, *recent]))


def keda_decide(cfg: KedaConfig, last_event_time: float, t: float, current: int,
                sample: MetricsSample) -> int:
    cpu_pct, _ = utilization(sample)
    desired = _proportional(current, (cpu_pct / 100.0) / cfg.cpu_target, cfg.tolerance)
    desired = _clamp(desired, cfg.min_replicas, cfg.max_replicas)
    if desired < current and t - last_event_time < cfg.cooldown:
        return current
    return desired


@dataclass
class HpaController:
    cfg: HpaConfig = field(default_factory=HpaConfig)
    history: list[tuple[float, int]] = field(default_factory=list)

    @property
    def interval(self) -> int:
        return self.cfg.sync_period

    def decide(self, t: float, current: int, sample: MetricsSample) -> int:
        desired = hpa_decide(self.cfg, self.history, t, current, sample)
        cpu_pct, mem_pct = utilization(sample)
        self.history.append((t, hpa_desired(self.cfg, current, cpu_pct / 100.0, mem_pct / 100.0)))
        cutoff = t - self.cfg.stabilization_window
        self.history = [(ts, r) for ts, r in self.history if ts > cutoff]
        return desired


@dataclass
class KedaController:
    cfg: KedaConfig = field(default_factory=KedaConfig)
    last_event_time: float = float("-inf")

    @property
    def interval(self) -> int:
        return self.cfg.polling_interval

    def decide(self, t: float, current: int, sample: MetricsSample) -> int:
        desired = keda_decide(self.cfg, self.last_event_time, t, current, sample)
        if desired != current:
            self.last_event_time = t
        return desired
