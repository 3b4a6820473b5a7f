"""Prometheus-style scraping of the simulated deployment."""
from __future__ import annotations

from dataclasses import dataclass, field

from .simcore import ClusterState, pod_usage


class InsufficientHistory(LookupError):
    """Fewer samples stored than the requested lookback."""


@dataclass(frozen=True)
class MetricsSample:
    t: int
    pod_count: int
    total_cpu_millicores: float
    total_mem_mib: float
    total_cpu_limit: float
    total_mem_limit: float


@dataclass
class SeriesStore:
    scrape_interval: int = 15
    samples: list[MetricsSample] = field(default_factory=list)

    def append(self, sample: MetricsSample) -> None:
        if self.samples and sample.t - self.samples[-1].t != self.scrape_interval:
            raise ValueError(
                f"sample at t={sample.t} breaks the {self.scrape_interval}s scrape grid "
                f"(previous t={self.samples[-1].t})")
        self.samples.append(sample)

    def latest(self) -> MetricsSample | None:
        return self.samples[-1] if self.samples else None

    def __len__(self) -> int:
        return len(self.samples)


def scrape(cluster: ClusterState, rate_window: int | None = None) -> MetricsSample:
    """Aggregate usage over Running pods; Pending and Terminating pods are excluded.

    CPU is a rate over the last ``rate_window`` ticks (defaults to the
    cluster's configured window), the way ``rate()`` over a counter would
    report it.
    """
    window = cluster.config.cpu_rate_window if rate_window is None else rate_window
    res = cluster.resources
    running = cluster.running()
    cpu = mem = 0.0
    for pod in running:
        c, m = pod_usage(pod, res, window)
        cpu += c
        mem += m
    n = len(running)
    return MetricsSample(t=cluster.clock, pod_count=n, total_cpu_millicores=cpu, total_mem_mib=mem,
                         total_cpu_limit=n * res.cpu_limit, total_mem_limit=n * res.mem_limit)


def utilization(sample: MetricsSample) -> tuple[float, float]:
    """(cpu %, memory %) of the deployment's total limits; (0, 0) with no pods."""
    if sample.pod_count < 1:
        return 0.0, 0.0
    return (sample.total_cpu_millicores / sample.total_cpu_limit * 100.0,
            sample.total_mem_mib / sample.total_mem_limit * 100.0)


def window(store: SeriesStore, t: float, lookback: int) -> list[MetricsSample]:
    """The ``lookback`` samples ending at the latest one taken at or before ``t``, oldest first."""
    end = 0
    while end < len(store.samples) and store.samples[end].t <= t:
        end += 1
    if end < lookback:
        raise InsufficientHistory(f"need {lookback} samples at or before t={t}, have {end}")
    return store.samples[end - lookback:end]
