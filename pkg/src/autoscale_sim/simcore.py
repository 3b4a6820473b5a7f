"""Discrete-time model of a single Kubernetes deployment.

The application is a deterministic consumer: every request carries a fixed
amount of CPU work (millicore-seconds) and holds a fixed amount of memory
while it is in flight.  Running pods share their CPU limit equally between
their in-flight requests (processor sharing).  Time advances in whole
one-second ticks.

All step functions mutate the given :class:`ClusterState` in place and
return it, so a run is a plain sequence of ``tick`` / ``route_request`` /
``set_desired_replicas`` calls and two runs over the same inputs produce
identical traces.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field


class PodPhase(str, enum.Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    TERMINATING = "Terminating"


@dataclass(frozen=True)
class ResourceSpec:
    """Per-container requests and limits (millicores / MiB)."""

    cpu_request: float = 600.0
    cpu_limit: float = 1000.0
    mem_request: float = 512.0
    mem_limit: float = 1024.0

    def __post_init__(self):
        for name in ("cpu_request", "cpu_limit", "mem_request", "mem_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.cpu_request > self.cpu_limit:
            raise ValueError("cpu_request exceeds cpu_limit")
        if self.mem_request > self.mem_limit:
            raise ValueError("mem_request exceeds mem_limit")


@dataclass(frozen=True)
class SimConfig:
    """Calibration of the simulated workload and pod lifecycle."""

    request_work: float = 4000.0  # millicore-seconds per request
    mem_footprint: float = 40.0  # MiB held while a request is in flight
    base_mem: float = 300.0  # MiB resident in an idle pod
    job_cpu_demand: float = 125.0  # millicores one request can use on its own
    startup_delay: int = 10
    grace_period: int = 5
    min_replicas: int = 1
    max_replicas: int = 10
    cpu_rate_window: int = 30  # ticks averaged when reporting pod CPU to the scraper

    def __post_init__(self):
        if self.request_work <= 0 or self.mem_footprint < 0 or self.base_mem < 0:
            raise ValueError("request costs must be non-negative (work strictly positive)")
        if not 1 <= self.min_replicas <= self.max_replicas:
            raise ValueError("need 1 <= min_replicas <= max_replicas")
        if self.startup_delay < 0 or self.grace_period < 0 or self.cpu_rate_window < 1:
            raise ValueError("invalid lifecycle timing")


@dataclass
class RequestJob:
    id: int
    arrival: float
    remaining_work: float
    mem_footprint: float


@dataclass
class PodState:
    pod_id: int
    phase: PodPhase
    phase_since: int
    base_mem: float
    in_flight: list[RequestJob] = field(default_factory=list)
    # CPU consumed in each recent tick, newest last (millicores).
    cpu_recent: deque = field(default_factory=deque)

    @property
    def mem_used(self) -> float:
        return self.base_mem + sum(j.mem_footprint for j in self.in_flight)


@dataclass
class ClusterState:
    resources: ResourceSpec
    config: SimConfig
    clock: int = 0
    pods: list[PodState] = field(default_factory=list)
    desired_replicas: int = 1
    next_pod_id: int = 1
    pending_queue: list[RequestJob] = field(default_factory=list)
    completed: int = 0
    injected: int = 0
    strict: bool = False  # check invariants after every mutation

    @property
    def min_replicas(self) -> int:
        return self.config.min_replicas

    @property
    def max_replicas(self) -> int:
        return self.config.max_replicas

    def running(self) -> list[PodState]:
        return [p for p in self.pods if p.phase is PodPhase.RUNNING]

    def active(self) -> list[PodState]:
        """Pods that count toward the replica total (Pending or Running)."""
        return [p for p in self.pods if p.phase is not PodPhase.TERMINATING]

    def in_flight_count(self) -> int:
        return sum(len(p.in_flight) for p in self.pods)


class InvariantViolation(AssertionError):
    pass


def new_cluster(resources: ResourceSpec | None = None, config: SimConfig | None = None,
                replicas: int | None = None, strict: bool = False) -> ClusterState:
    """A cluster at t=0 whose initial replicas are already Running."""
    resources = resources or ResourceSpec()
    config = config or SimConfig()
    n = config.min_replicas if replicas is None else replicas
    n = min(max(n, config.min_replicas), config.max_replicas)
    cluster = ClusterState(resources=resources, config=config, desired_replicas=n, strict=strict)
    for _ in range(n):
        cluster.pods.append(_new_pod(cluster, PodPhase.RUNNING))
    return cluster


def _new_pod(cluster: ClusterState, phase: PodPhase) -> PodState:
    pod = PodState(pod_id=cluster.next_pod_id, phase=phase, phase_since=cluster.clock,
                   base_mem=cluster.config.base_mem,
                   cpu_recent=deque(maxlen=cluster.config.cpu_rate_window))
    cluster.next_pod_id += 1
    return pod


def make_job(cluster: ClusterState, job_id: int, arrival: float) -> RequestJob:
    return RequestJob(id=job_id, arrival=arrival, remaining_work=cluster.config.request_work,
                      mem_footprint=cluster.config.mem_footprint)


def set_desired_replicas(cluster: ClusterState, n: int) -> ClusterState:
    """Clamp ``n`` to the replica bounds and create or retire pods to match.

    Scale-down retires the newest pods first; their in-flight requests go
    back to the pending queue with their remaining work intact.
    """
    n = min(max(int(n), cluster.min_replicas), cluster.max_replicas)
    cluster.desired_replicas = n
    active = cluster.active()
    if n > len(active):
        for _ in range(n - len(active)):
            cluster.pods.append(_new_pod(cluster, PodPhase.PENDING))
    elif n < len(active):
        victims = sorted(active, key=lambda p: p.pod_id, reverse=True)[: len(active) - n]
        for pod in victims:
            pod.phase = PodPhase.TERMINATING
            pod.phase_since = cluster.clock
            cluster.pending_queue.extend(pod.in_flight)
            pod.in_flight = []
            pod.cpu_recent.clear()
        cluster.pending_queue.sort(key=lambda j: j.id)
    if cluster.strict:
        check_invariants(cluster)
    return cluster


def _admits(cluster: ClusterState, pod: PodState, job: RequestJob) -> bool:
    return pod.mem_used + job.mem_footprint <= cluster.resources.mem_limit


def _place(cluster: ClusterState, job: RequestJob) -> bool:
    candidates = [p for p in cluster.running() if _admits(cluster, p, job)]
    if not candidates:
        return False
    target = min(candidates, key=lambda p: (len(p.in_flight), p.pod_id))
    target.in_flight.append(job)
    return True


def route_request(cluster: ClusterState, job: RequestJob) -> ClusterState:
    """Admit a newly arrived request to the least-loaded Running pod.

    Requests that no pod can admit (no Running pods, or memory headroom
    exhausted everywhere) wait in the FIFO pending queue.
    """
    cluster.injected += 1
    if cluster.pending_queue or not _place(cluster, job):
        # Queued requests keep priority over fresh arrivals.
        cluster.pending_queue.append(job)
    if cluster.strict:
        check_invariants(cluster)
    return cluster


def _drain_queue(cluster: ClusterState) -> None:
    waiting = []
    for job in cluster.pending_queue:
        if waiting or not _place(cluster, job):
            waiting.append(job)
    cluster.pending_queue = waiting


def tick(cluster: ClusterState, dt: int = 1) -> ClusterState:
    """Advance the cluster by one second."""
    if dt != 1:
        raise ValueError("the simulator advances in fixed 1-second ticks")
    cfg = cluster.config
    now = cluster.clock

    for pod in cluster.pods:
        if pod.phase is PodPhase.PENDING and now - pod.phase_since >= cfg.startup_delay:
            pod.phase = PodPhase.RUNNING
            pod.phase_since = now
    cluster.pods = [p for p in cluster.pods
                    if not (p.phase is PodPhase.TERMINATING and now - p.phase_since >= cfg.grace_period)]

    for pod in cluster.running():
        n = len(pod.in_flight)
        if n == 0:
            pod.cpu_recent.append(0.0)
            continue
        share = min(cluster.resources.cpu_limit, n * cfg.job_cpu_demand) / n
        used = 0.0
        still_running = []
        for job in pod.in_flight:
            spent = min(share * dt, job.remaining_work)
            job.remaining_work -= spent
            used += spent
            if job.remaining_work <= 1e-9:
                job.remaining_work = 0.0
                cluster.completed += 1
            else:
                still_running.append(job)
        pod.in_flight = still_running
        pod.cpu_recent.append(used / dt)

    _drain_queue(cluster)
    cluster.clock = now + dt
    if cluster.strict:
        check_invariants(cluster)
    return cluster


def pod_usage(pod: PodState, resources: ResourceSpec, window: int = 1) -> tuple[float, float]:
    """(cpu millicores, memory MiB) of one pod.

    CPU is the mean consumption over the last ``window`` ticks the pod has
    been running (``window=1`` is the last tick only), capped at the limit.
    Pods that are not Running report zero CPU and their base memory.
    """
    if pod.phase is not PodPhase.RUNNING:
        return 0.0, pod.base_mem
    recent = list(pod.cpu_recent)[-window:]
    cpu = sum(recent) / len(recent) if recent else 0.0
    return min(resources.cpu_limit, cpu), pod.mem_used


def check_invariants(cluster: ClusterState) -> None:
    """Raise InvariantViolation if job conservation or a pod/replica bound is broken."""
    in_flight = cluster.in_flight_count()
    queued = len(cluster.pending_queue)
    if cluster.injected != cluster.completed + in_flight + queued:
        raise InvariantViolation(
            f"t={cluster.clock}: injected {cluster.injected} != completed {cluster.completed}"
            f" + in-flight {in_flight} + queued {queued}")
    if not cluster.min_replicas <= cluster.desired_replicas <= cluster.max_replicas:
        raise InvariantViolation(f"desired_replicas {cluster.desired_replicas} out of bounds")
    ids = [p.pod_id for p in cluster.pods]
    if len(set(ids)) != len(ids) or (ids and max(ids) >= cluster.next_pod_id):
        raise InvariantViolation("pod ids reused")
    for pod in cluster.pods:
        if pod.phase is PodPhase.PENDING and pod.in_flight:
            raise InvariantViolation(f"pending pod {pod.pod_id} holds requests")
        if pod.mem_used > cluster.resources.mem_limit + 1e-9:
            raise InvariantViolation(f"pod {pod.pod_id} over memory limit")
