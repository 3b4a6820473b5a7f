import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoscale_sim.simcore import (
    ClusterState, InvariantViolation, PodPhase, RequestJob, ResourceSpec, SimConfig,
    check_invariants, new_cluster, pod_usage, route_request, set_desired_replicas, tick,
)

FULL_CORE = SimConfig(job_cpu_demand=1000.0, base_mem=150.0)


def job(i, work=1000.0, mem=40.0, t=0.0):
    return RequestJob(id=i, arrival=t, remaining_work=work, mem_footprint=mem)


def snapshot(cluster):
    return [(p.pod_id, p.phase, p.phase_since, [(j.id, j.remaining_work) for j in p.in_flight])
            for p in cluster.pods], [j.id for j in cluster.pending_queue], cluster.clock


# ------------------------------------------------------------------ types

def test_resource_spec_defaults():
    r = ResourceSpec()
    assert (r.cpu_request, r.cpu_limit, r.mem_request, r.mem_limit) == (600.0, 1000.0, 512.0, 1024.0)


@pytest.mark.parametrize("kwargs", [
    {"cpu_request": 0.0}, {"mem_limit": -1.0}, {"cpu_request": 1200.0}, {"mem_request": 2048.0},
])
def test_resource_spec_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        ResourceSpec(**kwargs)


def test_sim_config_rejects_bad_bounds():
    with pytest.raises(ValueError):
        SimConfig(min_replicas=3, max_replicas=2)
    with pytest.raises(ValueError):
        SimConfig(request_work=0.0)


def test_new_cluster_starts_running_at_min():
    c = new_cluster()
    assert len(c.running()) == 1 and c.desired_replicas == 1 and c.clock == 0


# ------------------------------------------------------------------ set_desired_replicas

def test_set_same_desired_is_identity():
    c = new_cluster(replicas=3)
    before = snapshot(c)
    set_desired_replicas(c, 3)
    assert snapshot(c) == before


def test_set_desired_clamps_to_max():
    c = new_cluster()
    set_desired_replicas(c, 50)
    assert c.desired_replicas == 10
    assert len(c.active()) == 10


def test_set_desired_clamps_to_min():
    c = new_cluster(replicas=3)
    set_desired_replicas(c, -4)
    assert c.desired_replicas == 1


def test_scale_up_creates_pending_pods_stamped_now():
    c = new_cluster(replicas=1)
    c.clock = 42
    set_desired_replicas(c, 3)
    pending = [p for p in c.pods if p.phase is PodPhase.PENDING]
    assert [p.pod_id for p in pending] == [2, 3]
    assert all(p.phase_since == 42 for p in pending)


def test_scale_down_terminates_newest_and_requeues_jobs():
    c = new_cluster(replicas=3, config=FULL_CORE)
    c.pods[2].in_flight = [job(7), job(9)]
    c.injected = 2
    set_desired_replicas(c, 2)
    assert c.pods[2].pod_id == 3 and c.pods[2].phase is PodPhase.TERMINATING
    assert c.pods[2].in_flight == []
    assert [j.id for j in c.pending_queue] == [7, 9]
    check_invariants(c)


def test_scale_down_skips_already_terminating():
    c = new_cluster(replicas=4)
    set_desired_replicas(c, 3)
    set_desired_replicas(c, 2)
    phases = {p.pod_id: p.phase for p in c.pods}
    assert phases[4] is PodPhase.TERMINATING and phases[3] is PodPhase.TERMINATING
    assert phases[2] is PodPhase.RUNNING


def test_requeued_jobs_keep_remaining_work():
    c = new_cluster(replicas=2, config=FULL_CORE)
    route_request(c, job(0, work=3000.0))
    route_request(c, job(1, work=3000.0))
    tick(c)
    set_desired_replicas(c, 1)
    assert [j.remaining_work for j in c.pending_queue] == [2000.0]


# ------------------------------------------------------------------ route_request

def test_route_to_least_loaded_pod():
    c = new_cluster(replicas=2, config=FULL_CORE)
    c.pods[0].in_flight = [job(100), job(101)]
    c.injected = 2
    route_request(c, job(1))
    assert [j.id for j in c.pods[1].in_flight] == [1]


def test_route_with_no_running_pods_queues():
    c = new_cluster(replicas=1)
    c.pods[0].phase = PodPhase.PENDING
    route_request(c, job(1))
    assert [j.id for j in c.pending_queue] == [1]


def test_route_tie_goes_to_lowest_pod_id():
    c = new_cluster(replicas=2)
    route_request(c, job(1))
    assert c.pods[0].in_flight and not c.pods[1].in_flight


def test_route_respects_memory_headroom():
    cfg = SimConfig(base_mem=1000.0)
    c = new_cluster(replicas=1, config=cfg)
    route_request(c, job(1, mem=40.0))
    assert c.pending_queue and not c.pods[0].in_flight


def test_queue_keeps_priority_over_new_arrivals():
    c = new_cluster(replicas=1)
    c.pods[0].phase = PodPhase.PENDING
    route_request(c, job(1))
    c.pods[0].phase = PodPhase.RUNNING
    route_request(c, job(2))
    assert [j.id for j in c.pending_queue] == [1, 2]
    tick(c)
    assert sorted(j.id for j in c.pods[0].in_flight) == [1, 2]


# ------------------------------------------------------------------ tick

def test_single_full_core_job_completes_in_one_tick():
    c = new_cluster(config=FULL_CORE)
    route_request(c, job(1, work=1000.0))
    tick(c)
    assert c.completed == 1 and c.in_flight_count() == 0


def test_two_jobs_share_the_core_and_finish_after_two_ticks():
    c = new_cluster(config=FULL_CORE)
    route_request(c, job(1, work=1000.0))
    route_request(c, job(2, work=1000.0))
    tick(c)
    assert c.completed == 0
    assert [j.remaining_work for j in c.pods[0].in_flight] == [500.0, 500.0]
    tick(c)
    assert c.completed == 2


def test_empty_cluster_tick_only_moves_clock():
    c = new_cluster(replicas=2)
    before = snapshot(c)
    tick(c)
    after = snapshot(c)
    assert after[0] == before[0] and after[1] == before[1] and after[2] == before[2] + 1


def test_tick_rejects_other_step_sizes():
    with pytest.raises(ValueError):
        tick(new_cluster(), dt=2)


def test_job_demand_caps_per_job_rate():
    # 250 mcore per job: one job alone uses only a quarter of the core.
    c = new_cluster(config=SimConfig(job_cpu_demand=250.0))
    route_request(c, job(1, work=1000.0))
    tick(c)
    assert c.pods[0].in_flight[0].remaining_work == 750.0
    assert pod_usage(c.pods[0], c.resources) == (250.0, c.config.base_mem + 40.0)


def test_pending_pod_starts_after_startup_delay():
    c = new_cluster(replicas=1)
    set_desired_replicas(c, 2)
    for _ in range(10):
        tick(c)
        assert c.pods[1].phase is PodPhase.PENDING
    tick(c)
    assert c.pods[1].phase is PodPhase.RUNNING


def test_terminating_pod_removed_after_grace_period():
    c = new_cluster(replicas=2)
    set_desired_replicas(c, 1)
    for _ in range(5):
        tick(c)
    assert len(c.pods) == 2
    tick(c)
    assert [p.pod_id for p in c.pods] == [1]


# ------------------------------------------------------------------ pod_usage

def test_idle_running_pod_usage():
    c = new_cluster(config=FULL_CORE)
    assert pod_usage(c.pods[0], c.resources) == (0.0, 150.0)


def test_pod_memory_sums_footprints():
    c = new_cluster(config=FULL_CORE)
    for i in range(3):
        route_request(c, job(i, mem=40.0))
    assert pod_usage(c.pods[0], c.resources)[1] == 270.0


def test_pod_cpu_capped_at_limit():
    c = new_cluster(config=FULL_CORE)
    for i in range(4):
        route_request(c, job(i, work=5000.0))
    tick(c)
    assert pod_usage(c.pods[0], c.resources)[0] == 1000.0


def test_non_running_pods_report_base_memory():
    c = new_cluster(replicas=2, config=FULL_CORE)
    set_desired_replicas(c, 3)
    set_desired_replicas(c, 1)
    for p in c.pods[1:]:
        assert pod_usage(p, c.resources) == (0.0, 150.0)


def test_cpu_rate_window_averages_recent_ticks():
    c = new_cluster(config=FULL_CORE)
    route_request(c, job(1, work=1000.0))
    tick(c)
    tick(c)
    assert pod_usage(c.pods[0], c.resources, window=1)[0] == 0.0
    assert pod_usage(c.pods[0], c.resources, window=2)[0] == 500.0


# ------------------------------------------------------------------ invariants

def test_invariant_check_detects_lost_job():
    c = new_cluster()
    route_request(c, job(1))
    c.pods[0].in_flight.clear()
    with pytest.raises(InvariantViolation):
        check_invariants(c)


ops = st.lists(st.one_of(
    st.tuples(st.just("route"), st.integers(100, 6000)),
    st.tuples(st.just("scale"), st.integers(-2, 14)),
    st.tuples(st.just("tick"), st.just(0)),
), max_size=120)


@settings(max_examples=60, deadline=None)
@given(ops)
def test_conservation_and_bounds_hold_under_random_operations(seq):
    c = new_cluster(strict=True)
    ids = iter(range(10_000))
    last_clock = -1
    for kind, arg in seq:
        if kind == "route":
            route_request(c, job(next(ids), work=float(arg)))
        elif kind == "scale":
            set_desired_replicas(c, arg)
        else:
            tick(c)
        check_invariants(c)
        assert c.clock >= last_clock
        last_clock = c.clock
        for p in c.pods:
            assert p.mem_used <= c.resources.mem_limit


@settings(max_examples=25, deadline=None)
@given(ops)
def test_identical_inputs_give_identical_traces(seq):
    def run():
        c = new_cluster()
        ids = iter(range(10_000))
        trace = []
        for kind, arg in seq:
            if kind == "route":
                route_request(c, job(next(ids), work=float(arg)))
            elif kind == "scale":
                set_desired_replicas(c, arg)
            else:
                tick(c)
            trace.append(snapshot(c))
        return trace
    assert run() == run()


def test_pod_ids_never_reused():
    c = new_cluster(replicas=3)
    seen = {p.pod_id for p in c.pods}
    for n in (1, 4, 2, 5):
        set_desired_replicas(c, n)
        for _ in range(6):
            tick(c)
        new = {p.pod_id for p in c.pods} - seen
        assert all(pid > max(seen) for pid in new)
        seen |= new
    assert seen == set(range(1, c.next_pod_id))


def test_desired_replicas_converge_once_pending_started():
    c = new_cluster()
    set_desired_replicas(c, 4)
    for _ in range(11):
        tick(c)
    assert len(c.running()) == 4 == c.desired_replicas


def test_deepcopy_of_cluster_is_independent():
    c = new_cluster()
    d = copy.deepcopy(c)
    route_request(d, job(1))
    assert c.injected == 0 and isinstance(d, ClusterState)
