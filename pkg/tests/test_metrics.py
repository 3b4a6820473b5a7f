import pytest
from hypothesis import given
from hypothesis import strategies as st

from autoscale_sim.metrics import InsufficientHistory, MetricsSample, SeriesStore, scrape, utilization, window
from autoscale_sim.simcore import PodPhase, RequestJob, SimConfig, new_cluster, route_request, set_desired_replicas, tick


def sample(t, pods=1, cpu=0.0, mem=0.0):
    return MetricsSample(t=t, pod_count=pods, total_cpu_millicores=cpu, total_mem_mib=mem,
                         total_cpu_limit=pods * 1000.0, total_mem_limit=pods * 1024.0)


def filled(n, interval=15):
    store = SeriesStore(scrape_interval=interval)
    for i in range(n):
        store.append(sample(i * interval, mem=float(i)))
    return store


def test_scrape_zero_running_pods():
    c = new_cluster()
    c.pods[0].phase = PodPhase.PENDING
    s = scrape(c)
    assert (s.pod_count, s.total_cpu_millicores, s.total_mem_mib, s.total_cpu_limit, s.total_mem_limit) == (0, 0.0, 0.0, 0.0, 0.0)


def test_scrape_two_idle_pods():
    s = scrape(new_cluster(replicas=2, config=SimConfig(base_mem=150.0)))
    assert s.total_mem_mib == 300.0 and s.total_mem_limit == 2048.0


def test_scrape_three_pod_cpu_limit():
    assert scrape(new_cluster(replicas=3)).total_cpu_limit == 3000.0


def test_scrape_excludes_pending_and_terminating():
    c = new_cluster(replicas=3, config=SimConfig(base_mem=100.0))
    set_desired_replicas(c, 2)
    set_desired_replicas(c, 4)
    s = scrape(c)
    assert s.pod_count == 2 and s.total_mem_mib == 200.0


def test_scrape_is_pure():
    c = new_cluster()
    route_request(c, RequestJob(0, 0.0, 500.0, 40.0))
    tick(c)
    assert scrape(c) == scrape(c)
    assert c.clock == 1 and c.injected == 1


def test_scrape_cpu_is_rate_over_window():
    c = new_cluster(config=SimConfig(job_cpu_demand=1000.0, cpu_rate_window=4))
    route_request(c, RequestJob(0, 0.0, 2000.0, 40.0))
    for _ in range(4):
        tick(c)
    assert scrape(c).total_cpu_millicores == 500.0
    assert scrape(c, rate_window=2).total_cpu_millicores == 0.0


def test_utilization_half_cpu():
    assert utilization(sample(0, pods=3, cpu=1500.0))[0] == 50.0


def test_utilization_full_memory():
    assert utilization(sample(0, pods=2, mem=2048.0))[1] == 100.0


def test_utilization_no_pods():
    assert utilization(sample(0, pods=0)) == (0.0, 0.0)


@given(st.integers(1, 10), st.floats(0, 1000), st.floats(0, 1024), st.integers(2, 5))
def test_utilization_is_scale_free(pods, cpu, mem, k):
    a = sample(0, pods, cpu * pods, mem * pods)
    b = MetricsSample(0, pods, a.total_cpu_millicores * k, a.total_mem_mib * k,
                      a.total_cpu_limit * k, a.total_mem_limit * k)
    ua, ub = utilization(a), utilization(b)
    assert ua == pytest.approx(ub, rel=1e-12, abs=1e-12)


def test_store_enforces_grid():
    store = filled(2)
    with pytest.raises(ValueError):
        store.append(sample(40))


def test_window_exact_lookback():
    store = filled(20)
    assert [s.t for s in window(store, 285, 20)] == [i * 15 for i in range(20)]


def test_window_insufficient():
    with pytest.raises(InsufficientHistory):
        window(filled(19), 1000, 20)


def test_window_latest_twenty_of_twenty_five():
    got = window(filled(25), 10_000, 20)
    assert [s.total_mem_mib for s in got] == [float(i) for i in range(5, 25)]


def test_window_respects_time_bound():
    got = window(filled(25), 300, 20)
    assert got[-1].t == 300 and got[0].t == 15


@given(st.integers(0, 40), st.integers(1, 30), st.integers(0, 700))
def test_window_is_all_or_nothing(n, k, t):
    store = filled(n)
    try:
        got = window(store, t, k)
    except InsufficientHistory:
        return
    assert len(got) == k
    assert all(b.t - a.t == 15 for a, b in zip(got, got[1:]))
