import pytest

from autoscale_sim.agent import AgentConfig, DqnAgent, ScalingAction as A, StateVector
from autoscale_sim.graph import (
    NODES, Approve, NimbusController, Override, Reject, ValidationContext, resolve, rule_validator,
)
from autoscale_sim.harness.config import ExperimentConfig
from autoscale_sim.harness.runner import run_experiment
from autoscale_sim.metrics import SeriesStore, scrape
from autoscale_sim.simcore import new_cluster, tick


def ctx(s1=50.0, current=3, lo=1, hi=10):
    return ValidationContext(state_vec=StateVector(s1, 50.0, 50.0, current), forecast=None,
                             current_replicas=current, min_replicas=lo, max_replicas=hi)


# ------------------------------------------------------------------ validator

def test_reject_scale_down_under_predicted_pressure():
    assert rule_validator(A.SCALE_DOWN, ctx(s1=92.0)) == Reject("predicted memory pressure")


def test_reject_scale_up_at_max():
    assert rule_validator(A.SCALE_UP, ctx(current=10)) == Reject("at max replicas")


def test_reject_scale_down_at_min():
    assert rule_validator(A.SCALE_DOWN, ctx(current=1)) == Reject("at min replicas")


@pytest.mark.parametrize("current", [1, 5, 10])
@pytest.mark.parametrize("s1", [0.0, 79.9, 95.0])
def test_keep_same_always_approved(current, s1):
    assert rule_validator(A.KEEP_SAME, ctx(s1=s1, current=current)) == Approve()


def test_approve_inside_bounds():
    assert rule_validator(A.SCALE_UP, ctx()) == Approve()
    assert rule_validator(A.SCALE_DOWN, ctx(s1=80.0)) == Approve()


def test_resolve():
    assert resolve(A.SCALE_UP, Approve()) is A.SCALE_UP
    assert resolve(A.SCALE_UP, Reject("x")) is A.KEEP_SAME
    assert resolve(A.SCALE_UP, Override(A.SCALE_DOWN, "y")) is A.SCALE_DOWN


# ------------------------------------------------------------------ single cycle

def _warm(n_scrapes, replicas=2):
    cluster = new_cluster(replicas=replicas)
    store = SeriesStore(scrape_interval=15)
    for i in range(n_scrapes):
        store.append(scrape(cluster))
        if i < n_scrapes - 1:
            for _ in range(15):
                tick(cluster)
    return cluster, store, 15 * (n_scrapes - 1)


def test_warmup_cycle_omits_forecast(small_forecaster):
    cluster, store, t = _warm(3)
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0), forecaster=small_forecaster)
    cs = ctl.run_cycle(cluster, store, t)
    assert cs.forecast is None
    assert cs.state_vec.predicted_mem_pct == cs.state_vec.mem_pct
    assert [n for n, _ in cs.trace] == list(NODES)
    assert dict(cs.trace)["Collect"]["forecast"].startswith("omitted")


def test_forecast_used_once_history_is_full(small_forecaster):
    cluster, store, t = _warm(21)
    t -= t % 30
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0), forecaster=small_forecaster)
    cs = ctl.run_cycle(cluster, store, t)
    assert cs.forecast is not None
    expected = cs.forecast.predicted_total_mem_mib / cs.sample.total_mem_limit * 100.0
    assert cs.state_vec.predicted_mem_pct == pytest.approx(expected)


def test_off_grid_time_rejected(small_forecaster):
    cluster, store, _ = _warm(2)
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0), forecaster=small_forecaster)
    with pytest.raises(ValueError):
        ctl.run_cycle(cluster, store, 15)


def test_reject_keeps_replicas():
    cluster, store, _ = _warm(1, replicas=4)
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0), validator=lambda a, c: Reject("no"))
    cs = ctl.run_cycle(cluster, store, 0)
    assert cs.executed == 4 and cluster.desired_replicas == 4


def test_override_replaces_action():
    cluster, store, _ = _warm(1, replicas=4)
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0),
                           validator=lambda a, c: Override(A.SCALE_UP, "forced"))
    cs = ctl.run_cycle(cluster, store, 0)
    assert cs.executed == 5
    assert dict(cs.trace)["Validate"] == {"kind": "Override", "action": 1, "reason": "forced"}


def test_validator_sees_every_cycle():
    seen = []

    def spy(action, c):
        seen.append(action)
        return Approve()

    cluster, store, _ = _warm(1)
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0), validator=spy)
    for t in (0, 30, 60):
        ctl.run_cycle(cluster, store, t)
    assert seen == [c.proposed for c in ctl.cycles]


def test_first_cycle_has_no_reward_then_rewards_follow():
    cluster, store, _ = _warm(1)
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=0))
    first = ctl.run_cycle(cluster, store, 0)
    second = ctl.run_cycle(cluster, store, 30)
    assert first.reward is None and second.reward is not None
    assert len(ctl.agent.buffer) == 1


# ------------------------------------------------------------------ full runs

@pytest.fixture(scope="module")
def nimbus_run(small_forecaster):
    agent = DqnAgent(AgentConfig(), seed=3)
    cfg = ExperimentConfig(autoscaler="nimbus", seed=42)
    ctl = NimbusController(agent=agent, forecaster=small_forecaster, decision_interval=30)
    report = run_experiment(cfg, controller=ctl)
    return ctl, report


def test_480s_run_has_16_six_node_cycles(nimbus_run):
    ctl, report = nimbus_run
    assert len(ctl.cycles) == 16 == len(report.decisions)
    assert all([n for n, _ in c.trace] == list(NODES) for c in ctl.cycles)


def test_executed_equals_resolved_action(nimbus_run):
    ctl, _ = nimbus_run
    prev = 1
    for c in ctl.cycles:
        action = resolve(c.proposed, c.verdict)
        assert c.executed == max(1, min(10, prev + int(action)))
        prev = c.executed


def test_reject_matches_unchanged_timeline(nimbus_run):
    ctl, report = nimbus_run
    by_t = {row["t"]: row["replicas"] for row in report.timeline}
    for c in ctl.cycles:
        if isinstance(c.verdict, Reject):
            assert by_t[c.t] == by_t.get(c.t - 15, c.executed)


def test_eval_run_is_deterministic(small_forecaster):
    def go():
        ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=3), forecaster=small_forecaster)
        return run_experiment(ExperimentConfig(autoscaler="nimbus", seed=42), controller=ctl).to_json()

    assert go() == go()


def test_decision_interval_15_doubles_cycles(small_forecaster):
    ctl = NimbusController(agent=DqnAgent(AgentConfig(), seed=3), forecaster=small_forecaster,
                           decision_interval=15)
    run_experiment(ExperimentConfig(autoscaler="nimbus", decision_interval=15), controller=ctl)
    assert len(ctl.cycles) == 32


def test_cycle_to_dict_nests_nodes(nimbus_run):
    d = nimbus_run[0].cycles[-1].to_dict()
    assert [n["node"] for n in d["nodes"]] == list(NODES)
    assert d["executed_replicas"] == nimbus_run[0].cycles[-1].executed
