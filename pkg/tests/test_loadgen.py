import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoscale_sim.loadgen import (
    LoadPlan, PhaseSpec, arrivals_per_phase, default_plan, generate_arrivals,
)
from autoscale_sim.simcore import SimConfig

seeds = st.integers(0, 2**64 - 1)


def test_default_plan_phases():
    plan = default_plan(42)
    assert [(p.name, p.concurrent_users, p.total_requests, p.duration) for p in plan.phases] == [
        ("Ramp-up", 4, 40, 120), ("Sustained", 8, 60, 120), ("Peak", 15, 90, 120), ("Cooldown", 3, 30, 120)]


def test_default_plan_request_total():
    # 40 + 60 + 90 + 30
    assert sum(p.total_requests for p in default_plan(0).phases) == 220


def test_peak_phase_users():
    assert default_plan(3).phases[2].concurrent_users == 15


def test_same_seed_same_plan():
    assert default_plan(9) == default_plan(9)


def test_windows_are_cumulative_and_gap_free():
    plan = default_plan(1, phase_duration=90)
    assert [(s, e) for _, s, e in plan.windows()] == [(0, 90), (90, 180), (180, 270), (270, 360)]
    assert plan.total_duration == 360


@pytest.mark.parametrize("users,total,duration", [(0, 5, 10), (5, 4, 10), (1, 1, 0)])
def test_phase_spec_validation(users, total, duration):
    with pytest.raises(ValueError):
        PhaseSpec("x", users, total, duration)


def test_plan_seed_must_fit_64_bits():
    with pytest.raises(ValueError):
        LoadPlan(phases=default_plan(0).phases, seed=2**64)


def test_same_seed_same_arrivals():
    a = generate_arrivals(default_plan(42))
    b = generate_arrivals(default_plan(42))
    assert [(t, j) for t, j in a] == [(t, j) for t, j in b]


def test_sustained_phase_count():
    plan = default_plan(42)
    assert arrivals_per_phase(plan, generate_arrivals(plan))[1] == 60


def test_different_seeds_same_counts_different_times():
    a, b = default_plan(1), default_plan(2)
    ra, rb = generate_arrivals(a), generate_arrivals(b)
    assert arrivals_per_phase(a, ra) == arrivals_per_phase(b, rb) == [40, 60, 90, 30]
    assert [t for t, _ in ra] != [t for t, _ in rb]


def test_jobs_carry_configured_cost_and_sequential_ids():
    sim = SimConfig(request_work=1234.0, mem_footprint=7.0)
    arr = generate_arrivals(default_plan(5), sim)
    assert [j.id for _, j in arr] == list(range(220))
    assert all(j.remaining_work == 1234.0 and j.mem_footprint == 7.0 and j.arrival == t for t, j in arr)


def _oracle_times(plan):
    """Independent re-derivation: slot midpoints plus jitter recovered from the same streams."""
    out = []
    for (phase, start, _), pseq in zip(plan.windows(), np.random.SeedSequence(plan.seed).spawn(len(plan.phases))):
        for u, useq in enumerate(pseq.spawn(phase.concurrent_users)):
            mine = list(range(u, phase.total_requests, phase.concurrent_users))
            slot = phase.duration / len(mine)
            gen = np.random.Generator(np.random.PCG64(useq))
            for k in range(len(mine)):
                out.append(start + k * slot + slot / 2 + (gen.random() - 0.5) * slot)
    return sorted(out)


def test_arrivals_match_slot_oracle():
    plan = default_plan(77)
    got = [t for t, _ in generate_arrivals(plan)]
    np.testing.assert_allclose(got, _oracle_times(plan), rtol=0, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_counts_windows_and_order_for_any_seed(seed):
    plan = default_plan(seed)
    arr = generate_arrivals(plan)
    times = [t for t, _ in arr]
    assert times == sorted(times)
    assert arrivals_per_phase(plan, arr) == [p.total_requests for p in plan.phases]
    assert all(0 <= t < plan.total_duration for t in times)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 40), st.integers(5, 200))
def test_single_user_arrivals_stay_inside_their_slots(seed, total, duration):
    plan = LoadPlan(phases=(PhaseSpec("p", 1, total, duration),), seed=seed)
    times = [t for t, _ in generate_arrivals(plan)]
    slot = duration / total
    for k, t in enumerate(times):
        # |jitter| < half a slot around the slot midpoint
        assert abs(t - (k + 0.5) * slot) < slot / 2
