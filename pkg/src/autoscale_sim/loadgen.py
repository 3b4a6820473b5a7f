"""Seeded four-phase open-loop load generator.

Arrivals are fire-and-forget: they are fixed in advance from the plan and
the seed and never react to how fast the cluster answers.

Randomness comes from numpy's PCG64 bit generator.  The plan seed feeds a
``SeedSequence`` which is split (``spawn``) once per phase and once per user
within a phase, so each user's jitter stream is independent of every other
user's and of the phase layout before it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simcore import RequestJob, SimConfig


@dataclass(frozen=True)
class PhaseSpec:
    name: str
    concurrent_users: int
    total_requests: int
    duration: int

    def __post_init__(self):
        if not self.total_requests >= self.concurrent_users >= 1:
            raise ValueError(f"phase {self.name!r}: need total_requests >= concurrent_users >= 1")
        if self.duration <= 0:
            raise ValueError(f"phase {self.name!r}: duration must be positive")


@dataclass(frozen=True)
class LoadPlan:
    phases: tuple[PhaseSpec, ...]
    seed: int

    def __post_init__(self):
        if not self.phases:
            raise ValueError("a load plan needs at least one phase")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def total_duration(self) -> int:
        return sum(p.duration for p in self.phases)

    def windows(self) -> list[tuple[PhaseSpec, int, int]]:
        """(phase, start, end) with cumulative, gap-free start times."""
        out, start = [], 0
        for phase in self.phases:
            out.append((phase, start, start + phase.duration))
            start += phase.duration
        return out

    def to_dict(self) -> dict:
        return {"seed": self.seed,
                "phases": [{"name": p.name, "concurrent_users": p.concurrent_users,
                            "total_requests": p.total_requests, "duration": p.duration}
                           for p in self.phases]}


DEFAULT_PHASES = (
    ("Ramp-up", 4, 40),
    ("Sustained", 8, 60),
    ("Peak", 15, 90),
    ("Cooldown", 3, 30),
)


def default_plan(seed: int, phase_duration: int = 120) -> LoadPlan:
    return LoadPlan(
        phases=tuple(PhaseSpec(name, users, total, phase_duration)
                     for name, users, total in DEFAULT_PHASES),
        seed=seed,
    )


def generate_arrivals(plan: LoadPlan, sim: SimConfig | None = None) -> list[tuple[float, RequestJob]]:
    """Sorted ``(time, job)`` pairs for the whole plan.

    Within a phase, request ``i`` belongs to user ``i % concurrent_users``.
    A user with ``k`` requests splits the phase into ``k`` equal slots and
    fires once per slot at a uniformly jittered offset, so the jitter
    around the slot midpoint is strictly less than half a slot.  Request
    ids are assigned in time order after sorting; per-request cost comes
    from ``sim``.
    """
    sim = sim or SimConfig()
    root = np.random.SeedSequence(plan.seed)
    phase_seqs = root.spawn(len(plan.phases))
    times: list[float] = []
    for (phase, start, _end), seq in zip(plan.windows(), phase_seqs):
        users = phase.concurrent_users
        user_seqs = seq.spawn(users)
        for u in range(users):
            k = len(range(u, phase.total_requests, users))
            slot = phase.duration / k
            offsets = np.random.Generator(np.random.PCG64(user_seqs[u])).random(k)
            times.extend(start + (np.arange(k) + offsets) * slot)
    times.sort()
    return [(float(t), RequestJob(id=i, arrival=float(t), remaining_work=sim.request_work,
                                  mem_footprint=sim.mem_footprint))
            for i, t in enumerate(times)]


def arrivals_per_phase(plan: LoadPlan, arrivals: list[tuple[float, RequestJob]]) -> list[int]:
    return [sum(1 for t, _ in arrivals if start <= t < end) for _, start, end in plan.windows()]
