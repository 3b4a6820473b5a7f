import numpy as np
import pytest

from autoscale_sim import forecaster as fc
from autoscale_sim.agent import AgentConfig, DqnAgent
from autoscale_sim.harness.config import ExperimentConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_forecaster():
    """Untrained but scaled forecaster; enough to exercise the forecast path."""
    series = np.column_stack([np.linspace(300.0, 2400.0, 40), np.repeat([1.0, 2.0, 3.0, 4.0], 10)])
    scaler = fc.fit_scaler(series)
    return fc.Forecaster(fc.init_params(np.random.default_rng(0)), scaler)


@pytest.fixture
def fresh_agent():
    return DqnAgent(config=AgentConfig(), seed=7)


@pytest.fixture
def base_config():
    return ExperimentConfig()


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
