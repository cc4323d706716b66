import numpy as np
import pytest

from mcsa.stream import ModelConfig, StreamModel
from mcsa.attention import FeatureSample


@pytest.fixture
def tiny_config():
    return ModelConfig(s=3, t=3, G=4, k=3, a=2, b=2)


@pytest.fixture
def tiny_model(tiny_config):
    return StreamModel.init(tiny_config, np.random.default_rng(0))


def random_samples(config, n, seed=0, trimmed=True):
    rng = np.random.default_rng(seed)
    return [FeatureSample(rng.normal(size=(config.s, config.G)),
                          rng.normal(size=(config.t, config.G - 1)),
                          int(rng.integers(config.k)), trimmed, f"v{i}")
            for i in range(n)]


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the line is echoed in the terminal summary."""
    def record(name, ok, detail=""):
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        assert ok, f"{name}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
