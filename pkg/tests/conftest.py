import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slasim.config import ClassTraffic, ExperimentConfig  # noqa: E402
from slasim.model import Flat, ServiceClass  # noqa: E402
from slasim.policy import PolicyConfig  # noqa: E402


def single_class_config(delta=0.01, servers=2, gamma=2.0, k=10, q=1.0, c=10.0, r=10.0,
                        admission="admit_all", duration=2000.0, arrivals="exponential"):
    cls = ServiceClass(1, b=1.0, gamma=gamma, k=k, q=q, reward=Flat(c, r))
    return ExperimentConfig(
        servers=servers,
        classes=[cls],
        traffic=[ClassTraffic(delta, arrivals)],
        policy=PolicyConfig(admission),
        duration=duration,
    ).validate()


@pytest.fixture
def small_config():
    return single_class_config()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
