import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kothedim.kothe_ops import finite_support, l1, matrix_example, power_series  # noqa: E402
from kothedim.weights import AlphaRule  # noqa: E402

SPECS = Path(__file__).resolve().parent.parent / "specs"


def corpus():
    return {
        "l1": l1(),
        "cn": finite_support(),
        "s": power_series(math.inf, AlphaRule("log_n"), grid="exp"),
        "h_entire": power_series(math.inf, AlphaRule("linear")),
        "h_d1": power_series(1.0, AlphaRule("linear")),
        "h_d2": power_series(2.0, AlphaRule("linear")),
        "matrix_example": matrix_example(),
    }


@pytest.fixture(scope="session")
def families():
    return corpus()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
