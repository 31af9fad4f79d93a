import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bestpath.dataset import Dataset, load_hitters  # noqa: E402


@pytest.fixture(scope="session")
def hitters() -> Dataset:
    return load_hitters()


@pytest.fixture(scope="session")
def hitters_report(hitters):
    from bestpath.selector import select
    return select(hitters, "Salary")


@pytest.fixture(autouse=True)
def _quiet_library_logs(caplog):
    caplog.set_level(logging.ERROR, logger="bestpath")


def make_dataset(columns: dict, discrete=()) -> Dataset:
    """Build a Dataset from a dict of arrays; names in ``discrete`` are factors."""
    schema = {k: ("discrete" if k in discrete else "continuous") for k in columns}
    return Dataset.from_frame(pd.DataFrame(columns), schema=schema)


def correlated_pair(n: int, rho: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Two columns whose sample correlation is exactly ``rho``."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=n)
    b = rng.normal(size=n)
    a = (a - a.mean()) / a.std()
    b = b - b.mean()
    b = b - (b @ a) / (a @ a) * a
    b = b / b.std()
    return a, rho * a + np.sqrt(1 - rho * rho) * b


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
