import json
from pathlib import Path

import pytest

from dividend_barrier import ModelParams, SolvencyTarget, solve_hjb
from dividend_barrier.config import load_config

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "default.json"

# reference parameters with the artifact's r and c
REF = ModelParams(mu=1.0, sigma2=1.0, sigmap2=2.0, r=0.1, c=0.2, m=1.0)
TARGET = SolvencyTarget(epsilon=0.1, horizon=1.0)


@pytest.fixture(scope="session")
def params():
    return REF


@pytest.fixture(scope="session")
def sol():
    return solve_hjb(REF)


@pytest.fixture(scope="session")
def cfg():
    return load_config(DEFAULT_CONFIG)


@pytest.fixture
def config_dict():
    return json.loads(DEFAULT_CONFIG.read_text())


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


ACCEPTANCE_LINES = {}


def record_criterion(n, passed, detail):
    ACCEPTANCE_LINES[n] = f"criterion {n}: {'PASS' if passed else 'FAIL'} | {detail}"
    print("\n" + ACCEPTANCE_LINES[n])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
