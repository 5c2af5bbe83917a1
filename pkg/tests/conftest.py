import functools
import pathlib
import sys

import pytest

HERE = pathlib.Path(__file__).parent
MODELS = HERE / "models"
sys.path.insert(0, str(HERE))

from tawindow.modelformat import load_model  # noqa: E402


@functools.lru_cache(maxsize=None)
def load_fixture(name: str):
    return load_model((MODELS / f"{name}.ta").read_text())


def model_path(name: str) -> str:
    return str(MODELS / f"{name}.ta")


@pytest.fixture
def fig1():
    return load_fixture("fig1")


@pytest.fixture
def fig1_text():
    return (MODELS / "fig1.ta").read_text()


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS, line

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(line(n))
