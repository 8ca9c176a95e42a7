import dataclasses

import pytest
from hypothesis import settings

from airlink.units import preset_edfa, preset_raman

settings.register_profile("airlink", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("airlink")

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, line in sorted(lines):
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """record(num, ok, detail): log one pass/fail line for the summary, then assert."""
    store = request.config.stash[_ACCEPTANCE]

    def record(num, ok, detail):
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        store.append((num, line))
        print(line)
        assert ok, line

    return record


def small_grid(cfg, num_channels, num_spans=None):
    cfg = dataclasses.replace(cfg, grid=dataclasses.replace(cfg.grid, num_channels=num_channels))
    return cfg if num_spans is None else cfg.with_spans(num_spans)


@pytest.fixture(scope="session")
def toy_edfa():
    return small_grid(preset_edfa(), 5, 4)


@pytest.fixture(scope="session")
def toy_raman():
    return small_grid(preset_raman(), 5, 4)
