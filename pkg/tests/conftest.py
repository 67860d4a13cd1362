import contextlib
import time

import pytest

from adla.threshold import a2_infinity_draws

MC_DRAWS = 10_000_000
MC_J_MAX = 1000
MC_SEED = 20240611

_results = {}


@pytest.fixture(scope="session")
def mc_draws():
    """10^7 draws of the truncated limiting series, shared by all tests."""
    start = time.perf_counter()
    draws = a2_infinity_draws(MC_DRAWS, MC_J_MAX, MC_SEED)
    return draws, time.perf_counter() - start


@contextlib.contextmanager
def criterion(number, title):
    """Record the outcome of acceptance criterion ``number`` for the summary."""
    detail = {}
    start = time.perf_counter()
    try:
        yield detail
    except BaseException as exc:
        _results[number] = (False, title, detail, time.perf_counter() - start, exc)
        raise
    _results[number] = (True, title, detail, time.perf_counter() - start, None)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        ok, title, detail, elapsed, exc = _results[number]
        info = ", ".join(f"{k}={v}" for k, v in detail.items())
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title} ({elapsed:.1f} s)"
        if info:
            line += f": {info}"
        if exc is not None:
            line += f" -- {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        tr.write_line(line)
