import contextlib

import numpy as np
import pytest

# acceptance verdicts, keyed by criterion number
CRITERIA = {}


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@contextlib.contextmanager
def criterion(number, title):
    """Record PASS or FAIL for an acceptance criterion; failures still raise."""
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        CRITERIA[number] = (title, False, detail, msg)
        raise
    CRITERIA[number] = (title, True, detail, "")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok, detail, msg = CRITERIA[number]
        facts = ", ".join(f"{k}={_fmt(v)}" for k, v in detail.items())
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}"
        if facts:
            line += f" ({facts})"
        if msg:
            line += f" :: {msg}"
        terminalreporter.write_line(line)
    passed = sum(1 for v in CRITERIA.values() if v[1])
    terminalreporter.write_line(f"{passed}/{len(CRITERIA)} criteria passed")
