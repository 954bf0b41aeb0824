import numpy as np
import pytest

from hlsep.signal_model import Signal


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sine(freq_hz, fs, duration_s, amp=1.0, phase=0.0):
    t = np.arange(int(round(duration_s * fs))) / fs
    return Signal(amp * np.sin(2 * np.pi * freq_hz * t + phase), fs)


def impulse_train(period_samples, n, fs, jitter=0.0, rng=None):
    x = np.zeros(n)
    pos = 0.0
    while pos < n:
        x[int(pos)] = 1.0
        step = period_samples
        if jitter:
            step *= 1 + jitter * rng.uniform(-1, 1)
        pos += step
    return Signal(x, fs)


# -- acceptance reporting ------------------------------------------------------
# Tests marked ``@pytest.mark.criterion(n, title)`` get one PASS/FAIL line
# each in the terminal summary, with the "detail" user property if recorded.

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    item.config.stash[_CRITERIA][number] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, status, detail = results[number]
        line = f"criterion {number:>2} {status}  {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
