"""Shared test plumbing: kernel warmup, hypothesis profile, acceptance summary."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from morphevo import _kernels

# Property tests that drive whole evolution runs are orders of magnitude
# slower than hypothesis' default deadline; disable it globally and keep
# runtimes in check via per-test max_examples instead.
settings.register_profile(
    "morphevo",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("morphevo")

# (criterion, passed, detail) lines recorded by the acceptance tests and
# echoed at the end of the pytest run, one line per criterion.
_ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from disk cache) the batch kernels once per session.

    Keeps JIT latency out of the per-criterion runtime assertions.
    """
    genes = np.array([[2, 1, 3], [3, 2, 1]], dtype=np.int64)
    budgets = np.array([1, 3], dtype=np.int64)
    _kernels.develop_batch(genes, budgets)
    _kernels.inversion_counts(genes)


@pytest.fixture(scope="session")
def acceptance():
    """Recorder the acceptance tests use for their PASS/FAIL summary lines."""

    def record(criterion: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE_LINES.append((criterion, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE_LINES:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {criterion}: {detail}")
