import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance(request):
    """Recorder for acceptance-criterion outcomes, printed in the terminal summary."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(criterion, title, part, ok, detail=""):
        entry = store.setdefault(criterion, {"title": title, "parts": []})
        entry["parts"].append((part, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(store):
        entry = store[criterion]
        status = "PASS" if all(ok for _, ok, _ in entry["parts"]) else "FAIL"
        terminalreporter.write_line(f"criterion {criterion:>2}: {status}  {entry['title']}")
        for part, ok, detail in entry["parts"]:
            terminalreporter.write_line(f"    [{'pass' if ok else 'FAIL'}] {part}: {detail}")
