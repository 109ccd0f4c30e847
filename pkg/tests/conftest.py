import os

# White-box tests read per-call randomness; the hook must be armed before import.
os.environ.setdefault("EEPAEKS_EXPOSE_RANDOMNESS", "1")

import random  # noqa: E402

import pytest  # noqa: E402

from eepaeks import Role, keygen, setup  # noqa: E402

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def pp():
    return setup()


@pytest.fixture(scope="session")
def keys(pp):
    rng = random.Random(20240101)
    return {r: keygen(pp, r, rng) for r in Role}


@pytest.fixture
def rng(request):
    return random.Random(request.node.name)


@pytest.fixture
def acceptance_report(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" -- {detail}" if detail else "")
        print(line)
        lines.append(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
