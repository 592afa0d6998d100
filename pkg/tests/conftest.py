import time

import pytest

_VERDICTS: list[str] = []


class Criterion:
    """Times one acceptance criterion and records a one-line verdict."""

    def __init__(self, number: int, title: str, limit: float):
        self.number, self.title, self.limit = number, title, limit
        self.failures: list[str] = []
        self.notes: list[str] = []
        self._t0 = time.perf_counter()

    def check(self, ok, message: str):
        if not ok:
            self.failures.append(message)

    def note(self, message: str):
        self.notes.append(message)

    def finish(self):
        elapsed = time.perf_counter() - self._t0
        self.check(elapsed < self.limit, f"runtime {elapsed:.2f} s over the {self.limit:g} s budget")
        verdict = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures or self.notes)
        line = f"[{verdict}] criterion {self.number}: {self.title} ({elapsed:.2f} s / {self.limit:g} s)"
        if detail:
            line += f" - {detail}"
        _VERDICTS.append(line)
        print(line)
        assert not self.failures, line


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
