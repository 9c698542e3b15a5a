import time
from contextlib import contextmanager

import pytest

RESULTS: dict = {}


class Criterion:
    def __init__(self, number: int, title: str, limit_s: float):
        self.number, self.title, self.limit_s = number, title, limit_s
        self.notes: list[str] = []

    def note(self, text: str) -> None:
        self.notes.append(text)


@contextmanager
def _run(number: int, title: str, limit_s: float):
    c = Criterion(number, title, limit_s)
    start = time.perf_counter()
    ok = False
    try:
        yield c
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        if ok and elapsed >= limit_s:
            ok = False
            c.note(f"runtime {elapsed:.2f}s over the {limit_s:g}s limit")
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} [{elapsed:.2f}s < {limit_s:g}s] {title}"
        if c.notes:
            line += " | " + "; ".join(c.notes)
        RESULTS[number] = line
        print(line)
    assert elapsed < limit_s, f"runtime {elapsed:.2f}s exceeds {limit_s}s"


@pytest.fixture
def criterion():
    return _run


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
