import os
from pathlib import Path

import pytest

_RESULTS = {}


def mnist_dir():
    """First directory holding the four MNIST IDX files, or None."""
    here = Path(__file__).resolve().parent.parent
    for cand in (os.environ.get("SPINSNN_MNIST"), here / "data" / "mnist", "/root/data/mnist"):
        if cand and (Path(cand) / "train-images-idx3-ubyte").exists():
            return Path(cand)
    return None


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(n, ok, summary)."""
    def record(n, ok, summary):
        _RESULTS[n] = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {summary}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n])
