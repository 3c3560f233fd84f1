import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from handkey import synth  # noqa: E402

# Acceptance results collected by test_acceptance.py, printed at the end of the run.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")


@pytest.fixture
def report():
    def _report(number, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}"
        print(line)
        ACCEPTANCE.append((number, name, bool(ok), detail))
        return ok
    return _report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def handshake():
    return synth.gen_handshake_pair(synth.SynthParams(rng_seed=7))
