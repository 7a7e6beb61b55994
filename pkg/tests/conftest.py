import numpy as np
import pytest

from ancsim import (NoisePowers, allocate, build_symmetric_sweep, reference_sweep,
                    thermal_noise_power)

ACCEPTANCE = []


@pytest.fixture(scope="session")
def ref_topologies():
    return build_symmetric_sweep(reference_sweep())


@pytest.fixture(scope="session")
def ref_topo(ref_topologies):
    return ref_topologies[0]


@pytest.fixture(scope="session")
def ref_alloc():
    return allocate(2.0, [3 / 8, 3 / 8])


@pytest.fixture(scope="session")
def thermal_noise():
    return NoisePowers.uniform(thermal_noise_power(22e6), 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, passed, detail):
        ACCEPTANCE.append((number, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
