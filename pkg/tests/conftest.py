import numpy as np
import pytest

from dsbacklund.backlund import StepParams
from dsbacklund.laxpair import consistent_seed


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def seed():
    return consistent_seed(0.8, 0.6, 0.7 + 0.2j, -0.5 + 0.3j)


@pytest.fixture
def general_step():
    return StepParams(1.2 + 0.3j, 0.8 - 0.2j, a_l=0.7 + 0.1j, b_l=0.4 - 0.2j,
                      f11=1.1, f12=0.3 + 0.1j, f21=-0.2 + 0.2j, f22=0.9 + 0.1j,
                      m1=0.3, m1p=-0.1, m2=0.2, m2p=0.4)


@pytest.fixture
def reduced_steps():
    return [
        StepParams(1.1 + 0.3j, 0.6 - 0.2j, f11=1.0, f22=0.9 + 0.1j,
                   m1=0.4, m1p=0.2, m2=-0.3, m2p=0.25),
        StepParams(0.8 - 0.5j, 1.4 + 0.2j, f11=1.2 - 0.3j, f22=1.0,
                   m1=-0.2, m1p=0.1, m2=0.35, m2p=-0.15),
        StepParams(1.5 + 0.1j, 0.9 + 0.4j, f11=0.8, f22=1.1 - 0.2j,
                   m1=0.15, m1p=0.0, m2=0.1, m2p=0.3),
    ]


def random_complex(rng, size=None, scale=1.0):
    return scale * (rng.normal(size=size) + 1j * rng.normal(size=size))


def random_step(rng, reduced=False):
    """Step parameters of moderate size with well separated poles."""
    while True:
        lam = complex(rng.uniform(0.6, 1.6) * np.exp(1j * rng.uniform(-0.6, 0.6)))
        lamp = complex(rng.uniform(0.6, 1.6) * np.exp(1j * rng.uniform(-0.6, 0.6)))
        if abs(lam**2 - lamp**2) > 0.2:
            break
    kw = dict(a_l=1 + 0.3 * random_complex(rng), f11=1 + 0.2 * random_complex(rng),
              f22=1 + 0.2 * random_complex(rng), m1=rng.uniform(-0.4, 0.4),
              m1p=rng.uniform(-0.4, 0.4), m2=rng.uniform(-0.4, 0.4), m2p=rng.uniform(-0.4, 0.4))
    if not reduced:
        kw.update(b_l=0.4 * random_complex(rng), f12=0.3 * random_complex(rng),
                  f21=0.3 * random_complex(rng))
    return StepParams(lam, lamp, **kw)


ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Record one acceptance verdict line; printed now and in the session summary."""
    def _record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
