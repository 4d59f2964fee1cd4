import numpy as np
import pytest

from liaison.config import load_preset


@pytest.fixture(scope="session")
def l2_halo():
    """(state, period) of the shipped southern L2 halo."""
    sc = load_preset("eml2_lunar").spacecraft[0]
    return np.array(sc.state), sc.period_tu


@pytest.fixture(scope="session")
def pair_config():
    return load_preset("eml2_lunar")


def random_offprimary_states(rng, count):
    """States away from both primaries and from the collinear axis."""
    out = []
    while len(out) < count:
        p = rng.uniform([-1.5, -1.0, -0.5], [1.5, 1.0, 0.5])
        if np.linalg.norm(p - [-0.01215, 0, 0]) > 0.1 and np.linalg.norm(p - [0.98785, 0, 0]) > 0.05:
            out.append(np.r_[p, rng.normal(0, 0.3, 3)])
    return np.array(out)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail, seconds, budget=None):
    """Store one acceptance line; printed in the terminal summary."""
    timing = f"{seconds:.0f} s" + (f" (budget {budget:.0f} s)" if budget else "")
    ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}  [{timing}]"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
