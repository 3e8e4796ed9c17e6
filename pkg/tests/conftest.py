from fractions import Fraction

import pytest

from vcausality.behavior import reduced
from vcausality.certifier.polytope import build_bound_lp, marginal_feasibility, maximize
from vcausality.quantum import behavior_of, build_paper_model

# filled in by test_acceptance.py, printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

MARGIN_RADIUS = Fraction(1, 10**9)


@pytest.fixture(scope="session")
def paper_model():
    return build_paper_model()


@pytest.fixture(scope="session")
def quantum_behavior(paper_model):
    return behavior_of(paper_model)


@pytest.fixture(scope="session")
def bound_solution():
    """(lp, certificate, seconds) for max S over NS and BC-local; solved once per session."""
    import time

    lp = build_bound_lp()
    t0 = time.perf_counter()
    cert = maximize(lp)
    return lp, cert, time.perf_counter() - t0


@pytest.fixture(scope="session")
def marginal_solution(quantum_behavior):
    import time

    t0 = time.perf_counter()
    lp, cert = marginal_feasibility(reduced(quantum_behavior, (0, 1, 3)), reduced(quantum_behavior, (0, 2, 3)),
                                    radius=MARGIN_RADIUS)
    return lp, cert, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
