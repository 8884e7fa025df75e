import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from geobilliard import BilliardTable
from geobilliard.curves import (construct_width_curve, limacon_oval, make_geodesic_circle, make_two_arc_table,
                                perturbed_circle)
from geobilliard.geometry import EuclideanChart, PoincareDiscChart, StereographicSphereChart

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

OVAL_PERTURBATIONS = [(3, 0.03, 0.1), (2, 0.02, 0.0)]


@pytest.fixture(scope="session")
def charts():
    return {"flat": EuclideanChart(), "sphere": StereographicSphereChart(), "hyperbolic": PoincareDiscChart()}


@pytest.fixture(scope="session")
def circle():
    return BilliardTable(make_geodesic_circle(EuclideanChart(), np.zeros(2), 1.0))


@pytest.fixture(scope="session")
def ovals(charts):
    """Noncircular smooth ovals, one per chart family."""
    return {k: BilliardTable(perturbed_circle(ch, 0.5, OVAL_PERTURBATIONS)) for k, ch in charts.items()}


@pytest.fixture(scope="session")
def flat_two_arc():
    return BilliardTable(make_two_arc_table(EuclideanChart(), 4.0, 1.0))


@pytest.fixture(scope="session")
def flat_limacon():
    return BilliardTable(limacon_oval(EuclideanChart()))


@pytest.fixture(scope="session")
def hyperbolic_limacon():
    return BilliardTable(limacon_oval(PoincareDiscChart(), 0.3))


@pytest.fixture(scope="session")
def width_curve():
    return construct_width_curve()


@pytest.fixture(scope="session")
def width_table(width_curve):
    return BilliardTable(width_curve.table())


# --- acceptance lines ------------------------------------------------------------------
_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """``log(number, title, ok, detail)`` records one PASS/FAIL line for the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def log(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line)
