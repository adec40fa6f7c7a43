import numpy as np
import pytest

from axihdiv.mesh import MeshHierarchy


@pytest.fixture(scope="session")
def square5():
    return MeshHierarchy.build("square", 5)


@pytest.fixture(scope="session")
def lshape5():
    return MeshHierarchy.build("lshape", 5)


@pytest.fixture(scope="session")
def hierarchies(square5, lshape5):
    return {"square": square5, "lshape": lshape5}


def random_triangle(rng, rmin=0.05):
    """A well-shaped random triangle in the right half plane."""
    while True:
        tri = rng.uniform(0.0, 1.0, (3, 2))
        tri[:, 0] += rmin
        d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
        area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if abs(area) > 0.02:
            if area < 0:
                tri = tri[[0, 2, 1]]
            return tri


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
