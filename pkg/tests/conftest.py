import numpy as np
import pytest

from resonia.eikonal import agmon_fast_march
from resonia.potential import gauss_well, island_boundary
from resonia.wkb import extend_to_Omega

# frozen reference values for gauss_well(E0=0.5, kappa=1, alpha=1)
R_B = 1.120906422778411
S_REF = 0.25081747231428564
C0_REF = 0.4827337364394866
E1_REF = np.sqrt(0.5)

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def spec():
    return gauss_well().with_well()


@pytest.fixture(scope="session")
def spec2d():
    return gauss_well(dim=2).with_well()


@pytest.fixture(scope="session")
def boundary(spec):
    return island_boundary(spec)


@pytest.fixture(scope="session")
def field(spec):
    return agmon_fast_march(spec, nodes=801)


@pytest.fixture(scope="session")
def wkb(spec, field):
    return extend_to_Omega(spec, field)


@pytest.fixture(scope="session")
def chart(spec, wkb):
    from resonia.caustic import fit_chart, match_symbol_c

    ch = fit_chart(spec, np.array([R_B]))
    return ch, match_symbol_c(ch, wkb)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
