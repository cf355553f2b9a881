import numpy as np
import pytest

from grassrelay.channels import LinkGains, SystemDims, sample_channel_set
from grassrelay.codebooks import generate_grassmannian
from grassrelay.numerics import RngStream


@pytest.fixture(scope="session")
def books():
    """Grassmannian codebooks keyed by (dim, N), generated once per session."""
    out = {}
    for dim, N in [(2, 4), (2, 8), (3, 8), (3, 16)]:
        out[(dim, N)] = generate_grassmannian(RngStream(11, dim * 100 + N), dim, N)
    return out


@pytest.fixture
def gen():
    return RngStream(1234, 0).generator()


def channel(seed, dims=(2, 2, 2), gains_db=(0.0, 5.0, 5.0), direct=True):
    return sample_channel_set(RngStream(seed, 0), SystemDims(*dims), LinkGains.from_db(*gains_db), direct)


def diag_channel(phi, psi, nu=None, gains=(1.0, 1.0, 1.0)):
    """Channel set with diagonal matrices of the given singular values."""
    from grassrelay.channels import ChannelSet

    H1 = np.diag(np.asarray(phi, dtype=complex))
    H2 = np.diag(np.asarray(psi, dtype=complex))
    H0 = None if nu is None else np.diag(np.asarray(nu, dtype=complex))
    m = len(phi)
    return ChannelSet(H0, H1, H2, LinkGains(*gains), SystemDims(m, len(psi), len(psi)))


ACCEPTANCE_LINES = []


def report(number, name, passed, detail, seconds, budget=None):
    """Record and print one acceptance line; the budget (seconds) is part of the verdict."""
    within = budget is None or seconds <= budget
    ok = bool(passed) and within
    timing = f"{seconds:.1f}s" + (f" of {budget:.0f}s" if budget is not None else "")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} {name}: {detail} [{timing}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
