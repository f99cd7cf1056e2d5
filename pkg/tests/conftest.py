import pytest

from levisim.optics import BeamParams, SurfaceSpec
from levisim.trap import DumbbellGeom, calibrate_waist, dumbbell_polarizability


@pytest.fixture(scope="session")
def geom():
    return DumbbellGeom()


@pytest.fixture(scope="session")
def tensor(geom):
    return dumbbell_polarizability(geom)


@pytest.fixture(scope="session")
def beam(geom):
    b = BeamParams(waist=2e-6)
    return b.with_(waist=calibrate_waist(b, geom, 35e3))


@pytest.fixture(scope="session")
def sapphire():
    return SurfaceSpec.sapphire()


# --- acceptance summary ---------------------------------------------------

ACCEPTANCE = {}
N_CRITERIA = 11


@pytest.fixture
def record():
    """Store one acceptance verdict: ``record(n, title, checks, detail, runtime, limit)``."""

    def _record(n, title, checks, detail="", runtime=None, limit=None):
        checks = dict(checks)
        if limit is not None:
            checks[f"runtime < {limit:g} s"] = runtime < limit
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        t = f" [{runtime:.1f} s]" if runtime is not None else ""
        tail = f" | failed: {'; '.join(failed)}" if failed else ""
        ACCEPTANCE[n] = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}{t}{tail}"
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        terminalreporter.write_line(ACCEPTANCE.get(n, f"criterion {n:2d} FAIL  (not evaluated: test errored or was deselected)"))
