import pytest

from revlattice.body import RevolutionProfile, make_geometry

FOURIER = (1.0, 0.08, 0.01)

# criterion number -> (label, passed); filled by the acceptance tests
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def sphere():
    return make_geometry(RevolutionProfile.sphere())


@pytest.fixture(scope="session")
def spheroid():
    return make_geometry(RevolutionProfile.spheroid(2.0, 1.0))


@pytest.fixture(scope="session")
def fourier():
    return make_geometry(RevolutionProfile.fourier(FOURIER))


@pytest.fixture(scope="session", params=["sphere", "spheroid", "fourier"])
def any_body(request):
    return request.getfixturevalue(request.param)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        label, ok = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {label}")
