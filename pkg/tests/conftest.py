import os

import pytest
from hypothesis import HealthCheck, settings

from blebsim.mesh import DomainSpec, extract_surface, generate_mesh

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def default_spec():
    return DomainSpec()


@pytest.fixture(scope="session")
def default_mesh(default_spec):
    return generate_mesh(default_spec)


@pytest.fixture(scope="session")
def default_surface(default_mesh, default_spec):
    return extract_surface(default_mesh, default_spec)


@pytest.fixture(scope="session")
def disc_spec():
    return DomainSpec(1.0, 1.0, (0.0, 0.0), 0.0, target_h=0.1)


@pytest.fixture(scope="session")
def disc_mesh(disc_spec):
    return generate_mesh(disc_spec)


@pytest.fixture(scope="session")
def disc_surface(disc_mesh, disc_spec):
    return extract_surface(disc_mesh, disc_spec)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
