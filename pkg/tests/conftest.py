import pytest

from hybridcap.env import PhysicalEnvironment, validate
from hybridcap.noise import build_model


def make_env(**kw):
    base = dict(bandwidth=1e4, frequency=1e8, temperature=290.0, photons=1000.0)
    return validate(PhysicalEnvironment(**(base | kw)))


@pytest.fixture(scope="session")
def ref_env():
    return make_env()


@pytest.fixture(scope="session")
def ref_model(ref_env):
    return build_model(ref_env)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
