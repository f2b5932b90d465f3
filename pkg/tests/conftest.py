import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def default_link():
    from qkdwdm import scenario

    return scenario.preset("paper-default")


@pytest.fixture(scope="session")
def filtered_link():
    from qkdwdm import scenario

    return scenario.preset("paper-default-filters")


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
