from importlib import resources

import pytest


@pytest.fixture(scope="session")
def scenario_dir():
    return resources.files("flockcbf").joinpath("scenarios")


@pytest.fixture(scope="session")
def scenario_path(scenario_dir):
    def _path(name: str) -> str:
        return str(scenario_dir.joinpath(name))
    return _path
