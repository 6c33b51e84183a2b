import pytest

from tmkit.corpus import MODELS, model_path, scenario_path
from tmkit.dsl import parse_file
from tmkit.simulator import Scenario


@pytest.fixture(scope="session")
def corpus():
    parsed = {}
    for name in MODELS:
        result = parse_file(model_path(name))
        assert result.ok, [d.render() for d in result.diagnostics]
        parsed[name] = result
    return parsed


@pytest.fixture(scope="session")
def nao(corpus):
    return corpus["nao"]


@pytest.fixture(scope="session")
def window(corpus):
    return corpus["window"]


@pytest.fixture(scope="session")
def obstacle(corpus):
    return corpus["window_obstacle"]


def load_scenario(name: str) -> Scenario:
    return Scenario.from_json(scenario_path(name).read_text(encoding="utf-8"))
