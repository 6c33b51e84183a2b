"""Bundled example models and scenarios."""

from importlib import resources
from pathlib import Path

MODELS = ("nao", "window", "window_obstacle")


def model_path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(f"{name}.tm")))


def scenario_path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath("scenarios", f"{name}.json")))
