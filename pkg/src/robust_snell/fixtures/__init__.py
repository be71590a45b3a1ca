"""Canonical desk-scale fixtures shipped as run configs.

``tt1``: one period, two branches, one ambiguous node.
``tt3``: one period, three branches, one-dimensional ambiguity direction.
``tt4``: two periods, binary, the unrolled put tree with interval ambiguity
at every decision node.
"""

from __future__ import annotations

from importlib.resources import as_file, files
from pathlib import Path

from ..cli import RunConfig, parse_config

_NAMES = ("tt1", "tt3", "tt4")


def config_path(name: str) -> Path:
    """Filesystem path of a shipped fixture config."""
    if name not in _NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {_NAMES}")
    resource = files(__package__) / f"{name}.json"
    with as_file(resource) as path:
        return Path(path)


def load(name: str) -> RunConfig:
    """Parse a shipped fixture into a ready-to-use run configuration."""
    return parse_config(config_path(name))
