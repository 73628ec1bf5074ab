# SPDX-License-Identifier: MIT
"""Python access to the grid solvers and the experiment pipeline."""

import json

from ._core import ConfigError, Error, __version__, evolve, presets, solve
from . import _core

__all__ = ["ConfigError", "Error", "__version__", "evolve", "presets", "run", "solve"]


def run(config=None, overrides=()):
    """Run a pipeline config (a dict, see configs/) and return the manifest as a dict."""
    return json.loads(_core.run_json(json.dumps(config or {}), list(overrides)))
