"""The five benchmark environments.

Each environment is a small configuration object with pure
``reset`` / ``step`` / ``observe`` methods; see ``eszero.episode`` for the
contract.  ``make_env`` builds one by name for the benchmark driver.
"""

from __future__ import annotations

from .navigation import Navigation, NavState
from .sokoban import (
    Level,
    Sokoban,
    SokobanState,
    apply_symmetry,
    bundled_levels,
    load_boxoban,
    parse_boxoban,
    render_boxoban,
    sample_level,
    transform_action,
)
from .subset import MaxDiversity, SubsetState, VertexKCenter
from .tsp import Tsp, TspState, tour_length


def make_env(name: str, **sizes):
    """Build a benchmark environment from its CLI name.

    Size overrides: ``n`` (tsp/vkcp/mdp), ``k`` (vkcp/mdp), ``n_targets``
    (navigation).  Sokoban uses the bundled level set unless ``levels`` is
    given.
    """
    name = name.lower()
    if name == "navigation":
        return Navigation(**sizes)
    if name == "sokoban":
        if "levels" not in sizes:
            sizes = {**sizes, "levels": bundled_levels()}
        return Sokoban(**sizes)
    if name == "tsp":
        return Tsp(**sizes)
    if name == "vkcp":
        return VertexKCenter(**sizes)
    if name == "mdp":
        return MaxDiversity(**sizes)
    raise ValueError(f"unknown environment {name!r}")


ENV_NAMES = ("navigation", "sokoban", "tsp", "vkcp", "mdp")

__all__ = [
    "ENV_NAMES",
    "Level",
    "MaxDiversity",
    "NavState",
    "Navigation",
    "Sokoban",
    "SokobanState",
    "SubsetState",
    "Tsp",
    "TspState",
    "VertexKCenter",
    "apply_symmetry",
    "bundled_levels",
    "load_boxoban",
    "make_env",
    "parse_boxoban",
    "render_boxoban",
    "sample_level",
    "tour_length",
    "transform_action",
]
