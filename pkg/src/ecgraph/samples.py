"""Bundled sample data: the figure trees and a few graphs."""
from __future__ import annotations

from importlib import resources

from .graph import parse_graphs


def _text(package: str, name: str) -> str:
    return resources.files(package).joinpath(name).read_text()


def figure_tree_text() -> str:
    """The figure trees as bracketed text, with their comment header."""
    return _text("ecgraph.treebank", "data/figures.mrg")


def figure_trees() -> list:
    from .treebank import read_trees
    return read_trees(figure_tree_text())


def sample_graphs(name: str) -> list:
    """Graphs from ``data/<name>.graphs`` ("figures" or "locked_chain")."""
    return parse_graphs(_text("ecgraph", f"data/{name}.graphs"))
