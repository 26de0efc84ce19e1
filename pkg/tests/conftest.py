"""Shared fixtures: a small three-level hierarchy and panel helpers."""

import numpy as np
import pytest

from htsf.hierarchy import build_hierarchy, summing_matrix

# total -> (a, b); a -> (a1, a2); b -> (b1,)
THREE_LEVEL_EDGES = [
    ("total", "a"),
    ("total", "b"),
    ("a", "a1"),
    ("a", "a2"),
    ("b", "b1"),
]

TWO_LEVEL_EDGES = [("total", "x"), ("total", "y")]


@pytest.fixture
def three_level():
    h = build_hierarchy(THREE_LEVEL_EDGES)
    return h, summing_matrix(h)


@pytest.fixture
def two_level():
    h = build_hierarchy(TWO_LEVEL_EDGES)
    return h, summing_matrix(h)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_tree_edges(rng, max_nodes=20):
    """Random strict hierarchy: every internal node gets >= 2 children."""
    edges = []
    leaves = ["total"]
    next_id = 0
    n_nodes = 1
    while True:
        k = int(rng.integers(2, 4))
        if n_nodes + k > max_nodes and n_nodes > 1:
            break
        parent = leaves.pop(int(rng.integers(len(leaves))))
        for _ in range(k):
            child = f"n{next_id}"
            next_id += 1
            edges.append((parent, child))
            leaves.append(child)
        n_nodes += k
        if rng.random() < 0.3 and n_nodes > 1:
            break
    return edges
