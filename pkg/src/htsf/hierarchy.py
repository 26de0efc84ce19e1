"""Aggregation hierarchies, the summing matrix, and coherency algebra.

A hierarchy is a strict rooted tree of named nodes. Bottom (leaf) series
aggregate upward through the 0/1 summing matrix ``S``: a vector ``y`` of
values for every node is coherent when ``y = S @ b`` with ``b`` the bottom
entries of ``y``.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class HierarchyError(ValueError):
    """Raised for structurally invalid hierarchies or mismatched inputs."""


@dataclass(frozen=True)
class Hierarchy:
    """A rooted aggregation tree.

    ``nodes`` fixes the canonical ordering used by every downstream matrix:
    breadth-first from the root (ties broken by edge insertion order) with
    the bottom nodes last, in ``bottom_order`` order.
    """

    nodes: tuple[str, ...]
    parent_of: dict[str, str]
    level_of: dict[str, int]
    bottom_order: tuple[str, ...]

    @property
    def n_total(self) -> int:
        return len(self.nodes)

    @property
    def m_bottom(self) -> int:
        return len(self.bottom_order)

    @property
    def root(self) -> str:
        return self.nodes[0]

    def index_of(self, node: str) -> int:
        return self._node_index[node]

    @property
    def _node_index(self) -> dict[str, int]:
        # cached lazily on the instance; object.__setattr__ sidesteps frozen
        cached = self.__dict__.get("__node_index")
        if cached is None:
            cached = {n: i for i, n in enumerate(self.nodes)}
            object.__setattr__(self, "__node_index", cached)
        return cached

    def children_of(self, node: str) -> tuple[str, ...]:
        return tuple(c for c, p in self.parent_of.items() if p == node)


@dataclass(frozen=True)
class SummingMatrix:
    """Dense n_total x m_bottom 0/1 matrix mapping bottom series to all nodes."""

    entries: np.ndarray
    row_order: tuple[str, ...]
    col_order: tuple[str, ...]

    @property
    def n_total(self) -> int:
        return self.entries.shape[0]

    @property
    def m_bottom(self) -> int:
        return self.entries.shape[1]

    @property
    def bottom_rows(self) -> np.ndarray:
        """Row index of each bottom node, aligned with col_order."""
        idx = {n: i for i, n in enumerate(self.row_order)}
        return np.array([idx[c] for c in self.col_order], dtype=np.intp)


@dataclass(frozen=True)
class StructuralWeights:
    """Diagonal of S @ 1: the number of bottom descendants of each node.

    The structural error-covariance assumption scales this diagonal by an
    arbitrary positive constant; that constant cancels in the reconciliation
    mapping, so only the diagonal itself is represented.
    """

    lambda_diag: np.ndarray


def build_hierarchy(
    edges: list[tuple[str, str]], bottom_order: list[str] | None = None
) -> Hierarchy:
    """Construct a Hierarchy from (parent, child) edges and the bottom ordering.

    When bottom_order is omitted the leaves are taken in breadth-first order.
    Raises HierarchyError on duplicate edges, nodes with multiple parents,
    multiple roots, cycles/unreachable nodes, or a bottom_order that does not
    match the leaf set.
    """
    seen_edges: set[tuple[str, str]] = set()
    parent_of: dict[str, str] = {}
    children: dict[str, list[str]] = {}
    nodes_in_edges: list[str] = []
    for parent, child in edges:
        if (parent, child) in seen_edges:
            raise HierarchyError(f"duplicate edge ({parent!r}, {child!r})")
        seen_edges.add((parent, child))
        if child in parent_of:
            raise HierarchyError(
                f"node {child!r} has multiple parents; hierarchies must be strict trees"
            )
        parent_of[child] = parent
        children.setdefault(parent, []).append(child)
        nodes_in_edges.extend((parent, child))

    all_nodes = list(dict.fromkeys(nodes_in_edges + list(bottom_order or ())))
    if not all_nodes:
        raise HierarchyError("empty hierarchy: no edges and no bottom nodes")

    roots = [n for n in all_nodes if n not in parent_of]
    if len(roots) != 1:
        if not roots:
            raise HierarchyError("no root found: edge set contains a cycle")
        raise HierarchyError(f"multiple roots: {sorted(roots)}")
    root = roots[0]

    # breadth-first walk; insertion order of edges breaks ties among siblings
    bfs: list[str] = []
    level_of: dict[str, int] = {root: 0}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        bfs.append(node)
        for child in children.get(node, []):
            level_of[child] = level_of[node] + 1
            queue.append(child)
    if len(bfs) != len(all_nodes):
        unreachable = sorted(set(all_nodes) - set(bfs))
        raise HierarchyError(f"cycle detected or unreachable nodes: {unreachable}")

    leaves = {n for n in bfs if n not in children}
    if bottom_order is None:
        bottom_order = [n for n in bfs if n in leaves]
    if len(set(bottom_order)) != len(bottom_order):
        raise HierarchyError("bottom_order contains duplicates")
    if set(bottom_order) != leaves:
        missing = sorted(leaves - set(bottom_order))
        extra = sorted(set(bottom_order) - leaves)
        raise HierarchyError(
            f"bottom_order does not match leaf set (missing={missing}, extra={extra})"
        )

    ordered = [n for n in bfs if n not in leaves] + list(bottom_order)
    return Hierarchy(
        nodes=tuple(ordered),
        parent_of=parent_of,
        level_of=level_of,
        bottom_order=tuple(bottom_order),
    )


def summing_matrix(h: Hierarchy) -> SummingMatrix:
    """Build S: row v has a 1 in column j iff bottom j is a descendant of (or is) v."""
    S = np.zeros((h.n_total, h.m_bottom), dtype=np.float64)
    for j, bottom in enumerate(h.bottom_order):
        node: str | None = bottom
        while node is not None:
            S[h.index_of(node), j] = 1.0
            node = h.parent_of.get(node)
    return SummingMatrix(entries=S, row_order=h.nodes, col_order=h.bottom_order)


def aggregate_bottom(S: SummingMatrix, b: np.ndarray) -> np.ndarray:
    """Compute y = S @ b for a bottom-level vector (or m x T matrix) b."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != S.m_bottom:
        raise HierarchyError(
            f"bottom vector has length {b.shape[0]}, expected {S.m_bottom}"
        )
    return S.entries @ b


def coherence_check(
    S: SummingMatrix, y: np.ndarray, tol: float = 1e-9
) -> tuple[bool, float]:
    """Check |y - S @ y_bottom| <= tol * (1 + |y|) componentwise.

    Returns (ok, max_abs_violation).
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != S.n_total:
        raise HierarchyError(f"vector has length {y.shape[0]}, expected {S.n_total}")
    resid = np.abs(y - S.entries @ y[S.bottom_rows])
    ok = bool(np.all(resid <= tol * (1.0 + np.abs(y))))
    return ok, float(resid.max(initial=0.0))


def structural_weights(S: SummingMatrix) -> StructuralWeights:
    """Diagonal of diag(S @ 1): bottom-descendant counts, all >= 1."""
    return StructuralWeights(lambda_diag=S.entries @ np.ones(S.m_bottom))


def load_hierarchy_edges(path) -> list[tuple[str, str]]:
    """Read a `parent_id,child_id` CSV into an edge list."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["parent_id", "child_id"]:
            raise HierarchyError(
                f"{path}: expected header 'parent_id,child_id', got {header}"
            )
        edges = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise HierarchyError(f"{path}:{i}: expected 2 columns, got {len(row)}")
            edges.append((row[0], row[1]))
    return edges


def load_bottom_order(path) -> list[str]:
    """Read a bottom-order file: one node id per line, blank lines ignored."""
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]
