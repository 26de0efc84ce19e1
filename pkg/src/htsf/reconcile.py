"""Mapping matrices and coherent-forecast projection.

Base forecasts for all nodes are mapped to bottom-level values by a method
matrix G and re-aggregated: coherent = S @ (G @ base). Three G constructions
are provided: bottom-up (keep the bottom forecasts), top-down (split the root
forecast by historical-average proportions), and structural minimum-trace
(GLS projection weighted by the bottom-descendant counts).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .hierarchy import Hierarchy, SummingMatrix, structural_weights, summing_matrix


class ReconcileError(ValueError):
    """Raised for dimension mismatches or non-finite inputs."""


@dataclass(frozen=True)
class MappingMatrix:
    """m_bottom x n_total projection onto bottom-level values."""

    entries: np.ndarray
    method: str


@dataclass(frozen=True)
class TdProportions:
    """Bottom shares of the root's historical average, summing to one."""

    p: np.ndarray


def g_bottom_up(h: Hierarchy) -> MappingMatrix:
    """G = [0 | I]: discard upper forecasts, keep the bottoms."""
    n, m = h.n_total, h.m_bottom
    entries = np.zeros((m, n))
    entries[:, n - m :] = np.eye(m)
    return MappingMatrix(entries=entries, method="BU")


def td_proportions(h: Hierarchy, frames: dict[str, np.ndarray]) -> TdProportions:
    """p_j = historical mean of bottom j over the historical mean of the root.

    With an all-zero root history the split is undefined; falls back to a
    uniform split and warns rather than failing the run.
    """
    missing = [node for node in (h.root, *h.bottom_order) if node not in frames]
    if missing:
        raise ReconcileError(f"missing training history for node(s) {missing}")
    root_mean = float(np.mean(frames[h.root]))
    if root_mean == 0.0:
        warnings.warn(
            "root history mean is zero; using uniform top-down proportions",
            stacklevel=2,
        )
        return TdProportions(p=np.full(h.m_bottom, 1.0 / h.m_bottom))
    p = np.array([float(np.mean(frames[b])) / root_mean for b in h.bottom_order])
    return TdProportions(p=p)


def g_top_down(h: Hierarchy, frames: dict[str, np.ndarray]) -> MappingMatrix:
    """G = [p | 0]: split the root forecast, ignore everything else."""
    props = td_proportions(h, frames)
    entries = np.zeros((h.m_bottom, h.n_total))
    entries[:, 0] = props.p
    return MappingMatrix(entries=entries, method="TD")


def g_mint_structural(h: Hierarchy) -> MappingMatrix:
    """G = (S' W^-1 S)^-1 S' W^-1 with W proportional to diag(S @ 1).

    Any positive scalar on W cancels, so the bottom-descendant counts are
    used directly. The m x m normal matrix S' W^-1 S is symmetric positive
    definite for a valid tree, so it is solved by Cholesky factorization
    rather than explicit inversion.
    """
    S = summing_matrix(h)
    lam = structural_weights(S).lambda_diag
    weighted = S.entries.T / lam[None, :]
    normal = weighted @ S.entries
    try:
        factor = cho_factor(normal)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - valid trees are SPD
        raise RuntimeError("normal matrix factorization failed") from exc
    entries = cho_solve(factor, weighted)
    return MappingMatrix(entries=entries, method="MinT")


def reconcile(
    G: MappingMatrix, S: SummingMatrix, base: np.ndarray, floor_at_zero: bool = False
) -> np.ndarray:
    """Project base forecasts to coherent ones: S @ (G @ base).

    base may be a length-n vector or an n x steps matrix (one column per
    forecast step); the result has the same shape. MinT can turn nonnegative
    base forecasts negative; floor_at_zero clips the bottom estimates at zero
    before summing, trading that away for a bias. Off by default so the
    linear-algebra identities hold.
    """
    base = np.asarray(base, dtype=np.float64)
    n = S.n_total
    if G.entries.shape != (S.m_bottom, n):
        raise ReconcileError(
            f"G shape {G.entries.shape} does not match S {S.entries.shape}"
        )
    if base.shape[0] != n or base.ndim > 2:
        raise ReconcileError(f"base shape {base.shape} does not match {n} nodes")
    if not np.all(np.isfinite(base)):
        raise ReconcileError("base forecasts must be finite")
    bottom = G.entries @ base
    if floor_at_zero:
        bottom = np.maximum(bottom, 0.0)
    return S.entries @ bottom


def dump_debug_matrices(directory, h: Hierarchy, mappings: dict[str, MappingMatrix]):
    """Write S, the structural weights, and each G as plain CSV matrices."""
    import csv
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    S = summing_matrix(h)

    def write_matrix(name, mat):
        with open(directory / name, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            for row in np.atleast_2d(mat):
                writer.writerow([repr(float(v)) for v in row])

    write_matrix("S.csv", S.entries)
    write_matrix("lambda.csv", structural_weights(S).lambda_diag)
    for tag, G in mappings.items():
        write_matrix(f"G_{tag}.csv", G.entries)
