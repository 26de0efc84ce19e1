"""Sales-panel ingestion, node aggregation, and rolling-window embeddings.

Raw input is a long CSV of bottom-level series. Each series is expanded to
every node of its hierarchy by summing through S, then each node series is
reshaped into an embedding matrix whose rows are overlapping windows of
``lags`` past values plus the current-day value (features) and the next-day
value (target).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .hierarchy import Hierarchy, SummingMatrix, aggregate_bottom, summing_matrix

EMBEDDING_MAGIC = b"HTSF-EMB\x00"
EMBEDDING_VERSION = 1


class DataError(ValueError):
    """Raised for malformed panels, series, or embedding files."""


@dataclass(frozen=True)
class SalesPanel:
    """Validated bottom-level sales: (hierarchy_id, node_id) -> length-T values."""

    series: dict[tuple[str, str], np.ndarray]

    @property
    def hierarchy_ids(self) -> tuple[str, ...]:
        return tuple(sorted({h for h, _ in self.series}))

    def bottoms_of(self, hierarchy_id: str) -> tuple[str, ...]:
        return tuple(sorted(n for h, n in self.series if h == hierarchy_id))

    def t_len(self, hierarchy_id: str) -> int:
        for (h, _), v in self.series.items():
            if h == hierarchy_id:
                return len(v)
        raise DataError(f"unknown hierarchy_id {hierarchy_id!r}")


@dataclass(frozen=True)
class SeriesFrame:
    """One node's full value vector (raw for bottoms, aggregated for uppers)."""

    hierarchy_id: str
    node_id: str
    values: np.ndarray


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Rolling-window matrix for one series.

    Row r holds features ``values[r : r + lags + 1]`` (oldest first, the
    current-day value last) and target ``values[r + lags + horizon]``.
    """

    hierarchy_id: str
    node_id: str
    X: np.ndarray
    y: np.ndarray
    target_t: np.ndarray  # 1-based day index of each row's target
    lags: int
    horizon: int

    @property
    def row_count(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class SplitSpec:
    """Train/test row split: the final ``holdout_len`` rows are the test set."""

    holdout_len: int
    train_rows: np.ndarray
    test_rows: np.ndarray


def load_sales_csv(path) -> SalesPanel:
    """Load and validate a `hierarchy_id,node_id,t,value` CSV.

    Rejects missing columns, non-numeric or negative values, duplicate keys,
    non-contiguous day indexes, and unequal lengths within a hierarchy.
    """
    df = pd.read_csv(path, dtype={"hierarchy_id": str, "node_id": str})
    required = ["hierarchy_id", "node_id", "t", "value"]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {missing}")

    t = pd.to_numeric(df["t"], errors="coerce")
    if t.isna().any():
        raise DataError(f"{path}: non-numeric t at row {int(t.isna().idxmax()) + 2}")
    if (t != t.astype(np.int64)).any():
        raise DataError(f"{path}: non-integer t values")
    value = pd.to_numeric(df["value"], errors="coerce")
    if value.isna().any():
        raise DataError(
            f"{path}: non-numeric value at row {int(value.isna().idxmax()) + 2}"
        )
    if (value < 0).any():
        raise DataError(
            f"{path}: negative sales at row {int((value < 0).idxmax()) + 2}"
        )

    df = df.assign(t=t.astype(np.int64), value=value.astype(np.float64))
    if df.duplicated(subset=["hierarchy_id", "node_id", "t"]).any():
        dup = df[df.duplicated(subset=["hierarchy_id", "node_id", "t"])].iloc[0]
        raise DataError(
            f"{path}: duplicate key ({dup.hierarchy_id!r}, {dup.node_id!r}, t={dup.t})"
        )

    series: dict[tuple[str, str], np.ndarray] = {}
    for (hid, nid), g in df.groupby(["hierarchy_id", "node_id"], sort=True):
        g = g.sort_values("t")
        ts = g["t"].to_numpy()
        if ts[0] != 1 or not np.array_equal(ts, np.arange(1, len(ts) + 1)):
            raise DataError(
                f"{path}: non-contiguous t for ({hid!r}, {nid!r}); days must run 1..T"
            )
        series[(hid, nid)] = g["value"].to_numpy()

    by_hier: dict[str, set[int]] = {}
    for (hid, _), v in series.items():
        by_hier.setdefault(hid, set()).add(len(v))
    for hid, lens in by_hier.items():
        if len(lens) > 1:
            raise DataError(
                f"{path}: series lengths differ within hierarchy {hid!r}: {sorted(lens)}"
            )
    return SalesPanel(series=series)


def to_hierarchy_series(panel: SalesPanel, h: Hierarchy) -> list[SeriesFrame]:
    """Expand bottom series to one SeriesFrame per hierarchy node via y_t = S b_t."""
    S = summing_matrix(h)
    frames: list[SeriesFrame] = []
    for hid in panel.hierarchy_ids:
        bottoms = panel.bottoms_of(hid)
        if set(bottoms) != set(h.bottom_order):
            raise DataError(
                f"hierarchy {hid!r}: panel bottom ids {sorted(bottoms)} do not match "
                f"hierarchy bottoms {sorted(h.bottom_order)}"
            )
        B = np.stack([panel.series[(hid, n)] for n in h.bottom_order])
        Y = aggregate_bottom(S, B)
        for i, node in enumerate(h.nodes):
            frames.append(SeriesFrame(hierarchy_id=hid, node_id=node, values=Y[i]))
    return frames


def build_embedding(
    frame: SeriesFrame, lags: int = 60, horizon: int = 1
) -> EmbeddingMatrix:
    """Reshape one series into its rolling-window matrix.

    Produces ``T - (lags + 1 + horizon) + 1`` rows of ``lags + 1`` features
    plus one target each.
    """
    if lags < 1 or horizon < 1:
        raise DataError("lags and horizon must be >= 1")
    values = np.asarray(frame.values, dtype=np.float64)
    window = lags + 1 + horizon
    T = len(values)
    if T < window:
        raise DataError(
            f"series ({frame.hierarchy_id!r}, {frame.node_id!r}) too short: "
            f"T={T} < {window}"
        )
    win = np.lib.stride_tricks.sliding_window_view(values, window)
    X = win[:, : lags + 1].copy()
    y = win[:, lags + horizon].copy()
    target_t = np.arange(lags + horizon + 1, T + 1, dtype=np.int64)
    return EmbeddingMatrix(
        hierarchy_id=frame.hierarchy_id,
        node_id=frame.node_id,
        X=X,
        y=y,
        target_t=target_t,
        lags=lags,
        horizon=horizon,
    )


def split_holdout(em: EmbeddingMatrix, holdout: int = 28) -> SplitSpec:
    """Mark the final `holdout` rows (latest targets) as the test set."""
    if holdout < 1:
        raise DataError("holdout must be >= 1")
    n = em.row_count
    if holdout >= n:
        raise DataError(f"holdout {holdout} >= row count {n}")
    rows = np.arange(n)
    return SplitSpec(
        holdout_len=holdout, train_rows=rows[:-holdout], test_rows=rows[-holdout:]
    )


def save_embedding_matrix(path, em: EmbeddingMatrix) -> None:
    """Write features+target columns as the binary columnar embedding format."""
    mat = np.hstack([em.X, em.y[:, None]])
    header = struct.pack(
        "<16sHII",
        EMBEDDING_MAGIC.ljust(16, b"\x00"),
        EMBEDDING_VERSION,
        mat.shape[0],
        mat.shape[1],
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())


def load_embedding_matrix(path) -> np.ndarray:
    """Read the binary embedding format back as a rows x cols float64 matrix."""
    with open(path, "rb") as f:
        header = f.read(struct.calcsize("<16sHII"))
        magic, version, rows, cols = struct.unpack("<16sHII", header)
        if magic.rstrip(b"\x00") != EMBEDDING_MAGIC.rstrip(b"\x00"):
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != EMBEDDING_VERSION:
            raise DataError(f"{path}: unsupported version {version}")
        data = np.frombuffer(f.read(rows * cols * 8), dtype="<f8")
    if data.size != rows * cols:
        raise DataError(f"{path}: truncated payload")
    return data.reshape(rows, cols).copy()


@dataclass(frozen=True)
class PanelDataset:
    """Everything the orchestrator needs: frames, embeddings, and splits."""

    hierarchy: Hierarchy
    S: SummingMatrix
    hierarchy_ids: tuple[str, ...]
    frames: dict[tuple[str, str], np.ndarray]
    embeddings: dict[tuple[str, str], EmbeddingMatrix]
    splits: dict[tuple[str, str], SplitSpec]
    lags: int
    holdout: int

    def series_keys(self) -> list[tuple[str, str]]:
        """All (hierarchy_id, node_id) pairs in canonical order."""
        return [
            (hid, node)
            for hid in self.hierarchy_ids
            for node in self.hierarchy.nodes
        ]

    def train_values(self, key: tuple[str, str]) -> np.ndarray:
        """The series' training portion (everything before the holdout targets)."""
        return self.frames[key][: -self.holdout]

    def test_values(self, key: tuple[str, str]) -> np.ndarray:
        return self.frames[key][-self.holdout :]


def build_dataset(
    panel: SalesPanel, h: Hierarchy, lags: int = 60, holdout: int = 28
) -> PanelDataset:
    """Aggregate a panel through the hierarchy and embed every node series."""
    frames = to_hierarchy_series(panel, h)
    frame_map: dict[tuple[str, str], np.ndarray] = {}
    embeddings: dict[tuple[str, str], EmbeddingMatrix] = {}
    splits: dict[tuple[str, str], SplitSpec] = {}
    for fr in frames:
        key = (fr.hierarchy_id, fr.node_id)
        frame_map[key] = fr.values
        em = build_embedding(fr, lags=lags)
        embeddings[key] = em
        splits[key] = split_holdout(em, holdout=holdout)
    return PanelDataset(
        hierarchy=h,
        S=summing_matrix(h),
        hierarchy_ids=tuple(sorted({hid for hid, _ in frame_map})),
        frames=frame_map,
        embeddings=embeddings,
        splits=splits,
        lags=lags,
        holdout=holdout,
    )
