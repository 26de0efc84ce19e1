import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from htsf.data import (
    DataError,
    SeriesFrame,
    build_dataset,
    build_embedding,
    load_embedding_matrix,
    load_sales_csv,
    save_embedding_matrix,
    split_holdout,
    to_hierarchy_series,
)
from htsf.hierarchy import build_hierarchy


def write_sales(tmp_path, rows, header="hierarchy_id,node_id,t,value"):
    p = tmp_path / "sales.csv"
    p.write_text(header + "\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n")
    return p


def panel_rows(hids, nids, T, value=lambda h, n, t: float(t)):
    return [
        (h, n, t, value(h, n, t)) for h in hids for n in nids for t in range(1, T + 1)
    ]


def test_load_sales_basic(tmp_path):
    p = write_sales(tmp_path, panel_rows(["h1"], ["b1", "b2"], 5))
    panel = load_sales_csv(p)
    assert panel.hierarchy_ids == ("h1",)
    assert panel.bottoms_of("h1") == ("b1", "b2")
    assert panel.t_len("h1") == 5
    np.testing.assert_array_equal(panel.series[("h1", "b1")], [1, 2, 3, 4, 5])


def test_load_sales_errors(tmp_path):
    with pytest.raises(DataError, match="missing column"):
        load_sales_csv(write_sales(tmp_path, [], header="a,b,c,d"))
    with pytest.raises(DataError, match="negative"):
        load_sales_csv(write_sales(tmp_path, [("h", "b", 1, -1.0), ("h", "b", 2, 1.0)]))
    with pytest.raises(DataError, match="duplicate"):
        load_sales_csv(write_sales(tmp_path, [("h", "b", 1, 1.0), ("h", "b", 1, 2.0)]))
    # t must cover 1..T without gaps
    with pytest.raises(DataError, match="contiguous|gap|start"):
        load_sales_csv(write_sales(tmp_path, [("h", "b", 1, 1.0), ("h", "b", 3, 2.0)]))
    with pytest.raises(DataError, match="contiguous|gap|start"):
        load_sales_csv(write_sales(tmp_path, [("h", "b", 2, 1.0), ("h", "b", 3, 2.0)]))
    # series lengths must agree within a hierarchy
    rows = panel_rows(["h"], ["b1"], 4) + panel_rows(["h"], ["b2"], 3)
    with pytest.raises(DataError, match="length"):
        load_sales_csv(write_sales(tmp_path, rows))
    with pytest.raises(DataError, match="integer"):
        load_sales_csv(write_sales(tmp_path, [("h", "b", 1.5, 1.0), ("h", "b", 2, 1.0)]))
    with pytest.raises(DataError, match="numeric"):
        load_sales_csv(write_sales(tmp_path, [("h", "b", 1, "x"), ("h", "b", 2, 1.0)]))


def test_to_hierarchy_series_aggregates(tmp_path):
    rows = panel_rows(["h1"], ["b1", "b2"], 4, value=lambda h, n, t: float(t if n == "b1" else 10 * t))
    panel = load_sales_csv(write_sales(tmp_path, rows))
    h = build_hierarchy([("total", "b1"), ("total", "b2")])
    frames = to_hierarchy_series(panel, h)
    by_node = {f.node_id: f for f in frames}
    np.testing.assert_array_equal(by_node["total"].values, [11, 22, 33, 44])
    np.testing.assert_array_equal(by_node["b1"].values, [1, 2, 3, 4])
    # frame order follows hierarchy node order
    assert [f.node_id for f in frames] == ["total", "b1", "b2"]


def test_to_hierarchy_series_bottom_mismatch(tmp_path):
    panel = load_sales_csv(write_sales(tmp_path, panel_rows(["h1"], ["b1", "b2"], 3)))
    h = build_hierarchy([("total", "b1"), ("total", "zz")])
    with pytest.raises(DataError, match="bottom"):
        to_hierarchy_series(panel, h)


def test_embedding_shapes_small():
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=np.arange(1.0, 11.0))
    em = build_embedding(frame, lags=3, horizon=1)
    # rows = 10 - (3 + 1 + 1) + 1 = 6; features = lags + 1
    assert em.X.shape == (6, 4)
    assert em.y.shape == (6,)
    np.testing.assert_array_equal(em.X[0], [1, 2, 3, 4])
    assert em.y[0] == 5.0
    np.testing.assert_array_equal(em.X[-1], [6, 7, 8, 9])
    assert em.y[-1] == 10.0
    # 1-based target positions
    np.testing.assert_array_equal(em.target_t, [5, 6, 7, 8, 9, 10])


def test_embedding_row_count_formula():
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=np.arange(1941.0))
    em = build_embedding(frame, lags=60, horizon=1)
    assert em.row_count == 1880
    assert em.X.shape == (1880, 61)


def test_embedding_too_short():
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=np.arange(5.0))
    with pytest.raises(DataError, match="short"):
        build_embedding(frame, lags=60, horizon=1)


def test_split_holdout():
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=np.arange(1941.0))
    em = build_embedding(frame, lags=60, horizon=1)
    split = split_holdout(em, holdout=28)
    assert len(split.train_rows) == 1852
    assert len(split.test_rows) == 28
    np.testing.assert_array_equal(split.test_rows, np.arange(1852, 1880))
    with pytest.raises(DataError):
        split_holdout(em, holdout=0)
    with pytest.raises(DataError):
        split_holdout(em, holdout=em.row_count)


def test_embedding_binary_round_trip(tmp_path, rng):
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=rng.uniform(0, 9, 40))
    em = build_embedding(frame, lags=4, horizon=1)
    path = tmp_path / "em.bin"
    save_embedding_matrix(path, em)
    back = load_embedding_matrix(path)
    np.testing.assert_array_equal(back[:, :-1], em.X)
    np.testing.assert_array_equal(back[:, -1], em.y)

    raw = path.read_bytes()
    assert raw[:8] == b"HTSF-EMB"
    assert raw[8:16] == b"\x00" * 8
    # little-endian u16 version, u32 rows, u32 cols
    assert int.from_bytes(raw[16:18], "little") == 1
    assert int.from_bytes(raw[18:22], "little") == em.row_count
    assert int.from_bytes(raw[22:26], "little") == em.X.shape[1] + 1


def test_embedding_binary_corruption(tmp_path, rng):
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=rng.uniform(0, 9, 40))
    em = build_embedding(frame, lags=4, horizon=1)
    path = tmp_path / "em.bin"
    save_embedding_matrix(path, em)
    raw = path.read_bytes()

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"WRONGMAG" + raw[8:])
    with pytest.raises(DataError, match="magic"):
        load_embedding_matrix(bad)
    bad.write_bytes(raw[:-8])  # truncated payload
    with pytest.raises(DataError, match="truncat"):
        load_embedding_matrix(bad)


def test_build_dataset_end_to_end(tmp_path):
    rows = panel_rows(["h1", "h2"], ["b1", "b2"], 100)
    panel = load_sales_csv(write_sales(tmp_path, rows))
    h = build_hierarchy([("total", "b1"), ("total", "b2")])
    ds = build_dataset(panel, h, lags=10, holdout=5)
    assert ds.hierarchy_ids == ("h1", "h2")
    # keys iterate hierarchy-major then node order
    assert ds.series_keys()[:3] == [("h1", "total"), ("h1", "b1"), ("h1", "b2")]
    em = ds.embeddings[("h1", "total")]
    assert em.row_count == 100 - 12 + 1
    train = ds.train_values(("h1", "total"))
    test = ds.test_values(("h1", "total"))
    assert len(train) == 95 and len(test) == 5
    np.testing.assert_array_equal(np.concatenate([train, test]), ds.frames[("h1", "total")])


@settings(max_examples=30, deadline=None)
@given(
    t_len=st.integers(min_value=10, max_value=200),
    lags=st.integers(min_value=1, max_value=7),
)
def test_embedding_window_property(t_len, lags):
    values = np.random.default_rng(t_len * 31 + lags).uniform(0, 5, t_len)
    frame = SeriesFrame(hierarchy_id="h", node_id="n", values=values)
    em = build_embedding(frame, lags=lags, horizon=1)
    assert em.row_count == t_len - (lags + 2) + 1
    for i in range(0, em.row_count, max(1, em.row_count // 5)):
        np.testing.assert_array_equal(em.X[i], values[i : i + lags + 1])
        assert em.y[i] == values[i + lags + 1]
