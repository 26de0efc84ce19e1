"""Ten release gates, one test each, printed as a PASS line per criterion.

Each test pins its own tolerances and (where stated) a wall-clock budget.
Run with -s to see the summary lines; under plain pytest the verdicts are
the test outcomes themselves.
"""

import filecmp
import json
import time

import numpy as np
import pytest

from htsf.cli import main
from htsf.data import SeriesFrame, build_dataset, build_embedding, load_sales_csv, split_holdout
from htsf.evaluation import (
    MaseScore,
    avg_levels,
    avg_products,
    format4,
    mase,
    mcb_test,
)
from htsf.forecasters.gbdt import GbdtParams, fit_gbdt, gbdt_to_dict, predict_gbdt
from htsf.forecasters.tweedie import tweedie_grad_hess, tweedie_loss
from htsf.hierarchy import (
    build_hierarchy,
    coherence_check,
    structural_weights,
    summing_matrix,
)
from htsf.reconcile import g_bottom_up, g_mint_structural, g_top_down, reconcile
from htsf.scopes import Scope, produce_base_forecasts
from htsf.synth import SynthSpec, synth_edges, write_sales_csv
from tests.conftest import random_tree_edges


def _verdict(n, label):
    print(f"criterion {n:2d} PASS  {label}")


def _random_case(rng):
    h = build_hierarchy(random_tree_edges(rng))
    S = summing_matrix(h)
    # history frames must be coherent for TD proportions to sum to one
    B = rng.uniform(0.5, 9.5, size=(S.m_bottom, 10))
    Y = S.entries @ B
    frames = {node: Y[i] for i, node in enumerate(h.nodes)}
    base = rng.normal(loc=5.0, scale=4.0, size=S.n_total)
    return h, S, frames, base


def test_criterion_01_coherency_all_methods():
    """1,000 random (tree, base) pairs: coherent at 1e-9; BU bottoms exact;
    TD top exact up to terminal rounding; < 5 s."""
    rng = np.random.default_rng(20250801)
    start = time.perf_counter()
    for _ in range(1000):
        h, S, frames, base = _random_case(rng)
        m = S.m_bottom
        for G in (g_bottom_up(h), g_top_down(h, frames), g_mint_structural(h)):
            out = reconcile(G, S, base)
            ok, worst = coherence_check(S, out, tol=1e-9)
            assert ok, (G.method, worst)
            if G.method == "BU":
                np.testing.assert_array_equal(out[-m:], base[-m:])
            if G.method == "TD":
                # top = sum_j fl(p_j * top): exact through the float sum
                assert out[0] == pytest.approx(base[0], rel=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    _verdict(1, f"coherency x3000 reconciliations in {elapsed:.2f}s")


def test_criterion_02_mint_oracle_idempotence_scaling():
    """Factorized MinT equals the explicit-inverse formula on 100 trees at
    1e-8 relative; idempotent at 1e-9; invariant to W-scaling at 1e-12;
    < 10 s."""
    rng = np.random.default_rng(20250802)
    start = time.perf_counter()
    for _ in range(100):
        h = build_hierarchy(random_tree_edges(rng))
        S = summing_matrix(h)
        lam = structural_weights(S).lambda_diag
        G = g_mint_structural(h)

        W_inv = np.diag(1.0 / lam)
        explicit = np.linalg.inv(S.entries.T @ W_inv @ S.entries) @ S.entries.T @ W_inv
        np.testing.assert_allclose(G.entries, explicit, rtol=1e-8, atol=1e-12)

        base = rng.normal(scale=6.0, size=S.n_total)
        once = reconcile(G, S, base)
        np.testing.assert_allclose(reconcile(G, S, once), once, rtol=1e-9, atol=1e-9)

        for k in (7.0, 0.001):
            W_inv_k = np.diag(1.0 / (k * lam))
            scaled = (
                np.linalg.inv(S.entries.T @ W_inv_k @ S.entries) @ S.entries.T @ W_inv_k
            )
            np.testing.assert_allclose(G.entries, scaled, rtol=1e-12, atol=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    _verdict(2, f"MinT oracle + idempotence + k-scaling in {elapsed:.2f}s")


def test_criterion_03_worked_example():
    """root->(a,b), base [10,4,4]: BU [8,4,4], TD(p=[.5,.5]) [10,5,5],
    MinT [9,4.5,4.5]."""
    h = build_hierarchy([("total", "a"), ("total", "b")])
    S = summing_matrix(h)
    base = np.array([10.0, 4.0, 4.0])

    np.testing.assert_array_equal(reconcile(g_bottom_up(h), S, base), [8.0, 4.0, 4.0])

    frames = {"total": np.array([6.0, 6.0]), "a": np.array([3.0, 3.0]),
              "b": np.array([3.0, 3.0])}
    np.testing.assert_array_equal(
        reconcile(g_top_down(h, frames), S, base), [10.0, 5.0, 5.0]
    )

    np.testing.assert_allclose(
        reconcile(g_mint_structural(h), S, base), [9.0, 4.5, 4.5], rtol=1e-9
    )
    _verdict(3, "pinned worked examples BU/TD/MinT")


def test_criterion_04_tweedie_finite_differences():
    """1,000 random (y, F, rho): gradient matches the loss' central
    difference and hessian matches the gradient's central difference at
    1e-6 relative."""
    rng = np.random.default_rng(20250804)
    y = rng.uniform(0.0, 10.0, size=1000)
    F = rng.uniform(-2.0, 2.0, size=1000)
    eps = 1e-6
    for rho in rng.uniform(1.05, 1.95, size=7):
        grad, hess = tweedie_grad_hess(y, F, rho)
        num_grad = (tweedie_loss(y, F + eps, rho) - tweedie_loss(y, F - eps, rho)) / (
            2 * eps
        )
        # atol floors the comparison where the gradient crosses zero, where
        # any relative measure of the difference quotient diverges
        np.testing.assert_allclose(grad, num_grad, rtol=1e-6, atol=1e-8)
        gp, _ = tweedie_grad_hess(y, F + eps, rho)
        gm, _ = tweedie_grad_hess(y, F - eps, rho)
        np.testing.assert_allclose(hess, (gp - gm) / (2 * eps), rtol=1e-6, atol=1e-9)
    _verdict(4, "Tweedie derivatives vs central differences (7000 checks)")


def test_criterion_05_gbdt_sanity_and_worker_determinism(tmp_path):
    """Step function to RMSE < 0.05 in 100 rounds; loss never increases;
    retraining is byte-identical at 1 and 4 workers."""
    rng = np.random.default_rng(20250805)
    X = rng.integers(0, 100, size=(1000, 3)).astype(float) / 100.0
    y = np.where(X[:, 0] <= 0.5, 1.0, 3.0)
    model = fit_gbdt(X, y, GbdtParams(num_rounds=100, learning_rate=0.1, seed=5))
    rmse = float(np.sqrt(np.mean((predict_gbdt(model, X) - y) ** 2)))
    assert rmse < 0.05
    assert np.all(np.diff(model.train_loss) <= 1e-12)

    spec = SynthSpec(hierarchies=2, bottoms=3, T=120, noise=0.8, sharing=0.7, seed=17)
    write_sales_csv(spec, tmp_path / "s.csv")
    ds = build_dataset(
        load_sales_csv(tmp_path / "s.csv"),
        build_hierarchy(synth_edges(spec)),
        lags=20, holdout=10,
    )
    p = GbdtParams(num_rounds=20, feature_fraction=0.5, min_leaf_samples=5, seed=5)
    runs = {}
    for workers in (1, 4):
        fs, models = produce_base_forecasts(
            "gbdt", Scope.PER_HIERARCHY, ds, params=p, seed=5, workers=workers
        )
        runs[workers] = (
            {k: v.tobytes() for k, v in fs.forecasts.items()},
            {k: json.dumps(gbdt_to_dict(m), sort_keys=True) for k, m in models.items()},
        )
    assert runs[1] == runs[4]
    _verdict(5, f"step RMSE {rmse:.4f}; worker-count invariance")


def test_criterion_06_embedding_counts():
    """T=1941, lags=60, holdout=28: 1880 rows of 61 features + target,
    split 1852/28."""
    frame = SeriesFrame(hierarchy_id="h", node_id="n",
                        values=np.arange(1941, dtype=float))
    em = build_embedding(frame, lags=60, horizon=1)
    assert em.row_count == 1880
    assert em.X.shape == (1880, 61)
    split = split_holdout(em, holdout=28)
    assert (len(split.train_rows), len(split.test_rows)) == (1852, 28)
    _verdict(6, "1880 rows, 61+1 columns, 1852/28 split")


def test_criterion_07_metric_identities():
    """MASE hand case equals 1.0 exactly; Table-row mean renders 1.6174;
    aggregates equal brute-force triple loops at 1e-12."""
    assert mase([1.0, 2.0, 3.0, 4.0], [5.0], [4.0]) == 1.0

    level_scores = [
        MaseScore("h1", "a", 0, 2.6054),
        MaseScore("h1", "b", 1, 1.2055),
        MaseScore("h1", "c", 2, 1.0412),
    ]
    assert format4(avg_levels(level_scores)) == "1.6174"

    rng = np.random.default_rng(20250807)
    scores = []
    for hi in range(6):
        for level, count in ((0, 1), (1, 2), (2, 4)):
            for k in range(count):
                scores.append(
                    MaseScore(f"h{hi}", f"n{level}{k}", level,
                              float(rng.uniform(0.3, 2.5)))
                )
    levels = sorted({s.level for s in scores})
    hids = sorted({s.hierarchy_id for s in scores})
    per_level = []
    for j in levels:
        hier_means = []
        for hid in hids:
            vals = [s.value for s in scores if s.hierarchy_id == hid and s.level == j]
            hier_means.append(sum(vals) / len(vals))
        per_level.append(sum(hier_means) / len(hier_means))
    brute_levels = sum(per_level) / len(per_level)
    brute_products = 0.0
    for hid in hids:
        vals = [s.value for s in scores if s.hierarchy_id == hid]
        brute_products += sum(vals) / len(vals)
    brute_products /= len(hids)

    assert avg_levels(scores) == pytest.approx(brute_levels, rel=1e-12)
    assert avg_products(scores) == pytest.approx(brute_products, rel=1e-12)
    _verdict(7, "MASE=1.0, 1.6174 row identity, triple-loop equality")


def test_criterion_08_mcb_contracts():
    """Tied columns fully overlap; a dominating column's interval is
    disjoint at N=100, k=4; the k=2, N=10 half-width matches 0.438."""
    tied = np.tile(np.linspace(1.0, 2.0, 30)[:, None], (1, 4))
    res = mcb_test(tied, ["a", "b", "c", "d"])
    np.testing.assert_array_equal(res.mean_ranks, np.full(4, 2.5))
    assert not any(res.significant)

    rng = np.random.default_rng(20250808)
    mat = rng.uniform(1.0, 2.0, size=(100, 4))
    mat[:, 1] = rng.uniform(0.0, 0.5, size=100)
    res = mcb_test(mat, ["a", "best", "c", "d"])
    assert res.best_index == 1 and res.mean_ranks[1] == 1.0
    best_hi = res.mean_ranks[1] + res.half_width
    assert all(res.mean_ranks[i] - res.half_width > best_hi for i in (0, 2, 3))
    assert [bool(s) for s in res.significant] == [True, False, True, True]

    res2 = mcb_test(rng.uniform(size=(10, 2)), ["a", "b"])
    assert res2.half_width == pytest.approx(0.5 * 2.772 * np.sqrt(6.0 / 60.0), abs=1e-12)
    assert res2.half_width == pytest.approx(0.438, abs=1e-3)
    _verdict(8, "MCB overlap, dominance, half-width 0.438")


def test_criterion_09_pooled_scopes_beat_local(tmp_path):
    """On shared-signal synthetic panels (sharing 0.9 >= 0.8, T=300) the
    per-hierarchy and global scopes beat the local scope's Avg-Products
    MASE in at least 14 of 20 seeded replications; < 10 min."""
    start = time.perf_counter()
    params = GbdtParams(num_rounds=60, learning_rate=0.1, max_leaves=31,
                        min_leaf_samples=5)
    wins = {"nfg": 0, "fg": 0}
    for rep in range(20):
        seed = 2000 + rep
        spec = SynthSpec(hierarchies=4, bottoms=6, T=300, noise=2.0,
                         sharing=0.9, seed=seed)
        path = tmp_path / f"rep{rep}.csv"
        write_sales_csv(spec, path)
        ds = build_dataset(
            load_sales_csv(path), build_hierarchy(synth_edges(spec)),
            lags=60, holdout=28,
        )
        result = {}
        for scope in (Scope.LOCAL, Scope.PER_HIERARCHY, Scope.GLOBAL):
            fs, _ = produce_base_forecasts("gbdt", scope, ds, params=params,
                                           seed=seed)
            scores = [
                MaseScore(hid, nid, ds.hierarchy.level_of[nid],
                          mase(ds.train_values((hid, nid)),
                               ds.test_values((hid, nid)), preds))
                for (hid, nid), preds in fs.forecasts.items()
            ]
            result[fs.model] = avg_products(scores)
        wins["nfg"] += result["nfg"] < result["loc"]
        wins["fg"] += result["fg"] < result["loc"]
    elapsed = time.perf_counter() - start
    assert wins["nfg"] >= 14, wins
    assert wins["fg"] >= 14, wins
    assert elapsed < 600.0, f"took {elapsed:.0f}s"
    _verdict(9, f"nfg {wins['nfg']}/20, fg {wins['fg']}/20 in {elapsed:.0f}s")


def test_criterion_10_end_to_end_determinism(tmp_path):
    """Two CLI runs from one config and seed produce byte-identical
    results, boxplot, and MCB CSVs."""
    assert main([
        "synth", "--hierarchies", "2", "--bottoms", "3", "--length", "160",
        "--noise", "0.5", "--sharing", "0.8", "--seed", "29",
        "--out", str(tmp_path / "sales.csv"),
        "--edges-out", str(tmp_path / "edges.csv"),
        "--bottom-out", str(tmp_path / "bottom.csv"),
    ]) == 0
    doc = {
        "sales_csv": "sales.csv",
        "hierarchy_edges": "edges.csv",
        "bottom_order": "bottom.csv",
        "output_dir": "one",
        "seed": 3,
        "gbdt": {"num_rounds": 25, "min_leaf_samples": 10,
                 "feature_fraction": 0.7},
    }
    (tmp_path / "one.json").write_text(json.dumps(doc))
    doc["output_dir"] = "two"
    (tmp_path / "two.json").write_text(json.dumps(doc))

    assert main(["run", str(tmp_path / "one.json")]) == 0
    assert main(["run", str(tmp_path / "two.json")]) == 0
    for name in ("results_table.csv", "boxplot.csv", "mcb.csv"):
        assert filecmp.cmp(tmp_path / "one" / name, tmp_path / "two" / name,
                           shallow=False), name
    _verdict(10, "byte-identical evaluation outputs across runs")
