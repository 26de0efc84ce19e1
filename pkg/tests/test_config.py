import json

import pytest

from htsf.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    config_snapshot,
    load_config,
)


def write_config(tmp_path, name="run.json", **extra):
    for f in ("sales.csv", "edges.csv", "bottom.csv"):
        (tmp_path / f).write_text("stub\n")
    doc = {
        "sales_csv": "sales.csv",
        "hierarchy_edges": "edges.csv",
        "bottom_order": "bottom.csv",
        "output_dir": "out",
    }
    doc.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_load_minimal(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.lags == 60 and cfg.holdout == 28
    assert cfg.families == ("es", "arima", "gbdt-local", "gbdt-nfg", "gbdt-fg")
    assert cfg.reconciliations == ("bu", "td", "mint")
    assert cfg.grid_search is False and cfg.seed == 0
    # paths resolve relative to the config file's directory
    assert cfg.sales_csv == str(tmp_path / "sales.csv")
    assert cfg.output_dir == str(tmp_path / "out")


def test_unknown_field_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        load_config(write_config(tmp_path, typo_field=1))


def test_missing_required_path(tmp_path):
    path = write_config(tmp_path)
    (tmp_path / "sales.csv").unlink()
    with pytest.raises(ConfigError, match="sales_csv"):
        load_config(path)


def test_bad_json_reports_line(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{"sales_csv": }')
    with pytest.raises(ConfigError, match="line"):
        load_config(path)


def test_family_and_reconciliation_membership(tmp_path):
    with pytest.raises(ConfigError, match="famil"):
        load_config(write_config(tmp_path, families=["es", "prophet"]))
    with pytest.raises(ConfigError, match="reconcil"):
        load_config(write_config(tmp_path, reconciliations=["bu", "ols"]))


def test_int_minimums(tmp_path):
    with pytest.raises(ConfigError, match="lags"):
        load_config(write_config(tmp_path, lags=0))
    with pytest.raises(ConfigError, match="holdout"):
        load_config(write_config(tmp_path, holdout=0))
    with pytest.raises(ConfigError, match="workers"):
        load_config(write_config(tmp_path, workers=0))
    with pytest.raises(ConfigError, match="lags"):
        load_config(write_config(tmp_path, lags="sixty"))


def test_bool_fields(tmp_path):
    with pytest.raises(ConfigError, match="grid_search"):
        load_config(write_config(tmp_path, grid_search="yes"))
    cfg = load_config(write_config(tmp_path, grid_search=True))
    assert cfg.grid_search is True


def test_gbdt_override_keys(tmp_path):
    cfg = load_config(write_config(tmp_path, gbdt={"num_rounds": 10}))
    assert cfg.gbdt == {"num_rounds": 10}
    with pytest.raises(ConfigError, match="gbdt"):
        load_config(write_config(tmp_path, gbdt={"rounds": 10}))
    with pytest.raises(ConfigError, match="gbdt"):
        load_config(write_config(tmp_path, gbdt={"seed": 5}))  # seed comes from run seed


def test_multiple_violations_joined(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write_config(tmp_path, lags=0, holdout=0))
    assert "lags" in str(err.value) and "holdout" in str(err.value)


def test_apply_overrides(tmp_path):
    cfg = load_config(write_config(tmp_path))
    out = apply_overrides(cfg, seed=9, families=("es",), workers=None)
    assert out.seed == 9
    assert out.families == ("es",)
    assert out.workers == cfg.workers  # None means "keep"
    assert cfg.seed == 0  # original untouched


def test_snapshot_stable_bytes(tmp_path):
    cfg = load_config(write_config(tmp_path))
    a = config_snapshot(cfg)
    b = config_snapshot(cfg)
    assert a == b and a.endswith("\n")
    doc = json.loads(a)
    assert list(doc) == sorted(doc)
    assert doc["seed"] == 0
