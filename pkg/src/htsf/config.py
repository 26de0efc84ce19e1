"""Run configuration: one JSON document, flags override fields.

Precedence is CLI flags > config file > built-in defaults. Relative data
paths are resolved against the directory holding the config file, so a run
directory can be moved as a unit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

VALID_FAMILIES = ("es", "arima", "gbdt-local", "gbdt-nfg", "gbdt-fg")
VALID_RECONCILIATIONS = ("none", "bu", "td", "mint")

_GBDT_OVERRIDE_FIELDS = {
    "learning_rate",
    "feature_fraction",
    "num_rounds",
    "max_leaves",
    "min_leaf_samples",
    "max_bins",
    "tweedie_power",
    "l2_lambda",
}

_KNOWN_FIELDS = {
    "sales_csv",
    "hierarchy_edges",
    "bottom_order",
    "output_dir",
    "lags",
    "holdout",
    "families",
    "reconciliations",
    "grid_search",
    "seed",
    "workers",
    "gbdt",
    "dump_matrices",
}


class ConfigError(ValueError):
    """Raised with every violation found, one per line."""


@dataclass(frozen=True)
class RunConfig:
    sales_csv: str
    hierarchy_edges: str
    bottom_order: str
    output_dir: str
    lags: int = 60
    holdout: int = 28
    families: tuple[str, ...] = VALID_FAMILIES
    reconciliations: tuple[str, ...] = ("bu", "td", "mint")
    grid_search: bool = False
    seed: int = 0
    workers: int | None = None
    gbdt: dict | None = None
    dump_matrices: bool = False


def _check_int(doc, field, violations, minimum):
    value = doc.get(field)
    if value is None:
        return
    if not isinstance(value, int) or isinstance(value, bool):
        violations.append(f"{field}: must be an integer")
    elif value < minimum:
        violations.append(f"{field}: must be >= {minimum}")


def config_violations(doc: dict, base_dir: Path) -> list[str]:
    """Schema and file-existence checks; returns one message per problem."""
    violations: list[str] = []
    if not isinstance(doc, dict):
        return ["config: top level must be a JSON object"]
    for key in sorted(set(doc) - _KNOWN_FIELDS):
        violations.append(f"{key}: unknown field")
    for field in ("sales_csv", "hierarchy_edges", "bottom_order", "output_dir"):
        value = doc.get(field)
        if value is None:
            violations.append(f"{field}: required")
        elif not isinstance(value, str) or not value:
            violations.append(f"{field}: must be a non-empty string")
        elif field != "output_dir" and not (base_dir / value).expanduser().exists():
            violations.append(f"{field}: file not found: {(base_dir / value)}")
    _check_int(doc, "lags", violations, 1)
    _check_int(doc, "holdout", violations, 1)
    _check_int(doc, "seed", violations, 0)
    _check_int(doc, "workers", violations, 1)
    families = doc.get("families")
    if families is not None:
        if not isinstance(families, list) or not families:
            violations.append("families: must be a non-empty list")
        else:
            for fam in families:
                if fam not in VALID_FAMILIES:
                    violations.append(
                        f"families: unknown family {fam!r}; choose from {VALID_FAMILIES}"
                    )
    recs = doc.get("reconciliations")
    if recs is not None:
        if not isinstance(recs, list):
            violations.append("reconciliations: must be a list")
        else:
            for rec in recs:
                if rec not in VALID_RECONCILIATIONS:
                    violations.append(
                        f"reconciliations: unknown method {rec!r}; "
                        f"choose from {VALID_RECONCILIATIONS}"
                    )
    for field in ("grid_search", "dump_matrices"):
        value = doc.get(field)
        if value is not None and not isinstance(value, bool):
            violations.append(f"{field}: must be true or false")
    gbdt = doc.get("gbdt")
    if gbdt is not None:
        if not isinstance(gbdt, dict):
            violations.append("gbdt: must be an object of parameter overrides")
        else:
            for key in sorted(set(gbdt) - _GBDT_OVERRIDE_FIELDS):
                violations.append(f"gbdt.{key}: unknown parameter")
    return violations


def load_config(path) -> RunConfig:
    """Parse, validate, and resolve a config file; raises on any violation."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    base_dir = path.parent
    violations = config_violations(doc, base_dir)
    if violations:
        raise ConfigError("\n".join(violations))

    def resolve(field):
        return str((base_dir / doc[field]).expanduser())

    return RunConfig(
        sales_csv=resolve("sales_csv"),
        hierarchy_edges=resolve("hierarchy_edges"),
        bottom_order=resolve("bottom_order"),
        output_dir=resolve("output_dir"),
        lags=doc.get("lags", 60),
        holdout=doc.get("holdout", 28),
        families=tuple(doc.get("families", list(VALID_FAMILIES))),
        reconciliations=tuple(doc.get("reconciliations", ["bu", "td", "mint"])),
        grid_search=doc.get("grid_search", False),
        seed=doc.get("seed", 0),
        workers=doc.get("workers"),
        gbdt=doc.get("gbdt"),
        dump_matrices=doc.get("dump_matrices", False),
    )


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """CLI flag values (non-None) replace config fields."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **updates) if updates else config


def config_snapshot(config: RunConfig) -> str:
    """Stable-key JSON rendering persisted into every run artifact."""
    doc = asdict(config)
    doc["families"] = list(config.families)
    doc["reconciliations"] = list(config.reconciliations)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
