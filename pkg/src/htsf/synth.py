"""Deterministic synthetic sales panels for desk-scale experiments.

Every bottom series mixes one panel-wide autoregressive signal with its own
independent autoregressive signal, at a configurable sharing weight, plus
white noise:

    series = base + amplitude * (sharing * shared + (1 - sharing) * idio)
             + noise * white,  clipped at zero

With sharing 1 and noise 0 all bottom series are identical; with sharing 0
they are uncorrelated. Generation order is fixed, so a seed fully determines
the panel bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class SynthError(ValueError):
    """Raised for non-positive sizes or out-of-range coefficients."""


@dataclass(frozen=True)
class SynthSpec:
    hierarchies: int
    bottoms: int
    T: int
    noise: float = 0.5
    sharing: float = 0.8
    seed: int = 0
    phi: float = 0.8
    base: float = 10.0
    amplitude: float = 3.0

    def validate(self) -> None:
        if self.hierarchies < 1 or self.bottoms < 1 or self.T < 1:
            raise SynthError("hierarchies, bottoms, and T must be >= 1")
        if not 0.0 <= self.sharing <= 1.0:
            raise SynthError("sharing must lie in [0, 1]")
        if self.noise < 0.0:
            raise SynthError("noise must be >= 0")
        if not 0.0 <= self.phi < 1.0:
            raise SynthError("phi must lie in [0, 1)")

    @property
    def hierarchy_ids(self) -> tuple[str, ...]:
        width = max(2, len(str(self.hierarchies)))
        return tuple(f"h{i:0{width}d}" for i in range(1, self.hierarchies + 1))

    @property
    def bottom_ids(self) -> tuple[str, ...]:
        width = max(2, len(str(self.bottoms)))
        return tuple(f"b{j:0{width}d}" for j in range(1, self.bottoms + 1))

    @property
    def root_id(self) -> str:
        return "total"


def _ar1(rng: np.random.Generator, T: int, phi: float) -> np.ndarray:
    """Unit-variance stationary AR(1) path."""
    innovations = rng.standard_normal(T)
    x = np.empty(T)
    x[0] = innovations[0]
    scale = np.sqrt(1.0 - phi * phi)
    for t in range(1, T):
        x[t] = phi * x[t - 1] + scale * innovations[t]
    return x


def synth_bottom_series(spec: SynthSpec) -> dict[tuple[str, str], np.ndarray]:
    """Generate all bottom series keyed by (hierarchy_id, bottom_id)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    shared = _ar1(rng, spec.T, spec.phi)
    series: dict[tuple[str, str], np.ndarray] = {}
    for hid in spec.hierarchy_ids:
        for bid in spec.bottom_ids:
            idio = _ar1(rng, spec.T, spec.phi)
            white = rng.standard_normal(spec.T)
            signal = spec.sharing * shared + (1.0 - spec.sharing) * idio
            values = spec.base + spec.amplitude * signal + spec.noise * white
            series[(hid, bid)] = np.maximum(values, 0.0)
    return series


def synth_edges(spec: SynthSpec) -> list[tuple[str, str]]:
    """The flat root-to-bottoms tree every generated hierarchy shares."""
    return [(spec.root_id, bid) for bid in spec.bottom_ids]


def write_sales_csv(spec: SynthSpec, path) -> None:
    series = synth_bottom_series(spec)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["hierarchy_id", "node_id", "t", "value"])
        for hid in spec.hierarchy_ids:
            for bid in spec.bottom_ids:
                values = series[(hid, bid)]
                for t in range(spec.T):
                    writer.writerow([hid, bid, t + 1, repr(float(values[t]))])


def write_edges_csv(spec: SynthSpec, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["parent_id", "child_id"])
        for parent, child in synth_edges(spec):
            writer.writerow([parent, child])


def write_bottom_order(spec: SynthSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for bid in spec.bottom_ids:
            f.write(bid + "\n")
