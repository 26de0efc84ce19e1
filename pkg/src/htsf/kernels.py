"""Backend dispatch for the numeric hot paths.

Two interchangeable implementations ship side by side: compiled loops
(:mod:`htsf._kernels_numba`) and vectorized numpy (:mod:`htsf._kernels_numpy`).
The active one is chosen at import time from the ``HTSF_BACKEND`` environment
variable ("numba" or "numpy"), defaulting to the compiled backend when numba
imports cleanly. Both produce bitwise-identical results; the test suite and
``benchmarks/bench_kernels.py`` exercise the pair against each other.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _kernels_numpy

_BACKENDS = {"numpy": _kernels_numpy}
try:
    from . import _kernels_numba

    _BACKENDS["numba"] = _kernels_numba
except ImportError:  # pragma: no cover - depends on the environment
    pass


class BackendError(RuntimeError):
    """Raised when an unknown or unavailable backend is requested."""


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _initial_backend() -> str:
    name = os.environ.get("HTSF_BACKEND", "").strip()
    if name:
        if name not in _BACKENDS:
            raise BackendError(
                f"HTSF_BACKEND={name!r} not available; choose from {available_backends()}"
            )
        return name
    return "numba" if "numba" in _BACKENDS else "numpy"


_active = _initial_backend()


def active() -> str:
    """Name of the backend currently serving kernel calls."""
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise BackendError(
            f"unknown backend {name!r}; choose from {available_backends()}"
        )
    _active = name


@contextmanager
def use_backend(name: str):
    """Temporarily route kernel calls to the named backend."""
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def build_histograms(codes, rows, feats, grad, hess, max_bins):
    return _BACKENDS[_active].build_histograms(codes, rows, feats, grad, hess, max_bins)


def best_split(hg, hh, cnt, lam, min_samples):
    return _BACKENDS[_active].best_split(hg, hh, cnt, lam, min_samples)


def partition_rows(codes, feat, rows, split_bin):
    return _BACKENDS[_active].partition_rows(codes, feat, rows, split_bin)


def predict_forest(X, feat, thr, left, right, value, roots):
    return _BACKENDS[_active].predict_forest(X, feat, thr, left, right, value, roots)


def css_residuals(w, c, phi, theta):
    return _BACKENDS[_active].css_residuals(w, c, phi, theta)
