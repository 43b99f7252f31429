"""Drift families with declared dissipativity constants.

Each shipped family is componentwise, so ``evaluate`` accepts arrays of any
shape whose last axis is the state dimension.

Integrability: all three families grow at most polynomially, so for any
cadlag ``X`` with sub-exponential growth ``e^{ms} |f(X(s))|^2`` is integrable
on ``(-inf, t]`` for every ``m > 0``.  The declared ``m0`` is therefore
free; it is set to ``l``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class DriftSpec:
    """Drift ``f: R^d -> R^d`` with one-sided dissipative constant ``l``.

    ``<x - y, f(x) - f(y)> <= -l |x - y|^2`` is assumed with ``l > 4`` and
    ``l <= m0``.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    l: float
    m0: Optional[float] = None

    def __post_init__(self):
        if not self.l > 4:
            raise ParameterError(f"drift {self.name!r}: l must be > 4, got {self.l}")
        if self.m0 is None:
            object.__setattr__(self, "m0", float(self.l))
        if not self.m0 >= self.l:
            raise ParameterError(f"drift {self.name!r}: m0={self.m0} must be >= l={self.l}")

    def __call__(self, x):
        return self.evaluate(x)


def linear_drift(a) -> DriftSpec:
    """``f(u) = -a u``; dissipative with ``l = a``."""
    a = float(a)
    return DriftSpec(f"linear(a={a:g})", lambda u: -a * u, l=a)


def cubic_drift(a) -> DriftSpec:
    """``f(u) = -a u - u^3``; the cubic term is monotone so ``l = a``."""
    a = float(a)
    return DriftSpec(f"cubic(a={a:g})", lambda u: -a * u - u ** 3, l=a)


def sine_drift(a) -> DriftSpec:
    """``f(u) = -a u + sin(u)``; ``sin`` is 1-Lipschitz so ``l = a - 1``."""
    a = float(a)
    return DriftSpec(f"sine(a={a:g})", lambda u: -a * u + np.sin(u), l=a - 1.0)


FAMILIES = {"linear": linear_drift, "cubic": cubic_drift, "sine": sine_drift}


def make_drift(family: str, a) -> DriftSpec:
    try:
        factory = FAMILIES[family]
    except KeyError:
        raise ParameterError(f"unknown drift family {family!r}; expected one of {sorted(FAMILIES)}") from None
    return factory(a)


def register_drift(name, evaluate, l, m0=None) -> DriftSpec:
    """Wrap a user drift; ``l`` and ``m0`` must be declared."""
    return DriftSpec(name, evaluate, l=float(l), m0=m0)


def _evaluate_rows(drift: DriftSpec, x: np.ndarray) -> np.ndarray:
    out = np.asarray(drift.evaluate(x), dtype=float)
    if out.shape == x.shape:
        return out
    return np.array([drift.evaluate(row) for row in x], dtype=float)


def estimate_dissipativity(drift: DriftSpec, sample_box, n_pairs, seed, dim=1) -> float:
    """Empirical dissipativity ``min -<x-y, f(x)-f(y)> / |x-y|^2`` over random pairs.

    Pairs are drawn uniformly from ``[-sample_box, sample_box]^dim``;
    coincident pairs are redrawn.
    """
    if not sample_box > 0:
        raise ParameterError(f"sample_box must be > 0, got {sample_box}")
    if n_pairs < 1:
        raise ParameterError(f"n_pairs must be >= 1, got {n_pairs}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-sample_box, sample_box, size=(n_pairs, dim))
    y = rng.uniform(-sample_box, sample_box, size=(n_pairs, dim))
    same = np.all(x == y, axis=1)
    while same.any():
        y[same] = rng.uniform(-sample_box, sample_box, size=(int(same.sum()), dim))
        same = np.all(x == y, axis=1)
    dx = x - y
    df = _evaluate_rows(drift, x) - _evaluate_rows(drift, y)
    ratios = -np.einsum("ij,ij->i", dx, df) / np.einsum("ij,ij->i", dx, dx)
    return float(ratios.min())
