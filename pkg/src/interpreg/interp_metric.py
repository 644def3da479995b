"""Mean and variance of the model-minus-prior error.

The variance of ``f - P`` measures how far a model departs from the prior up
to a constant offset: it is zero exactly when the two differ by a constant.
Both a population form (quadrature against the input measure) and an
empirical form (uniform weights over a sample) are provided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import PriorModel, QuadratureNodes, evaluate_checked

__all__ = ["MetricReport", "empirical_metric", "weighted_metric", "population_metric"]

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class MetricReport:
    mean_error: float
    variance: float
    form: str  # "population" or "empirical"
    node_count: int

    def csv_row(self) -> dict:
        return {
            "form": self.form,
            "mean_error": repr(self.mean_error),
            "variance": repr(self.variance),
            "node_count": self.node_count,
        }


CSV_FIELDS = ("form", "mean_error", "variance", "node_count")


def _clamp(variance: float) -> float:
    if variance < 0:
        if variance < -CLAMP_TOL:
            raise ArithmeticError(f"variance {variance} is negative beyond round-off")
        return 0.0
    return variance


def weighted_metric(f_vals, p_vals, weights, form: str = "population") -> MetricReport:
    """Weighted mean of ``f - P`` and weighted variance around that mean."""
    f = np.asarray(f_vals, dtype=float).reshape(-1)
    p = np.asarray(p_vals, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if f.shape != p.shape or f.shape != w.shape:
        raise ValueError(f"length mismatch: f={f.shape[0]}, P={p.shape[0]}, weights={w.shape[0]}")
    if f.shape[0] == 0:
        raise ValueError("metric needs at least one value")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(p))):
        raise ValueError("metric inputs must be finite")
    d = f - p
    mean = float(w @ d)
    variance = float(w @ (d - mean) ** 2)
    return MetricReport(mean, _clamp(variance), form, f.shape[0])


def empirical_metric(f_vals, p_vals) -> MetricReport:
    """Sample mean ``(1/m) sum (f_i - p_i)`` and the matching centered variance.

    >>> r = empirical_metric([1.0, 2.0], [0.0, 0.0])
    >>> r.mean_error, r.variance
    (1.5, 0.25)
    """
    f = np.asarray(f_vals, dtype=float).reshape(-1)
    p = np.asarray(p_vals, dtype=float).reshape(-1)
    if f.shape != p.shape:
        raise ValueError(f"length mismatch: {f.shape[0]} vs {p.shape[0]}")
    if f.shape[0] == 0:
        raise ValueError("metric needs at least one value")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(p))):
        raise ValueError("metric inputs must be finite")
    d = f - p
    mean = float(np.mean(d))
    variance = float(np.mean((d - mean) ** 2))
    return MetricReport(mean, _clamp(variance), "empirical", f.shape[0])


def population_metric(f: Callable, prior: PriorModel | Callable, nodes: QuadratureNodes) -> MetricReport:
    """Population mean and variance of ``f - P`` integrated over ``nodes``."""
    f_vals = evaluate_checked(f, nodes.points, "f")
    p_vals = evaluate_checked(prior, nodes.points, "prior")
    return weighted_metric(f_vals, p_vals, nodes.weights, "population")
