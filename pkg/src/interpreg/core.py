"""Synthetic regression tasks, input measures, datasets and quadrature.

A :class:`SyntheticTask` is the full data-generating world: the regression
function, the prior (cognitive) model, the input measure and the standard
deviation of additive Gaussian output noise. Datasets are drawn from it with
an explicit seed; integrals against the input measure are computed with
deterministic quadrature nodes.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .functions import function_from_config

__all__ = [
    "ConfigError",
    "EvaluationError",
    "InputMeasure",
    "PriorModel",
    "SyntheticTask",
    "Dataset",
    "QuadratureNodes",
    "evaluate_checked",
    "sample_dataset",
    "quadrature_nodes",
    "task_from_config",
]

WEIGHT_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid experiment or task configuration."""


class EvaluationError(ArithmeticError):
    """A model function returned a non-finite value."""


def evaluate_checked(fn: Callable, points: np.ndarray, what: str = "function") -> np.ndarray:
    """Evaluate ``fn`` on ``(k, n)`` points, raising on the first non-finite value."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(fn(points), dtype=float).reshape(-1)
    if values.shape[0] != points.shape[0]:
        raise EvaluationError(f"{what} returned {values.shape[0]} values for {points.shape[0]} points")
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"{what} is not finite at x={points[i].tolist()} (value {values[i]})")
    return values


@dataclass(frozen=True)
class InputMeasure:
    """Input distribution: uniform on a box, or a weighted discrete grid.

    Parameters
    ----------
    kind : {"uniform", "discrete"}
    low, high : tuple of float
        Box corners for ``kind="uniform"``.
    points : (k, n) array
        Support of the discrete measure.
    weights : (k,) array
        Probabilities of ``points``; nonnegative and summing to one.
    """

    kind: str
    low: tuple[float, ...] = ()
    high: tuple[float, ...] = ()
    points: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if len(self.low) != len(self.high) or not self.low:
                raise ConfigError("uniform measure needs low/high of equal nonzero length")
            if any(h <= l for l, h in zip(self.low, self.high)):
                raise ConfigError("uniform measure needs high > low on every axis")
        elif self.kind == "discrete":
            pts = np.atleast_2d(np.asarray(self.points, dtype=float))
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if pts.shape[0] != w.shape[0] or w.shape[0] == 0:
                raise ConfigError("discrete measure needs one weight per point")
            if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise ConfigError(f"discrete weights must be nonnegative and sum to 1 (sum={w.sum()!r})")
            pts.setflags(write=False)
            w.setflags(write=False)
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "weights", w)
        else:
            raise ConfigError(f"unknown input measure kind {self.kind!r}")

    @classmethod
    def uniform(cls, low: Sequence[float], high: Sequence[float]) -> "InputMeasure":
        return cls("uniform", tuple(float(v) for v in low), tuple(float(v) for v in high))

    @classmethod
    def discrete(cls, points, weights) -> "InputMeasure":
        return cls("discrete", points=points, weights=weights)

    @property
    def dim(self) -> int:
        if self.kind == "uniform":
            return len(self.low)
        return self.points.shape[1]

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self.kind == "uniform":
            lo = np.asarray(self.low)
            hi = np.asarray(self.high)
            return lo + (hi - lo) * rng.random((m, self.dim))
        idx = rng.choice(self.points.shape[0], size=m, p=self.weights)
        return self.points[idx].copy()


@dataclass(frozen=True)
class PriorModel:
    """The cognitive model ``P(x)``: any total, vectorized real function."""

    eval: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        return self.eval(x)


@dataclass(frozen=True)
class SyntheticTask:
    f_rho: Callable[[np.ndarray], np.ndarray]
    prior: PriorModel
    noise_sigma: float
    input_dist: InputMeasure

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        if not isinstance(self.prior, PriorModel):
            object.__setattr__(self, "prior", PriorModel(self.prior))

    @property
    def domain_dim(self) -> int:
        return self.input_dist.dim

    @property
    def noise_variance(self) -> float:
        return float(self.noise_sigma) ** 2


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.shape[0] != ys.shape[0] or ys.shape[0] < 1:
            raise ValueError(f"dataset needs m >= 1 matching xs/ys, got {xs.shape[0]} and {ys.shape[0]}")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def m(self) -> int:
        return self.ys.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def to_csv(self, path: str | Path | None = None) -> str:
        """Serialize with header ``x_0,...,x_{n-1},y``; ``repr`` floats round-trip exactly."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x_{j}" for j in range(self.dim)] + ["y"])
        for x, y in zip(self.xs, self.ys):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path, seed: int | None = None) -> "Dataset":
        return cls.from_csv_text(Path(path).read_text(), seed)

    @classmethod
    def from_csv_text(cls, text: str, seed: int | None = None) -> "Dataset":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        header, body = rows[0], rows[1:]
        if header[-1] != "y" or any(h != f"x_{j}" for j, h in enumerate(header[:-1])):
            raise ValueError(f"unexpected dataset header {header}")
        data = np.array(body, dtype=float)
        return cls(data[:, :-1], data[:, -1], seed)


def sample_dataset(task: SyntheticTask, m: int, seed: int) -> Dataset:
    """Draw ``m`` i.i.d. pairs ``(x, f_rho(x) + noise)`` from ``task``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    xs = task.input_dist.sample(rng, m)
    ys = evaluate_checked(task.f_rho, xs, "f_rho")
    if task.noise_sigma > 0:
        ys = ys + rng.normal(0.0, task.noise_sigma, size=m)
    return Dataset(xs, ys, seed)


@dataclass(frozen=True)
class QuadratureNodes:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("quadrature weights must form a probability vector")
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] != w.shape[0]:
            # 1-d points given as a flat list
            pts = pts.reshape(-1, 1)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __iter__(self):
        return iter(zip(self.points, self.weights))

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))


def quadrature_nodes(measure: InputMeasure, resolution: int) -> QuadratureNodes:
    """Deterministic quadrature for ``measure``.

    Uniform boxes get the tensor midpoint rule with ``resolution`` nodes per
    axis and equal weights; discrete measures are returned unchanged.
    """
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    if measure.kind == "discrete":
        return QuadratureNodes(measure.points, measure.weights)
    axes = [
        lo + (hi - lo) * (np.arange(resolution) + 0.5) / resolution
        for lo, hi in zip(measure.low, measure.high)
    ]
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    n = pts.shape[0]
    return QuadratureNodes(pts, np.full(n, 1.0 / n))


def _measure_from_config(cfg: Mapping) -> InputMeasure:
    kind = cfg.get("kind", "uniform")
    if kind == "uniform":
        return InputMeasure.uniform(cfg.get("low", [0.0]), cfg.get("high", [1.0]))
    if kind == "discrete":
        return InputMeasure.discrete(cfg["points"], cfg["weights"])
    raise ConfigError(f"unknown input kind {kind!r}")


def task_from_config(cfg: Mapping) -> SyntheticTask:
    """Build a task from the ``"task"`` section of an experiment config."""
    if int(cfg.get("output_dim", 1)) != 1:
        raise ConfigError("only scalar outputs (output_dim = 1) are supported")
    try:
        f_rho = function_from_config(cfg["f_rho"])
        prior = function_from_config(cfg.get("prior", 0.0))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad task function: {exc}") from exc
    measure = _measure_from_config(cfg.get("input", {}))
    return SyntheticTask(f_rho, PriorModel(prior), float(cfg.get("noise_sigma", 0.0)), measure)
