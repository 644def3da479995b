"""Catalog of evaluable real functions on R^n used for regression targets and priors.

Every function takes an ``(k, n)`` array of points and returns a ``(k,)`` array.
One-dimensional shapes (polynomial, sinusoid, piecewise-linear) act on the
projection ``t = x @ direction``; ``direction`` defaults to the first axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "Constant",
    "Polynomial",
    "Sinusoid",
    "PiecewiseLinear",
    "Tabulated",
    "Sum",
    "Lambda",
    "function_from_config",
]


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1)
    return x


def _project(x: np.ndarray, direction: tuple[float, ...] | None) -> np.ndarray:
    if direction is None:
        return x[:, 0]
    d = np.asarray(direction, dtype=float)
    if d.shape[0] != x.shape[1]:
        raise ValueError(f"direction has length {d.shape[0]}, points have dimension {x.shape[1]}")
    return x @ d


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, x) -> np.ndarray:
        return np.full(_as_points(x).shape[0], float(self.value))


@dataclass(frozen=True)
class Polynomial:
    """``sum_k coeffs[k] * t**k``."""

    coeffs: tuple[float, ...]
    direction: tuple[float, ...] | None = None

    def __call__(self, x) -> np.ndarray:
        t = _project(_as_points(x), self.direction)
        # np.polyval wants the highest degree first
        return np.polyval(np.asarray(self.coeffs[::-1], dtype=float), t)


@dataclass(frozen=True)
class Sinusoid:
    """``amplitude * sin(2 pi frequency t + phase) + offset``."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    offset: float = 0.0
    direction: tuple[float, ...] | None = None

    def __call__(self, x) -> np.ndarray:
        t = _project(_as_points(x), self.direction)
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * t + self.phase) + self.offset


@dataclass(frozen=True)
class PiecewiseLinear:
    knots: tuple[float, ...]
    values: tuple[float, ...]
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ValueError("piecewise_linear needs matching knots/values with at least two knots")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("piecewise_linear knots must be strictly increasing")

    def __call__(self, x) -> np.ndarray:
        t = _project(_as_points(x), self.direction)
        return np.interp(t, self.knots, self.values)


@dataclass(frozen=True)
class Tabulated:
    """Multilinear interpolation of values tabulated on a rectilinear grid.

    Points outside the grid are extrapolated linearly so the function is total.
    """

    axes: tuple[tuple[float, ...], ...]
    values: Any  # nested sequence with shape (len(axes[0]), len(axes[1]), ...)
    _interp: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        interp = RegularGridInterpolator(
            [np.asarray(a, dtype=float) for a in self.axes],
            np.asarray(self.values, dtype=float),
            method="linear",
            bounds_error=False,
            fill_value=None,
        )
        object.__setattr__(self, "_interp", interp)

    def __call__(self, x) -> np.ndarray:
        return self._interp(_as_points(x))


@dataclass(frozen=True)
class Sum:
    terms: tuple[Callable, ...]

    def __call__(self, x) -> np.ndarray:
        x = _as_points(x)
        out = np.zeros(x.shape[0])
        for term in self.terms:
            out = out + term(x)
        return out


@dataclass(frozen=True)
class Lambda:
    """Wrap an arbitrary vectorized callable (not expressible in JSON configs)."""

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "lambda"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(_as_points(x)), dtype=float).reshape(-1)


def _direction(cfg: Mapping) -> tuple[float, ...] | None:
    d = cfg.get("direction")
    return None if d is None else tuple(float(v) for v in d)


def function_from_config(cfg: Mapping | float | int) -> Callable:
    """Build a catalog function from its JSON description.

    A bare number is a constant. Otherwise ``cfg["kind"]`` selects one of
    ``constant``, ``polynomial``, ``sinusoid``, ``piecewise_linear``,
    ``tabulated`` or ``sum``.
    """
    if isinstance(cfg, (int, float)):
        return Constant(float(cfg))
    if not isinstance(cfg, Mapping) or "kind" not in cfg:
        raise ValueError(f"function config must be a number or a mapping with 'kind': {cfg!r}")
    kind = cfg["kind"]
    if kind == "constant":
        return Constant(float(cfg.get("value", 0.0)))
    if kind == "polynomial":
        return Polynomial(tuple(float(c) for c in cfg["coeffs"]), _direction(cfg))
    if kind == "sinusoid":
        return Sinusoid(
            amplitude=float(cfg.get("amplitude", 1.0)),
            frequency=float(cfg.get("frequency", 1.0)),
            phase=float(cfg.get("phase", 0.0)),
            offset=float(cfg.get("offset", 0.0)),
            direction=_direction(cfg),
        )
    if kind == "piecewise_linear":
        return PiecewiseLinear(
            tuple(float(v) for v in cfg["knots"]),
            tuple(float(v) for v in cfg["values"]),
            _direction(cfg),
        )
    if kind == "tabulated":
        axes: Sequence = cfg["axes"]
        return Tabulated(tuple(tuple(float(v) for v in a) for a in axes), cfg["values"])
    if kind == "sum":
        return Sum(tuple(function_from_config(t) for t in cfg["terms"]))
    raise ValueError(f"unknown function kind {kind!r}")
