"""Kernels, Gram matrices and representer-form hypotheses.

A hypothesis is ``f(x) = sum_i c_i K(center_i, x)``; its RKHS norm is
``c^T K c`` with ``K`` the Gram matrix of its centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.spatial.distance import cdist

__all__ = [
    "ConditioningError",
    "KernelSpec",
    "GramMatrix",
    "Hypothesis",
    "parse_kernel",
    "cholesky_with_jitter",
    "gram_matrix",
    "rkhs_norm_sq",
    "evaluate",
]

JITTER_START = 1e-12
JITTER_MAX = 1e-3
NORM_CLAMP_TOL = 1e-10


class ConditioningError(np.linalg.LinAlgError):
    """No jitter up to ``JITTER_MAX`` made the matrix positive definite."""


@dataclass(frozen=True)
class KernelSpec:
    """``gaussian`` (``width``), ``poly`` (``degree``, ``offset``) or ``linear``."""

    kind: str
    width: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError(f"gaussian width must be > 0, got {self.width}")
        if self.kind == "poly" and (int(self.degree) != self.degree or self.degree < 1 or self.offset < 0):
            raise ValueError("poly kernel needs integer degree >= 1 and offset >= 0")
        if self.kind not in ("gaussian", "poly", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def gaussian(cls, width: float) -> "KernelSpec":
        return cls("gaussian", width=float(width))

    @classmethod
    def poly(cls, degree: int, offset: float = 1.0) -> "KernelSpec":
        return cls("poly", degree=int(degree), offset=float(offset))

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    def __call__(self, x, y) -> np.ndarray:
        """Cross-kernel matrix between point sets ``x`` (a, n) and ``y`` (b, n)."""
        x = _points(x)
        y = _points(y)
        if x.shape[1] != y.shape[1]:
            raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
        if self.kind == "gaussian":
            return np.exp(-cdist(x, y, "sqeuclidean") / (2.0 * self.width**2))
        inner = x @ y.T
        if self.kind == "linear":
            return inner
        return (inner + self.offset) ** self.degree

    def __str__(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian:width={self.width!r}"
        if self.kind == "poly":
            return f"poly:degree={self.degree},offset={self.offset!r}"
        return "linear"


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``gaussian:width=0.5``, ``poly:degree=3,offset=1`` or ``linear``."""
    name, _, params = text.strip().partition(":")
    kwargs = {}
    for item in filter(None, (p.strip() for p in params.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"bad kernel parameter {item!r} in {text!r}")
        kwargs[key.strip()] = value.strip()
    if name == "gaussian":
        return KernelSpec.gaussian(float(kwargs["width"]))
    if name in ("poly", "polynomial"):
        return KernelSpec.poly(int(kwargs.get("degree", 2)), float(kwargs.get("offset", 1.0)))
    if name == "linear":
        return KernelSpec.linear()
    raise ValueError(f"unknown kernel {text!r}")


def _points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1)
    return x


def cholesky_with_jitter(matrix: np.ndarray, *, start_at_zero: bool = True):
    """Lower Cholesky factor of ``matrix + jitter*I`` with the smallest working jitter.

    Tries 0, then 1e-12, 1e-11, ... up to 1e-3. Returns ``(factor, jitter)``.
    """
    n = matrix.shape[0]
    eye = np.eye(n)
    jitters = ([0.0] if start_at_zero else []) + [
        JITTER_START * 10.0**k for k in range(int(round(np.log10(JITTER_MAX / JITTER_START))) + 1)
    ]
    for jitter in jitters:
        try:
            factor = la.cholesky(matrix + jitter * eye, lower=True, check_finite=True)
        except la.LinAlgError:
            continue
        return factor, jitter
    raise ConditioningError(f"matrix of size {n} not positive definite with jitter <= {JITTER_MAX}")


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray
    jitter: float
    factor: np.ndarray | None = None  # Cholesky factor of entries + jitter*I

    @property
    def jittered(self) -> np.ndarray:
        return self.entries + self.jitter * np.eye(self.entries.shape[0])


def gram_matrix(kernel: KernelSpec, points, jitter_policy: str = "escalate") -> GramMatrix:
    """Gram matrix of ``points`` under ``kernel``.

    ``jitter_policy="escalate"`` factorizes with the smallest diagonal jitter
    that works (recorded on the result); ``"none"`` skips factorization.
    """
    pts = _points(points)
    if pts.shape[0] == 0:
        raise ValueError("gram_matrix needs at least one point")
    k = kernel(pts, pts)
    k = 0.5 * (k + k.T)
    if jitter_policy == "none":
        return GramMatrix(k, 0.0)
    if jitter_policy != "escalate":
        raise ValueError(f"unknown jitter policy {jitter_policy!r}")
    factor, jitter = cholesky_with_jitter(k)
    return GramMatrix(k, jitter, factor)


@dataclass(frozen=True)
class Hypothesis:
    coeffs: np.ndarray
    centers: np.ndarray
    kernel: KernelSpec

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        centers = _points(self.centers)
        if c.shape[0] != centers.shape[0]:
            raise ValueError(f"{c.shape[0]} coefficients for {centers.shape[0]} centers")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "centers", centers)

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    @classmethod
    def zero(cls, centers, kernel: KernelSpec) -> "Hypothesis":
        centers = _points(centers)
        return cls(np.zeros(centers.shape[0]), centers, kernel)


def rkhs_norm_sq(h: Hypothesis, gram: GramMatrix) -> float:
    """``c^T K c``; small negative round-off (above -1e-10) is clamped to zero."""
    k = gram.entries
    if k.shape != (h.coeffs.shape[0],) * 2:
        raise ValueError(f"gram of shape {k.shape} does not match {h.coeffs.shape[0]} coefficients")
    value = float(h.coeffs @ k @ h.coeffs)
    if value < 0:
        if value < -NORM_CLAMP_TOL:
            raise ValueError(f"negative squared norm {value}: gram matrix is not PSD")
        value = 0.0
    return value


def evaluate(h: Hypothesis, x) -> np.ndarray | float:
    """``sum_i c_i K(center_i, x)`` for one point (returns float) or a batch."""
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 1 and x_arr.shape[0] == h.centers.shape[1] or x_arr.ndim == 0
    pts = x_arr.reshape(1, -1) if single else _points(x_arr)
    if pts.shape[1] != h.centers.shape[1]:
        raise ValueError(f"point dimension {pts.shape[1]} != hypothesis dimension {h.centers.shape[1]}")
    values = h.kernel(pts, h.centers) @ h.coeffs
    return float(values[0]) if single else values
