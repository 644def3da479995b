"""First-order descent used as an independent oracle for the closed-form solvers.

Accelerated projected gradient with backtracking and adaptive restart. The
step is accepted once the local Lipschitz estimate
``||grad(x+) - grad(y)|| <= ||x+ - y|| / step`` holds; for quadratics this
implies the usual sufficient-decrease bound but, unlike a test on function
values, stays reliable when gradients are near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["DescentResult", "minimize_descent"]


@dataclass(frozen=True)
class DescentResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool


def minimize_descent(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0,
    *,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    tol: float = 1e-12,
    max_iter: int = 10**6,
    step: float = 1.0,
    accelerated: bool = True,
    max_backtracks: int = 60,
) -> DescentResult:
    """Minimize ``fun`` from ``x0`` until ``||grad|| <= tol`` or ``max_iter``.

    With ``project`` given, the stopping test uses the projected-gradient
    mapping ``(x - project(x - step*g)) / step`` instead of the raw gradient.
    """
    proj = project if project is not None else (lambda v: v)
    x = proj(np.array(x0, dtype=float))
    y = x.copy()
    gx = grad(x)
    gy = gx
    theta = 1.0
    t = float(step)

    def stationarity(v, g):
        if project is None:
            return float(np.linalg.norm(g))
        return float(np.linalg.norm(v - proj(v - t * g)) / t)

    gnorm = stationarity(x, gx)
    it = 0
    while gnorm > tol and it < max_iter:
        it += 1
        for _ in range(max_backtracks):
            x_new = proj(y - t * gy)
            g_new = grad(x_new)
            d = x_new - y
            dn = np.linalg.norm(d)
            if dn == 0.0 or t * np.linalg.norm(g_new - gy) <= dn:
                break
            t *= 0.5
        if accelerated:
            # restart momentum when it points uphill
            if np.dot(gy, x_new - x) > 0:
                theta = 1.0
            theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta**2))
            y = x_new + ((theta - 1.0) / theta_new) * (x_new - x)
            y = proj(y)
            theta = theta_new
            gy = grad(y)
        else:
            y = x_new
            gy = g_new
        x, gx = x_new, g_new
        gnorm = stationarity(x, gx)
        t *= 1.25
    return DescentResult(x, float(fun(x)), gnorm, it, gnorm <= tol)
