"""Tikhonov and interpretability-regularized kernel least squares.

The interpretability-regularized objective over the RKHS is

    (1/m) sum (f(x_i) - y_i)^2 + lam ||f||_K^2
        + tau (1/m) sum (f(x_i) - P(x_i) - mean)^2

where ``mean`` is the sample mean of ``f - P`` (``mean_mode="signed"``) or
of ``|f - P|`` (``mean_mode="abs"``). Both depend on ``f`` only through its
sample values and norm, so the minimizer is ``f = sum_i c_i K(x_i, .)``.

With sample weights ``w`` (``1/m`` for a dataset, quadrature weights for a
population fit), ``W = diag(w)`` and the weighted centering ``C = I - 1 w^T``,
the signed-mode stationarity condition reduces to

    (K + lam S^{-1}) c = S^{-1} (W y + tau C^T W C p),   S = W + tau C^T W C,

a symmetric positive definite system whenever ``lam > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .core import Dataset, PriorModel, QuadratureNodes, SyntheticTask, evaluate_checked
from .interp_metric import weighted_metric
from .kernel import (
    GramMatrix,
    Hypothesis,
    KernelSpec,
    cholesky_with_jitter,
    gram_matrix,
    rkhs_norm_sq,
)
from .optim import minimize_descent

__all__ = [
    "FitConfig",
    "FitResult",
    "DecompositionReport",
    "fit_tikhonov",
    "fit_interpretable",
    "fit_weighted",
    "objective_value",
    "objective_gradient",
    "objective_terms",
    "class_minimizer",
    "PopulationProblem",
    "combined_error",
    "generalization_error",
    "error_decomposition",
    "decompose_fit",
    "FIT_CSV_FIELDS",
]

SPECTRAL_RTOL = 1e-12

FIT_CSV_FIELDS = (
    "lambda",
    "tau",
    "mean_mode",
    "objective",
    "rkhs_norm_sq",
    "empirical_risk",
    "interp_variance",
    "jitter",
    "converged",
)


@dataclass(frozen=True)
class FitConfig:
    lam: float
    tau: float = 1.0
    mean_mode: str = "signed"
    solver_mode: str = "closed_form"
    tol: float = 1e-12
    max_iter: int = 10**6

    def __post_init__(self):
        if not (self.lam >= 0 and self.tau >= 0):
            raise ValueError(f"lambda and tau must be >= 0, got {self.lam}, {self.tau}")
        if self.mean_mode not in ("signed", "abs"):
            raise ValueError(f"unknown mean_mode {self.mean_mode!r}")
        if self.solver_mode not in ("closed_form", "descent"):
            raise ValueError(f"unknown solver_mode {self.solver_mode!r}")
        if self.solver_mode == "closed_form" and self.mean_mode == "abs":
            raise ValueError("the abs mean mode has no closed form; use solver_mode='descent'")


@dataclass(frozen=True)
class FitResult:
    hypothesis: Hypothesis
    objective_value: float
    jitter_used: float
    iterations: int
    converged: bool
    grad_norm: float
    config: FitConfig
    rkhs_norm_sq: float
    empirical_risk: float
    interp_variance: float

    def csv_row(self) -> dict:
        return {
            "lambda": repr(self.config.lam),
            "tau": repr(self.config.tau),
            "mean_mode": self.config.mean_mode,
            "objective": repr(self.objective_value),
            "rkhs_norm_sq": repr(self.rkhs_norm_sq),
            "empirical_risk": repr(self.empirical_risk),
            "interp_variance": repr(self.interp_variance),
            "jitter": repr(self.jitter_used),
            "converged": str(self.converged).lower(),
        }


# -- objective ----------------------------------------------------------------


def _centered(d: np.ndarray, w: np.ndarray, mean_mode: str) -> np.ndarray:
    if mean_mode == "abs":
        return d - w @ np.abs(d)
    return d - w @ d


def _terms(k, c, y, p, w, lam, tau, mean_mode):
    f = k @ c
    risk = float(w @ (f - y) ** 2)
    norm = float(c @ k @ c)
    interp = float(w @ _centered(f - p, w, mean_mode) ** 2)
    return risk, lam * norm, tau * interp


def _gradient(k, c, y, p, w, lam, tau, mean_mode):
    f = k @ c
    d = f - p
    r = _centered(d, w, mean_mode)
    # gradient of sum_j w_j r_j^2 w.r.t. the sample values f
    if mean_mode == "abs":
        # subgradient of |d| taken as 0 at ties
        dr = w * r - (w @ r) * w * np.sign(d)
    else:
        dr = w * r - (w @ r) * w
    g_vals = 2.0 * w * (f - y) + 2.0 * tau * dr
    return k @ g_vals + 2.0 * lam * (k @ c)


def _check_h(h: Hypothesis, dataset: Dataset):
    if h.centers.shape != dataset.xs.shape:
        raise ValueError(
            f"hypothesis has {h.centers.shape[0]} centers of dim {h.centers.shape[1]}, "
            f"dataset has {dataset.m} points of dim {dataset.dim}"
        )


def objective_terms(h: Hypothesis, dataset: Dataset, prior, config: FitConfig) -> tuple[float, float, float]:
    """``(empirical risk, lam*||f||^2, tau*interp variance)`` at ``h``."""
    if h.centers.shape[1] != dataset.dim:
        raise ValueError(f"hypothesis dimension {h.centers.shape[1]} != dataset dimension {dataset.dim}")
    m = dataset.m
    f = np.asarray(h(dataset.xs), dtype=float).reshape(-1)
    p = evaluate_checked(prior, dataset.xs, "prior")
    w = np.full(m, 1.0 / m)
    risk = float(w @ (f - dataset.ys) ** 2)
    norm = rkhs_norm_sq(h, gram_matrix(h.kernel, h.centers, "none"))
    interp = float(w @ _centered(f - p, w, config.mean_mode) ** 2)
    return risk, config.lam * norm, config.tau * interp


def objective_value(h: Hypothesis, dataset: Dataset, prior, config: FitConfig) -> float:
    """Value of the configured three-term objective at ``h``."""
    return float(sum(objective_terms(h, dataset, prior, config)))


def objective_gradient(h: Hypothesis, dataset: Dataset, prior, config: FitConfig) -> np.ndarray:
    """Gradient of :func:`objective_value` with respect to ``h.coeffs``.

    Requires ``h`` to be centered on the dataset inputs.
    """
    _check_h(h, dataset)
    k = gram_matrix(h.kernel, h.centers, "none").entries
    p = evaluate_checked(prior, dataset.xs, "prior")
    w = np.full(dataset.m, 1.0 / dataset.m)
    return _gradient(k, h.coeffs, dataset.ys, p, w, config.lam, config.tau, config.mean_mode)


# -- fitting ------------------------------------------------------------------


def _solve_signed(k, y, p, w, lam, tau):
    """Closed-form signed-mode coefficients; returns ``(c, jitter)``."""
    n = k.shape[0]
    cmat = np.eye(n) - np.outer(np.ones(n), w)
    s = np.diag(w) + tau * (cmat.T * w) @ cmat
    rhs = w * y + tau * (cmat.T * w) @ (cmat @ p)
    if lam > 0:
        s_fac = la.cho_factor(s)
        s_inv = la.cho_solve(s_fac, np.eye(n))
        a = k + lam * 0.5 * (s_inv + s_inv.T)
        b = la.cho_solve(s_fac, rhs)
    else:
        # S K c = rhs; with K (jittered) invertible, solve S u = rhs then K c = u
        a = k
        b = la.cho_solve(la.cho_factor(s), rhs)
    factor, jitter = cholesky_with_jitter(a)
    c = la.cho_solve((factor, True), b)
    return c, jitter


def fit_weighted(
    points,
    ys,
    ps,
    weights,
    kernel: KernelSpec,
    config: FitConfig,
    *,
    x0=None,
) -> tuple[Hypothesis, float, int, bool, float, np.ndarray]:
    """Minimize the weighted objective over ``span{K(points_i, .)}``.

    Returns ``(hypothesis, jitter, iterations, converged, grad_norm, gram)``.
    Weights must be strictly positive.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(ys, dtype=float).reshape(-1)
    p = np.asarray(ps, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("fit weights must be strictly positive")
    k = gram_matrix(kernel, pts, "none").entries
    lam, tau, mode = config.lam, config.tau, config.mean_mode
    if config.solver_mode == "closed_form":
        c, jitter = _solve_signed(k, y, p, w, lam, tau)
        g = _gradient(k, c, y, p, w, lam, tau, mode)
        gnorm = float(np.linalg.norm(g))
        return Hypothesis(c, pts, kernel), jitter, 0, True, gnorm, k

    def fun(c):
        return sum(_terms(k, c, y, p, w, lam, tau, mode))

    def grad(c):
        return _gradient(k, c, y, p, w, lam, tau, mode)

    start = np.zeros(pts.shape[0]) if x0 is None else np.asarray(x0, dtype=float)
    res = minimize_descent(
        fun, grad, start, tol=config.tol, max_iter=config.max_iter, accelerated=(mode == "signed")
    )
    return Hypothesis(res.x, pts, kernel), 0.0, res.iterations, res.converged, res.grad_norm, k


def _result(h, k, dataset, p, config, jitter, iterations, converged, gnorm) -> FitResult:
    w = np.full(dataset.m, 1.0 / dataset.m)
    risk, reg, interp = _terms(k, h.coeffs, dataset.ys, p, w, config.lam, config.tau, config.mean_mode)
    norm = max(float(h.coeffs @ k @ h.coeffs), 0.0)
    variance = float(w @ _centered(k @ h.coeffs - p, w, config.mean_mode) ** 2)
    return FitResult(
        hypothesis=h,
        objective_value=risk + reg + interp,
        jitter_used=jitter,
        iterations=iterations,
        converged=converged,
        grad_norm=gnorm,
        config=config,
        rkhs_norm_sq=norm,
        empirical_risk=risk,
        interp_variance=variance,
    )


def fit_tikhonov(dataset: Dataset, kernel: KernelSpec, lam: float) -> FitResult:
    """Kernel ridge regression: solve ``(K + lam m I) c = y``."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    m = dataset.m
    k = gram_matrix(kernel, dataset.xs, "none").entries
    factor, jitter = cholesky_with_jitter(k + lam * m * np.eye(m))
    c = la.cho_solve((factor, True), dataset.ys)
    h = Hypothesis(c, dataset.xs, kernel)
    config = FitConfig(lam, 0.0)
    w = np.full(m, 1.0 / m)
    zeros = np.zeros(m)
    gnorm = float(np.linalg.norm(_gradient(k, c, dataset.ys, zeros, w, lam, 0.0, "signed")))
    return _result(h, k, dataset, zeros, config, jitter, 0, True, gnorm)


def fit_interpretable(dataset: Dataset, prior, kernel: KernelSpec, config: FitConfig, *, x0=None) -> FitResult:
    """Minimize the interpretability-regularized objective on ``dataset``.

    ``interp_variance`` on the result is the unweighted empirical variance of
    ``f - P`` at the fitted coefficients.
    """
    p = evaluate_checked(prior, dataset.xs, "prior")
    w = np.full(dataset.m, 1.0 / dataset.m)
    h, jitter, iterations, converged, gnorm, k = fit_weighted(
        dataset.xs, dataset.ys, p, w, kernel, config, x0=x0
    )
    return _result(h, k, dataset, p, config, jitter, iterations, converged, gnorm)


# -- population errors and decomposition --------------------------------------


@dataclass(frozen=True)
class DecompositionReport:
    total: float
    approx: float
    sample: float
    identity_residual: float
    generalization_error: float
    interp_variance: float
    minimizer_generalization_error: float
    minimizer_interp_variance: float
    tau: float = 1.0


def generalization_error(f, task: SyntheticTask, nodes: QuadratureNodes) -> float:
    """``int (f - f_rho)^2 d rho_X + sigma^2``: the expected squared loss under Gaussian noise."""
    fv = evaluate_checked(f, nodes.points, "f")
    tv = evaluate_checked(task.f_rho, nodes.points, "f_rho")
    return nodes.integrate((fv - tv) ** 2) + task.noise_variance


def combined_error(f, task: SyntheticTask, nodes: QuadratureNodes, tau: float = 1.0) -> tuple[float, float]:
    """``(generalization error, population interpretability variance)`` of ``f``."""
    gen = generalization_error(f, task, nodes)
    fv = evaluate_checked(f, nodes.points, "f")
    pv = evaluate_checked(task.prior, nodes.points, "prior")
    return gen, weighted_metric(fv, pv, nodes.weights).variance


def error_decomposition(
    f,
    task: SyntheticTask,
    hypothesis_class_minimizer,
    nodes: QuadratureNodes,
    tau: float = 1.0,
) -> DecompositionReport:
    """Split the combined error of ``f`` into approximation and sample parts.

    ``total = E(f) + tau E_P(f)``, ``approx`` is the same quantity for the
    class minimizer, and ``sample = [E(f) - E(f_H)] + tau [E_P(f) - E_P(f_H)]``.
    ``tau = 1`` gives the unweighted sum.
    """
    gen_f, var_f = combined_error(f, task, nodes)
    gen_h, var_h = combined_error(hypothesis_class_minimizer, task, nodes)
    total = gen_f + tau * var_f
    approx = gen_h + tau * var_h
    sample = (gen_f - gen_h) + tau * (var_f - var_h)
    return DecompositionReport(
        total=total,
        approx=approx,
        sample=sample,
        identity_residual=total - approx - sample,
        generalization_error=gen_f,
        interp_variance=var_f,
        minimizer_generalization_error=gen_h,
        minimizer_interp_variance=var_h,
        tau=tau,
    )


class PopulationProblem:
    """Penalized population fits on quadrature nodes for a fixed ``tau``.

    Precomputes the generalized eigendecomposition ``K v = theta S^{-1} v`` so
    the squared RKHS norm of the fit is a cheap function of the penalty, which
    makes the radius search in :meth:`minimizer` inexpensive.
    """

    def __init__(self, task: SyntheticTask, kernel: KernelSpec, nodes: QuadratureNodes, tau: float):
        keep = nodes.weights > 0
        self.points = nodes.points[keep]
        self.weights = nodes.weights[keep]
        self.kernel = kernel
        self.tau = float(tau)
        self.targets = evaluate_checked(task.f_rho, self.points, "f_rho")
        self.prior_values = evaluate_checked(task.prior, self.points, "prior")
        self._spectrum = None

    def fit(self, lam: float) -> tuple[Hypothesis, float]:
        config = FitConfig(lam, self.tau)
        h, *_, k = fit_weighted(self.points, self.targets, self.prior_values, self.weights, self.kernel, config)
        return h, max(float(h.coeffs @ k @ h.coeffs), 0.0)

    def _eig(self):
        if self._spectrum is None:
            n = self.points.shape[0]
            w = self.weights
            k = gram_matrix(self.kernel, self.points, "none").entries
            cmat = np.eye(n) - np.outer(np.ones(n), w)
            s = np.diag(w) + self.tau * (cmat.T * w) @ cmat
            rhs = w * self.targets + self.tau * (cmat.T * w) @ (cmat @ self.prior_values)
            s_fac = la.cho_factor(s)
            s_inv = la.cho_solve(s_fac, np.eye(n))
            theta, v = la.eigh(k, 0.5 * (s_inv + s_inv.T))
            # directions with round-off level theta lie in the null space of K
            keep = theta > SPECTRAL_RTOL * max(theta.max(), 0.0)
            self._spectrum = (theta[keep], v[:, keep], v[:, keep].T @ la.cho_solve(s_fac, rhs))
        return self._spectrum

    def norm_sq_estimate(self, lam: float) -> float:
        theta, _, proj = self._eig()
        return float(np.sum(theta * proj**2 / (theta + lam) ** 2))

    def spectral_fit(self, lam: float) -> Hypothesis:
        """Penalized fit from the cached spectrum; ``lam = 0`` gives the minimum-norm limit."""
        theta, v, proj = self._eig()
        return Hypothesis(v @ (proj / (theta + lam)), self.points, self.kernel)

    def minimizer(self, lam: float, radius: float | None = None) -> Hypothesis:
        h, norm_sq = self.fit(lam)
        if radius is None or norm_sq >= radius**2 or lam == 0:
            return h
        # small margin so round-off never leaves the target radius outside the ball
        target = radius**2 * (1.0 + 1e-10)
        if self.norm_sq_estimate(0.0) <= target:
            # the ball already contains the unpenalized minimizer
            return self.spectral_fit(0.0)
        lo, hi = lam, lam
        while self.norm_sq_estimate(lo) < target:
            hi, lo = lo, lo / 16.0
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if self.norm_sq_estimate(mid) >= target:
                lo = mid
            else:
                hi = mid
            if hi / lo - 1.0 < 1e-13:
                break
        return self.spectral_fit(lo)


def class_minimizer(
    task: SyntheticTask,
    kernel: KernelSpec,
    config: FitConfig,
    nodes: QuadratureNodes,
    radius: float | None = None,
) -> Hypothesis:
    """Best hypothesis for the population objective, computed on quadrature nodes.

    Without ``radius`` this is the penalized population fit at ``config.lam``
    and ``config.tau`` (the exact minimizer of ``E + tau E_P`` over the RKHS
    ball whose radius is its own norm). With ``radius`` the penalty is lowered
    until that ball has radius at least ``radius``.
    """
    return PopulationProblem(task, kernel, nodes, config.tau).minimizer(config.lam, radius)


def decompose_fit(
    dataset: Dataset,
    task: SyntheticTask,
    kernel: KernelSpec,
    config: FitConfig,
    nodes: QuadratureNodes,
    population: PopulationProblem | None = None,
) -> tuple[FitResult, DecompositionReport, Hypothesis]:
    """Fit on ``dataset`` and decompose against a class that contains the fit.

    The hypothesis class is the RKHS ball of radius ``max(||f_H||, ||f_z||)``
    where ``f_H`` is the population fit at the configured penalty, so the
    fitted function is always a member and the sample error is nonnegative.
    """
    fit = fit_interpretable(dataset, task.prior, kernel, config)
    if population is None:
        population = PopulationProblem(task, kernel, nodes, config.tau)
    minimizer = population.minimizer(config.lam, radius=math.sqrt(fit.rkhs_norm_sq))
    report = error_decomposition(fit.hypothesis, task, minimizer, nodes, config.tau)
    return fit, report, minimizer
