"""Sample-error confidence bound, covering numbers and equilibrium constants.

The confidence that the combined deviation of the empirical minimizer is at
most ``epsilon`` is bounded below by

    1 - N(H, epsilon / (8 (3M + 2Mp)))
          * exp(-(m epsilon / (32 (M^2 + Mp^2))) * (M / (3M + 2Mp))^2)

with ``M`` an a.e. bound on ``|f - y|`` and ``Mp`` on ``|f - P - mean(f - P)|``.
``N`` is estimated by the volumetric cover of a radius-``R`` ball in the
effective dimension of the Gram matrix.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import QuadratureNodes, SyntheticTask, evaluate_checked, quadrature_nodes, sample_dataset
from .interp_metric import weighted_metric
from .kernel import KernelSpec, gram_matrix
from .solver import FitConfig, PopulationProblem, fit_interpretable

__all__ = [
    "BoundInputs",
    "SampleErrorBound",
    "EquilibriumResult",
    "MonteCarloResult",
    "covering_number_ball",
    "log_covering_number_ball",
    "effective_dimension",
    "sample_error_confidence",
    "invert_bound_for_epsilon",
    "equilibrium_constants",
    "monte_carlo_validate_bound",
    "BOUND_CSV_FIELDS",
    "MC_CSV_FIELDS",
]

BOUND_CSV_FIELDS = ("m", "epsilon", "M", "Mp", "d", "R", "raw", "clamped", "vacuous")
MC_CSV_FIELDS = ("trials", "violation_freq", "consistent")
EIGEN_TOL = 1e-10


@dataclass(frozen=True)
class BoundInputs:
    m: int
    epsilon: float
    big_m: float
    m_p: float
    covering_dim: int
    radius_R: float
    delta: float = 0.05

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not (self.epsilon > 0 and self.big_m > 0 and self.m_p >= 0 and self.radius_R > 0):
            raise ValueError("need epsilon > 0, M > 0, Mp >= 0 and R > 0")
        if self.covering_dim < 1:
            raise ValueError(f"covering dimension must be >= 1, got {self.covering_dim}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    def with_(self, **changes) -> "BoundInputs":
        fields = dict(
            m=self.m, epsilon=self.epsilon, big_m=self.big_m, m_p=self.m_p,
            covering_dim=self.covering_dim, radius_R=self.radius_R, delta=self.delta,
        )
        fields.update(changes)
        return BoundInputs(**fields)


@dataclass(frozen=True)
class SampleErrorBound:
    raw: float
    clamped: float
    vacuous: bool
    inputs: BoundInputs

    def csv_row(self) -> dict:
        i = self.inputs
        return {
            "m": i.m,
            "epsilon": repr(i.epsilon),
            "M": repr(i.big_m),
            "Mp": repr(i.m_p),
            "d": i.covering_dim,
            "R": repr(i.radius_R),
            "raw": repr(self.raw),
            "clamped": repr(self.clamped),
            "vacuous": str(self.vacuous).lower(),
        }


@dataclass(frozen=True)
class EquilibriumResult:
    m_star: float
    r_star: float
    discriminant: float
    feasible: bool
    warning: bool


@dataclass(frozen=True)
class MonteCarloResult:
    trials: int
    violations: int
    violation_freq: float
    bound: SampleErrorBound
    consistent: bool
    failures: int
    deviations: np.ndarray

    @property
    def bound_raw(self) -> float:
        return self.bound.raw

    def csv_row(self) -> dict:
        return {
            "trials": self.trials,
            "violation_freq": repr(self.violation_freq),
            "consistent": str(self.consistent).lower(),
        }


def log_covering_number_ball(d: int, radius: float, eta: float) -> float:
    if not (eta > 0 and radius > 0 and d >= 1):
        raise ValueError("need eta > 0, radius > 0 and d >= 1")
    return d * math.log1p(2.0 * radius / eta)


def covering_number_ball(d: int, radius: float, eta: float) -> float:
    """Volumetric bound ``(2 radius / eta + 1)^d`` on the ``eta``-covering number of a ball."""
    return math.exp(log_covering_number_ball(d, radius, eta))


def effective_dimension(kernel: KernelSpec, points, tol: float = EIGEN_TOL) -> int:
    """Number of Gram-matrix eigenvalues above ``tol`` (at least 1)."""
    k = gram_matrix(kernel, points, "none").entries
    return max(int(np.sum(np.linalg.eigvalsh(k) > tol)), 1)


def _log_failure(inputs: BoundInputs) -> float:
    big_m, m_p, eps = inputs.big_m, inputs.m_p, inputs.epsilon
    scale = 3.0 * big_m + 2.0 * m_p
    eta = eps / (8.0 * scale)
    expo = (inputs.m * eps / (32.0 * (big_m**2 + m_p**2))) * (big_m / scale) ** 2
    return log_covering_number_ball(inputs.covering_dim, inputs.radius_R, eta) - expo


def sample_error_confidence(inputs: BoundInputs) -> SampleErrorBound:
    """Lower bound on the probability that the combined deviation is at most epsilon."""
    log_fail = _log_failure(inputs)
    raw = -math.inf if log_fail > 709.0 else -math.expm1(log_fail)
    return SampleErrorBound(raw, max(raw, 0.0), raw <= 0.0, inputs)


def invert_bound_for_epsilon(
    m: int, delta: float, big_m: float, m_p: float, d: int, radius: float,
    lo: float = 1e-12, hi: float = 1e12,
) -> float:
    """Smallest epsilon whose confidence is at least ``1 - delta``; ``inf`` if none in ``[lo, hi]``."""
    base = BoundInputs(m, 1.0, big_m, m_p, d, radius, delta)
    target = 1.0 - delta

    def conf(eps):
        return sample_error_confidence(base.with_(epsilon=eps)).raw

    if conf(hi) < target:
        return math.inf
    if conf(lo) >= target:
        return lo
    for _ in range(400):
        mid = math.sqrt(lo * hi)
        c = conf(mid)
        if c >= target:
            hi = mid
            if c <= target + 1e-9:
                break
        else:
            lo = mid
        if hi / lo - 1.0 < 1e-15:
            break
    return hi


def equilibrium_constants(m_p: float, f_sup: float, j_norm: float) -> EquilibriumResult:
    """Equilibrium bound ``M*`` and radius ``R*`` from the printed closed form.

    ``warning`` flags ``M* <= 0``, which cannot be an a.e. bound on ``|f - y|``.
    """
    if not (np.isfinite(m_p) and np.isfinite(f_sup) and m_p >= 0 and f_sup >= 0):
        raise ValueError("m_p and f_sup must be finite and >= 0")
    if not (np.isfinite(j_norm) and j_norm > 0):
        raise ValueError("j_norm must be finite and > 0")
    s = m_p + f_sup
    disc = s * s - 24.0 * m_p * m_p
    if disc < 0:
        return EquilibriumResult(math.nan, math.nan, disc, False, True)
    m_star = (-s + math.sqrt(disc)) / 4.0
    r_star = (m_star - m_p - f_sup) / j_norm
    return EquilibriumResult(m_star, r_star, disc, True, m_star <= 0)


# -- Monte Carlo validation ---------------------------------------------------


def _trial(task, kernel, config, m, seed, nodes):
    data = sample_dataset(task, m, seed)
    fit = fit_interpretable(data, task.prior, kernel, config)
    h = fit.hypothesis
    resid = h(data.xs) - data.ys
    d = h(data.xs) - task.prior(data.xs)
    big_m = float(np.max(np.abs(resid)))
    m_p = float(np.max(np.abs(d - d.mean())))
    values = evaluate_checked(h, nodes.points, "f_z")
    return values, fit.rkhs_norm_sq, big_m, m_p


def _errors(values, targets, prior_values, nodes, noise_var):
    gen = nodes.integrate((values - targets) ** 2) + noise_var
    return gen, weighted_metric(values, prior_values, nodes.weights).variance


def monte_carlo_validate_bound(
    task: SyntheticTask,
    kernel: KernelSpec,
    fit_config: FitConfig,
    m: int,
    epsilon: float,
    trials: int,
    seed: int,
    nodes: QuadratureNodes | None = None,
    jobs: int = 1,
) -> MonteCarloResult:
    """Empirical frequency of ``|E_P(f_z) - E_P(f_H)| + |E(f_z) - E(f_H)| > epsilon``.

    ``f_H`` minimizes the population objective over the RKHS ball whose radius
    ``R`` is the largest norm among the fits and the population fit, so every
    ``f_z`` lies in the class. ``M`` and ``Mp`` are the largest observed
    ``|f_z - y|`` and ``|f_z - P - mean|``; ``d`` is the effective Gram
    dimension on the quadrature nodes.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    if nodes is None:
        nodes = quadrature_nodes(task.input_dist, 200)
    seeds = [int(np.random.SeedSequence([seed, i]).generate_state(1)[0]) for i in range(trials)]

    def run(s):
        try:
            return _trial(task, kernel, fit_config, m, s, nodes)
        except (np.linalg.LinAlgError, ValueError, ArithmeticError):
            return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    ok = [r for r in results if r is not None]
    failures = len(results) - len(ok)
    if not ok:
        raise RuntimeError("every Monte Carlo fit failed")

    population = PopulationProblem(task, kernel, nodes, fit_config.tau)
    radius = math.sqrt(max(max(r[1] for r in ok), population.fit(fit_config.lam)[1]))
    f_h = population.minimizer(fit_config.lam, radius=radius)
    targets = evaluate_checked(task.f_rho, nodes.points, "f_rho")
    prior_values = evaluate_checked(task.prior, nodes.points, "prior")
    gen_h, var_h = _errors(f_h(nodes.points), targets, prior_values, nodes, task.noise_variance)
    deviations = np.array([
        abs(var - var_h) + abs(gen - gen_h)
        for gen, var in (_errors(r[0], targets, prior_values, nodes, task.noise_variance) for r in ok)
    ])
    violations = int(np.sum(deviations > epsilon))
    freq = violations / len(ok)

    inputs = BoundInputs(
        m=m,
        epsilon=epsilon,
        big_m=max(max(r[2] for r in ok), np.finfo(float).tiny),
        m_p=max(r[3] for r in ok),
        covering_dim=effective_dimension(kernel, nodes.points),
        radius_R=max(radius, np.finfo(float).tiny),
    )
    bound = sample_error_confidence(inputs)
    slack = 2.0 * math.sqrt(freq * (1.0 - freq) / len(ok))
    consistent = bound.vacuous or freq <= (1.0 - bound.clamped) + slack
    return MonteCarloResult(len(ok), violations, freq, bound, consistent, failures, deviations)
