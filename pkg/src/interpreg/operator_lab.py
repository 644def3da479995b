"""Finite-dimensional realization of the compact-operator approximation bounds.

Functions live on ``N`` nodes in ``[0, 1]``. Coefficient vectors are taken in
a cosine-type basis that is orthonormal for the measure ``nu`` and whose first
element is the constant function, so Euclidean coefficient norms are
``L^2_nu`` norms. The strictly positive self-adjoint operator ``A`` is
diagonal in that basis with eigenvalues ``a_eigs``. The data measure ``rho``
(``weights``) enters through the centering operator
``L = I - e_0 w^T`` with ``w_k = int phi_k d rho``; when ``rho = nu`` it is
the orthogonal projector ``I - e_0 e_0^T``.

For the penalized functional

    F(b) = ||b - a||^2 + tau ||L (b - p)||^2 + gamma ||A^{-s} b||^2

the unique minimizer is ``(I + tau L*L + gamma A^{-2s})^{-1} (a + tau L*L p)``.
The bound evaluators take the printed right-hand sides literally, with the
factor ``(1 + tau L^2)`` read either as the operator ``(I + tau L*L)`` acting
inside the norm (``factor="operator"``, the default) or as the scalar
``1 + tau ||L||_op^2`` (``factor="scalar"``). Under the operator reading the
penalized bound holds componentwise in the eigenbasis of ``L*L``. The scalar
reading shrinks the constant component too much when ``tau`` is large and
the bound can then fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .optim import minimize_descent

__all__ = [
    "SpectralInstance",
    "SpectralReport",
    "cosine_basis",
    "centering_operator",
    "closed_form_minimizer",
    "functional_value",
    "bound_terms",
    "bound_rhs_eq7",
    "gamma_threshold_eq8",
    "bound_rhs_eq8",
    "d_nu_rho",
    "embedding_norm",
    "approx_error_bound_eq9",
    "gamma_threshold_eq9",
    "gamma_threshold_eq10",
    "sobolev_bound_eq10",
    "constrained_minimum",
    "random_instance",
    "verify_instance",
    "SPECTRAL_CSV_FIELDS",
]

SPECTRAL_CSV_FIELDS = ("N", "s", "r", "tau", "gamma", "functional", "bound_rhs", "holds")
HOLDS_SLACK = 1e-9


def _probability_vector(w, name="weights") -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must be a nonnegative vector summing to 1")
    return w


def cosine_basis(nodes, nu_weights) -> np.ndarray:
    """Node values (N x N) of a ``nu``-orthonormal basis built from ``cos(k pi x)``.

    Column 0 is the constant function 1. Needs strictly positive weights and
    distinct nodes.
    """
    x = np.asarray(nodes, dtype=float).reshape(-1)
    nu = _probability_vector(nu_weights, "nu_weights")
    if np.any(nu <= 0):
        raise ValueError("basis weights must be strictly positive")
    n = x.shape[0]
    feats = np.cos(np.pi * np.outer(x, np.arange(n)))
    sq = np.sqrt(nu)
    q, r = la.qr(sq[:, None] * feats)
    q = q * np.sign(np.diag(r))
    phi = q / sq[:, None]
    phi[:, 0] = 1.0
    return phi


@dataclass(frozen=True)
class SpectralInstance:
    """A truncated instance of the abstract Hilbert-space setting.

    ``weights`` is the data measure ``rho`` on the nodes; ``nu_weights``
    (default: ``weights``) is the measure the basis is orthonormal for.
    """

    a_eigs: np.ndarray
    weights: np.ndarray
    a_vec: np.ndarray
    p_vec: np.ndarray
    s: float
    r: float
    tau: float
    gamma: float
    radius_R: float
    nu_weights: np.ndarray | None = None
    nodes: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        eigs = np.asarray(self.a_eigs, dtype=float).reshape(-1)
        n = eigs.shape[0]
        if n == 0 or np.any(eigs <= 0) or np.any(np.diff(eigs) > 0):
            raise ValueError("a_eigs must be strictly positive and nonincreasing")
        if not (0 < self.r <= self.s):
            raise ValueError(f"need 0 < r <= s, got r={self.r}, s={self.s}")
        if self.tau < 0 or self.gamma < 0 or self.radius_R <= 0:
            raise ValueError("need tau >= 0, gamma >= 0 and radius_R > 0")
        w = _probability_vector(self.weights)
        nu = w if self.nu_weights is None else _probability_vector(self.nu_weights, "nu_weights")
        nodes = (np.arange(n) + 0.5) / n if self.nodes is None else np.asarray(self.nodes, dtype=float)
        a = np.asarray(self.a_vec, dtype=float).reshape(-1)
        p = np.asarray(self.p_vec, dtype=float).reshape(-1)
        if not (w.shape[0] == nu.shape[0] == nodes.shape[0] == a.shape[0] == p.shape[0] == n):
            raise ValueError("all SpectralInstance vectors must have length N = len(a_eigs)")
        for name, value in (("a_eigs", eigs), ("weights", w), ("nu_weights", nu), ("nodes", nodes),
                            ("a_vec", a), ("p_vec", p)):
            value = value.copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.a_eigs.shape[0]

    def basis(self) -> np.ndarray:
        if "basis" not in self._cache:
            self._cache["basis"] = cosine_basis(self.nodes, self.nu_weights)
        return self._cache["basis"]

    def centering(self) -> np.ndarray:
        if "centering" not in self._cache:
            self._cache["centering"] = centering_operator(self.weights, self.basis())
        return self._cache["centering"]

    def a_power(self, power: float) -> np.ndarray:
        """Diagonal of ``A**power``."""
        return self.a_eigs**power

    def with_(self, **changes) -> "SpectralInstance":
        fields = dict(
            a_eigs=self.a_eigs, weights=self.weights, a_vec=self.a_vec, p_vec=self.p_vec,
            s=self.s, r=self.r, tau=self.tau, gamma=self.gamma, radius_R=self.radius_R,
            nu_weights=self.nu_weights, nodes=self.nodes,
        )
        fields.update(changes)
        return SpectralInstance(**fields)

    def coefficients(self, fn) -> np.ndarray:
        """Coefficients of a callable ``fn(points) -> values`` evaluated at the nodes."""
        values = np.asarray(fn(self.nodes.reshape(-1, 1)), dtype=float).reshape(-1)
        return la.solve(self.basis(), values)


@dataclass(frozen=True)
class SpectralReport:
    b_hat: np.ndarray
    functional_at_bhat: float
    bound_rhs: float
    gamma_threshold: float
    bound_holds: bool
    instance: SpectralInstance | None = None

    def csv_row(self) -> dict:
        inst = self.instance
        return {
            "N": inst.dim,
            "s": repr(inst.s),
            "r": repr(inst.r),
            "tau": repr(inst.tau),
            "gamma": repr(inst.gamma),
            "functional": repr(self.functional_at_bhat),
            "bound_rhs": repr(self.bound_rhs),
            "holds": str(self.bound_holds).lower(),
        }


def centering_operator(weights, basis: np.ndarray | None = None) -> np.ndarray:
    """Matrix of ``v -> v - (int v d rho) 1``.

    With ``basis=None`` it acts on node values: ``I - 1 w^T``. With the node
    values of a basis whose first column is constant it acts on coefficients:
    ``I - e_0 (basis^T w)^T``.
    """
    w = _probability_vector(weights)
    n = w.shape[0]
    if basis is None:
        return np.eye(n) - np.outer(np.ones(n), w)
    phi = np.asarray(basis, dtype=float)
    if phi.shape != (n, n):
        raise ValueError(f"basis must be {n}x{n}")
    const = la.solve(phi, np.ones(n))
    return np.eye(n) - np.outer(const, phi.T @ w)


def _system(inst: SpectralInstance, gamma: float | None = None):
    g = inst.gamma if gamma is None else gamma
    lc = inst.centering()
    lsq = lc.T @ lc
    reg = g * inst.a_power(-2.0 * inst.s)
    return np.eye(inst.dim) + inst.tau * lsq + np.diag(reg), lsq, reg


def closed_form_minimizer(inst: SpectralInstance, a=None, p=None) -> np.ndarray:
    """Unique minimizer of the penalized functional by a direct linear solve."""
    a = inst.a_vec if a is None else np.asarray(a, dtype=float)
    p = inst.p_vec if p is None else np.asarray(p, dtype=float)
    if inst.gamma <= 0 and inst.tau == 0:
        return a.copy()
    m, lsq, _ = _system(inst)
    rhs = a + inst.tau * lsq @ p
    b = la.solve(m, rhs, assume_a="pos")
    resid = np.linalg.norm(m @ b - rhs)
    if resid > 1e-10 * max(1.0, np.linalg.norm(rhs)):
        raise np.linalg.LinAlgError(f"linear solve residual {resid:.3e} too large")
    return b


def functional_value(b, inst: SpectralInstance, a=None, p=None) -> float:
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != inst.dim:
        raise ValueError(f"b has length {b.shape[0]}, instance has N={inst.dim}")
    a = inst.a_vec if a is None else a
    p = inst.p_vec if p is None else p
    lc = inst.centering()
    fit = np.sum((b - a) ** 2)
    interp = np.sum((lc @ (b - p)) ** 2)
    smooth = np.sum((inst.a_power(-inst.s) * b) ** 2)
    return float(fit + inst.tau * interp + inst.gamma * smooth)


def _constant(r: float, s: float) -> float:
    if r == s:
        return math.inf
    return ((r + s) / (s - r)) ** ((r + s) / s)


def _smoothness_mass(inst: SpectralInstance, a, p, factor: str) -> float:
    """``||A^{-r}(a + tau L*L p)||^2`` with the ``(1 + tau L^2)^{-(r+s)/s}`` factor applied."""
    lc = inst.centering()
    lsq = lc.T @ lc
    v = inst.a_power(-inst.r) * (a + inst.tau * lsq @ p)
    expo = -(inst.r + inst.s) / inst.s
    if factor == "scalar":
        op_norm = np.linalg.norm(lc, 2)
        return float((1.0 + inst.tau * op_norm**2) ** expo * (v @ v))
    if factor == "operator":
        evals, evecs = la.eigh(np.eye(inst.dim) + inst.tau * lsq)
        root = evecs @ np.diag(evals ** (0.5 * expo)) @ evecs.T
        u = root @ v
        return float(u @ u)
    raise ValueError(f"unknown factor reading {factor!r}")


def bound_terms(inst: SpectralInstance, a=None, p=None, factor: str = "operator") -> tuple[float, float, float]:
    """The three right-hand-side terms of the penalized bound, as printed."""
    a = inst.a_vec if a is None else np.asarray(a, dtype=float)
    p = inst.p_vec if p is None else np.asarray(p, dtype=float)
    m, lsq, reg = _system(inst)
    tau = inst.tau
    first = la.solve(m, tau * lsq @ p - (tau * lsq @ a + reg * a), assume_a="pos")
    second = inst.centering() @ la.solve(m, a - (p + reg * p), assume_a="pos")
    t1 = float(first @ first)
    t2 = float(tau * (second @ second))
    mass = _smoothness_mass(inst, a, p, factor)
    if mass == 0.0:
        t3 = 0.0
    else:
        t3 = _constant(inst.r, inst.s) * inst.gamma ** (inst.r / inst.s) * mass
    return t1, t2, t3


def bound_rhs_eq7(inst: SpectralInstance, factor: str = "operator") -> float:
    """Upper bound on the minimum of the penalized functional; ``inf`` when ``r == s``."""
    return float(sum(bound_terms(inst, factor=factor)))


def bound_rhs_eq8(inst: SpectralInstance, a=None, p=None) -> float:
    """Two-term bound on the ball-constrained minimum, evaluated at ``inst.gamma``."""
    t1, t2, _ = bound_terms(inst, a, p)
    return t1 + t2


def _threshold(inst, a, p, radius, extra, factor):
    r, s = inst.r, inst.s
    if not r < s:
        raise ValueError(f"the gamma threshold needs r < s strictly (r={r}, s={s})")
    mass = _smoothness_mass(inst, a, p, factor)
    if mass == 0.0:
        return 0.0
    # (r+s)^k (s-r)^-k R^(-2s/(s-r)) extra mass^(s/(s-r)), assembled in log space
    k = (r + s) / (s - r)
    log_t = (
        k * math.log((r + s) / (s - r))
        - 2 * s / (s - r) * math.log(radius)
        + math.log(extra)
        + s / (s - r) * math.log(mass)
    )
    return math.exp(log_t) if log_t < 709.0 else math.inf


def gamma_threshold_eq8(inst: SpectralInstance, factor: str = "operator") -> float:
    """Printed gamma threshold for the ball-constrained bound (requires ``r < s``)."""
    return _threshold(inst, inst.a_vec, inst.p_vec, inst.radius_R, 1.0, factor)


def d_nu_rho(inst: SpectralInstance) -> float:
    """Norm of the identity map ``L^2_nu -> L^2_rho`` on the nodes (1 when ``nu = rho``)."""
    if np.array_equal(inst.nu_weights, inst.weights):
        return 1.0
    return float(np.sqrt(np.max(inst.weights / inst.nu_weights)))


def embedding_norm(inst: SpectralInstance) -> float:
    """Largest singular value of ``b -> values`` from the ``||A^{-s} b||`` space into ``L^2_rho``."""
    m = np.sqrt(inst.weights)[:, None] * inst.basis() * inst.a_power(inst.s)[None, :]
    return float(np.linalg.norm(m, 2))


def approx_error_bound_eq9(inst: SpectralInstance, f_rho_vec, p_vec, sigma_sq: float, d: float | None = None) -> float:
    """Approximation-error bound ``D^2 (T1 + T2) + sigma^2`` at ``inst.gamma``."""
    if sigma_sq < 0:
        raise ValueError("sigma_sq must be >= 0")
    d = d_nu_rho(inst) if d is None else d
    if not d > 0:
        raise ValueError("d_nu_rho must be > 0")
    t1, t2, _ = bound_terms(inst, f_rho_vec, p_vec)
    return d**2 * (t1 + t2) + sigma_sq


def gamma_threshold_eq9(inst: SpectralInstance, f_rho_vec, p_vec, d: float | None = None, factor: str = "operator") -> float:
    d = d_nu_rho(inst) if d is None else d
    return _threshold(inst, np.asarray(f_rho_vec, float), np.asarray(p_vec, float), inst.radius_R, d**2, factor)


def gamma_threshold_eq10(
    inst: SpectralInstance, f_rho_vec, p_vec, c_const: float, d: float | None = None, factor: str = "operator"
) -> float:
    """Threshold with the ball radius replaced by ``R * C`` for a smoothness-space constant ``C``."""
    if c_const is None or not c_const > 0:
        raise ValueError("c_const must be supplied and > 0")
    d = d_nu_rho(inst) if d is None else d
    return _threshold(
        inst, np.asarray(f_rho_vec, float), np.asarray(p_vec, float), inst.radius_R * c_const, d**2, factor
    )


def sobolev_bound_eq10(inst: SpectralInstance, f_rho_vec, p_vec, sigma_sq: float, d: float | None, c_const: float) -> float:
    """Same right-hand side as :func:`approx_error_bound_eq9`; ``c_const`` only moves the gamma threshold."""
    if c_const is None or not c_const > 0:
        raise ValueError("c_const must be supplied and > 0")
    return approx_error_bound_eq9(inst, f_rho_vec, p_vec, sigma_sq, d)


def _rho_gram(inst: SpectralInstance) -> np.ndarray:
    phi = inst.basis()
    return phi.T @ (inst.weights[:, None] * phi)


def constrained_minimum(
    inst: SpectralInstance,
    a=None,
    p=None,
    norm: str = "nu",
    tol: float = 1e-11,
) -> tuple[np.ndarray, float]:
    """Minimize ``||b - a||^2 + tau ||L(b - p)||^2`` over ``||A^{-s} b|| <= R`` by penalty descent.

    The squared norms are in ``L^2_nu`` (``norm="nu"``) or ``L^2_rho``
    (``norm="rho"``). An escalating penalty ``mu (||A^{-s} b||^2 - R^2)_+^2``
    is minimized by accelerated gradient descent; the last iterate is scaled
    onto the ball, so the returned value is attained by a feasible point.
    """
    a = inst.a_vec if a is None else np.asarray(a, dtype=float)
    p = inst.p_vec if p is None else np.asarray(p, dtype=float)
    metric = np.eye(inst.dim) if norm == "nu" else _rho_gram(inst)
    lc = inst.centering()
    h_interp = lc.T @ metric @ lc
    sm = inst.a_power(-2.0 * inst.s)
    r2 = inst.radius_R**2
    tau = inst.tau

    def objective(b):
        d = b - a
        e = b - p
        return float(d @ metric @ d + tau * e @ h_interp @ e)

    def objective_grad(b):
        return 2.0 * metric @ (b - a) + 2.0 * tau * h_interp @ (b - p)

    def feasible(b):
        q = float(b @ (sm * b))
        return b if q <= r2 else b * math.sqrt(r2 / q)

    b = np.zeros(inst.dim)
    mu = 1.0
    best = None
    for _ in range(40):
        def fun(v, mu=mu):
            excess = max(float(v @ (sm * v)) - r2, 0.0)
            return objective(v) + mu * excess**2

        def grad(v, mu=mu):
            excess = max(float(v @ (sm * v)) - r2, 0.0)
            return objective_grad(v) + 4.0 * mu * excess * (sm * v)

        res = minimize_descent(fun, grad, b, tol=tol * max(1.0, mu), max_iter=200000)
        b = res.x
        cand = feasible(b)
        val = objective(cand)
        if best is None or val < best[1]:
            best = (cand, val)
        excess = float(b @ (sm * b)) - r2
        if excess <= 1e-12 * max(1.0, r2):
            break
        mu *= 10.0
    return best


def random_instance(
    rng: np.random.Generator,
    max_dim: int = 16,
    max_condition: float = 1e4,
    distinct_measures: bool = False,
    strict: bool = False,
) -> SpectralInstance:
    """Draw a random instance whose linear system has condition number <= ``max_condition``.

    ``strict`` forces ``r < s``; ``distinct_measures`` draws ``nu != rho``.
    """
    while True:
        n = int(rng.integers(2, max_dim + 1))
        alpha = rng.uniform(0.5, 1.5)
        eigs = (np.arange(n) + 1.0) ** (-alpha)
        s = rng.uniform(0.25, 1.5)
        r = s * (rng.uniform(0.05, 0.95) if strict else rng.uniform(0.05, 1.0))
        tau = float(rng.choice([0.0, rng.uniform(0.0, 5.0)]))
        gamma = 10 ** rng.uniform(-4, 0)
        weights = rng.dirichlet(np.ones(n))
        nu = rng.dirichlet(np.ones(n)) if distinct_measures else None
        if np.any(weights < 1e-6) or (nu is not None and np.any(nu < 1e-6)):
            continue
        decay = (np.arange(n) + 1.0) ** (-rng.uniform(0.0, 1.5))
        a = rng.normal(size=n) * decay
        p = rng.normal(size=n) * decay
        inst = SpectralInstance(eigs, weights, a, p, s, r, tau, gamma, rng.uniform(0.2, 3.0), nu)
        m, _, _ = _system(inst)
        if np.linalg.cond(m) <= max_condition:
            return inst


def verify_instance(inst: SpectralInstance, factor: str = "operator") -> SpectralReport:
    """Closed-form minimum versus the penalized bound for one instance."""
    b = closed_form_minimizer(inst)
    value = functional_value(b, inst)
    rhs = bound_rhs_eq7(inst, factor)
    threshold = gamma_threshold_eq8(inst, factor) if inst.r < inst.s else math.nan
    return SpectralReport(b, value, rhs, threshold, bool(value <= rhs + HOLDS_SLACK), inst)
