import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from interpreg.kernel import (
    ConditioningError,
    Hypothesis,
    KernelSpec,
    cholesky_with_jitter,
    evaluate,
    gram_matrix,
    parse_kernel,
    rkhs_norm_sq,
)

KERNELS = [KernelSpec.gaussian(0.7), KernelSpec.poly(3, 1.0), KernelSpec.linear()]


def naive_kernel(kernel, x, y):
    if kernel.kind == "gaussian":
        return np.exp(-np.sum((x - y) ** 2) / (2 * kernel.width**2))
    if kernel.kind == "poly":
        return (np.dot(x, y) + kernel.offset) ** kernel.degree
    return np.dot(x, y)


def test_gaussian_single_point():
    g = gram_matrix(KernelSpec.gaussian(0.3), [[0.2, 0.9]])
    np.testing.assert_array_equal(g.entries, [[1.0]])
    assert g.jitter == 0.0


@pytest.mark.parametrize("kernel", KERNELS)
def test_duplicate_points_need_jitter(kernel):
    pts = np.array([[0.4, -0.3], [0.4, -0.3]])
    g = gram_matrix(kernel, pts)
    assert np.linalg.matrix_rank(g.entries) == 1
    assert g.jitter > 0
    with pytest.raises(np.linalg.LinAlgError):
        np.linalg.cholesky(g.entries)


def test_conditioning_error():
    with pytest.raises(ConditioningError):
        cholesky_with_jitter(-np.eye(3))


def test_gaussian_gram_psd_50_points(rng):
    pts = rng.uniform(-2, 2, size=(50, 2))
    g = gram_matrix(KernelSpec.gaussian(1.0), pts, "none")
    assert np.linalg.eigvalsh(g.entries).min() >= -1e-10


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("n", [1, 3])
def test_gram_entries_symmetry_and_psd(kernel, n, rng):
    for _ in range(5):
        pts = rng.normal(size=(int(rng.integers(1, 40)), n))
        g = gram_matrix(kernel, pts, "none").entries
        assert np.max(np.abs(g - g.T)) <= 1e-12
        assert np.linalg.eigvalsh(g).min() >= -1e-10 * max(1.0, np.abs(g).max())
        i, j = rng.integers(pts.shape[0], size=2)
        assert g[i, j] == pytest.approx(naive_kernel(kernel, pts[i], pts[j]), rel=1e-12, abs=1e-12)


def test_rkhs_norm_zero_and_single_center():
    k = KernelSpec.gaussian(1.0)
    centers = np.array([[0.3]])
    assert rkhs_norm_sq(Hypothesis.zero(centers, k), gram_matrix(k, centers)) == 0.0
    h = Hypothesis([2.0], centers, k)
    assert rkhs_norm_sq(h, gram_matrix(k, centers)) == 4.0


@pytest.mark.parametrize("kernel", KERNELS)
def test_rkhs_norm_double_sum_oracle(kernel, rng):
    pts = rng.normal(size=(15, 2))
    c = rng.normal(size=15)
    g = gram_matrix(kernel, pts, "none")
    total = 0.0
    for i in range(15):
        for j in range(15):
            total += c[i] * c[j] * naive_kernel(kernel, pts[i], pts[j])
    assert rkhs_norm_sq(Hypothesis(c, pts, kernel), g) == pytest.approx(max(total, 0.0), abs=1e-10, rel=1e-12)


def test_rkhs_norm_dimension_mismatch():
    k = KernelSpec.linear()
    with pytest.raises(ValueError):
        rkhs_norm_sq(Hypothesis([1.0, 2.0], [[0.0], [1.0]], k), gram_matrix(k, [[0.0]], "none"))


@settings(max_examples=60, deadline=None)
@given(
    c=arrays(np.float64, 8, elements=st.floats(-5, 5)),
    pts=arrays(np.float64, (8, 2), elements=st.floats(-3, 3)),
)
def test_norm_nonnegative(c, pts):
    for kernel in KERNELS:
        g = gram_matrix(kernel, pts, "none")
        assert rkhs_norm_sq(Hypothesis(c, pts, kernel), g) >= 0.0


def test_evaluate_trivial():
    k = KernelSpec.gaussian(0.5)
    assert evaluate(Hypothesis.zero([[0.1], [0.2]], k), [0.7]) == 0.0
    assert evaluate(Hypothesis([1.0], [[0.3]], k), [0.3]) == 1.0


@pytest.mark.parametrize("kernel", KERNELS)
def test_evaluate_direct_sum_oracle(kernel, rng):
    centers = rng.normal(size=(12, 2))
    c = rng.normal(size=12)
    h = Hypothesis(c, centers, kernel)
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 7), np.linspace(-1, 1, 7)), -1).reshape(-1, 2)
    expected = np.array([sum(ci * naive_kernel(kernel, xi, x) for ci, xi in zip(c, centers)) for x in grid])
    np.testing.assert_allclose(evaluate(h, grid), expected, rtol=1e-12, atol=1e-12)


def test_evaluate_dimension_mismatch():
    h = Hypothesis([1.0], [[0.0, 0.0]], KernelSpec.linear())
    with pytest.raises(ValueError):
        evaluate(h, np.zeros((4, 3)))


@pytest.mark.parametrize(
    "text,expected",
    [
        ("gaussian:width=0.25", KernelSpec.gaussian(0.25)),
        ("poly:degree=3,offset=0.5", KernelSpec.poly(3, 0.5)),
        ("linear", KernelSpec.linear()),
    ],
)
def test_parse_kernel(text, expected):
    assert parse_kernel(text) == expected
    assert parse_kernel(str(expected)) == expected


@pytest.mark.parametrize("text", ["gaussian:width=-1", "poly:degree=0", "rbf", "gaussian:width"])
def test_parse_kernel_errors(text):
    with pytest.raises((ValueError, KeyError)):
        parse_kernel(text)
