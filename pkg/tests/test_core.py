import numpy as np
import pytest

from interpreg.core import (
    ConfigError,
    Dataset,
    EvaluationError,
    InputMeasure,
    PriorModel,
    SyntheticTask,
    quadrature_nodes,
    sample_dataset,
    task_from_config,
)
from interpreg.functions import Constant, Lambda, Polynomial, function_from_config


def make_task(f=None, sigma=0.0, n=1):
    return SyntheticTask(
        f or Polynomial((0.0, 1.0, -2.0)),
        PriorModel(Constant(0.0)),
        sigma,
        InputMeasure.uniform([0.0] * n, [1.0] * n),
    )


@pytest.mark.parametrize("m", [1, 7, 50])
@pytest.mark.parametrize("seed", [0, 3])
def test_zero_noise_targets_exact(m, seed):
    task = make_task(sigma=0.0)
    data = sample_dataset(task, m, seed)
    assert data.m == m
    np.testing.assert_array_equal(data.ys, task.f_rho(data.xs))


def test_single_sample_reproducible():
    task = make_task(sigma=0.5)
    a = sample_dataset(task, 1, 11)
    b = sample_dataset(task, 1, 11)
    assert a.m == 1
    np.testing.assert_array_equal(a.xs, b.xs)
    np.testing.assert_array_equal(a.ys, b.ys)
    assert 0.0 <= a.xs[0, 0] <= 1.0


def test_serialized_datasets_byte_identical(tmp_path):
    task = make_task(sigma=0.3, n=2)
    t1 = sample_dataset(task, 25, 5).to_csv(tmp_path / "a.csv")
    t2 = sample_dataset(task, 25, 5).to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert t1.splitlines()[0] == "x_0,x_1,y"
    back = Dataset.from_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back.ys, sample_dataset(task, 25, 5).ys)


def test_noise_mean_clt():
    task = make_task(f=Constant(0.0), sigma=1.0)
    data = sample_dataset(task, 10000, 123)
    assert abs(data.ys.mean()) <= 4 / np.sqrt(10000)


def test_different_seeds_differ():
    task = make_task(sigma=1.0)
    assert not np.array_equal(sample_dataset(task, 5, 1).ys, sample_dataset(task, 5, 2).ys)


def test_non_finite_target_names_point():
    task = make_task(f=Lambda(lambda x: np.where(x[:, 0] >= 0.0, np.nan, 0.0)))
    with pytest.raises(EvaluationError, match="x="):
        sample_dataset(task, 3, 0)


def test_invalid_m():
    with pytest.raises(ValueError):
        sample_dataset(make_task(), 0, 0)


def test_discrete_measure_sampling_stays_on_support():
    pts = np.array([[0.0], [0.5], [2.0]])
    task = SyntheticTask(Polynomial((1.0,)), PriorModel(Constant(0.0)), 0.0,
                         InputMeasure.discrete(pts, [0.2, 0.0, 0.8]))
    data = sample_dataset(task, 200, 9)
    assert set(np.unique(data.xs)) <= {0.0, 2.0}


def test_midpoint_single_node():
    nodes = quadrature_nodes(InputMeasure.uniform([0.0], [1.0]), 1)
    assert len(nodes) == 1
    assert nodes.points[0, 0] == 0.5
    assert nodes.weights[0] == 1.0


def test_discrete_nodes_echo():
    pts = np.array([[0.1, 0.2], [0.3, 0.4], [0.9, 0.0]])
    w = np.array([0.25, 0.25, 0.5])
    nodes = quadrature_nodes(InputMeasure.discrete(pts, w), 17)
    np.testing.assert_array_equal(nodes.points, pts)
    np.testing.assert_array_equal(nodes.weights, w)


def test_midpoint_integral_of_x():
    nodes = quadrature_nodes(InputMeasure.uniform([0.0], [1.0]), 100)
    assert abs(nodes.integrate(nodes.points[:, 0]) - 0.5) <= 1e-3


@pytest.mark.parametrize("res,n", [(1, 1), (7, 1), (5, 2), (4, 3)])
def test_quadrature_weights_probability_vector(res, n):
    nodes = quadrature_nodes(InputMeasure.uniform([-1.0] * n, [2.0] * n), res)
    assert len(nodes) == res**n
    assert np.all(nodes.weights >= 0)
    assert abs(nodes.weights.sum() - 1.0) <= 1e-12
    assert np.all(nodes.weights == nodes.weights[0])


def test_quadrature_rejects_bad_resolution():
    with pytest.raises(ValueError):
        quadrature_nodes(InputMeasure.uniform([0.0], [1.0]), 0)


def test_measure_validation():
    with pytest.raises(ConfigError):
        InputMeasure.discrete([[0.0], [1.0]], [0.5, 0.6])
    with pytest.raises(ConfigError):
        InputMeasure.uniform([0.0], [0.0])
    with pytest.raises(ConfigError):
        make_task(sigma=-1.0)


def test_task_from_config_rejects_vector_outputs():
    cfg = {"f_rho": {"kind": "polynomial", "coeffs": [0, 1]}, "output_dim": 2}
    with pytest.raises(ConfigError, match="scalar"):
        task_from_config(cfg)


def test_task_from_config_roundtrip():
    cfg = {
        "f_rho": {"kind": "sinusoid", "amplitude": 2.0, "frequency": 0.5},
        "prior": {"kind": "piecewise_linear", "knots": [0, 1], "values": [0, 1]},
        "noise_sigma": 0.1,
        "input": {"kind": "uniform", "low": [0], "high": [1]},
    }
    task = task_from_config(cfg)
    x = np.array([[0.25]])
    np.testing.assert_allclose(task.f_rho(x), [2.0 * np.sin(np.pi * 0.25)])
    np.testing.assert_allclose(task.prior(x), [0.25])
    assert task.noise_variance == pytest.approx(0.01)


def test_catalog_functions():
    x = np.array([[0.0, 1.0], [1.0, 2.0]])
    poly = function_from_config({"kind": "polynomial", "coeffs": [1, 2, 3], "direction": [1, 1]})
    t = x.sum(axis=1)
    np.testing.assert_allclose(poly(x), 1 + 2 * t + 3 * t**2)
    tab = function_from_config({"kind": "tabulated", "axes": [[0, 1], [0, 2]], "values": [[0, 2], [1, 3]]})
    np.testing.assert_allclose(tab(np.array([[0.5, 1.0]])), [1.5])
    s = function_from_config({"kind": "sum", "terms": [1.5, {"kind": "constant", "value": 2}]})
    np.testing.assert_allclose(s(x), [3.5, 3.5])
    with pytest.raises(ValueError):
        function_from_config({"kind": "bogus"})
