"""Random instance generators shared by the test modules."""

import numpy as np

from interpreg.core import Dataset, InputMeasure, PriorModel, SyntheticTask, sample_dataset
from interpreg.functions import Polynomial, Sinusoid, Sum
from interpreg.kernel import KernelSpec


def random_function(rng, n):
    direction = tuple(rng.normal(size=n) / np.sqrt(n))
    return Sum((
        Sinusoid(
            amplitude=rng.uniform(0.3, 1.5),
            frequency=rng.uniform(0.3, 1.5),
            phase=rng.uniform(0, 2 * np.pi),
            direction=direction,
        ),
        Polynomial(tuple(rng.normal(size=3) * 0.5), direction=tuple(rng.normal(size=n))),
    ))


def random_task(rng, n, noise_sigma=None):
    sigma = rng.uniform(0.0, 0.3) if noise_sigma is None else noise_sigma
    return SyntheticTask(
        random_function(rng, n),
        PriorModel(random_function(rng, n)),
        sigma,
        InputMeasure.uniform([0.0] * n, [1.0] * n),
    )


def well_conditioned_width(xs, floor=1e-2):
    """Largest gaussian width (from a shrinking ladder) whose Gram matrix has min eigenvalue >= floor."""
    m, n = xs.shape
    width = 0.5 * m ** (-1.0 / n)
    while True:
        k = KernelSpec.gaussian(width)(xs, xs)
        if np.linalg.eigvalsh(k)[0] >= floor:
            return width
        width *= 0.8


def random_problem(rng, m_range=(10, 60), n_choices=(1, 2, 3)):
    """(task, dataset, kernel) with a well-conditioned gaussian Gram matrix."""
    n = int(rng.choice(n_choices))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    task = random_task(rng, n)
    data = sample_dataset(task, m, int(rng.integers(2**31)))
    kernel = KernelSpec.gaussian(well_conditioned_width(data.xs))
    return task, data, kernel


def central_difference_gradient(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def dataset_from(xs, ys):
    return Dataset(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
