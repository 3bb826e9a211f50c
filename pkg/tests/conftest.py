import numpy as np
import pytest

from dhsictest import ComponentData, GramStack, KernelSpec, Sample, gaussian_gram


def random_symmetric_stack(rng, n, d):
    """Random symmetric Gram stack with entries in (0, 1] and unit diagonal."""
    grams = []
    for _ in range(d):
        a = rng.uniform(0.05, 1.0, size=(n, n))
        g = np.triu(a) + np.triu(a, k=1).T
        np.fill_diagonal(g, 1.0)
        grams.append(g)
    return GramStack(tuple(grams))


def random_kernel_stack(rng, n, d, dim=2, eta_sq=0.5):
    """Gram stack built from actual Gaussian kernels on random vector data."""
    grams = []
    for _ in range(d):
        comp = ComponentData(rng.normal(size=(n, dim)))
        grams.append(gaussian_gram(comp, KernelSpec.gaussian(eta_sq)))
    return GramStack(tuple(grams))


def random_vector_sample(rng, n, d, dim=2):
    return Sample(tuple(ComponentData(rng.normal(size=(n, dim))) for _ in range(d)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
