import numpy as np
import pytest

from fobs.model import LinearSystem, observability_index


def random_stable_eigenvalues(rng, v):
    """``v`` eigenvalues with moduli in (0, 1), conjugate pairs allowed."""
    eigs = []
    while len(eigs) < v:
        r = rng.uniform(0.05, 0.95)
        if v - len(eigs) >= 2 and rng.random() < 0.4:
            phi = rng.uniform(0.1, np.pi - 0.1)
            z = r * np.exp(1j * phi)
            eigs += [z, z.conjugate()]
        else:
            eigs.append(r * rng.choice([-1.0, 1.0]))
    return eigs


def random_observable_system(rng, n_range=(3, 6), p_max=2, stable=False):
    """Gaussian plant with O(1) entries, observability index at least 2.

    ``stable=True`` rescales ``F`` to spectral radius 0.98 so long
    simulations stay bounded.
    """
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        p = int(rng.integers(1, min(p_max, n - 1) + 1))
        F = rng.standard_normal((n, n)) / np.sqrt(n)
        if stable:
            F *= 0.98 / max(np.abs(np.linalg.eigvals(F)).max(), 1e-3)
        H = rng.standard_normal((p, n))
        q = rng.standard_normal((1, n))
        sys = LinearSystem(F, H, q)
        vo = observability_index(sys)
        if vo is not None and vo >= 2:
            return sys, vo


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def diag_system():
    """F = diag(0.8, 0.5), H = [1 0], q = [0 1]."""
    return LinearSystem([[0.8, 0.0], [0.0, 0.5]], [[1.0, 0.0]], [[0.0, 1.0]])
