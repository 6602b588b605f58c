import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_hermitian(rng, n, scale=1.0):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (x + x.conj().T) / 2.0


def random_hpd(rng, n, shift=0.5):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x @ x.conj().T + shift * np.eye(n)


def random_cvector(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def random_unit_vectors(rng, count, n):
    w = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def align_phase(vec, ref):
    """Rotate ``vec`` by the global phase that best matches ``ref``."""
    inner = np.vdot(vec, ref)
    if inner == 0:
        return vec
    return vec * (inner / abs(inner))
