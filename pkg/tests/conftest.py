import numpy as np
import pytest

from fuzzyricci import build_torus


@pytest.fixture(scope="session")
def torus_cache():
    cache = {}

    def get(n, m, x_choice="standard"):
        key = (n, m, x_choice)
        if key not in cache:
            cache[key] = build_torus(n, m, x_choice=x_choice)
        return cache[key]

    return get


def random_complex(rng, n):
    return rng.normal(0, 1, (n, n)) + 1j * rng.normal(0, 1, (n, n))


def random_hermitian(rng, n, scale=1.0):
    g = scale * random_complex(rng, n)
    return (g + g.conj().T) / 2


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, n))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
