"""Shared helpers for the test suite."""

import numpy as np
import pytest

from bornsim.lindblad import LindbladModel


def random_state(rng, d):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return psi / np.linalg.norm(psi)


def random_hermitian(rng, d, scale=1.0):
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (h + h.conj().T)


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_model(rng, d, n_lind, hbar=1.0):
    h = random_hermitian(rng, d, scale=1.0 / np.sqrt(d))
    ls = [
        (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2.0 * d)
        for _ in range(n_lind)
    ]
    return LindbladModel(H=h, lindblads=ls, hbar=hbar)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
