import numpy as np
import pytest


def random_density(rng, rank=None):
    """Ginibre-ensemble two-qubit density matrix of the given rank (1..4)."""
    rank = rank or int(rng.integers(1, 5))
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_local_unitary(rng):
    def u2():
        q, r = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        return q * (np.diag(r) / np.abs(np.diag(r)))

    return np.kron(u2(), u2())


def oracle_concurrence(rho):
    """Textbook route: square roots of the eigenvalues of rho (Y⊗Y) rho* (Y⊗Y)."""
    yy = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)
    ev = np.linalg.eigvals(rho @ yy @ rho.conj() @ yy)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
