"""Small dense complex-matrix kernel.

Every operator in this package is a 2x2, 4x4 (or, for the concurrence
dilation, 8x8) complex matrix stored as a numpy array. Functions here accept
either a single matrix of shape ``(n, n)`` or a stack of shape ``(..., n, n)``
so that Monte Carlo sweeps can run vectorized over samples.

The Hermitian eigensolver is a cyclic complex Jacobi iteration. Positivity is
decided from the characteristic polynomial via Newton's identities, which does
not need an eigendecomposition at all.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian

__all__ = [
    "Tolerances",
    "TOL",
    "as_cmat",
    "dagger",
    "kron",
    "trace",
    "check_hermitian",
    "eigh",
    "hermitian_eigenvalues",
    "elementary_symmetric",
    "positivity_check",
    "I2",
    "I4",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
]


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    trace: float = 1e-10
    pos: float = 1e-12
    eig_pos: float = 1e-9
    jacobi_off: float = 1e-14
    norm: float = 1e-12
    zero_prob: float = 1e-15
    zero_band: float = 1e-9
    criterion: float = 1e-12
    jacobi_max_sweeps: int = 100


TOL = Tolerances()

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_cmat(m) -> np.ndarray:
    return np.asarray(m, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; ``(a ⊗ b)[i*q + r, j*c + s] = a[i, j] * b[r, s]``."""
    return np.kron(as_cmat(a), as_cmat(b))


def trace(m: np.ndarray):
    return np.trace(m, axis1=-2, axis2=-1)


def check_hermitian(m: np.ndarray, tol: float = TOL.herm) -> np.ndarray:
    m = as_cmat(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - dagger(m))) if m.size else 0.0
    if dev > tol:
        raise NotHermitian(f"max |m - m^H| = {dev:.3e} exceeds {tol:.1e}")
    return m


def _jacobi(a: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    # a: (n, n, B) Hermitian stack with the batch axis last so row/column
    # slices are contiguous; modified in place
    n, _, b = a.shape
    v = np.zeros((n, n, b), dtype=complex)
    for i in range(n):
        v[i, i] = 1.0
    offmask = ~np.eye(n, dtype=bool)
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(0, 1))))
    tiny = np.finfo(float).tiny
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for _ in range(max_sweeps):
            off = np.sqrt(np.sum(np.abs(a[offmask]) ** 2, axis=0))
            if np.all(off < tol * scale):
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    r = np.abs(apq)
                    active = r > tiny
                    r_safe = np.where(active, r, 1.0)
                    phase = np.where(active, apq / r_safe, 1.0)
                    theta = (a[q, q].real - a[p, p].real) / (2.0 * r_safe)
                    t = np.copysign(1.0, theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                    t[~active] = 0.0
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    # rotation on (p, q): [[c, s], [-s*conj(e), c*conj(e)]], e = phase of a[p, q]
                    pc = np.conj(phase)
                    jqp = -s * pc
                    jqq = c * pc

                    colp = a[:, p].copy()
                    colq = a[:, q]
                    a[:, p] = colp * c + colq * jqp
                    a[:, q] = colp * s + colq * jqq
                    rowp = a[p].copy()
                    rowq = a[q]
                    a[p] = rowp * c + rowq * np.conj(jqp)
                    a[q] = rowp * s + rowq * np.conj(jqq)
                    a[p, q] = 0.0
                    a[q, p] = 0.0

                    vp = v[:, p].copy()
                    vq = v[:, q]
                    v[:, p] = vp * c + vq * jqp
                    v[:, q] = vp * s + vq * jqq
    w = np.real(np.einsum("iib->bi", a))
    return w, np.moveaxis(v, -1, 0)


def eigh(m: np.ndarray, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix (or stack) with cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues sorted in descending order along the
    last axis and the matching eigenvectors as columns of ``V``, so that
    ``m == V @ diag(w) @ V^H``.

    Raises
    ------
    NotHermitian
        If ``check`` is set and ``max |m - m^H| > TOL.herm``.
    """
    m = as_cmat(m)
    if check:
        check_hermitian(m)
    shape = m.shape
    n = shape[-1]
    work = m.reshape(-1, n, n)
    # symmetrize so rounding noise in the input cannot bias the rotations
    work = 0.5 * (work + dagger(work))
    work = np.ascontiguousarray(np.moveaxis(work, 0, -1))
    w, v = _jacobi(work, TOL.jacobi_off, TOL.jacobi_max_sweeps)
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w.reshape(shape[:-1]), v.reshape(shape)


def hermitian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, descending."""
    return eigh(m)[0]


def elementary_symmetric(m: np.ndarray) -> np.ndarray:
    """Elementary symmetric polynomials ``e_1..e_n`` of the eigenvalues of ``m``.

    Computed from the power sums ``p_k = tr(m^k)`` through Newton's identities
    ``k e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} p_i``; no eigensolve involved.
    """
    m = as_cmat(m)
    n = m.shape[-1]
    power = m
    p = []
    for k in range(n):
        if k:
            power = power @ m
        p.append(np.real(trace(power)))
    e = [np.ones_like(p[0])]
    for k in range(1, n + 1):
        acc = np.zeros_like(p[0])
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e.append(acc / k)
    return np.stack(e[1:], axis=-1)


def positivity_check(m: np.ndarray, tol: float = TOL.pos):
    """True iff the Hermitian matrix ``m`` is positive semidefinite.

    For a Hermitian matrix all eigenvalues are real, so by Descartes' rule the
    characteristic polynomial has no negative root exactly when every
    elementary symmetric polynomial is non-negative. Works on stacks and then
    returns a boolean array.
    """
    m = check_hermitian(m)
    e = elementary_symmetric(m)
    ok = np.all(e >= -tol, axis=-1)
    return bool(ok) if np.ndim(ok) == 0 else ok
