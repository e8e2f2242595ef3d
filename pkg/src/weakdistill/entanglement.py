"""Entanglement measures and the PPT separability test."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .numerics import SIGMA_Y, TOL, as_cmat, check_hermitian, eigh, positivity_check
from .states import LSDecomposition, SchmidtState, TwoQubitDensity, schmidt_to_density

__all__ = [
    "EntanglementReport",
    "linear_entropy",
    "concurrence",
    "concurrence_many",
    "spin_flip_singular_values",
    "e_measure",
    "partial_transpose_B",
    "ppt_check",
    "entanglement_report",
    "sign_with_band",
]

_YY = np.kron(SIGMA_Y, SIGMA_Y)


def linear_entropy(s: SchmidtState) -> float:
    """``2 [1 - tr(rho_A^2)] = 4 alpha^2 beta^2``."""
    return 4.0 * s.alpha_sq * s.beta_sq


def _matrix(rho) -> np.ndarray:
    if isinstance(rho, TwoQubitDensity):
        return rho.mat
    return as_cmat(rho)


def spin_flip_singular_values(rho) -> np.ndarray:
    """Wootters' lambda_i for a density matrix (or stack), descending.

    Writing ``rho = W W^H`` with ``W = V sqrt(diag(w))``, the lambda_i are the
    singular values of the complex-symmetric ``tau = W^T (Y⊗Y) W``. They are
    read off as the positive half of the spectrum of the Hermitian dilation
    ``[[0, tau], [tau^H, 0]]``, which avoids taking square roots of the
    eigenvalues of ``sqrt(rho) rho~ sqrt(rho)`` (those lose half the digits
    near zero).
    """
    m = check_hermitian(_matrix(rho))
    w, v = eigh(m, check=False)
    w = np.clip(w, 0.0, None)
    wm = v * np.sqrt(w)[..., None, :]
    tau = np.swapaxes(wm, -1, -2) @ _YY @ wm
    n = tau.shape[-1]
    dil = np.zeros(tau.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    dil[..., :n, n:] = tau
    dil[..., n:, :n] = np.conj(np.swapaxes(tau, -1, -2))
    ev, _ = eigh(dil, check=False)
    return np.abs(ev[..., :n])


def concurrence_many(rhos: np.ndarray) -> np.ndarray:
    """Concurrence of a stack of two-qubit density matrices, shape ``(B, 4, 4)``."""
    lam = spin_flip_singular_values(rhos)
    c = lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3]
    return np.clip(c, 0.0, None)


def concurrence(rho: Union[TwoQubitDensity, np.ndarray]) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``."""
    return float(concurrence_many(_matrix(rho)[None])[0])


def e_measure(dec: LSDecomposition) -> float:
    """Weight of the pure part times its linear entropy, ``(1 - lambda) S(psi)``."""
    return (1.0 - dec.lam) * linear_entropy(dec.pure)


def partial_transpose_B(rho) -> np.ndarray:
    """Transpose on system B: ``(ia ib),(ja jb) -> (ia jb),(ja ib)``."""
    m = _matrix(rho)
    lead = m.shape[:-2]
    t = m.reshape(lead + (2, 2, 2, 2))
    k = len(lead)
    axes = tuple(range(k)) + (k, k + 3, k + 2, k + 1)
    return t.transpose(axes).reshape(lead + (4, 4))


def ppt_check(rho):
    """Positive-partial-transpose test; for two qubits this is exactly separability."""
    return positivity_check(partial_transpose_B(rho))


def sign_with_band(x: float, band: float = TOL.zero_band) -> int:
    if x > band:
        return 1
    if x < -band:
        return -1
    return 0


@dataclass(frozen=True)
class EntanglementReport:
    linear_entropy: Optional[float] = None
    concurrence: Optional[float] = None
    e_measure: Optional[float] = None


def entanglement_report(x) -> EntanglementReport:
    if isinstance(x, SchmidtState):
        s = linear_entropy(x)
        c = concurrence(schmidt_to_density(x)) if x.d == 2 else None
        return EntanglementReport(linear_entropy=s, concurrence=c)
    if isinstance(x, LSDecomposition):
        return EntanglementReport(
            linear_entropy=linear_entropy(x.pure),
            concurrence=concurrence(x.to_density()),
            e_measure=e_measure(x),
        )
    return EntanglementReport(concurrence=concurrence(x))

