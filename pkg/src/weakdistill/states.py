"""State value types.

Index ordering for two-qubit matrices is fixed throughout the package:
``|00>, |01>, |10>, |11>`` with system A (the measured qubit) first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidState
from .numerics import TOL, check_hermitian, positivity_check, trace

__all__ = [
    "SchmidtState",
    "TwoQubitDensity",
    "LSDecomposition",
    "schmidt_to_density",
    "reduced_density_A",
    "ls_to_density",
    "bell_state",
    "maximally_mixed",
    "matrix_to_json",
    "matrix_from_json",
]


@dataclass(frozen=True)
class SchmidtState:
    """``alpha |0>|phi_0> + beta |1>|phi_1>`` on a 2 x d system.

    ``|phi_0>`` and ``|phi_1>`` are the first two computational basis vectors
    of system B.
    """

    alpha: float
    beta: float
    d: int = 2

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidState("Schmidt coefficients must be non-negative")
        if abs(self.alpha**2 + self.beta**2 - 1.0) > TOL.norm:
            raise InvalidState(
                f"alpha^2 + beta^2 = {self.alpha**2 + self.beta**2!r}, expected 1"
            )
        if int(self.d) != self.d or self.d < 2:
            raise InvalidState(f"dimension of system B must be an integer >= 2, got {self.d}")

    @classmethod
    def from_alpha_sq(cls, alpha_sq: float, d: int = 2) -> "SchmidtState":
        if not 0.0 <= alpha_sq <= 1.0:
            raise InvalidState(f"alpha^2 must lie in [0, 1], got {alpha_sq}")
        return cls(math.sqrt(alpha_sq), math.sqrt(1.0 - alpha_sq), d)

    @classmethod
    def from_unnormalized(cls, a: float, b: float, d: int = 2) -> "SchmidtState":
        norm = math.hypot(a, b)
        if norm == 0.0:
            raise InvalidState("cannot normalize the zero vector")
        return cls(abs(a) / norm, abs(b) / norm, d)

    @classmethod
    def from_linear_entropy(cls, s: float, d: int = 2) -> "SchmidtState":
        """The state with ``4 alpha^2 beta^2 = s`` on the ``beta >= alpha`` branch."""
        if not 0.0 <= s <= 1.0:
            raise InvalidState(f"linear entropy must lie in [0, 1], got {s}")
        return cls.from_alpha_sq(0.5 * (1.0 - math.sqrt(1.0 - s)), d)

    @property
    def alpha_sq(self) -> float:
        return self.alpha * self.alpha

    @property
    def beta_sq(self) -> float:
        return self.beta * self.beta

    def vector(self) -> np.ndarray:
        """State vector in C^2 ⊗ C^d, system A first."""
        v = np.zeros(2 * self.d, dtype=complex)
        v[0] = self.alpha
        v[self.d + 1] = self.beta
        return v

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> "SchmidtState":
        return cls(float(data["alpha"]), float(data["beta"]), int(data.get("d", 2)))


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(data: dict) -> np.ndarray:
    return np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)


@dataclass(frozen=True, eq=False)
class TwoQubitDensity:
    """A validated 4x4 density matrix (Hermitian, unit trace, positive)."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.shape != (4, 4):
            raise DimensionMismatch(f"two-qubit density matrix must be 4x4, got {m.shape}")
        check_hermitian(m)
        tr = trace(m)
        if abs(tr - 1.0) > TOL.trace:
            raise InvalidState(f"trace {tr.real:.15g} differs from 1")
        if not positivity_check(m):
            raise InvalidState("matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def to_dict(self) -> dict:
        return {"mat": matrix_to_json(self.mat)}

    @classmethod
    def from_dict(cls, data: dict) -> "TwoQubitDensity":
        return cls(matrix_from_json(data["mat"]))


@dataclass(frozen=True)
class LSDecomposition:
    """``lambda * separable + (1 - lambda) |pure><pure|``."""

    lam: float
    separable: TwoQubitDensity
    pure: SchmidtState

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidState(f"lambda must lie in [0, 1], got {self.lam}")
        if self.pure.d != 2:
            raise DimensionMismatch("the pure part of a two-qubit decomposition needs d = 2")
        # deferred import: entanglement depends on this module
        from .entanglement import ppt_check

        if not ppt_check(self.separable):
            raise InvalidState("separable part fails the PPT test")

    def to_density(self) -> TwoQubitDensity:
        return ls_to_density(self)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "separable": self.separable.to_dict(),
            "pure": self.pure.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LSDecomposition":
        return cls(
            float(data["lambda"]),
            TwoQubitDensity.from_dict(data["separable"]),
            SchmidtState.from_dict(data["pure"]),
        )


def _pure_matrix(s: SchmidtState) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = s.alpha_sq
    m[0, 3] = m[3, 0] = s.alpha * s.beta
    m[3, 3] = s.beta_sq
    return m


def schmidt_to_density(s: SchmidtState) -> TwoQubitDensity:
    if s.d != 2:
        raise DimensionMismatch(f"density-matrix form needs d = 2, got d = {s.d}")
    return TwoQubitDensity(_pure_matrix(s))


def reduced_density_A(s: SchmidtState) -> np.ndarray:
    """Reduced state of system A, ``diag(alpha^2, beta^2)``."""
    return np.diag([s.alpha_sq, s.beta_sq]).astype(complex)


def ls_to_density(dec: LSDecomposition) -> TwoQubitDensity:
    m = dec.lam * dec.separable.mat + (1.0 - dec.lam) * _pure_matrix(dec.pure)
    return TwoQubitDensity(m)


def bell_state() -> TwoQubitDensity:
    return schmidt_to_density(SchmidtState(1 / math.sqrt(2), 1 / math.sqrt(2)))


def maximally_mixed() -> TwoQubitDensity:
    return TwoQubitDensity(np.eye(4, dtype=complex) / 4)
