"""Local two-outcome measurements on qubit A and their action on states.

All operators are diagonal in the computational basis of A, but they are kept
as explicit 2x2 matrices so the channel algebra stays uniform. Outcome
``"+"`` always selects the first operator of a pair (the one that boosts the
``|0>`` amplitude in the symmetric family).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InvalidState, OrderingViolation, ZeroProbabilityOutcome
from .numerics import I2, TOL, dagger, kron, trace
from .states import LSDecomposition, SchmidtState, TwoQubitDensity, ls_to_density

__all__ = [
    "WeakMeasurement",
    "GeneralizedMeasurement",
    "GeneralizedPartialMeasurement",
    "Infeasible",
    "PureOutcome",
    "MixedOutcome",
    "weak_operators",
    "generalized_operators",
    "completeness_residual",
    "apply_pure",
    "outcome_probability",
    "apply_mixed",
    "apply_ls",
    "apply_kraus",
    "generalized_tuning",
    "asymptotic_operators",
]

# probabilities are products of non-negative factors, so renormalization is
# exact down to the subnormal range; only a vanished outcome is rejected
_MIN_PROB = np.finfo(float).tiny


def _outcome_index(outcome) -> int:
    if outcome in ("+", 1, "plus", "1"):
        return 0
    if outcome in ("-", "−", -1, "minus", "2", 2):
        return 1
    raise ValueError(f"unknown outcome label {outcome!r}; use '+' or '-'")


@dataclass(frozen=True)
class WeakMeasurement:
    """Symmetric weak measurement of strength ``epsilon``.

    ``complement`` is ``1 - epsilon`` carried separately; the repeated
    protocol drives epsilon to within 1e-90 of one, where ``1 - epsilon``
    cannot be recovered from the float epsilon.
    """

    epsilon: float
    complement: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidState(f"measurement strength must lie in [0, 1], got {self.epsilon}")
        if self.complement is None:
            object.__setattr__(self, "complement", 1.0 - self.epsilon)

    def diagonals(self) -> tuple[tuple[float, float], tuple[float, float]]:
        hi = 1.0 - 0.5 * self.complement  # (1 + eps) / 2
        lo = 0.5 * self.complement  # (1 - eps) / 2
        return (hi, lo), (lo, hi)

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        return weak_operators(self)


def weak_operators(m: WeakMeasurement) -> tuple[np.ndarray, np.ndarray]:
    """``M_(+/-) = sqrt((1 +/- eps)/2) |0><0| + sqrt((1 -/+ eps)/2) |1><1|``."""
    (a0, a1), (b0, b1) = m.diagonals()
    return (
        np.diag([math.sqrt(a0), math.sqrt(a1)]).astype(complex),
        np.diag([math.sqrt(b0), math.sqrt(b1)]).astype(complex),
    )


@dataclass(frozen=True)
class GeneralizedMeasurement:
    """``M1 = sqrt(p)|0><0| + sqrt(q)|1><1|``, ``M2 = sqrt(1-p)|0><0| + sqrt(1-q)|1><1|``.

    ``p = (1 + eps)/2, q = (1 - eps)/2`` is the symmetric weak measurement;
    ``p = 1`` (or ``q = 1``) is a partial-collapse (Procrustean) measurement.
    """

    p: float
    q: float

    def __post_init__(self):
        for name, val in (("p", self.p), ("q", self.q)):
            if not 0.0 <= val <= 1.0:
                raise InvalidState(f"{name} must lie in [0, 1], got {val}")

    def diagonals(self):
        return (self.p, self.q), (1.0 - self.p, 1.0 - self.q)

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        return generalized_operators(self)


def generalized_operators(g: GeneralizedMeasurement) -> tuple[np.ndarray, np.ndarray]:
    (a0, a1), (b0, b1) = g.diagonals()
    return (
        np.diag([math.sqrt(a0), math.sqrt(a1)]).astype(complex),
        np.diag([math.sqrt(b0), math.sqrt(b1)]).astype(complex),
    )


@dataclass(frozen=True)
class GeneralizedPartialMeasurement:
    """``M*_(+/-) = sqrt((1 +/- d0)/2)|0><0| + sqrt((1 +/- d1)/2)|1><1|``."""

    delta0: float
    delta1: float

    def __post_init__(self):
        for name, val in (("delta0", self.delta0), ("delta1", self.delta1)):
            if not -1.0 <= val <= 1.0:
                raise InvalidState(f"{name} must lie in [-1, 1], got {val}")

    def diagonals(self):
        d0, d1 = self.delta0, self.delta1
        return ((1 + d0) / 2, (1 + d1) / 2), ((1 - d0) / 2, (1 - d1) / 2)

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        (a0, a1), (b0, b1) = self.diagonals()
        return (
            np.diag([math.sqrt(a0), math.sqrt(a1)]).astype(complex),
            np.diag([math.sqrt(b0), math.sqrt(b1)]).astype(complex),
        )

    def success_probability(self, s: SchmidtState) -> float:
        (a0, a1), _ = self.diagonals()
        return s.alpha_sq * a0 + s.beta_sq * a1


Measurement = Union[WeakMeasurement, GeneralizedMeasurement, GeneralizedPartialMeasurement]


def completeness_residual(ops) -> float:
    """``max |sum_k O_k^H O_k - I|`` over the entries."""
    total = sum(dagger(o) @ o for o in ops)
    n = total.shape[0]
    return float(np.max(np.abs(total - np.eye(n))))


@dataclass(frozen=True)
class PureOutcome:
    state: SchmidtState
    probability: float


@dataclass(frozen=True)
class MixedOutcome:
    state: TwoQubitDensity
    probability: float
    lambda_plus: Optional[float] = None
    decomposition: Optional[LSDecomposition] = None


def _pure_weights(m: Measurement, s: SchmidtState, idx: int) -> tuple[float, float]:
    d0, d1 = m.diagonals()[idx]
    return s.alpha_sq * d0, s.beta_sq * d1


def outcome_probability(m: Measurement, s: SchmidtState, outcome) -> float:
    """Probability of ``outcome`` on a Schmidt state (may be zero)."""
    a, b = _pure_weights(m, s, _outcome_index(outcome))
    return a + b


def apply_pure(m: Measurement, s: SchmidtState, outcome) -> PureOutcome:
    """Post-measurement Schmidt state and the probability of ``outcome``.

    The state keeps its Schmidt form: only the two coefficients are rescaled
    by the diagonal of the chosen operator and renormalized.
    """
    a, b = _pure_weights(m, s, _outcome_index(outcome))
    p = a + b
    if not p >= _MIN_PROB:
        raise ZeroProbabilityOutcome(f"outcome {outcome!r} has probability {p!r}")
    return PureOutcome(SchmidtState(math.sqrt(a / p), math.sqrt(b / p), s.d), p)


def _local(op: np.ndarray) -> np.ndarray:
    return kron(op, I2)


def _matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, TwoQubitDensity) else np.asarray(rho, dtype=complex)


def apply_kraus(ops, rho) -> np.ndarray:
    """Unconditioned channel ``sum_k (O_k ⊗ I) rho (O_k ⊗ I)^H`` with O_k acting on A."""
    m = _matrix(rho)
    return sum(_local(o) @ m @ dagger(_local(o)) for o in ops)


def apply_mixed(m: Measurement, rho, outcome) -> MixedOutcome:
    op = m.operators()[_outcome_index(outcome)]
    k = _local(op)
    num = k @ _matrix(rho) @ dagger(k)
    r = float(np.real(trace(num)))
    if not r >= _MIN_PROB:
        raise ZeroProbabilityOutcome(f"outcome {outcome!r} has probability {r!r}")
    out = num / r
    out = 0.5 * (out + dagger(out))
    return MixedOutcome(TwoQubitDensity(out), r)


def apply_ls(m: Measurement, dec: LSDecomposition, outcome) -> MixedOutcome:
    """Measure a decomposed state and track the separable weight.

    ``lambda_+ = lambda * w_s / R`` with ``w_s = tr[(M^H M ⊗ I) rho_s]`` and
    ``R = lambda w_s + (1 - lambda) p``. The returned ``decomposition`` holds
    the post-measurement separable and pure parts.
    """
    idx = _outcome_index(outcome)
    op = m.operators()[idx]
    k = _local(op)
    sep_num = k @ dec.separable.mat @ dagger(k)
    w_s = float(np.real(trace(sep_num)))
    a, b = _pure_weights(m, dec.pure, idx)
    p = a + b
    r = dec.lam * w_s + (1.0 - dec.lam) * p
    if not r >= _MIN_PROB:
        raise ZeroProbabilityOutcome(f"outcome {outcome!r} has probability {r!r}")
    mixed = apply_mixed(m, ls_to_density(dec), outcome)
    lam_plus = dec.lam * w_s / r
    if w_s >= _MIN_PROB:
        sep_out = sep_num / w_s
        separable = TwoQubitDensity(0.5 * (sep_out + dagger(sep_out)))
    else:
        lam_plus = 0.0
        separable = dec.separable
    if p >= _MIN_PROB:
        pure = SchmidtState(math.sqrt(a / p), math.sqrt(b / p), dec.pure.d)
    else:
        lam_plus = 1.0
        pure = dec.pure
    lam_plus = min(max(lam_plus, 0.0), 1.0)
    return MixedOutcome(
        mixed.state, r, lambda_plus=lam_plus, decomposition=LSDecomposition(lam_plus, separable, pure)
    )


@dataclass(frozen=True)
class Infeasible:
    reason: str

    def __bool__(self) -> bool:
        return False


def generalized_tuning(s: SchmidtState, a_sz: Optional[float] = None):
    """Pick ``(p, q)`` with ``p alpha^2 = q beta^2`` so outcome 1 is maximally entangled.

    The larger of the two parameters is set to 1, which maximizes the success
    probability. With ``a_sz`` given (mixed input) the sign condition
    ``(p - q)(sqrt(1 - S) + a_sz) <= 0`` must also hold, otherwise an
    :class:`Infeasible` value is returned. ``a_sz=None`` is the pure case,
    where the sign condition does not apply.
    """
    a2, b2 = s.alpha_sq, s.beta_sq
    if s.alpha <= 0.0 or s.beta <= 0.0:
        raise InvalidState("generalized tuning needs both Schmidt coefficients positive")
    if abs(a2 - b2) <= TOL.norm:
        return 1.0, 1.0
    if b2 > a2:
        p, q = 1.0, a2 / b2
    else:
        p, q = b2 / a2, 1.0
    if a_sz is not None:
        gap = math.sqrt(max(0.0, 1.0 - 4.0 * a2 * b2)) + a_sz
        if (p - q) * gap > TOL.criterion:
            return Infeasible(
                f"(p - q)(sqrt(1 - S) + A_sz) = {(p - q) * gap:.6g} > 0 for p={p:.6g}, q={q:.6g}"
            )
    return p, q


def asymptotic_operators(s: SchmidtState) -> GeneralizedPartialMeasurement:
    """Single partial measurement equivalent to the infinitely repeated protocol.

    ``delta0 = 1`` and ``beta sqrt((1 + delta1)/2) = alpha`` so that
    ``(M*_+ ⊗ I)|psi> = sqrt(2) alpha |MES>``; success probability ``2 alpha^2``.
    """
    if s.alpha > s.beta + TOL.norm:
        raise OrderingViolation("asymptotic operators need beta >= alpha; swap the convention first")
    if s.alpha >= s.beta:
        return GeneralizedPartialMeasurement(1.0, 1.0)
    delta1 = 2.0 * s.alpha_sq / s.beta_sq - 1.0
    return GeneralizedPartialMeasurement(1.0, min(1.0, max(-1.0, delta1)))
