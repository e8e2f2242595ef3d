"""Mixed inputs ``rho = lam * rho_s + (1 - lam) |psi><psi|``.

Three noise models produce such inputs from a Schmidt state: pure dephasing
on A, amplitude damping on A, and admixture of the maximally mixed state.
A single weak measurement tuned to the pure part amplifies ``E = (1-lam) S``
whenever ``A_sz = tr[(sigma_z ⊗ I) rho_s] <= alpha^2 - beta^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .entanglement import concurrence, concurrence_many, e_measure, linear_entropy, sign_with_band
from .errors import AlreadyMaximal, DimensionMismatch, InvalidState, OrderingViolation
from .measurements import MixedOutcome, WeakMeasurement, apply_ls, apply_mixed
from .numerics import I2, SIGMA_Z, TOL, kron
from .protocol import build_schedule, initial_strength
from .states import LSDecomposition, SchmidtState, TwoQubitDensity, maximally_mixed

__all__ = [
    "CHANNEL_KINDS",
    "ChannelSpec",
    "CriterionReport",
    "ConcurrenceDelta",
    "SweepRow",
    "SWEEP_COLUMNS",
    "channel_kraus",
    "apply_channel",
    "a_sz",
    "criterion",
    "single_shot",
    "single_shot_many",
    "repeated_dephasing",
    "grid_points",
    "solve_grid_point",
    "sweep_channel",
]

CHANNEL_KINDS = ("dephasing", "amplitude_damping", "maximally_mixed")
_ALIASES = {"maximally_mixed_admixture": "maximally_mixed", "pd": "dephasing", "ad": "amplitude_damping", "rnd": "maximally_mixed"}
SWEEP_COLUMNS = ("s_value", "weight", "c_before", "c_after", "sign")

_SZ_I = kron(SIGMA_Z, I2)


@dataclass(frozen=True)
class ChannelSpec:
    """Noise model and its parameter.

    ``param`` is ``u`` for dephasing (``0 <= u <= 1/2``) and amplitude
    damping (``0 <= u <= 1``), and the admixture weight ``lambda`` for the
    maximally mixed model.
    """

    kind: str
    param: float

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in CHANNEL_KINDS:
            raise InvalidState(f"unknown channel kind {self.kind!r}; expected one of {CHANNEL_KINDS}")
        object.__setattr__(self, "kind", kind)
        hi = 0.5 if kind == "dephasing" else 1.0
        if not 0.0 <= self.param <= hi:
            raise InvalidState(f"{kind} parameter must lie in [0, {hi}], got {self.param}")


def channel_kraus(spec: ChannelSpec) -> list[np.ndarray]:
    """Kraus operators on qubit A for the two genuine channels."""
    u = spec.param
    if spec.kind == "dephasing":
        return [math.sqrt(1.0 - u) * I2, math.sqrt(u) * SIGMA_Z]
    if spec.kind == "amplitude_damping":
        e1 = np.array([[1.0, 0.0], [0.0, math.sqrt(u)]], dtype=complex)
        e2 = np.array([[0.0, math.sqrt(1.0 - u)], [0.0, 0.0]], dtype=complex)
        return [e1, e2]
    raise InvalidState("maximally-mixed admixture is not a local channel on A")


def _projector(index: int) -> TwoQubitDensity:
    m = np.zeros((4, 4), dtype=complex)
    m[index, index] = 1.0
    return TwoQubitDensity(m)


def apply_channel(spec: ChannelSpec, s: SchmidtState) -> LSDecomposition:
    if s.d != 2:
        raise DimensionMismatch("mixed-state channels are defined for two qubits (d = 2)")
    a2, b2 = s.alpha_sq, s.beta_sq
    if spec.kind == "dephasing":
        # mu / (alpha beta) = 1 - 2u, so lambda = 2u
        sep = np.diag([a2, 0.0, 0.0, b2]).astype(complex)
        return LSDecomposition(2.0 * spec.param, TwoQubitDensity(sep), s)
    if spec.kind == "amplitude_damping":
        u = spec.param
        lam = (1.0 - u) * b2
        if a2 + u * b2 > 0.0:
            pure = SchmidtState.from_unnormalized(s.alpha, math.sqrt(u) * s.beta)
        else:
            pure = SchmidtState(1.0, 0.0)
        return LSDecomposition(lam, _projector(1), pure)
    return LSDecomposition(spec.param, maximally_mixed(), s)


def a_sz(rho_s) -> float:
    """``tr[(sigma_z ⊗ I) rho_s]``."""
    m = rho_s.mat if isinstance(rho_s, TwoQubitDensity) else np.asarray(rho_s, dtype=complex)
    return float(np.real(np.trace(_SZ_I @ m)))


@dataclass(frozen=True)
class CriterionReport:
    a_sz: float
    threshold: float
    satisfied: bool


def _require_ordering(s: SchmidtState) -> None:
    if s.alpha > s.beta + TOL.norm:
        raise OrderingViolation("the pure part must have beta >= alpha; relabel |0> and |1> first")


def criterion(dec: LSDecomposition) -> CriterionReport:
    """Sufficient condition ``A_sz <= alpha^2 - beta^2`` for ``lambda_+ <= lambda``."""
    _require_ordering(dec.pure)
    value = a_sz(dec.separable)
    threshold = dec.pure.alpha_sq - dec.pure.beta_sq
    return CriterionReport(value, threshold, value <= threshold + TOL.criterion)


@dataclass(frozen=True)
class ConcurrenceDelta:
    c_before: float
    c_after: float
    delta: float
    sign: int
    lambda_before: float
    lambda_after: float
    e_before: float
    e_after: float


def _tuned_measurement(pure: SchmidtState) -> WeakMeasurement:
    _require_ordering(pure)
    eps = initial_strength(pure)
    return WeakMeasurement(eps, 2.0 * pure.alpha_sq)


def single_shot(dec: LSDecomposition) -> tuple[MixedOutcome, ConcurrenceDelta]:
    """One measurement with ``eps = beta^2 - alpha^2`` of the pure part, outcome ``+``."""
    m = _tuned_measurement(dec.pure)
    out = apply_ls(m, dec, "+")
    c0 = concurrence(dec.to_density())
    c1 = concurrence(out.state)
    after = out.decomposition
    delta = c1 - c0
    return out, ConcurrenceDelta(
        c_before=c0,
        c_after=c1,
        delta=delta,
        sign=sign_with_band(delta),
        lambda_before=dec.lam,
        lambda_after=out.lambda_plus,
        e_before=e_measure(dec),
        e_after=e_measure(after),
    )


def _pure_matrices(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    out = np.zeros(alpha.shape + (4, 4), dtype=complex)
    out[..., 0, 0] = alpha * alpha
    out[..., 0, 3] = out[..., 3, 0] = alpha * beta
    out[..., 3, 3] = beta * beta
    return out


def single_shot_many(lam, rho_s, alpha, beta) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized concurrence before/after the tuned ``+`` outcome.

    ``lam``, ``alpha``, ``beta`` broadcast against the leading axis of the
    ``(B, 4, 4)`` stack ``rho_s``; requires ``beta > alpha`` everywhere.
    """
    rho_s = np.asarray(rho_s, dtype=complex)
    lead = rho_s.shape[:-2]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), lead)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), lead)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), lead)
    rho = lam[..., None, None] * rho_s + (1.0 - lam)[..., None, None] * _pure_matrices(alpha, beta)
    a2 = alpha * alpha
    # diagonal of M_+ ⊗ I with eps = beta^2 - alpha^2: (1+eps)/2 = 1 - a2, (1-eps)/2 = a2
    k = np.sqrt(np.stack([1.0 - a2, 1.0 - a2, a2, a2], axis=-1))
    num = rho * k[..., :, None] * k[..., None, :]
    r = np.real(np.trace(num, axis1=-2, axis2=-1))
    out = num / r[..., None, None]
    return concurrence_many(rho), concurrence_many(out)


def repeated_dephasing(s: SchmidtState, u: float, N: int) -> list[tuple[float, float]]:
    """Run the pure-state schedule on a dephased input.

    Returns ``(C(rho_n), C(rho_n^s))`` for ``n = 1..N``: the concurrence of
    the state entering step ``n`` and of the state left by outcome ``+``
    there.
    """
    _require_ordering(s)
    dec = apply_channel(ChannelSpec("dephasing", u), s)
    sched = build_schedule(s, N)
    rho = dec.to_density()
    out = []
    for n in range(1, N + 1):
        m = sched.measurement(n)
        success = apply_mixed(m, rho, "+").state
        out.append((concurrence(rho), concurrence(success)))
        if n < N:
            rho = apply_mixed(m, rho, "-").state
    return out


def grid_points(n: int) -> list[float]:
    """``n`` interior points ``i/(n+1)`` of the open unit interval."""
    if n < 1:
        raise ValueError("grid needs at least one point")
    return [(i + 1) / (n + 1) for i in range(n)]


def solve_grid_point(kind: str, s_value: float, weight: float) -> Optional[tuple[SchmidtState, ChannelSpec]]:
    """Input state and channel reproducing (S of the pure part, separable weight).

    The pure part is taken on the ``beta > alpha`` branch. For amplitude
    damping, ``S(psi~)`` fixes ``alpha~^2`` and the weight ``(1-u) beta^2``
    then gives ``alpha^2 = alpha~^2 (1 - w)`` and ``u = 1 - w / beta^2``
    in closed form. Returns ``None`` when no valid parameters exist.
    """
    kind = _ALIASES.get(kind, kind)
    if not (0.0 <= s_value <= 1.0 and 0.0 <= weight <= 1.0):
        return None
    pure = SchmidtState.from_linear_entropy(s_value)
    try:
        if kind == "dephasing":
            return pure, ChannelSpec(kind, weight / 2.0)
        if kind == "maximally_mixed":
            return pure, ChannelSpec(kind, weight)
        if kind == "amplitude_damping":
            a2 = pure.alpha_sq * (1.0 - weight)
            b2 = 1.0 - a2
            u = 1.0 - weight / b2
            return SchmidtState.from_alpha_sq(a2), ChannelSpec(kind, min(max(u, 0.0), 1.0))
    except InvalidState:
        return None
    raise InvalidState(f"unknown channel kind {kind!r}")


@dataclass(frozen=True)
class SweepRow:
    s_value: float
    weight: float
    c_before: float
    c_after: float
    sign: Optional[int]

    def as_tuple(self):
        return (self.s_value, self.weight, self.c_before, self.c_after, self.sign)


def sweep_channel(kind: str, s_grid, weight_grid, batch: int = 4096) -> list[SweepRow]:
    """Sign map of ``C(rho_+) - C(rho)`` over (S of the pure part, separable weight).

    Rows are ordered by ``s_grid`` index, then ``weight_grid`` index. Grid
    points without a valid input are emitted with NaN concurrences and
    ``sign=None``.
    """
    cells = []
    for s_value in s_grid:
        for w in weight_grid:
            cells.append((s_value, w, solve_grid_point(kind, s_value, w)))
    valid, seps, lams, alphas, betas = [], [], [], [], []
    for i, (_, _, solved) in enumerate(cells):
        if solved is None:
            continue
        dec = apply_channel(solved[1], solved[0])
        if not dec.pure.alpha < dec.pure.beta:
            continue
        valid.append(i)
        seps.append(dec.separable.mat)
        lams.append(dec.lam)
        alphas.append(dec.pure.alpha)
        betas.append(dec.pure.beta)
    c0 = np.full(len(cells), np.nan)
    c1 = np.full(len(cells), np.nan)
    for lo in range(0, len(valid), batch):
        sl = slice(lo, lo + batch)
        before, after = single_shot_many(
            np.array(lams[sl]), np.array(seps[sl]), np.array(alphas[sl]), np.array(betas[sl])
        )
        idx = valid[sl]
        c0[idx] = before
        c1[idx] = after
    rows = []
    for i, (s_value, w, _) in enumerate(cells):
        if np.isnan(c0[i]):
            rows.append(SweepRow(s_value, w, float("nan"), float("nan"), None))
        else:
            rows.append(SweepRow(s_value, w, float(c0[i]), float(c1[i]), sign_with_band(c1[i] - c0[i])))
    return rows
