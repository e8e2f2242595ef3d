"""Random separable two-qubit states at fixed ``A_sz`` and the Monte Carlo sign map.

A two-qubit state is written in the Pauli basis as

    rho_s = (I⊗I + sum_i A_i s_i⊗I + sum_j B_j I⊗s_j + sum_ij C_ij s_i⊗s_j) / 4

with 15 real parameters. The target distribution is uniform (Lebesgue) over
the 14 free parameters subject to positivity and PPT, with ``A_z`` pinned.

Proposing those 14 parameters from the box [-1, 1]^14 has an acceptance rate
far below 1e-6, so proposals are drawn in block form instead. With
``p0 = (1 + A_z)/2`` and ``p1 = (1 - A_z)/2`` every positive state with that
``A_z`` is

    [[p0 P, X], [X^H, p1 Q]],   X = sqrt(p0 P) K sqrt(p1 Q),   ||K||_op <= 1,

for qubit states ``P = (I + u.s)/2`` and ``Q = (I + v.s)/2``. The map from
``(u, v, K)`` to the 14 parameters has Jacobian proportional to
``det(P)^2 det(Q)^2``, so drawing ``|u|^2, |v|^2 ~ Beta(3/2, 3)`` with
isotropic directions and ``K`` uniform in the operator-norm ball gives the
uniform distribution on positive states. Rejecting non-PPT proposals then
leaves it uniform on the separable slice.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .entanglement import partial_transpose_B, sign_with_band
from .errors import InvalidState, RejectionBudgetExceeded
from .mixed import single_shot_many
from .numerics import I2, SIGMA_X, SIGMA_Y, SIGMA_Z, TOL, positivity_check
from .states import SchmidtState
from .streams import DEFAULT_SEED, rng_stream

__all__ = [
    "SeparableParams",
    "MonteCarloCell",
    "MC_COLUMNS",
    "REJECTION_BUDGET",
    "rng_stream",
    "params_to_matrices",
    "matrices_to_params",
    "draw_separable",
    "sample_separable",
    "monte_carlo_cell",
    "iter_monte_carlo",
    "monte_carlo_map",
    "criterion_threshold_s",
]

REJECTION_BUDGET = 1_000_000
PROPOSAL_CHUNK = 2048
MC_COLUMNS = ("s_value", "lambda", "n_samples", "mean_c_before", "mean_c_after", "sign")

_PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
_A_BASIS = np.stack([np.kron(p, I2) for p in _PAULI])
_B_BASIS = np.stack([np.kron(I2, p) for p in _PAULI])
_C_BASIS = np.stack([np.stack([np.kron(p, q) for q in _PAULI]) for p in _PAULI])


def params_to_matrices(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Pauli parameters ``(..., 3), (..., 3), (..., 3, 3)`` to density matrices ``(..., 4, 4)``."""
    m = np.eye(4, dtype=complex) + np.einsum("...i,ixy->...xy", a, _A_BASIS)
    m = m + np.einsum("...j,jxy->...xy", b, _B_BASIS)
    m = m + np.einsum("...ij,ijxy->...xy", c, _C_BASIS)
    return m / 4.0


def matrices_to_params(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=complex)
    a = np.real(np.einsum("ixy,...yx->...i", _A_BASIS, m))
    b = np.real(np.einsum("jxy,...yx->...j", _B_BASIS, m))
    c = np.real(np.einsum("ijxy,...yx->...ij", _C_BASIS, m))
    return a, b, c


@dataclass(frozen=True)
class SeparableParams:
    a: tuple[float, float, float]
    b: tuple[float, float, float]
    c: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        vals = list(self.a) + list(self.b) + [x for row in self.c for x in row]
        if len(vals) != 15:
            raise InvalidState("separable parameters need 3 + 3 + 9 values")
        if any(abs(x) > 1.0 + TOL.norm for x in vals):
            raise InvalidState("Pauli expectation values must lie in [-1, 1]")

    @property
    def a_sz(self) -> float:
        return self.a[2]

    def to_matrix(self) -> np.ndarray:
        return params_to_matrices(np.array(self.a), np.array(self.b), np.array(self.c))

    def is_valid(self) -> bool:
        m = self.to_matrix()
        return bool(positivity_check(m)) and bool(positivity_check(partial_transpose_B(m)))

    def to_dict(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "c": [list(r) for r in self.c]}

    @classmethod
    def from_dict(cls, data: dict) -> "SeparableParams":
        return cls(tuple(data["a"]), tuple(data["b"]), tuple(tuple(r) for r in data["c"]))

    @classmethod
    def from_arrays(cls, a, b, c) -> "SeparableParams":
        return cls(
            tuple(float(x) for x in a),
            tuple(float(x) for x in b),
            tuple(tuple(float(x) for x in row) for row in c),
        )


def _ball_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    # density on the unit 3-ball proportional to (1 - |u|^2)^2
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r2 = rng.beta(1.5, 3.0, n)
    return direction * np.sqrt(r2)[:, None]


def _qubit_blocks(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Qubit state ``(I + v.s)/2`` and its principal square root."""
    block = (np.eye(2) + np.einsum("ni,ixy->nxy", vec, _PAULI)) / 2.0
    sdet = np.sqrt(np.clip((1.0 - np.sum(vec * vec, axis=1)) / 4.0, 0.0, None))
    root = (block + sdet[:, None, None] * np.eye(2)) / np.sqrt(1.0 + 2.0 * sdet)[:, None, None]
    return block, root


def _contractions(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    # uniform in the Frobenius ball of radius sqrt(2), which contains the
    # operator-norm unit ball; returns the matrices and the in-ball mask
    g = rng.standard_normal((n, 8))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g *= math.sqrt(2.0) * rng.random(n)[:, None] ** (1.0 / 8.0)
    k = (g[:, :4] + 1j * g[:, 4:]).reshape(n, 2, 2)
    fro2 = np.sum(np.abs(k) ** 2, axis=(1, 2))
    det = np.abs(k[:, 0, 0] * k[:, 1, 1] - k[:, 0, 1] * k[:, 1, 0])
    inside = (1.0 - fro2 + det * det >= 0.0) & (fro2 <= 2.0)
    return k, inside


def _propose(rng: np.random.Generator, a_sz: float, n: int):
    """One chunk of ``n`` proposals; returns accepted positions and their data."""
    p0, p1 = (1.0 + a_sz) / 2.0, (1.0 - a_sz) / 2.0
    u = _ball_vectors(rng, n)
    v = _ball_vectors(rng, n)
    k, inside = _contractions(rng, n)
    pos = np.flatnonzero(inside)
    u, v, k = u[pos], v[pos], k[pos]
    pa, ra = _qubit_blocks(u)
    qb, rb = _qubit_blocks(v)
    x = math.sqrt(p0 * p1) * (ra @ k @ rb)
    m = np.zeros((pos.size, 4, 4), dtype=complex)
    m[:, :2, :2] = p0 * pa
    m[:, 2:, 2:] = p1 * qb
    m[:, :2, 2:] = x
    m[:, 2:, :2] = np.conj(np.swapaxes(x, -1, -2))
    a, b, c = matrices_to_params(m)
    a[:, 2] = a_sz
    np.clip(a, -1.0, 1.0, out=a)
    np.clip(b, -1.0, 1.0, out=b)
    np.clip(c, -1.0, 1.0, out=c)
    rho = params_to_matrices(a, b, c)
    ok = positivity_check(partial_transpose_B(rho))
    ok[ok] = positivity_check(rho[ok])
    return pos[ok], a[ok], b[ok], c[ok], rho[ok]


def draw_separable(
    rng: np.random.Generator, a_sz: float, n: int, budget: int = REJECTION_BUDGET
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """First ``n`` accepted proposals from ``rng``, in proposal order.

    Returns ``(a, b, c, rho)`` stacks. Raises :class:`RejectionBudgetExceeded`
    once more than ``budget`` proposals in a row have been rejected.
    """
    if not -1.0 <= a_sz <= 1.0:
        raise InvalidState(f"A_sz must lie in [-1, 1], got {a_sz}")
    parts = []
    accepted, streak, rejected = 0, 0, 0
    while accepted < n:
        pos, a, b, c, rho = _propose(rng, a_sz, PROPOSAL_CHUNK)
        if pos.size == 0:
            streak += PROPOSAL_CHUNK
            rejected += PROPOSAL_CHUNK
        else:
            gaps = np.diff(pos, prepend=-1) - 1
            gaps[0] += streak
            take = min(pos.size, n - accepted)
            over = np.flatnonzero(gaps[:take] > budget)
            if over.size:
                take = int(over[0])
            parts.append((a[:take], b[:take], c[:take], rho[:take]))
            accepted += take
            if over.size:
                rejected += int(pos[take]) - take
                break
            rejected += int(pos[take - 1] + 1 - take)
            streak = PROPOSAL_CHUNK - 1 - int(pos[-1])
        if streak > budget:
            break
    if accepted < n:
        raise RejectionBudgetExceeded(
            f"more than {budget} consecutive rejections at A_sz={a_sz}", accepted, rejected
        )
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


def sample_separable(a_sz: float, seed: int, budget: int = REJECTION_BUDGET) -> SeparableParams:
    """One random separable state with ``A_sz`` pinned, reproducible from ``seed``."""
    a, b, c, _ = draw_separable(rng_stream(seed, 0), a_sz, 1, budget)
    return SeparableParams.from_arrays(a[0], b[0], c[0])


def criterion_threshold_s(a_sz: float) -> float:
    """Smallest linear entropy with ``A_sz <= alpha^2 - beta^2`` (``beta >= alpha``).

    That is ``1 - A_sz^2`` for ``A_sz <= 0``; for positive ``A_sz`` no pure
    partner satisfies the criterion and ``inf`` is returned.
    """
    return 1.0 - a_sz * a_sz if a_sz <= 0 else math.inf


@dataclass(frozen=True)
class MonteCarloCell:
    s_value: float
    lam: float
    a_sz: float
    n_samples: int
    mean_c_before: float
    mean_c_after: float
    sign: int

    def as_tuple(self):
        return (self.s_value, self.lam, self.n_samples, self.mean_c_before, self.mean_c_after, self.sign)


def monte_carlo_cell(
    a_sz: float, s_value: float, lam: float, n: int, rng: np.random.Generator, budget: int = REJECTION_BUDGET
) -> MonteCarloCell:
    """Mean concurrence before and after the tuned measurement over ``n`` random ``rho_s``."""
    pure = SchmidtState.from_linear_entropy(s_value)
    _, _, _, rho_s = draw_separable(rng, a_sz, n, budget)
    c0, c1 = single_shot_many(lam, rho_s, pure.alpha, pure.beta)
    m0, m1 = float(np.mean(c0)), float(np.mean(c1))
    if np.all(c0 <= TOL.zero_band) and np.all(c1 <= TOL.zero_band):
        sign = 0
    else:
        sign = sign_with_band(m1 - m0)
    return MonteCarloCell(s_value, lam, a_sz, n, m0, m1, sign)


def iter_monte_carlo(
    a_sz: float,
    s_grid: Sequence[float],
    lambda_grid: Sequence[float],
    n: int,
    seed: int = DEFAULT_SEED,
    threads: Optional[int] = None,
    budget: int = REJECTION_BUDGET,
) -> Iterator[MonteCarloCell]:
    """Yield cells in canonical order (``s_grid`` index major, ``lambda_grid`` minor).

    Cell ``k`` draws from ``rng_stream(seed, k)``, so results are identical for
    any thread count.
    """
    if n < 1:
        raise ValueError("need at least one sample per cell")
    cells = [(s, lam) for s in s_grid for lam in lambda_grid]
    for s, lam in cells:
        if not (0.0 < s < 1.0 and 0.0 <= lam < 1.0):
            raise ValueError(f"grid point (S={s}, lambda={lam}) outside (0, 1)")
    threads = threads or int(os.environ.get("WEAKDISTILL_THREADS", "1"))

    def job(k):
        s, lam = cells[k]
        return monte_carlo_cell(a_sz, s, lam, n, rng_stream(seed, k), budget)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(job, range(len(cells)))
    else:
        for k in range(len(cells)):
            yield job(k)


def monte_carlo_map(
    a_sz: float,
    s_grid: Sequence[float],
    lambda_grid: Sequence[float],
    n: int,
    seed: int = DEFAULT_SEED,
    threads: Optional[int] = None,
) -> list[MonteCarloCell]:
    return list(iter_monte_carlo(a_sz, s_grid, lambda_grid, n, seed, threads))
