"""Repeated weak-measurement distillation of a pure Schmidt state.

At step ``n`` the measurement strength is chosen so that outcome ``+`` leaves
a maximally entangled state; on outcome ``-`` the (less entangled) state is
passed on to the next step. The strengths obey

    eps_1 = sqrt(1 - S(psi)),   eps_n = 2 eps_{n-1} / (1 + eps_{n-1}^2),

i.e. ``eps_n = tanh(2^(n-1) artanh(eps_1))``. The complements ``1 - eps_n``
are propagated through ``1 - eps_n = (1 - eps_{n-1})^2 / (1 + eps_{n-1}^2)``
so they stay accurate long after ``eps_n`` rounds to 1.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AlreadyMaximal
from .measurements import WeakMeasurement, apply_pure, outcome_probability
from .numerics import TOL
from .states import SchmidtState
from .streams import rng_stream

__all__ = [
    "Schedule",
    "ProtocolTrace",
    "TrajectoryResult",
    "TrajectoryBatch",
    "initial_strength",
    "swap_convention",
    "build_schedule",
    "schedule_from_strength",
    "analytic_trace",
    "total_success_probability",
    "run_trajectory",
    "run_trajectories",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("n", "epsilon_n", "p_n", "p_net_n", "p_s_n")
CONVERGENCE_TOL = 1e-12
TRAJECTORY_CHUNK = 4096


@dataclass(frozen=True)
class Schedule:
    epsilons: tuple[float, ...]
    complements: tuple[float, ...]

    @property
    def N(self) -> int:
        return len(self.epsilons)

    def measurement(self, n: int) -> WeakMeasurement:
        """Measurement used at step ``n`` (1-based)."""
        return WeakMeasurement(self.epsilons[n - 1], self.complements[n - 1])

    def success_probabilities(self) -> np.ndarray:
        d = np.asarray(self.complements)
        return 0.5 * d * (2.0 - d)


def swap_convention(s: SchmidtState) -> tuple[SchmidtState, bool]:
    """Relabel so that ``beta >= alpha``; the flag records whether roles were swapped.

    With the roles swapped the protocol's ``+`` outcome corresponds physically
    to the ``-`` operator on the original labels.
    """
    if s.alpha > s.beta:
        return SchmidtState(s.beta, s.alpha, s.d), True
    return s, False


def initial_strength(s: SchmidtState) -> float:
    """``|beta^2 - alpha^2| = sqrt(1 - S(psi))``."""
    if abs(s.alpha - s.beta) < TOL.norm:
        raise AlreadyMaximal("alpha == beta: the state is already maximally entangled")
    return abs(s.beta_sq - s.alpha_sq)


def schedule_from_strength(eps1: float, N: int, complement: float | None = None) -> Schedule:
    if N < 1:
        raise ValueError(f"number of steps must be >= 1, got {N}")
    eps = float(eps1)
    comp = 1.0 - eps if complement is None else float(complement)
    epsilons, complements = [], []
    for _ in range(N):
        epsilons.append(eps)
        complements.append(comp)
        denom = 1.0 + eps * eps
        eps, comp = 2.0 * eps / denom, comp * comp / denom
    return Schedule(tuple(epsilons), tuple(complements))


def build_schedule(s: SchmidtState, N: int) -> Schedule:
    s, _ = swap_convention(s)
    eps1 = initial_strength(s)
    # 1 - (beta^2 - alpha^2) = 2 alpha^2 without cancellation
    return schedule_from_strength(eps1, N, complement=2.0 * s.alpha_sq)


@dataclass(frozen=True)
class ProtocolTrace:
    epsilon: tuple[float, ...]
    p: tuple[float, ...]
    p_net: tuple[float, ...]
    p_s: tuple[float, ...]
    total_success: float
    converged: bool
    residual_state: SchmidtState
    swapped: bool = False

    @property
    def N(self) -> int:
        return len(self.epsilon)

    def rows(self):
        for i in range(self.N):
            yield (i + 1, self.epsilon[i], self.p[i], self.p_net[i], self.p_s[i])


def analytic_trace(s: SchmidtState, N: int) -> ProtocolTrace:
    """Per-step success probability, net probability and their running sum."""
    work, swapped = swap_convention(s)
    sched = build_schedule(work, N)
    p = sched.success_probabilities()
    survival = np.concatenate(([1.0], np.cumprod(1.0 - p)[:-1]))
    p_net = p * survival
    p_s = np.cumsum(p_net)
    converged = N >= 2 and abs(p_s[-1] - p_s[-2]) < CONVERGENCE_TOL

    state = work
    for n in range(1, N + 1):
        state = apply_pure(sched.measurement(n), state, "-").state
    if swapped:
        state = SchmidtState(state.beta, state.alpha, state.d)
    return ProtocolTrace(
        epsilon=sched.epsilons,
        p=tuple(float(x) for x in p),
        p_net=tuple(float(x) for x in p_net),
        p_s=tuple(float(x) for x in p_s),
        total_success=float(p_s[-1]),
        converged=bool(converged),
        residual_state=state,
        swapped=swapped,
    )


def total_success_probability(s: SchmidtState, max_steps: int = 200) -> float:
    """Limit of the cumulative success probability, iterated until it stops moving."""
    work, _ = swap_convention(s)
    eps = initial_strength(work)
    comp = 2.0 * work.alpha_sq
    total, survival = 0.0, 1.0
    for _ in range(max_steps):
        p = 0.5 * comp * (2.0 - comp)
        step = p * survival
        total += step
        survival *= 1.0 - p
        if step <= 1e-17 * total:
            break
        denom = 1.0 + eps * eps
        eps, comp = 2.0 * eps / denom, comp * comp / denom
    return total


@dataclass(frozen=True)
class TrajectoryResult:
    success: bool
    steps_used: int
    final_state: SchmidtState
    rng_seed: int


def run_trajectory(s: SchmidtState, N: int, seed: int) -> TrajectoryResult:
    """Simulate one run of at most ``N`` measurements, stopping at the first ``+``.

    Outcome probabilities come from the current state at each step; one
    uniform draw per step from ``rng_stream(seed, 0)`` decides the outcome.
    """
    work, swapped = swap_convention(s)
    sched = build_schedule(work, N)
    u = rng_stream(seed, 0).random(N)
    state = work
    for n in range(1, N + 1):
        m = sched.measurement(n)
        if u[n - 1] < outcome_probability(m, state, "+"):
            final = apply_pure(m, state, "+").state
            if swapped:
                final = SchmidtState(final.beta, final.alpha, final.d)
            return TrajectoryResult(True, n, final, seed)
        state = apply_pure(m, state, "-").state
    if swapped:
        state = SchmidtState(state.beta, state.alpha, state.d)
    return TrajectoryResult(False, N, state, seed)


@dataclass(frozen=True)
class TrajectoryBatch:
    n_trajectories: int
    n_success: int
    steps_histogram: tuple[int, ...] = field(repr=False)
    master_seed: int = 0

    @property
    def success_fraction(self) -> float:
        return self.n_success / self.n_trajectories

    @property
    def sigma(self) -> float:
        f = self.success_fraction
        return math.sqrt(f * (1.0 - f) / self.n_trajectories)

    def mean_steps_to_success(self) -> float:
        if not self.n_success:
            return float("nan")
        steps = np.arange(1, len(self.steps_histogram) + 1)
        return float(np.dot(steps, self.steps_histogram) / self.n_success)

    def wilson_interval(self, z: float = 1.959963984540054) -> tuple[float, float]:
        n, f = self.n_trajectories, self.success_fraction
        denom = 1.0 + z * z / n
        centre = (f + z * z / (2 * n)) / denom
        half = z * math.sqrt(f * (1 - f) / n + z * z / (4 * n * n)) / denom
        return centre - half, centre + half


def _per_step_plus_probabilities(work: SchmidtState, N: int) -> np.ndarray:
    sched = build_schedule(work, N)
    probs = np.empty(N)
    state = work
    for n in range(1, N + 1):
        m = sched.measurement(n)
        probs[n - 1] = outcome_probability(m, state, "+")
        state = apply_pure(m, state, "-").state
    return probs


def _chunk_first_success(probs: np.ndarray, master_seed: int, chunk: int, size: int) -> np.ndarray:
    u = rng_stream(master_seed, chunk).random((size, len(probs)))
    hit = u < probs[None, :]
    first = np.argmax(hit, axis=1) + 1
    first[~hit.any(axis=1)] = 0
    return first


def run_trajectories(
    s: SchmidtState, N: int, n: int, master_seed: int, threads: int | None = None
) -> TrajectoryBatch:
    """Run ``n`` independent trajectories in fixed-size chunks.

    Chunk ``k`` draws from ``rng_stream(master_seed, k)``, so the result does
    not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("number of trajectories must be >= 1")
    work, _ = swap_convention(s)
    probs = _per_step_plus_probabilities(work, N)
    sizes = [min(TRAJECTORY_CHUNK, n - k * TRAJECTORY_CHUNK) for k in range(-(-n // TRAJECTORY_CHUNK))]
    threads = threads or int(os.environ.get("WEAKDISTILL_THREADS", "1"))

    def job(k):
        return _chunk_first_success(probs, master_seed, k, sizes[k])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            firsts = list(pool.map(job, range(len(sizes))))
    else:
        firsts = [job(k) for k in range(len(sizes))]
    first = np.concatenate(firsts)
    hist = np.bincount(first, minlength=N + 1)[1:]
    return TrajectoryBatch(n, int(hist.sum()), tuple(int(x) for x in hist), master_seed)
