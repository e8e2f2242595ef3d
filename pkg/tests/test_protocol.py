import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakdistill.entanglement import linear_entropy
from weakdistill.errors import AlreadyMaximal
from weakdistill.measurements import apply_pure, asymptotic_operators
from weakdistill.protocol import (
    TRACE_COLUMNS,
    analytic_trace,
    build_schedule,
    initial_strength,
    run_trajectories,
    run_trajectory,
    schedule_from_strength,
    swap_convention,
    total_success_probability,
)
from weakdistill.states import SchmidtState

S04 = SchmidtState.from_alpha_sq(0.4)


def test_initial_strength_examples():
    assert initial_strength(S04) == pytest.approx(0.2, abs=1e-15)
    assert initial_strength(SchmidtState.from_alpha_sq(0.1)) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(AlreadyMaximal):
        initial_strength(SchmidtState.from_alpha_sq(0.5))


def test_schedule_examples():
    sched = build_schedule(S04, 3)
    assert sched.epsilons == pytest.approx((0.2, 5 / 13, 65 / 97), abs=1e-15)
    assert schedule_from_strength(1.0, 4).epsilons == (1.0, 1.0, 1.0, 1.0)
    assert abs(build_schedule(S04, 30).epsilons[-1] - 1.0) < 1e-12
    with pytest.raises(ValueError):
        build_schedule(S04, 0)


def test_schedule_matches_tanh_closed_form():
    eps = build_schedule(S04, 20).epsilons
    for n, e in enumerate(eps, start=1):
        assert e == pytest.approx(math.tanh(2 ** (n - 1) * math.atanh(0.2)), abs=1e-12)


def test_schedule_complements_stay_accurate():
    sched = build_schedule(S04, 12)
    for n in range(12):
        # 1 - tanh(x) = 2 / (exp(2x) + 1)
        x = 2**n * math.atanh(0.2)
        exact = 2.0 / (math.exp(2 * x) + 1.0) if 2 * x < 700 else 0.0
        assert sched.complements[n] == pytest.approx(exact, rel=1e-12, abs=0)


def test_schedule_success_probabilities():
    p = build_schedule(S04, 3).success_probabilities()
    assert p == pytest.approx([0.48, 72 / 169, 2592 / 9409], abs=1e-15)


def test_swap_convention_examples():
    s, flag = swap_convention(SchmidtState.from_alpha_sq(0.6))
    assert flag and s.alpha_sq == pytest.approx(0.4)
    assert swap_convention(S04) == (S04, False)
    eq = SchmidtState.from_alpha_sq(0.5)
    assert swap_convention(eq) == (eq, False)


def test_schedule_self_consistency():
    for a2 in (0.05, 0.2, 0.4):
        s = SchmidtState.from_alpha_sq(a2)
        sched = build_schedule(s, 6)
        state = s
        for n in range(1, 6):
            assert math.sqrt(max(0.0, 1 - linear_entropy(state))) == pytest.approx(sched.epsilons[n - 1], abs=1e-10)
            plus = apply_pure(sched.measurement(n), state, "+").state
            assert linear_entropy(plus) == pytest.approx(1.0, abs=1e-10)
            state = apply_pure(sched.measurement(n), state, "-").state


def test_trace_values_and_columns():
    tr = analytic_trace(S04, 15)
    assert TRACE_COLUMNS == ("n", "epsilon_n", "p_n", "p_net_n", "p_s_n")
    rows = list(tr.rows())
    assert len(rows) == 15 and rows[0][0] == 1
    assert tr.p[0] == pytest.approx(0.48, abs=1e-15)
    assert tr.p_net[1] == pytest.approx((1 - 0.48) * 72 / 169, abs=1e-15)
    assert tr.p_s[-1] == pytest.approx(0.8, abs=1e-10)


def test_trace_monotonicity():
    s = SchmidtState.from_alpha_sq(0.2)
    tr = analytic_trace(s, 8)
    # epsilon_n rounds to 1.0 from n = 6; strictness is carried by 1 - epsilon_n
    assert np.all(np.diff(tr.epsilon) >= 0)
    assert np.all(np.diff(build_schedule(s, 8).complements) < 0)
    assert np.all(np.diff(tr.p) < 0)
    assert np.all(np.diff(tr.p_net) < 0)


def test_trace_convergence_and_residual():
    tr = analytic_trace(S04, 40)
    assert tr.converged
    assert abs(tr.p_s[-1] - 0.8) < 1e-10
    assert tr.residual_state.alpha_sq < 1e-12
    assert not analytic_trace(S04, 2).converged


def test_trace_mirror_case():
    tr = analytic_trace(SchmidtState.from_alpha_sq(0.6), 40)
    assert tr.swapped
    assert tr.p_s[-1] == pytest.approx(0.8, abs=1e-10)
    # after repeated failures the mirrored input collapses onto |0>|phi_0>
    assert tr.residual_state.beta_sq < 1e-12


def test_near_maximal_input():
    s = SchmidtState.from_alpha_sq(0.5 - 1e-6)
    tr = analytic_trace(s, 60)
    assert tr.p[0] == pytest.approx(0.5, abs=1e-10)
    assert tr.p_s[-1] == pytest.approx(1 - 2e-6, abs=1e-10)


def test_total_success_is_twice_alpha_sq():
    for a2 in (1e-8, 0.05, 0.1, 0.2, 0.3, 0.45, 0.4999):
        s = SchmidtState.from_alpha_sq(a2)
        assert total_success_probability(s) == pytest.approx(2 * a2, abs=1e-12)
        assert total_success_probability(SchmidtState.from_alpha_sq(1 - a2)) == pytest.approx(2 * a2, abs=1e-12)


def test_asymptotic_equivalence_grid():
    for a2 in np.arange(1, 10) * 0.05:
        s = SchmidtState.from_alpha_sq(float(a2))
        pstar = asymptotic_operators(s).success_probability(s)
        assert abs(analytic_trace(s, 60).total_success - pstar) < 1e-10


def test_run_trajectory_is_deterministic():
    a = run_trajectory(S04, 20, seed=99)
    b = run_trajectory(S04, 20, seed=99)
    assert a == b
    if a.success:
        assert linear_entropy(a.final_state) == pytest.approx(1.0, abs=1e-10)


def test_run_trajectory_long_failure_does_not_underflow():
    # probabilities of + drop below 1e-300 after enough failures; no exception
    for seed in range(20):
        res = run_trajectory(SchmidtState.from_alpha_sq(0.05), 30, seed)
        assert res.steps_used <= 30


def test_single_trajectories_agree_with_statistics():
    hits = sum(run_trajectory(S04, 30, seed).success for seed in range(2000))
    assert abs(hits / 2000 - 0.8) < 4 * math.sqrt(0.16 / 2000)


def test_batch_statistics_and_thread_independence():
    b1 = run_trajectories(S04, 40, 20_000, master_seed=5, threads=1)
    b4 = run_trajectories(S04, 40, 20_000, master_seed=5, threads=4)
    assert b1 == b4
    assert abs(b1.success_fraction - 0.8) < 3 * math.sqrt(0.16 / 20_000)
    lo, hi = b1.wilson_interval()
    assert lo < b1.success_fraction < hi
    assert sum(b1.steps_histogram) == b1.n_success
    # first-step success probability is P_1 = 0.48
    assert b1.steps_histogram[0] / b1.n_trajectories == pytest.approx(0.48, abs=0.015)
    assert b1.mean_steps_to_success() >= 1


def test_batch_rejects_empty():
    with pytest.raises(ValueError):
        run_trajectories(S04, 10, 0, master_seed=1)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 0.5 - 1e-6))
def test_cumulative_success_bounded_and_increasing(a2):
    tr = analytic_trace(SchmidtState.from_alpha_sq(a2), 25)
    assert np.all(np.diff(tr.p_s) >= 0)
    assert tr.p_s[-1] <= 2 * a2 + 1e-12
