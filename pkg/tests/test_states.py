import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weakdistill.entanglement import linear_entropy
from weakdistill.errors import DimensionMismatch, InvalidState, NotHermitian
from weakdistill.states import (
    LSDecomposition,
    SchmidtState,
    TwoQubitDensity,
    bell_state,
    ls_to_density,
    maximally_mixed,
    reduced_density_A,
    schmidt_to_density,
)


def test_schmidt_validation():
    with pytest.raises(InvalidState):
        SchmidtState(0.5, 0.5)
    with pytest.raises(InvalidState):
        SchmidtState(-0.6, 0.8)
    with pytest.raises(InvalidState):
        SchmidtState(0.6, 0.8, d=1)
    SchmidtState(0.6, 0.8, d=5)


def test_schmidt_constructors():
    s = SchmidtState.from_alpha_sq(0.4)
    assert s.alpha_sq == pytest.approx(0.4, abs=1e-15)
    assert s.beta_sq == pytest.approx(0.6, abs=1e-15)
    u = SchmidtState.from_unnormalized(3.0, 4.0)
    assert (u.alpha, u.beta) == pytest.approx((0.6, 0.8))
    e = SchmidtState.from_linear_entropy(0.96)
    assert e.alpha_sq == pytest.approx(0.4, abs=1e-14)
    assert e.beta > e.alpha


def test_schmidt_vector_for_larger_d():
    v = SchmidtState.from_alpha_sq(0.3, d=3).vector()
    assert v.shape == (6,)
    assert v[0] == pytest.approx(math.sqrt(0.3))
    assert v[4] == pytest.approx(math.sqrt(0.7))


def test_schmidt_to_density_examples():
    assert np.allclose(schmidt_to_density(SchmidtState(1.0, 0.0)).mat, np.diag([1, 0, 0, 0]))
    bell = bell_state().mat
    assert np.allclose(bell[np.ix_([0, 3], [0, 3])], 0.5)
    m = schmidt_to_density(SchmidtState.from_alpha_sq(0.4)).mat
    assert m[0, 0] == pytest.approx(0.4) and m[3, 3] == pytest.approx(0.6)
    assert m[0, 3] == pytest.approx(math.sqrt(0.24)) and m[0, 3] == pytest.approx(0.489898, abs=1e-6)
    with pytest.raises(DimensionMismatch):
        schmidt_to_density(SchmidtState(0.6, 0.8, d=3))


def test_reduced_density_examples_and_purity():
    assert np.allclose(reduced_density_A(bell_state_schmidt()), np.diag([0.5, 0.5]))
    assert np.allclose(reduced_density_A(SchmidtState(1, 0)), np.diag([1, 0]))
    for a2 in (0.05, 0.4, 0.77):
        s = SchmidtState.from_alpha_sq(a2)
        r = reduced_density_A(s)
        # oracle: partial trace of the full projector
        full = schmidt_to_density(s).mat.reshape(2, 2, 2, 2)
        assert np.allclose(np.einsum("ajbj->ab", full), r)
        purity = np.trace(r @ r).real
        assert purity == pytest.approx(1 - linear_entropy(s) / 2, abs=1e-14)


def bell_state_schmidt():
    return SchmidtState(1 / math.sqrt(2), 1 / math.sqrt(2))


def test_ls_to_density_examples():
    s = SchmidtState.from_alpha_sq(0.4)
    mm = maximally_mixed()
    assert np.allclose(ls_to_density(LSDecomposition(0.0, mm, s)).mat, schmidt_to_density(s).mat)
    assert np.allclose(ls_to_density(LSDecomposition(1.0, mm, s)).mat, np.eye(4) / 4)
    m = ls_to_density(LSDecomposition(0.5, mm, s)).mat
    assert np.allclose(np.diag(m).real, 0.125 + 0.5 * np.array([0.4, 0, 0, 0.6]))
    assert m[0, 3] == pytest.approx(0.5 * math.sqrt(0.24))


def test_density_validation():
    with pytest.raises(DimensionMismatch):
        TwoQubitDensity(np.eye(2) / 2)
    with pytest.raises(InvalidState):
        TwoQubitDensity(np.eye(4) / 3)
    with pytest.raises(InvalidState):
        TwoQubitDensity(np.diag([0.5, 0.6, -0.1, 0]))
    bad = np.eye(4) / 4 + 0j
    bad[0, 1] = 0.1
    with pytest.raises(NotHermitian):
        TwoQubitDensity(bad)


def test_density_is_immutable():
    rho = maximally_mixed()
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1


def test_ls_requires_ppt_separable_part():
    with pytest.raises(InvalidState):
        LSDecomposition(0.5, bell_state(), SchmidtState.from_alpha_sq(0.4))
    with pytest.raises(InvalidState):
        LSDecomposition(1.5, maximally_mixed(), SchmidtState.from_alpha_sq(0.4))


def test_json_round_trips():
    s = SchmidtState.from_alpha_sq(0.3)
    assert SchmidtState.from_dict(json.loads(json.dumps(s.to_dict()))) == s
    rho = ls_to_density(LSDecomposition(0.3, maximally_mixed(), s))
    back = TwoQubitDensity.from_dict(json.loads(json.dumps(rho.to_dict())))
    assert np.array_equal(back.mat, rho.mat)
    dec = LSDecomposition(0.3, maximally_mixed(), s)
    back_dec = LSDecomposition.from_dict(json.loads(json.dumps(dec.to_dict())))
    assert back_dec.lam == dec.lam and back_dec.pure == dec.pure
    assert np.array_equal(back_dec.separable.mat, dec.separable.mat)


@given(st.floats(0.0, 1.0))
def test_every_schmidt_state_gives_valid_density(a2):
    s = SchmidtState.from_alpha_sq(a2)
    rho = schmidt_to_density(s)
    assert np.trace(rho.mat).real == pytest.approx(1.0, abs=1e-12)
