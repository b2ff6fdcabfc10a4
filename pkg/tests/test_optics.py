import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from zwmsim.fock import FockState, TruncationPolicy, basis_state, inner_product, norm, vacuum
from zwmsim.optics import (
    MAX_ORACLE_DIM,
    BeamSplitterSpec,
    PhaseShifterSpec,
    ResourceError,
    SpdcCrystalSpec,
    SpecError,
    apply_beam_splitter,
    apply_phase,
    apply_spdc,
    apply_tritter,
    dense_exponential_oracle,
    tritter_final,
    tritter_initial,
)

from conftest import sparse_states

H = 1 / math.sqrt(2)


def test_hong_ou_mandel_dip():
    out = apply_beam_splitter(basis_state(("a", "b"), (1, 1)), BeamSplitterSpec("a", "b", H, H))
    assert out.amplitude((1, 1)) == pytest.approx(0, abs=1e-15)
    assert abs(out.amplitude((2, 0))) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude((0, 2))) ** 2 == pytest.approx(0.5)


def test_single_photon_convention():
    out = apply_beam_splitter(basis_state(("a", "b"), (1, 0)), BeamSplitterSpec("a", "b", 0.6, 0.8j))
    assert out.amplitude((1, 0)) == pytest.approx(0.6)
    assert out.amplitude((0, 1)) == pytest.approx(0.8j)


def test_non_unitary_beam_splitter_rejected():
    with pytest.raises(SpecError):
        BeamSplitterSpec("a", "b", 0.9, 0.9)
    with pytest.raises(SpecError):
        BeamSplitterSpec.from_transmissivity("a", "b", 1.2)


@given(sparse_states(n_modes=3), st.floats(0, 1), st.floats(0, 2 * math.pi))
@settings(max_examples=80)
def test_beam_splitter_preserves_norm_and_photons(state, t, phase):
    r = math.sqrt(1 - t * t) * complex(math.cos(phase), math.sin(phase))
    out = apply_beam_splitter(state, BeamSplitterSpec("m0", "m2", t, r))
    assert norm(out) == pytest.approx(norm(state), abs=1e-12)
    assert set(out.photon_numbers()) <= set(state.photon_numbers())


@given(sparse_states(n_modes=2), st.floats(0, 1))
@settings(max_examples=50)
def test_beam_splitter_inverse_roundtrip(state, t):
    spec = BeamSplitterSpec.from_transmissivity("m0", "m1", t)
    back = apply_beam_splitter(apply_beam_splitter(state, spec), spec.inverse())
    assert abs(inner_product(state, back)) == pytest.approx(1.0, abs=1e-12)


def test_phase_shifter_on_number_states():
    s = FockState(("a",), [[0], [2]], [1.0, 1.0])
    out = apply_phase(s, PhaseShifterSpec("a", math.pi / 4))
    assert out.amplitude((2,)) == pytest.approx(1j)


@pytest.mark.parametrize("factory", [tritter_initial, tritter_final])
def test_tritters_unitary_and_decomposed(factory):
    tr = factory()
    assert tr.is_unitary()
    np.testing.assert_allclose(tr.step_matrix(), tr.matrix, atol=1e-12)
    np.testing.assert_allclose(tr.inverse().step_matrix(), tr.matrix.conj().T, atol=1e-12)


def test_tritter_first_columns():
    np.testing.assert_allclose(tritter_initial().matrix[:, 0], np.ones(3) / math.sqrt(3), atol=1e-15)
    np.testing.assert_allclose(tritter_final().matrix[:, 0], np.array([1, -1, 1]) / math.sqrt(3), atol=1e-15)


def test_tritter_matches_single_photon_matrix():
    tr = tritter_final()
    labels = ("s1", "s2", "s3")
    for j in range(3):
        occ = [0, 0, 0]
        occ[j] = 1
        out = apply_tritter(basis_state(labels, occ), tr)
        for i in range(3):
            row = [0, 0, 0]
            row[i] = 1
            assert out.amplitude(row) == pytest.approx(tr.matrix[i, j], abs=1e-14)


def test_tritter_two_photon_permanent():
    """Two-photon output amplitudes equal permanents of 2x2 submatrices."""
    tr = tritter_initial()
    out = apply_tritter(basis_state(("s1", "s2", "s3"), (1, 1, 0)), tr)
    u = tr.matrix
    # |1,0,1> output: perm of rows (0,2), cols (0,1)
    perm = u[0, 0] * u[2, 1] + u[0, 1] * u[2, 0]
    assert out.amplitude((1, 0, 1)) == pytest.approx(perm, abs=1e-14)
    perm_20 = u[0, 0] * u[0, 1] * 2 / math.sqrt(2)
    assert out.amplitude((2, 0, 0)) == pytest.approx(perm_20, abs=1e-14)


def test_spdc_first_order():
    out = apply_spdc(vacuum(("s", "i")), SpdcCrystalSpec("s", "i", 0.1, order=1))
    assert out.amplitudes == pytest.approx({(0, 0): 1.0, (1, 1): 0.1})


def test_spdc_warns_when_strong():
    with pytest.warns(UserWarning):
        SpdcCrystalSpec("s", "i", 1.5)


def test_spdc_invalid_order():
    with pytest.raises(SpecError):
        SpdcCrystalSpec("s", "i", 0.1, order=0)


def test_spdc_truncation_loss_recorded():
    policy = TruncationPolicy(max_total_photons=4)
    out = apply_spdc(vacuum(("s", "i"), policy), SpdcCrystalSpec("s", "i", 0.3, order=4))
    assert out.truncation_loss > 0
    assert out.photon_numbers().max() <= 4


def test_spdc_pair_cap_counts_discard():
    policy = TruncationPolicy(max_total_photons=12, max_expansion_order=1)
    out = apply_spdc(vacuum(("s", "i"), policy), SpdcCrystalSpec("s", "i", 0.3, order=3))
    assert out.photon_numbers().max() == 2
    assert out.order_discard > 0
    assert out.truncation_loss == 0


@pytest.mark.parametrize("xi", [0.05, 0.1j, 0.2 - 0.1j])
def test_oracle_matches_scipy_expm(xi):
    dim = 6
    lower = np.diag(np.sqrt(np.arange(1, dim)), k=1)
    a_s, a_i = np.kron(lower, np.eye(dim)), np.kron(np.eye(dim), lower)
    gen = xi * a_s.T @ a_i.T - np.conj(xi) * a_s @ a_i
    np.testing.assert_allclose(dense_exponential_oracle(SpdcCrystalSpec("s", "i", xi), dim), scipy.linalg.expm(gen), atol=1e-13)


def test_oracle_size_guard():
    with pytest.raises(ResourceError):
        dense_exponential_oracle(SpdcCrystalSpec("s", "i", 0.1), MAX_ORACLE_DIM + 1)


def _vacuum_column(spec, dim):
    out = apply_spdc(vacuum(("s", "i"), TruncationPolicy(max_total_photons=2 * dim)), spec)
    sparse = np.zeros(dim * dim, dtype=complex)
    for (ns, ni), a in out.amplitudes.items():
        if ns < dim and ni < dim:
            sparse[ns * dim + ni] = a
    return sparse


@pytest.mark.parametrize("xi,order", [(0.1, 4), (0.05, 6), (0.02, 6), (0.1j, 3)])
def test_spdc_remainder_bounded_by_next_order(xi, order):
    spec = SpdcCrystalSpec("s", "i", xi, order=order)
    dim = 12
    err = np.abs(_vacuum_column(spec, dim) - dense_exponential_oracle(spec, dim)[:, 0]).max()
    assert err <= 3.0 * abs(xi) ** (order + 1)


def test_spdc_order_six_remainder_coefficient():
    """The leading miss of the order-6 partial sum sits on |5,5>: tanh^5/cosh = xi^5 - (13/6) xi^7 + ..."""
    xi = 0.05
    out = apply_spdc(vacuum(("s", "i")), SpdcCrystalSpec("s", "i", xi, order=6))
    exact = math.tanh(xi) ** 5 / math.cosh(xi)
    assert out.amplitude((5, 5)) == pytest.approx(xi**5, rel=1e-12)
    assert (out.amplitude((5, 5)).real - exact) / xi**7 == pytest.approx(13 / 6, rel=1e-2)


@given(st.integers(0, 3), st.integers(0, 3), st.floats(-0.2, 0.2))
@settings(max_examples=40)
def test_spdc_conserves_photon_difference(ns, ni, xi):
    out = apply_spdc(basis_state(("s", "i"), (ns, ni)), SpdcCrystalSpec("s", "i", xi, order=3))
    assert set((out.occ[:, 0] - out.occ[:, 1]).tolist()) <= {ns - ni}
