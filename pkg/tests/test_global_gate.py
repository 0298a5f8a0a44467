import itertools
import math

import numpy as np
import pytest

from conftest import cz_product_diagonal, random_vector
from ionqec import _kernels
from ionqec.global_gate import (
    OdfParams,
    apply_com_evolution,
    apply_u_pairwise,
    apply_u_phase_polynomial,
    com_eigenphase,
    entangling_time,
    phase_uncertainty,
    undo_v_correction,
    v_correction_angle,
)
from ionqec.statevector import StateError, StateVector, fidelity, prepare_product
from ionqec.verification import tuned_odf

IMPLS = [pytest.param(_kernels.numpy_impl, id="numpy")]
if _kernels.numba_impl is not None:
    IMPLS.append(pytest.param(_kernels.numba_impl, id="numba"))


@pytest.fixture(params=IMPLS)
def kernel(request, monkeypatch):
    monkeypatch.setattr(_kernels, "active", request.param)
    return request.param


def basis(n, bits):
    return prepare_product([(range(n), "0")]) if not bits else StateVector(
        n, np.eye(1 << n, dtype=complex)[sum(1 << q for q in bits)]
    )


def test_single_cz(kernel):
    sv = apply_u_pairwise(basis(2, [0, 1]))
    assert np.allclose(sv.amplitudes, [0, 0, 0, -1])


def test_three_pairs_give_minus(kernel):
    sv = apply_u_pairwise(basis(3, [0, 1, 2]))
    assert sv.amplitudes[7] == pytest.approx(-1)


@pytest.mark.parametrize("bits", [[], [0], [2]])
def test_low_weight_unchanged(kernel, bits):
    a = basis(3, bits)
    assert np.allclose(apply_u_pairwise(a.copy()).amplitudes, a.amplitudes)
    assert np.allclose(apply_u_phase_polynomial(a.copy()).amplitudes, a.amplitudes)


@pytest.mark.parametrize("w,sign", [(0, 1), (1, 1), (2, -1), (3, -1), (4, 1), (5, 1), (6, -1)])
def test_phase_polynomial_by_weight(kernel, w, sign):
    sv = apply_u_phase_polynomial(basis(7, list(range(w))))
    assert sv.amplitudes[(1 << w) - 1] == pytest.approx(sign)


def test_polynomial_matches_cz_oracle(kernel, rng):
    for n in range(1, 9):
        v = random_vector(n, rng)
        out = apply_u_phase_polynomial(StateVector(n, v.copy()))
        assert np.allclose(out.amplitudes, cz_product_diagonal(n) * v, atol=1e-12)


def test_subset_targets_match_oracle(kernel, rng):
    v = random_vector(6, rng)
    targets = [0, 2, 5]
    diag = cz_product_diagonal(6, targets)
    assert np.allclose(apply_u_pairwise(StateVector(6, v.copy()), targets).amplitudes, diag * v)
    assert np.allclose(apply_u_phase_polynomial(StateVector(6, v.copy()), targets).amplitudes, diag * v)


def test_random_eight_qubit_equivalence(kernel, rng):
    v = random_vector(8, rng)
    a = apply_u_pairwise(StateVector(8, v.copy()))
    b = apply_u_phase_polynomial(StateVector(8, v.copy()))
    assert fidelity(a, b) == pytest.approx(1, abs=1e-12)


def test_u_diagonal_and_involutive(kernel, rng):
    v = random_vector(5, rng)
    once = apply_u_phase_polynomial(StateVector(5, v.copy()))
    assert np.allclose(once.probabilities(), np.abs(v) ** 2)
    twice = apply_u_phase_polynomial(once)
    assert np.allclose(twice.amplitudes, v, atol=1e-12)


def test_u_rejects_bad_targets():
    with pytest.raises(StateError):
        apply_u_pairwise(basis(2, []), [0, 4])
    with pytest.raises(StateError):
        apply_u_phase_polynomial(basis(2, []), [])


def test_odf_derived_quantities():
    p = OdfParams(3.0, -1.0, 2.0, 5.0, 7.0, 2, 4)
    assert p.delta == 2.0
    assert p.force == 2.0
    assert p.r_imbalance == pytest.approx(0.5)
    assert p.j_strength == pytest.approx(4.0 / (4 * 2 * 5 * 2))
    assert p.a_coeff == pytest.approx(2 * 1.5 * 3)
    assert p.gate_time == pytest.approx(2 * math.pi)
    assert OdfParams.balanced(1.0, 1.0, 1.0, 2.0).r_imbalance == 0


@pytest.mark.parametrize("kwargs", [dict(mu_l=1.0), dict(k_loops=0), dict(f1=1.0), dict(mu_l=0.5)])
def test_odf_validation(kwargs):
    base = dict(f0=1.0, f1=-1.0, mass=1.0, omega1=1.0, mu_l=2.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        OdfParams(**base)


def test_eigenphase_matches_direct_zz():
    # (J/N) sum_{j<k} Z_j Z_k on |110> with R = 0; compare differences of eigenvalues.
    p = OdfParams.balanced(1.0, 1.0, 1.0, 1.5, n_ions=3)
    n, j = 3, p.j_strength

    def direct(bits):
        z = [1 - 2 * b for b in bits]
        return j / n * sum(z[a] * z[b] for a, b in itertools.combinations(range(n), 2))

    ref = direct((0, 0, 0))
    for bits in [(1, 1, 0), (1, 0, 0), (1, 1, 1)]:
        w = sum(bits)
        assert com_eigenphase(w, p) - com_eigenphase(0, p) == pytest.approx(direct(bits) - ref)


def test_eigenphase_permutation_symmetric():
    p = tuned_odf(4, 0.2)
    a = StateVector(4, np.eye(16, dtype=complex)[0b0011])
    b = StateVector(4, np.eye(16, dtype=complex)[0b1010])
    apply_com_evolution(a, p, 0.9)
    apply_com_evolution(b, p, 0.9)
    assert a.amplitudes[0b0011] == pytest.approx(b.amplitudes[0b1010])


def test_com_evolution_zero_time_is_identity(rng):
    v = random_vector(3, rng)
    out = apply_com_evolution(StateVector(3, v.copy()), tuned_odf(3), 0.0)
    assert np.allclose(out.amplitudes, v)


def test_com_evolution_requires_whole_crystal(rng):
    with pytest.raises(StateError):
        apply_com_evolution(StateVector(2, random_vector(2, rng)), tuned_odf(3), 0.1)


def test_two_ion_com_is_vu(kernel, rng):
    p = tuned_odf(2)
    t, k, l = entangling_time(p)
    assert 4 * p.j_strength * t / 2 == pytest.approx(math.pi)
    v = random_vector(2, rng)
    out = undo_v_correction(apply_com_evolution(StateVector(2, v.copy()), p, t), p, t)
    assert fidelity(out.amplitudes, cz_product_diagonal(2) * v) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("r", [0.0, 0.6, -1.0])
def test_com_matches_u_after_v_correction(kernel, rng, r):
    for n in range(1, 8):
        p = tuned_odf(n, r)
        t, _, _ = entangling_time(p)
        v = random_vector(n, rng)
        out = undo_v_correction(apply_com_evolution(StateVector(n, v.copy()), p, t), p, t)
        assert fidelity(out.amplitudes, cz_product_diagonal(n) * v) == pytest.approx(1, abs=1e-9)


def test_entangling_time_pretuned():
    p = tuned_odf(4)
    t, k, l = entangling_time(p)
    assert (k, l) == (1, 0)
    assert t == pytest.approx(2 * math.pi / p.delta)


def _with_j(j, delta=0.5, n=4):
    # J = F^2 / (4 M w delta) with F = w = 1, solved for M
    return OdfParams.balanced(1.0, 1.0 / (4 * delta * j), 1.0, 1.0 + delta, n_ions=n)


def test_entangling_time_halves_when_j_doubles():
    delta, n = 0.5, 4
    t_slow, k_slow, l_slow = entangling_time(_with_j(delta * n / 16, delta, n))
    t_fast, k_fast, l_fast = entangling_time(_with_j(delta * n / 8, delta, n))
    assert (l_slow, l_fast) == (0, 0)
    assert (k_slow, k_fast) == (2, 1)
    assert t_fast == pytest.approx(t_slow / 2)


def test_entangling_time_incompatible():
    p = OdfParams.balanced(1.0, 1.0, 1.0, 1.0 + math.sqrt(2 / 3) * 1.0001, n_ions=3)
    with pytest.raises(ValueError):
        entangling_time(p, k_bound=50, l_bound=3)


def test_v_angle_balanced_and_cancelled():
    p = tuned_odf(5)
    assert v_correction_angle(p, 0.3) == pytest.approx(2 * 4 * p.j_strength * 0.3 / 5)
    assert v_correction_angle(tuned_odf(5, -1.0), 0.3) == 0


@pytest.mark.parametrize("eps,expect", [(0, 0), (0.01, 0.0201), (0.1, 0.21)])
def test_phase_uncertainty(eps, expect):
    assert phase_uncertainty(eps).eps_phi == pytest.approx(expect)


def test_phase_uncertainty_negative():
    with pytest.raises(ValueError):
        phase_uncertainty(-0.1)
