"""
Tests for the Fock basis, ladder words and the banded Hamiltonian.
"""

import math

import numpy as np
import pytest

from bec2.errors import BasisMismatch, ProjectionOutOfRange, SectorViolation
from bec2.fock import (
    FockBasis,
    HermitianOperator,
    OperatorWord,
    StateVector,
    apply_word,
    assemble_from_words,
    build_hamiltonian,
    hamiltonian_words,
    jz_operator,
    m_operator,
    raising_matrix,
)
from bec2.model import CanonicalParams


def fock_state(two_j: int, n_a: int) -> StateVector:
    basis = FockBasis(two_j)
    return StateVector.basis_state(basis, 2 * n_a - two_j)


# ==================================================
# 1. BASIS AND STATES
# ==================================================

class TestFockBasis:
    """
    Index bookkeeping on the 2j-particle sector
    """

    def test_labels(self):
        basis = FockBasis(2)
        assert basis.dim == 3
        np.testing.assert_array_equal(basis.n_a, [0, 1, 2])
        np.testing.assert_array_equal(basis.n_b, [2, 1, 0])
        np.testing.assert_array_equal(basis.two_k, [-2, 0, 2])

    def test_half_integer_spin(self):
        basis = FockBasis(3)
        np.testing.assert_array_equal(basis.k, [-1.5, -0.5, 0.5, 1.5])
        assert basis.index_of(1) == 2

    @pytest.mark.parametrize("two_j,two_k", [(4, 6), (4, -6), (4, 1), (3, 2)])
    def test_projection_out_of_range(self, two_j, two_k):
        """
        |k| > j or the wrong parity of 2k is rejected
        """
        with pytest.raises(ProjectionOutOfRange) as exc_info:
            FockBasis(two_j).index_of(two_k)
        assert exc_info.value.exit_code == 2

    def test_negative_two_j(self):
        with pytest.raises(ValueError):
            FockBasis(-2)

    def test_basis_mismatch(self):
        with pytest.raises(BasisMismatch):
            FockBasis(4).check_same(FockBasis(5))

    def test_state_shape_checked(self):
        with pytest.raises(ValueError):
            StateVector(FockBasis(2), np.ones(4))

    def test_normalized(self):
        s = StateVector(FockBasis(1), [3.0, 4.0]).normalized()
        assert s.norm() == pytest.approx(1.0)
        np.testing.assert_allclose(s.amps, [0.6, 0.8])
        with pytest.raises(ValueError):
            StateVector(FockBasis(1), [0.0, 0.0]).normalized()


# ==================================================
# 2. LADDER WORDS
# ==================================================

class TestApplyWord:
    """
    Exact bosonic algebra on Fock states
    """

    def test_hopping(self):
        """
        a+ b |0, 2> = sqrt(2) |1, 1>
        """
        out = apply_word(OperatorWord.parse("a+ b"), fock_state(2, 0))
        np.testing.assert_allclose(out.amps, [0.0, math.sqrt(2.0), 0.0])

    def test_one_particle_exchange(self):
        """
        (a+ a+ a b - a+ b+ b b) |1, 1> = sqrt(2) |2, 0>
        """
        s = fock_state(2, 1)
        out = apply_word(OperatorWord.parse("a+ a+ a b"), s).amps
        out = out + apply_word(OperatorWord.parse("a+ b+ b b", -1.0), s).amps
        np.testing.assert_allclose(out, [0.0, 0.0, math.sqrt(2.0)])

    def test_two_particle_exchange(self):
        """
        a+ a+ b b |0, 2> = 2 |2, 0>
        """
        out = apply_word(OperatorWord.parse("a+ a+ b b"), fock_state(2, 0))
        np.testing.assert_allclose(out.amps, [0.0, 0.0, 2.0])

    def test_annihilating_empty_mode(self):
        """
        Lowering an empty mode gives the zero vector
        """
        out = apply_word(OperatorWord.parse("b+ a"), fock_state(3, 0))
        assert out.norm() == 0.0

    def test_prefactor(self):
        out = apply_word(OperatorWord.parse("a+ a", 0.5j), fock_state(4, 3))
        assert out.amps[3] == pytest.approx(1.5j)

    @pytest.mark.parametrize("text", ["a+", "a+ b+", "a a b+"])
    def test_sector_violation(self, text):
        """
        Words that change the particle number are refused
        """
        with pytest.raises(SectorViolation):
            apply_word(OperatorWord.parse(text), fock_state(2, 1))

    def test_word_text(self):
        assert str(OperatorWord.parse("a+ a+ b b")) == "a+ a+ b b"
        assert str(OperatorWord(())) == "1"


# ==================================================
# 3. HAMILTONIAN
# ==================================================

class TestBuildHamiltonian:
    """
    Closed-form band against the ladder-word oracle
    """

    @pytest.mark.parametrize("phi", [0.0, 0.7, 2.1])
    @pytest.mark.parametrize("two_j", [0, 1, 2, 5, 8])
    def test_band_matches_words(self, two_j, phi, rng):
        """
        Every entry of the band equals the word-by-word assembly
        """
        basis = FockBasis(two_j)
        for _ in range(20):
            c = CanonicalParams(
                a0=rng.normal(), delta_omega=rng.normal(), lam=rng.normal(), phi=phi,
                u_cross=rng.normal(), mu=rng.normal(), lambda2=rng.normal(), two_j=two_j,
            )
            banded = build_hamiltonian(c).dense()
            oracle = assemble_from_words(hamiltonian_words(c), basis)
            scale = max(float(np.max(np.abs(oracle))), 1.0)
            assert float(np.max(np.abs(banded - oracle))) <= 1e-13 * scale

    def test_hermitian(self):
        c = CanonicalParams(lam=1.0, mu=0.3, lambda2=-0.2, phi=0.9, u_cross=2.0, two_j=7)
        h = build_hamiltonian(c).dense()
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)

    def test_zero_coefficients(self):
        h = build_hamiltonian(CanonicalParams(two_j=6))
        assert h.max_abs() == 0.0
        np.testing.assert_array_equal(h.dense(), np.zeros((7, 7)))

    def test_phase_recorded(self):
        h = build_hamiltonian(CanonicalParams(lam=1.0, phi=0.4, two_j=3))
        assert h.is_banded
        assert h.phase == pytest.approx(0.4)

    def test_matvec_matches_dense(self, rng):
        c = CanonicalParams(delta_omega=0.3, lam=1.1, mu=0.2, lambda2=0.5, u_cross=-1.0, phi=1.3, two_j=9)
        h = build_hamiltonian(c)
        v = rng.normal(size=10) + 1j * rng.normal(size=10)
        np.testing.assert_allclose(h.matvec(v), h.dense() @ v, atol=1e-12)

    def test_expectation(self):
        h = m_operator(FockBasis(4))
        assert h.expectation(fock_state(4, 4)) == pytest.approx(4.0)


class TestOperators:
    """
    Fixed observables on the sector
    """

    def test_m_operator_spin_half(self):
        np.testing.assert_array_equal(m_operator(FockBasis(1)).dense().real, np.diag([-1.0, 1.0]))

    def test_m_operator_spin_one(self):
        np.testing.assert_array_equal(m_operator(FockBasis(2)).dense().real, np.diag([-2.0, 0.0, 2.0]))

    def test_jz_is_half_m(self):
        basis = FockBasis(5)
        np.testing.assert_allclose(2.0 * jz_operator(basis).dense(), m_operator(basis).dense())

    def test_raising_matrix(self):
        """
        a+ b equals the hopping word
        """
        basis = FockBasis(4)
        oracle = assemble_from_words([OperatorWord.parse("a+ b")], basis)
        np.testing.assert_allclose(raising_matrix(basis), oracle)

    def test_dense_operator_is_symmetrized(self):
        m = np.array([[1.0, 2.0], [0.0, 1.0]])
        h = HermitianOperator.from_dense(FockBasis(1), m)
        np.testing.assert_allclose(h.dense(), [[1.0, 1.0], [1.0, 1.0]])

    def test_operator_needs_one_storage(self):
        with pytest.raises(ValueError):
            HermitianOperator(basis=FockBasis(1))
