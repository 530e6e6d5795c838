# tests/test_operator_algebra.py

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DimThree, NotAnticommuting
from src.core.linalg import X, Z, commutator_norm, expand_operator, haar_unitary, pauli_matrix
from src.core.models import PLAQUETTE, STAR
from src.hamiltonian.clh_instance import LocalTerm, pauli_form, scramble, toric_instance
from src.hamiltonian.operator_algebra import FULL, PAULI_LINE, TRIVIAL, OperatorAlgebra, algebra_report, \
    anticommute_normal_form, calibrate, classify_qubit_algebra, induced_algebra, operator_schmidt, \
    orthonormalize, qubit_class, span_contains, subspace_distance, two_qubit_structure
from src.lattice.surface_complex import torus_grid

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
pauli_words = st.text(alphabet="IXYZ", min_size=3, max_size=3)


def _random_hermitian(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (a + a.conj().T) / 2.0
    return h / np.linalg.norm(h, 2)


def qubit_class_of(matrix, qubit):
    return qubit_class(LocalTerm(STAR, 0, (0, 1), matrix), qubit)


class TestOperatorSchmidt(unittest.TestCase):

    def test_product_has_rank_one(self):
        schmidt = operator_schmidt((pauli_matrix("ZZ"), (0, 1)), [0])
        self.assertEqual(schmidt.rank, 1)
        self.assertTrue(np.allclose(schmidt.reconstruct(), pauli_matrix("ZZ")))

    def test_generic_term_has_full_rank(self):
        matrix = _random_hermitian(np.random.default_rng(3), 4)
        schmidt = operator_schmidt((matrix, ("a", "b")), ["a"])
        self.assertEqual(schmidt.rank, 4)
        self.assertTrue(np.allclose(schmidt.reconstruct(), matrix))

    def test_reconstruct_follows_left_then_right(self):
        matrix = np.kron(X, Z)
        schmidt = operator_schmidt((matrix, (0, 1)), [1])
        self.assertEqual(schmidt.left, (1,))
        self.assertTrue(np.allclose(schmidt.reconstruct(), np.kron(Z, X)))

    def test_unknown_left_qubit(self):
        with self.assertRaises(ValueError):
            operator_schmidt((pauli_matrix("ZZ"), (0, 1)), [7])

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_algebra_does_not_depend_on_qubit_order(self, seed):
        matrix = _random_hermitian(np.random.default_rng(seed), 8)
        swapped = expand_operator(matrix, (0, 1, 2), (2, 0, 1))
        a = induced_algebra((matrix, (0, 1, 2)), [0, 1])
        b = induced_algebra((swapped, (2, 0, 1)), [0, 1])
        self.assertLess(subspace_distance(a.basis, b.basis), 1e-7)


class TestQubitClasses(unittest.TestCase):

    def test_trivial(self):
        self.assertEqual(qubit_class_of(pauli_matrix("IZ"), 0).tag, TRIVIAL)

    def test_full(self):
        matrix = _random_hermitian(np.random.default_rng(5), 4)
        self.assertEqual(qubit_class_of(matrix, 0).tag, FULL)

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_product_term_induces_pauli_line(self, seed):
        rng = np.random.default_rng(seed)
        a = _random_hermitian(rng, 2)
        b = _random_hermitian(rng, 2)
        cls = qubit_class_of(np.kron(a, b), 0)
        self.assertEqual(cls.tag, PAULI_LINE)
        g = cls.generator
        self.assertTrue(np.allclose(g @ g, np.eye(2), atol=1e-8))
        self.assertAlmostEqual(abs(np.trace(g)), 0.0, places=8)
        self.assertTrue(np.allclose(g @ a, a @ g, atol=1e-8))

    def test_dimension_three_is_rejected(self):
        basis = orthonormalize([np.eye(2), np.diag([1.0, 0.0]), np.array([[0, 1], [0, 0]])])
        with self.assertRaises(DimThree):
            classify_qubit_algebra(OperatorAlgebra((0,), basis))

    @settings(max_examples=40, deadline=None)
    @given(pauli_words, pauli_words)
    def test_pauli_strings_commute_iff_even_overlap(self, p, q):
        clashes = sum(1 for a, b in zip(p, q) if a != "I" and b != "I" and a != b)
        residual = commutator_norm(pauli_matrix(p), (0, 1, 2), pauli_matrix(q), (0, 1, 2))
        self.assertEqual(residual < 1e-9, clashes % 2 == 0)


class TestNormalForm(unittest.TestCase):

    def test_regular_pair(self):
        v = haar_unitary(np.random.default_rng(9))
        c = v @ Z @ v.conj().T
        d = v @ X @ v.conj().T
        form = anticommute_normal_form(c, d)
        self.assertTrue(form.regular)
        u = form.unitary
        self.assertTrue(np.allclose(u.conj().T @ c @ u, Z, atol=1e-8))
        self.assertTrue(np.allclose(u.conj().T @ d @ u, X, atol=1e-8))

    def test_complementary_projectors(self):
        form = anticommute_normal_form(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
        self.assertFalse(form.regular)

    def test_commuting_pair_rejected(self):
        with self.assertRaises(NotAnticommuting):
            anticommute_normal_form(Z, Z)


class TestCalibration(unittest.TestCase):

    def test_toric_instance_is_already_calibrated(self):
        self.assertTrue(calibrate(toric_instance(torus_grid(2, 2))).is_identity())

    def test_scrambled_instance_returns_to_pauli_form(self):
        instance = scramble(toric_instance(torus_grid(3, 3)), 4)
        calibration = calibrate(instance)
        self.assertFalse(calibration.is_identity())
        calibrated = calibration.apply(instance)
        for site in calibrated.sites:
            form = pauli_form(calibrated.terms[site].matrix, 1e-7)
            self.assertIsNotNone(form)
            self.assertEqual(form[2], ("Z" if site[0] == STAR else "X") * 4)
        star = calibrated.terms[(STAR, 0)]
        self.assertEqual(two_qubit_structure(calibrated, (STAR, 0), star.qubits[0], star.qubits[1]).tag, "ZZ")
        plaquette = calibrated.terms[(PLAQUETTE, 0)]
        report = two_qubit_structure(calibrated, (PLAQUETTE, 0), plaquette.qubits[0], plaquette.qubits[2])
        self.assertEqual(report.tag, "XX")

    def test_algebra_report(self):
        instance = toric_instance(torus_grid(2, 2))
        report = algebra_report(instance, calibrate(instance))
        self.assertEqual(len(report), instance.n)
        entry = report["0"]
        self.assertIn("calibration", entry)
        self.assertTrue(all(value.startswith("pauli_line") for value in entry["terms"].values()))

    def test_line_membership(self):
        algebra = induced_algebra((pauli_matrix("ZZZ"), (0, 1, 2)), [0, 1])
        self.assertTrue(span_contains(algebra.basis, pauli_matrix("ZZ")))
        self.assertFalse(span_contains(algebra.basis, pauli_matrix("ZI")))


if __name__ == '__main__':
    unittest.main()
