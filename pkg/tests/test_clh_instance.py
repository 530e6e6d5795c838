# tests/test_clh_instance.py

import os
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

from src.core.errors import BadParams, NonCommuting, NormExceeded, NotClosed, NotHermitian, TooLarge, \
    WrongDimension
from src.core.linalg import pauli_matrix
from src.core.models import PLAQUETTE, STAR
from src.hamiltonian.clh_instance import DefectCoefficients, attach_terms, classicalize, defected_toric_instance, \
    exact_ground_energy, max_commutator_residual, pauli_form, scramble, site_qubits, surface_code_instance, \
    toric_instance
from src.lattice.surface_complex import planar_grid, torus_grid


class TestToricInstance(unittest.TestCase):

    def test_terms_commute(self):
        for n in (2, 3, 4):
            residual, _ = max_commutator_residual(toric_instance(torus_grid(n, n)))
            self.assertLess(residual, 1e-12)

    def test_two_by_two_ground_energy(self):
        self.assertAlmostEqual(exact_ground_energy(toric_instance(torus_grid(2, 2))), -8.0, places=9)

    def test_needs_closed_complex(self):
        with self.assertRaises(NotClosed):
            toric_instance(planar_grid(2, 2))

    def test_missing_sites_get_identity(self):
        instance = surface_code_instance(planar_grid(2, 2), identity_stars=[4])
        term = instance.terms[(STAR, 4)]
        self.assertTrue(np.allclose(term.matrix, np.eye(16)))
        self.assertEqual(instance.n, 12)

    def test_scramble_preserves_spectrum(self):
        instance = toric_instance(torus_grid(2, 2))
        scrambled = scramble(instance, 11)
        self.assertAlmostEqual(exact_ground_energy(scrambled), -8.0, places=8)
        residual, _ = max_commutator_residual(scrambled)
        self.assertLess(residual, 1e-9)

    def test_classicalize_keeps_terms_commuting(self):
        instance = classicalize(toric_instance(torus_grid(2, 2)), 0)
        residual, _ = max_commutator_residual(instance)
        self.assertLess(residual, 1e-12)
        for site in instance.sites_on(0):
            self.assertIsNotNone(pauli_form(instance.terms[site].matrix))


class TestValidation(unittest.TestCase):

    def setUp(self):
        self.complex_ = torus_grid(3, 3)
        self.star = (STAR, 0)
        self.dim = 2 ** len(site_qubits(self.complex_, self.star))

    def test_not_hermitian(self):
        matrix = np.zeros((self.dim, self.dim), dtype=complex)
        matrix[0, 1] = 0.5
        with self.assertRaises(NotHermitian):
            attach_terms(self.complex_, {self.star: matrix})

    def test_norm_exceeded(self):
        with self.assertRaises(NormExceeded) as ctx:
            attach_terms(self.complex_, {self.star: 2.0 * np.eye(self.dim)})
        self.assertAlmostEqual(ctx.exception.details["norm"], 2.0)

    def test_wrong_dimension(self):
        with self.assertRaises(WrongDimension):
            attach_terms(self.complex_, {self.star: np.eye(2)})

    def test_non_commuting_pair(self):
        plaquette = (PLAQUETTE, 0)
        term_map = {self.star: -pauli_matrix("ZZZZ"), plaquette: -pauli_matrix("XIII")}
        with self.assertRaises(NonCommuting) as ctx:
            attach_terms(self.complex_, term_map)
        self.assertGreater(ctx.exception.details["pairs"][0]["residual"], 1.0)

    def test_to_dict_of_error(self):
        with self.assertRaises(NormExceeded) as ctx:
            attach_terms(self.complex_, {self.star: 2.0 * np.eye(self.dim)})
        data = ctx.exception.to_dict()
        self.assertEqual(data["error"], "NormExceeded")


class TestPauliForm(unittest.TestCase):

    def test_pauli_term(self):
        a, b, letters = pauli_form(-pauli_matrix("ZZ"))
        self.assertAlmostEqual(a, 0.0)
        self.assertAlmostEqual(b, -1.0)
        self.assertEqual(letters, "ZZ")

    def test_shifted_pauli_term(self):
        a, b, letters = pauli_form(0.25 * np.eye(4) + 0.5 * pauli_matrix("XX"))
        self.assertAlmostEqual(a, 0.25)
        self.assertAlmostEqual(b, 0.5)
        self.assertEqual(letters, "XX")

    def test_scalar(self):
        self.assertEqual(pauli_form(0.5 * np.eye(4)), (0.5, 0.0, None))

    def test_sum_of_paulis_is_not_a_form(self):
        self.assertIsNone(pauli_form(0.5 * pauli_matrix("XI") + 0.5 * pauli_matrix("ZI")))


class TestDefectedInstance(unittest.TestCase):

    def test_one_flipped_star_costs_two(self):
        complex_ = torus_grid(2, 2)
        stars = {v: (0.0, -1.0) for v in complex_.vertex_ids}
        stars[0] = (0.0, 1.0)
        plaquettes = {f: (0.0, -1.0) for f in complex_.face_ids}
        instance = defected_toric_instance(complex_, DefectCoefficients(stars, plaquettes))
        self.assertAlmostEqual(exact_ground_energy(instance), -6.0, places=9)

    def test_zero_pauli_coefficient_rejected(self):
        complex_ = torus_grid(2, 2)
        stars = {v: (0.1, 0.0) for v in complex_.vertex_ids}
        plaquettes = {f: (0.0, -1.0) for f in complex_.face_ids}
        with self.assertRaises(BadParams) as ctx:
            defected_toric_instance(complex_, DefectCoefficients(stars, plaquettes))
        self.assertEqual(ctx.exception.to_dict()["error"], "BadParams")


class TestExactGroundEnergy(unittest.TestCase):

    def test_cap(self):
        config = {"caps": {"dense_max_qubits": 4, "sparse_max_qubits": 6}}
        with self.assertRaises(TooLarge):
            exact_ground_energy(toric_instance(torus_grid(2, 2)), config)

    def test_sparse_path_matches_dense(self):
        config = {"caps": {"dense_max_qubits": 4, "sparse_max_qubits": 12}}
        instance = toric_instance(torus_grid(2, 2))
        self.assertAlmostEqual(exact_ground_energy(instance, config), -8.0, places=7)

    def test_cache_directory(self):
        instance = toric_instance(torus_grid(2, 2))
        with tempfile.TemporaryDirectory() as directory:
            with patch.dict(os.environ, {"CLH2D_CACHE": directory}):
                first = exact_ground_energy(instance)
                self.assertEqual(len(os.listdir(directory)), 1)
                with patch("src.hamiltonian.clh_instance.exact_ground_state") as mock_state:
                    second = exact_ground_energy(instance)
                    mock_state.assert_not_called()
        self.assertAlmostEqual(first, second)


if __name__ == '__main__':
    unittest.main()
