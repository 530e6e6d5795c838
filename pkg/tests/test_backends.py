# tests/test_backends.py

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.backends.stabilizer_backend import bits_pauli, destabilizers, independent_rows, pauli_bits, \
    signed_pauli, symplectic
from src.backends.state_engine import STABILIZER, STATEVECTOR, apply_string, from_vector, init_product, \
    measure_observable, resolve_backend, term_observable
from src.core.errors import BackendUnsupported, BadSpectrum, StateError, TooLarge
from src.core.linalg import H, X, Z, pauli_matrix
from src.core.models import PLAQUETTE, STAR, PauliString, StringOperator
from src.core.rng import derive_rng
from src.hamiltonian.clh_instance import toric_instance
from src.lattice.surface_complex import torus_grid


def _random_pauli(rng, n):
    while True:
        letters = "".join(rng.choice(list("IXYZ"), size=n))
        if set(letters) != {"I"}:
            return letters, int(rng.choice([1, -1]))


class TestInitProduct(unittest.TestCase):

    def test_stabilizer_product_state(self):
        state = init_product(3, STABILIZER)
        self.assertEqual(state.dump()["stabilizers"], ["+ZII", "+IZI", "+IIZ"])

    def test_statevector_product_state(self):
        state = init_product(["a", "b"], STATEVECTOR)
        self.assertEqual(state.qubits, ["a", "b"])
        self.assertTrue(np.allclose(state.psi, [1, 0, 0, 0]))

    def test_empty_state(self):
        with self.assertRaises(ValueError):
            init_product([], STABILIZER)

    def test_statevector_cap(self):
        with self.assertRaises(TooLarge):
            init_product(30, STATEVECTOR)

    def test_unknown_backend(self):
        with self.assertRaises(BackendUnsupported):
            init_product(2, "tensor-network")

    def test_from_vector_normalizes(self):
        state = from_vector([0], np.array([3.0, 4.0]))
        self.assertAlmostEqual(state.expectation([0], Z), (9 - 16) / 25)


class TestMeasurement(unittest.TestCase):

    def test_z_on_zero_is_deterministic(self):
        for backend in (STABILIZER, STATEVECTOR):
            state = init_product(2, backend)
            outcome, same = measure_observable(state, [1], Z)
            self.assertEqual(outcome, 1)
            self.assertIs(same, state)
            self.assertEqual(state.last_probability, 1.0)

    def test_x_on_zero_is_a_fair_coin(self):
        rng = derive_rng(5, "coin")
        trials = 4000
        plus = 0
        for _ in range(trials):
            state = init_product(1, STABILIZER, rng)
            plus += state.measure([0], X) > 0
        self.assertLess(abs(plus / trials - 0.5), 0.05)

    def test_repeated_measurement_agrees(self):
        for backend in (STABILIZER, STATEVECTOR):
            state = init_product(3, backend, derive_rng(1, backend))
            first = state.measure([0, 2], pauli_matrix("XY"))
            self.assertEqual(state.measure([0, 2], pauli_matrix("XY")), first)
            self.assertAlmostEqual(state.expectation([0, 2], pauli_matrix("XY")), first)

    def test_project_returns_probability(self):
        state = init_product(1, STATEVECTOR)
        self.assertAlmostEqual(state.project([0], X, -1), 0.5)
        self.assertAlmostEqual(state.expectation([0], X), -1.0)
        tableau = init_product(1, STABILIZER)
        with self.assertRaises(StateError):
            tableau.project([0], Z, -1)

    def test_bad_spectrum(self):
        for backend in (STABILIZER, STATEVECTOR):
            with self.assertRaises(BadSpectrum):
                init_product(1, backend).measure([0], 0.5 * Z)

    def test_tableau_rejects_non_pauli(self):
        state = init_product(1, STABILIZER)
        with self.assertRaises(BackendUnsupported):
            state.measure([0], H)
        with self.assertRaises(BackendUnsupported):
            state.apply_local([0], H)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    def test_backends_agree_on_pauli_sequences(self, seed):
        n = 4
        plan = np.random.default_rng(seed)
        tableau = init_product(n, STABILIZER, derive_rng(seed, "run"))
        vector = init_product(n, STATEVECTOR, derive_rng(seed, "run"))
        qubits = list(range(n))
        for _ in range(12):
            letters, sign = _random_pauli(plan, n)
            observable = sign * pauli_matrix(letters)
            self.assertEqual(tableau.measure(qubits, observable), vector.measure(qubits, observable))
        for _ in range(6):
            letters, _ = _random_pauli(plan, n)
            observable = PauliString(tuple(qubits), letters)
            self.assertAlmostEqual(tableau.pauli_expectation(observable), vector.pauli_expectation(observable), places=9)


class TestPauliStrings(unittest.TestCase):

    def test_bits_round_trip_keeps_sign(self):
        pauli = PauliString((0, 1, 2), "XYZ", -1)
        k, x, z = pauli_bits(pauli, {0: 0, 1: 1, 2: 2}, 3)
        self.assertEqual(k, 3)
        back = bits_pauli(k, x, z, (0, 1, 2))
        self.assertEqual((back.letters, back.sign), ("XYZ", -1))

    def test_signed_pauli(self):
        pauli = signed_pauli((4, 5), -pauli_matrix("ZZ"))
        self.assertEqual((pauli.letters, pauli.sign), ("ZZ", -1))
        self.assertIsNone(signed_pauli((4, 5), pauli_matrix("ZZ") + pauli_matrix("XX")))

    def test_string_is_an_involution(self):
        op = StringOperator("PathX", (STAR, 0), (0, 2), "XX")
        vector = init_product(3, STATEVECTOR, derive_rng(2, "sv"))
        vector.apply_local([1], H)
        before = vector.psi.copy()
        apply_string(apply_string(vector, op), op)
        self.assertTrue(np.allclose(vector.psi, before))
        tableau = init_product(3, STABILIZER)
        apply_string(tableau, op)
        self.assertEqual(tableau.dump()["stabilizers"], ["-ZII", "+IZI", "-IIZ"])
        apply_string(tableau, op)
        self.assertEqual(tableau.dump()["stabilizers"], ["+ZII", "+IZI", "+IIZ"])

    def test_term_observable(self):
        self.assertTrue(np.allclose(term_observable(-pauli_matrix("ZZ")), pauli_matrix("ZZ")))
        self.assertTrue(np.allclose(term_observable(0.5 * np.eye(2) + 0.5 * Z), -Z))

    def test_destabilizers_of_toric_generators(self):
        instance = toric_instance(torus_grid(3, 3))
        index = {q: i for i, q in enumerate(instance.qubits)}
        rows = []
        for site in instance.sites:
            letter = "Z" if site[0] == STAR else "X"
            qubits = instance.terms[site].qubits
            _, x, z = pauli_bits(PauliString(tuple(qubits), letter * len(qubits)), index, instance.n)
            rows.append(np.concatenate([x, z]))
        rows = np.array(rows, dtype=np.uint8)
        chosen = independent_rows(rows)
        self.assertEqual(len(chosen), 16)
        generators = rows[chosen]
        d = destabilizers(generators)
        n = instance.n
        for i in range(len(chosen)):
            for j in range(len(chosen)):
                product = symplectic(d[i, :n], d[i, n:], generators[j, :n], generators[j, n:])
                self.assertEqual(product, int(i == j))
        self.assertIn((PLAQUETTE, 0), instance.sites)

    def test_resolve_backend(self):
        self.assertEqual(resolve_backend("auto", True, 40), STABILIZER)
        self.assertEqual(resolve_backend("auto", False, 8), STATEVECTOR)
        self.assertEqual(resolve_backend(STATEVECTOR, True, 8), STATEVECTOR)
        with self.assertRaises(BackendUnsupported):
            resolve_backend(STABILIZER, False, 8)
        with self.assertRaises(BackendUnsupported):
            resolve_backend("gpu", True, 8)


if __name__ == '__main__':
    unittest.main()
