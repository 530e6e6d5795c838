# src/backends/statevector_backend.py

from typing import Hashable, Optional, Sequence

import numpy as np

from src.core.abstractions import QuantumStateBackend
from src.core.errors import BadSpectrum, StateError
from src.core.linalg import PAULIS, apply_local
from src.core.models import PauliString

# Probabilities this close to 0, 1/2 or 1 are snapped so both backends compare u against the same number.
_SNAP = 1e-12


def _snap(p: float) -> float:
    for anchor in (0.0, 0.5, 1.0):
        if abs(p - anchor) <= _SNAP:
            return anchor
    return p


class StatevectorBackend(QuantumStateBackend):
    """Dense 2^n amplitudes; qubit 0 is the most significant tensor factor."""

    name = "statevector"

    def __init__(self, qubits: Sequence[Hashable], rng: np.random.Generator,
                 vector: Optional[np.ndarray] = None, tol: float = 1e-9):
        super().__init__(qubits, rng)
        self.tol = tol
        if vector is None:
            self.psi = np.zeros(2 ** self.n, dtype=complex)
            self.psi[0] = 1.0
        else:
            vector = np.asarray(vector, dtype=complex).reshape(-1)
            if vector.shape[0] != 2 ** self.n:
                raise StateError(f"vector of length {vector.shape[0]} does not hold {self.n} qubits")
            self.psi = vector / np.linalg.norm(vector)

    def _apply(self, qubits: Sequence[Hashable], matrix: np.ndarray) -> np.ndarray:
        return apply_local(self.psi, np.asarray(matrix, dtype=complex), self.positions(qubits), self.n)

    def _plus_part(self, qubits: Sequence[Hashable], observable: np.ndarray) -> np.ndarray:
        observable = np.asarray(observable, dtype=complex)
        if np.linalg.norm(observable - observable.conj().T) > self.tol:
            raise BadSpectrum("observable is not Hermitian", {"qubits": list(qubits)})
        values = np.linalg.eigvalsh(observable)
        if np.any(np.abs(np.abs(values) - 1.0) > self.tol):
            raise BadSpectrum("observable spectrum is not contained in {+1, -1}",
                              {"qubits": list(qubits), "eigenvalues": [float(v) for v in values]})
        projector = (np.eye(observable.shape[0]) + observable) / 2.0
        return self._apply(qubits, projector)

    def _collapse(self, plus: np.ndarray, outcome: int, probability: float) -> None:
        part = plus if outcome > 0 else self.psi - plus
        if probability <= 0.0:
            raise StateError("outcome has probability zero")
        self.psi = part / np.sqrt(probability)

    def measure(self, qubits: Sequence[Hashable], observable: np.ndarray) -> int:
        plus = self._plus_part(qubits, observable)
        p_plus = _snap(float(np.vdot(plus, plus).real))
        outcome = self._draw(p_plus)
        probability = p_plus if outcome > 0 else 1.0 - p_plus
        self.last_probability = probability
        self._collapse(plus, outcome, probability)
        return outcome

    def project(self, qubits: Sequence[Hashable], observable: np.ndarray, outcome: int) -> float:
        plus = self._plus_part(qubits, observable)
        p_plus = _snap(float(np.vdot(plus, plus).real))
        probability = p_plus if outcome > 0 else 1.0 - p_plus
        self._collapse(plus, outcome, probability)
        return probability

    def apply_pauli(self, pauli: PauliString) -> None:
        for q, letter in zip(pauli.qubits, pauli.letters):
            if letter != "I":
                self.psi = self._apply((q,), PAULIS[letter])
        if pauli.sign < 0:
            self.psi = -self.psi

    def apply_local(self, qubits: Sequence[Hashable], unitary: np.ndarray) -> None:
        self.psi = self._apply(qubits, unitary)

    def expectation(self, qubits: Sequence[Hashable], matrix: np.ndarray) -> float:
        return float(np.vdot(self.psi, self._apply(qubits, matrix)).real)

    def pauli_expectation(self, pauli: PauliString) -> float:
        phi = self.psi
        for q, letter in zip(pauli.qubits, pauli.letters):
            if letter != "I":
                phi = apply_local(phi, PAULIS[letter], self.positions((q,)), self.n)
        return float(pauli.sign * np.vdot(self.psi, phi).real)

    def fidelity(self, other: "StatevectorBackend") -> float:
        return float(abs(np.vdot(self.psi, other.psi)) ** 2)

    def dump(self) -> dict:
        return {
            "backend": self.name,
            "qubits": list(self.qubits),
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.psi],
        }
