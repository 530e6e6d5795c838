# src/core/abstractions.py
from abc import ABC, abstractmethod
from typing import Hashable, List, Sequence

import numpy as np

from .models import PauliString


class QuantumStateBackend(ABC):
    """
    An n-qubit state addressed by qubit labels (complex edge ids), owning its random stream.

    Every measurement draws exactly one uniform u from the stream and reports +1 when u < p(+1),
    so two backends holding the same state consume the stream identically.
    """

    name = "abstract"

    def __init__(self, qubits: Sequence[Hashable], rng: np.random.Generator):
        self.qubits: List[Hashable] = list(qubits)
        self.rng = rng
        self.last_probability = 1.0
        self._position = {q: i for i, q in enumerate(self.qubits)}

    @property
    def n(self) -> int:
        return len(self.qubits)

    def positions(self, qubits: Sequence[Hashable]) -> List[int]:
        return [self._position[q] for q in qubits]

    def _draw(self, p_plus: float) -> int:
        u = float(self.rng.random())
        return 1 if u < p_plus else -1

    @abstractmethod
    def measure(self, qubits: Sequence[Hashable], observable: np.ndarray) -> int:
        """Projectively measure a +-1 observable; the state collapses onto the outcome."""
        pass

    @abstractmethod
    def project(self, qubits: Sequence[Hashable], observable: np.ndarray, outcome: int) -> float:
        """Post-select the given outcome; returns its probability."""
        pass

    @abstractmethod
    def apply_pauli(self, pauli: PauliString) -> None:
        pass

    @abstractmethod
    def apply_local(self, qubits: Sequence[Hashable], unitary: np.ndarray) -> None:
        pass

    @abstractmethod
    def expectation(self, qubits: Sequence[Hashable], matrix: np.ndarray) -> float:
        pass

    @abstractmethod
    def pauli_expectation(self, pauli: PauliString) -> float:
        pass

    @abstractmethod
    def dump(self) -> dict:
        pass
