# src/backends/state_engine.py

import logging
from typing import Hashable, Optional, Sequence, Tuple, Union

import numpy as np

from src.backends.stabilizer_backend import StabilizerBackend
from src.backends.statevector_backend import StatevectorBackend
from src.core.abstractions import QuantumStateBackend
from src.core.config import DEFAULTS, cap, tolerance
from src.core.errors import BackendUnsupported, TooLarge
from src.core.models import StringOperator

STABILIZER = "stabilizer"
STATEVECTOR = "statevector"
AUTO = "auto"
BACKENDS = (AUTO, STABILIZER, STATEVECTOR)


def _labels(qubits: Union[int, Sequence[Hashable]]) -> list:
    if isinstance(qubits, (int, np.integer)):
        return list(range(int(qubits)))
    return list(qubits)


def init_product(qubits: Union[int, Sequence[Hashable]], backend: str = STABILIZER,
                 rng: Optional[np.random.Generator] = None, config: dict = None) -> QuantumStateBackend:
    """|0...0> on n qubits (or on the given qubit labels)."""
    config = config or DEFAULTS
    labels = _labels(qubits)
    if not labels:
        raise ValueError("a state needs at least one qubit")
    rng = rng if rng is not None else np.random.default_rng(0)
    if backend == STABILIZER:
        return StabilizerBackend(labels, rng, tolerance(config, "hermitian"))
    if backend == STATEVECTOR:
        limit = cap(config, "statevector_max_qubits")
        if len(labels) > limit:
            raise TooLarge(f"{len(labels)} qubits exceeds the statevector cap", {"n": len(labels), "cap": limit})
        return StatevectorBackend(labels, rng, tol=tolerance(config, "hermitian"))
    raise BackendUnsupported(f"unknown backend {backend}", {"backend": backend})


def from_vector(qubits: Sequence[Hashable], vector: np.ndarray, rng: Optional[np.random.Generator] = None,
                config: dict = None) -> StatevectorBackend:
    config = config or DEFAULTS
    rng = rng if rng is not None else np.random.default_rng(0)
    return StatevectorBackend(list(qubits), rng, vector, tol=tolerance(config, "hermitian"))


def measure_observable(state: QuantumStateBackend, qubits: Sequence[Hashable],
                       observable: np.ndarray) -> Tuple[int, QuantumStateBackend]:
    outcome = state.measure(qubits, observable)
    return outcome, state


def apply_string(state: QuantumStateBackend, op: StringOperator) -> QuantumStateBackend:
    state.apply_pauli(op.pauli)
    logging.debug(f"Applied {op.kind} on {len(op.support)} qubits")
    return state


def term_observable(matrix: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """2 pi - I, with pi the projector onto eigenvalues within tol of the minimum (+1 = satisfied)."""
    values, vectors = np.linalg.eigh(matrix)
    ground = vectors[:, values <= values[0] + tol]
    projector = ground @ ground.conj().T
    return 2.0 * projector - np.eye(matrix.shape[0])


def resolve_backend(requested: str, pauli_only: bool, n: int, config: dict = None) -> str:
    """auto picks the tableau for Pauli-only work and a statevector otherwise."""
    config = config or DEFAULTS
    if requested not in BACKENDS:
        raise BackendUnsupported(f"unknown backend {requested}", {"backend": requested})
    if requested == AUTO:
        return STABILIZER if pauli_only else STATEVECTOR
    if requested == STABILIZER and not pauli_only:
        raise BackendUnsupported("this run needs non-Pauli operations", {"backend": requested, "n": n})
    return requested
