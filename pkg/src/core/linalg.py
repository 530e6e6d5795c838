# src/core/linalg.py

import itertools
from functools import lru_cache, reduce
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    if not factors:
        return np.eye(1, dtype=complex)
    return reduce(np.kron, factors)


def pauli_matrix(letters: str) -> np.ndarray:
    return kron_all([PAULIS[c] for c in letters])


@lru_cache(maxsize=8)
def pauli_basis(r: int) -> Tuple[Tuple[str, ...], np.ndarray]:
    """Labels and stacked matrices of all 4^r Pauli strings on r qubits."""
    labels = tuple("".join(p) for p in itertools.product("IXYZ", repeat=r))
    stack = np.array([pauli_matrix(label) for label in labels])
    stack.setflags(write=False)
    return labels, stack


def pauli_decompose(matrix: np.ndarray, tol: float = 1e-12) -> Dict[str, complex]:
    """Coefficients c_P with matrix = sum_P c_P P, entries below tol dropped."""
    dim = matrix.shape[0]
    r = int(round(np.log2(dim)))
    labels, stack = pauli_basis(r)
    # tr(P M) for every P at once; Pauli strings are Hermitian
    coefficients = np.einsum("kij,ji->k", stack, matrix) / dim
    return {label: complex(c) for label, c in zip(labels, coefficients) if abs(c) > tol}


def is_hermitian(matrix: np.ndarray, tol: float) -> bool:
    return np.linalg.norm(matrix - matrix.conj().T) <= tol


def frobenius(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix))


def expand_operator(matrix: np.ndarray, qubits: Sequence, target: Sequence) -> np.ndarray:
    """
    Embed an operator acting on `qubits` into the ordered superset `target`.
    """
    qubits = list(qubits)
    target = list(target)
    if qubits == target:
        return matrix
    rest = [q for q in target if q not in qubits]
    full = np.kron(matrix, np.eye(2 ** len(rest), dtype=complex))
    order = qubits + rest
    t = len(target)
    perm = [order.index(q) for q in target]
    tensor = full.reshape([2] * (2 * t))
    tensor = np.transpose(tensor, perm + [p + t for p in perm])
    return tensor.reshape(2 ** t, 2 ** t)


def joint_support(qubits_a: Sequence, qubits_b: Sequence) -> List:
    return list(qubits_a) + [q for q in qubits_b if q not in qubits_a]


def commutator_norm(a: np.ndarray, qa: Sequence, b: np.ndarray, qb: Sequence,
                    anti: bool = False) -> float:
    """Frobenius norm of [a, b] (or {a, b}) computed on the joint support only."""
    support = joint_support(qa, qb)
    big_a = expand_operator(a, qa, support)
    big_b = expand_operator(b, qb, support)
    sign = 1.0 if anti else -1.0
    return frobenius(big_a @ big_b + sign * (big_b @ big_a))


def move_qubit_last(matrix: np.ndarray, qubits: Sequence, q) -> Tuple[np.ndarray, List]:
    qubits = list(qubits)
    order = [p for p in qubits if p != q] + [q]
    return expand_operator(matrix, qubits, order), order


def compress_qubit(matrix: np.ndarray, qubits: Sequence, q, vector: np.ndarray) -> np.ndarray:
    """
    (I ⊗ <v|) h (I ⊗ |v>) ⊗ I_q, returned in the original qubit order.
    """
    moved, order = move_qubit_last(matrix, qubits, q)
    d = moved.shape[0] // 2
    tensor = moved.reshape(d, 2, d, 2)
    v = np.asarray(vector, dtype=complex)
    reduced = np.einsum("i,aibj,j->ab", v.conj(), tensor, v)
    return expand_operator(np.kron(reduced, I2), order, list(qubits))


def acts_trivially(matrix: np.ndarray, qubits: Sequence, q, tol: float = 1e-9) -> bool:
    """True when the operator factors as I_q ⊗ (something)."""
    moved, order = move_qubit_last(matrix, qubits, q)
    d = moved.shape[0] // 2
    tensor = moved.reshape(d, 2, d, 2)
    traced = np.einsum("aibi->ab", tensor) / 2.0
    return frobenius(moved - np.kron(traced, I2)) <= tol


def is_scalar(matrix: np.ndarray, tol: float = 1e-9) -> bool:
    dim = matrix.shape[0]
    return frobenius(matrix - (np.trace(matrix) / dim) * np.eye(dim)) <= tol


def apply_local(psi: np.ndarray, matrix: np.ndarray, positions: Sequence[int], n: int) -> np.ndarray:
    """
    Apply an r-qubit operator to axes `positions` of an n-qubit statevector.
    Extra trailing dimensions of psi (a batch of columns) are carried along.
    """
    r = len(positions)
    op = matrix.reshape([2] * (2 * r))
    tensor = psi.reshape([2] * n + list(psi.shape[1:]))
    out = np.tensordot(op, tensor, axes=(list(range(r, 2 * r)), list(positions)))
    out = np.moveaxis(out, list(range(r)), list(positions))
    return out.reshape(psi.shape)


def phase_normalize(vector: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-negligible entry is real positive."""
    flat = vector.reshape(-1)
    for value in flat:
        if abs(value) > tol:
            return vector * (abs(value) / value)
    return vector


def haar_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)
