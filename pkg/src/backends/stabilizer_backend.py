# src/backends/stabilizer_backend.py

import logging
from typing import Hashable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.abstractions import QuantumStateBackend
from src.core.errors import BackendUnsupported, BadSpectrum, StateError
from src.core.linalg import pauli_decompose
from src.core.models import PauliString

# A Pauli is i^k X^x Z^z with bit vectors x, z over the qubits and k mod 4; Y = i X Z.
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}


def signed_pauli(qubits: Sequence[Hashable], observable: np.ndarray, tol: float = 1e-9) -> Optional[PauliString]:
    """The +-P form of a Hermitian observable, or None when it is not a single signed Pauli string."""
    coefficients = pauli_decompose(np.asarray(observable, dtype=complex), tol)
    if len(coefficients) != 1:
        return None
    letters, c = next(iter(coefficients.items()))
    if abs(abs(c) - 1.0) > tol or abs(c.imag) > tol or set(letters) == {"I"}:
        return None
    return PauliString(tuple(qubits), letters, 1 if c.real > 0 else -1)


def check_observable(qubits: Sequence[Hashable], observable: np.ndarray, tol: float = 1e-9) -> PauliString:
    pauli = signed_pauli(qubits, observable, tol)
    if pauli is not None:
        return pauli
    values = np.linalg.eigvalsh(observable)
    if np.all(np.abs(np.abs(values) - 1.0) <= tol):
        raise BackendUnsupported("the stabilizer backend measures Pauli strings only",
                                 {"qubits": list(qubits)})
    raise BadSpectrum("observable spectrum is not contained in {+1, -1}",
                      {"qubits": list(qubits), "eigenvalues": [float(v) for v in values]})


def pauli_bits(pauli: PauliString, index: dict, n: int) -> Tuple[int, np.ndarray, np.ndarray]:
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    k = 0
    for q, letter in zip(pauli.qubits, pauli.letters):
        bx, bz = _LETTER_BITS[letter]
        x[index[q]] ^= bx
        z[index[q]] ^= bz
        k += bx & bz
    if pauli.sign < 0:
        k += 2
    return k % 4, x, z


def bits_pauli(k: int, x: np.ndarray, z: np.ndarray, qubits: Sequence[Hashable]) -> PauliString:
    letters = "".join(_BITS_LETTER[(int(a), int(b))] for a, b in zip(x, z))
    k = (k - letters.count("Y")) % 4
    return PauliString(tuple(qubits), letters, 1 if k == 0 else -1)


def symplectic(x1, z1, x2, z2) -> int:
    return int((np.dot(x1.astype(int), z2) + np.dot(z1.astype(int), x2)) % 2)


# GF(2) elimination ---------------------------------------------------

def independent_rows(rows: np.ndarray) -> List[int]:
    """Indices of a maximal independent subset of the rows, scanned in order."""
    basis: List[Tuple[int, np.ndarray]] = []
    chosen = []
    for index, row in enumerate(rows):
        v = row.copy()
        for pivot, b in basis:
            if v[pivot]:
                v ^= b
        nonzero = np.flatnonzero(v)
        if nonzero.size:
            basis.append((int(nonzero[0]), v))
            chosen.append(index)
    return chosen


def destabilizers(generators: np.ndarray) -> np.ndarray:
    """
    Rows d_i with symplectic product <d_i, g_j> = delta_ij for independent generators g (rows [x|z]).
    """
    r, width = generators.shape
    n = width // 2
    m = np.concatenate([generators[:, n:], generators[:, :n]], axis=1).astype(np.uint8)
    t = np.eye(r, dtype=np.uint8)
    pivots = []
    row = 0
    for col in range(width):
        if row == r:
            break
        hits = [i for i in range(row, r) if m[i, col]]
        if not hits:
            continue
        h = hits[0]
        m[[row, h]] = m[[h, row]]
        t[[row, h]] = t[[h, row]]
        for i in range(r):
            if i != row and m[i, col]:
                m[i] ^= m[row]
                t[i] ^= t[row]
        pivots.append(col)
        row += 1
    if len(pivots) != r:
        raise StateError("generators are not independent", {"rank": len(pivots), "rows": r})
    d = np.zeros((r, width), dtype=np.uint8)
    for j, col in enumerate(pivots):
        d[:, col] = t[j, :]
    return d


class StabilizerBackend(QuantumStateBackend):
    """
    Destabilizer/stabilizer tableau: rows 0..n-1 destabilize, rows n..2n-1 stabilize.
    """

    name = "stabilizer"

    def __init__(self, qubits: Sequence[Hashable], rng: np.random.Generator, tol: float = 1e-9):
        super().__init__(qubits, rng)
        n = self.n
        self.tol = tol
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.k = np.zeros(2 * n, dtype=np.int64)
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1

    def _bits(self, pauli: PauliString):
        return pauli_bits(pauli, self._position, self.n)

    def _anticommuting(self, x, z) -> np.ndarray:
        return ((self.x.astype(np.int64) @ z + self.z.astype(np.int64) @ x) % 2).astype(bool)

    def _multiply_into(self, target: int, source: int) -> None:
        """row[target] <- row[target] * row[source]"""
        phase = 2 * int(np.dot(self.z[target].astype(np.int64), self.x[source]))
        self.k[target] = (self.k[target] + self.k[source] + phase) % 4
        self.x[target] ^= self.x[source]
        self.z[target] ^= self.z[source]

    def _deterministic_sign(self, anti: np.ndarray, k: int, x, z) -> int:
        n = self.n
        acc_k, acc_x, acc_z = 0, np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8)
        for i in np.flatnonzero(anti[:n]):
            row = n + i
            acc_k = (acc_k + int(self.k[row]) + 2 * int(np.dot(acc_z.astype(np.int64), self.x[row]))) % 4
            acc_x = acc_x ^ self.x[row]
            acc_z = acc_z ^ self.z[row]
        if not (np.array_equal(acc_x, x) and np.array_equal(acc_z, z)):
            raise StateError("deterministic outcome does not reconstruct the measured Pauli")
        return 1 if (acc_k - k) % 4 == 0 else -1

    def _collapse(self, anti: np.ndarray, pivot: int, k: int, x, z, outcome: int) -> None:
        n = self.n
        for i in np.flatnonzero(anti):
            if i != pivot and i != pivot - n:
                self._multiply_into(int(i), pivot)
        self.x[pivot - n], self.z[pivot - n], self.k[pivot - n] = self.x[pivot], self.z[pivot], self.k[pivot]
        self.x[pivot], self.z[pivot] = x, z
        self.k[pivot] = (k + (0 if outcome > 0 else 2)) % 4

    def measure_pauli(self, pauli: PauliString) -> int:
        k, x, z = self._bits(pauli)
        anti = self._anticommuting(x, z)
        hits = np.flatnonzero(anti[self.n:])
        if hits.size:
            self.last_probability = 0.5
            outcome = self._draw(0.5)
            self._collapse(anti, self.n + int(hits[0]), k, x, z, outcome)
            return outcome
        sign = self._deterministic_sign(anti, k, x, z)
        self.last_probability = 1.0
        self._draw(1.0 if sign > 0 else 0.0)
        return sign

    def measure(self, qubits: Sequence[Hashable], observable: np.ndarray) -> int:
        return self.measure_pauli(check_observable(qubits, observable, self.tol))

    def project(self, qubits: Sequence[Hashable], observable: np.ndarray, outcome: int) -> float:
        pauli = check_observable(qubits, observable, self.tol)
        k, x, z = self._bits(pauli)
        anti = self._anticommuting(x, z)
        hits = np.flatnonzero(anti[self.n:])
        if hits.size:
            self._collapse(anti, self.n + int(hits[0]), k, x, z, outcome)
            return 0.5
        if self._deterministic_sign(anti, k, x, z) != outcome:
            raise StateError("post-selected outcome has probability zero", {"qubits": list(qubits)})
        return 1.0

    def apply_pauli(self, pauli: PauliString) -> None:
        _, x, z = self._bits(pauli)
        anti = self._anticommuting(x, z)
        self.k[anti] = (self.k[anti] + 2) % 4

    def apply_local(self, qubits: Sequence[Hashable], unitary: np.ndarray) -> None:
        coefficients = pauli_decompose(np.asarray(unitary, dtype=complex), self.tol)
        if len(coefficients) != 1 or abs(abs(next(iter(coefficients.values()))) - 1.0) > self.tol:
            raise BackendUnsupported("the stabilizer backend applies Pauli unitaries only",
                                     {"qubits": list(qubits)})
        self.apply_pauli(PauliString(tuple(qubits), next(iter(coefficients))))

    def pauli_expectation(self, pauli: PauliString) -> float:
        k, x, z = self._bits(pauli)
        if set(pauli.letters) <= {"I"}:
            return float(pauli.sign)
        anti = self._anticommuting(x, z)
        if anti[self.n:].any():
            return 0.0
        return float(self._deterministic_sign(anti, k, x, z))

    def expectation(self, qubits: Sequence[Hashable], matrix: np.ndarray) -> float:
        total = 0.0
        for letters, c in pauli_decompose(np.asarray(matrix, dtype=complex), 1e-12).items():
            total += (c * self.pauli_expectation(PauliString(tuple(qubits), letters))).real
        return float(total)

    def stabilizers(self) -> List[PauliString]:
        n = self.n
        return [bits_pauli(int(self.k[i]), self.x[i], self.z[i], self.qubits) for i in range(n, 2 * n)]

    def dump(self) -> dict:
        rows = []
        for p in self.stabilizers():
            rows.append(("+" if p.sign > 0 else "-") + p.letters)
        logging.debug(f"Dumping {len(rows)} stabilizer generators")
        return {"backend": self.name, "qubits": list(self.qubits), "stabilizers": rows}
