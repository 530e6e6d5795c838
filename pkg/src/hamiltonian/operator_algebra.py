# src/hamiltonian/operator_algebra.py

import logging
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.core.config import DEFAULTS, tolerance
from src.core.errors import CalibrationConflict, DimThree, NotAnticommuting
from src.core.linalg import H, I2, expand_operator, kron_all, pauli_decompose, pauli_matrix, phase_normalize
from src.core.models import PLAQUETTE, STAR, Site, site_label
from src.hamiltonian.clh_instance import CLHInstance, LocalTerm, conjugate

TRIVIAL = "trivial"
PAULI_LINE = "pauli_line"
FULL = "full"


@dataclass
class OperatorSchmidt:
    left: Tuple[Hashable, ...]
    right: Tuple[Hashable, ...]
    left_factors: List[np.ndarray]
    right_factors: List[np.ndarray]
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.left_factors)

    def reconstruct(self) -> np.ndarray:
        """Sum of left (x) right in the order left + right."""
        dl = 2 ** len(self.left)
        dr = 2 ** len(self.right)
        total = np.zeros((dl * dr, dl * dr), dtype=complex)
        for a, b in zip(self.left_factors, self.right_factors):
            total += np.kron(a, b)
        return total


@dataclass
class OperatorAlgebra:
    qubits: Tuple[Hashable, ...]
    basis: List[np.ndarray]

    @property
    def dimension(self) -> int:
        return len(self.basis)


@dataclass
class QubitAlgebraClass:
    tag: str
    generator: Optional[np.ndarray] = None

    def describe(self) -> str:
        if self.tag != PAULI_LINE:
            return self.tag
        terms = pauli_decompose(self.generator, 1e-9)
        body = " ".join(f"{c.real:+.4f}{p}" for p, c in sorted(terms.items()))
        return f"pauli_line({body})"


@dataclass
class NormalForm:
    regular: bool
    unitary: np.ndarray


@dataclass
class TwoQubitReport:
    tag: str  # "ZZ", "XX" or "other"
    span: List[str] = field(default_factory=list)


# Spans ---------------------------------------------------------------

def _inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


def orthonormalize(matrices: Sequence[np.ndarray], tol: float = 1e-8,
                   basis: Optional[List[np.ndarray]] = None) -> List[np.ndarray]:
    """Extend `basis` by the components of `matrices` outside its span (Hilbert-Schmidt inner product)."""
    basis = list(basis or [])
    for m in matrices:
        v = np.array(m, dtype=complex)
        scale = max(1.0, float(np.linalg.norm(v)))
        for _ in range(2):
            for b in basis:
                v = v - _inner(b, v) * b
        norm = float(np.linalg.norm(v))
        if norm > tol * scale:
            basis.append(v / norm)
    return basis


def span_residual(basis: Sequence[np.ndarray], matrix: np.ndarray) -> float:
    """Norm of the component of `matrix` outside span(basis), relative to its norm."""
    v = np.array(matrix, dtype=complex)
    norm = float(np.linalg.norm(v))
    if norm == 0:
        return 0.0
    for b in basis:
        v = v - _inner(b, v) * b
    return float(np.linalg.norm(v)) / norm


def span_contains(basis: Sequence[np.ndarray], matrix: np.ndarray, tol: float = 1e-8) -> bool:
    return span_residual(basis, matrix) <= tol


def subspace_distance(basis_a: Sequence[np.ndarray], basis_b: Sequence[np.ndarray]) -> float:
    """Largest residual of either basis against the other span; zero iff the spans agree."""
    if len(basis_a) != len(basis_b):
        return 1.0
    worst = 0.0
    for b in basis_a:
        worst = max(worst, span_residual(basis_b, b))
    for b in basis_b:
        worst = max(worst, span_residual(basis_a, b))
    return worst


# Schmidt decomposition and closure ------------------------------------

def _term_parts(term) -> Tuple[np.ndarray, Tuple]:
    if isinstance(term, LocalTerm):
        return term.matrix, tuple(term.qubits)
    matrix, qubits = term
    return np.asarray(matrix, dtype=complex), tuple(qubits)


def operator_schmidt(term, left_qubits: Sequence, tol: float = 1e-8) -> OperatorSchmidt:
    """
    Minimal-rank decomposition h = sum_i l_i (x) r_i across (left_qubits | rest).

    term: LocalTerm or (matrix, qubits)
    """
    matrix, qubits = _term_parts(term)
    left = tuple(q for q in qubits if q in set(left_qubits))
    right = tuple(q for q in qubits if q not in set(left_qubits))
    if len(left) != len(set(left_qubits)):
        raise ValueError(f"left qubits {list(left_qubits)} are not all in {list(qubits)}")

    ordered = expand_operator(matrix, qubits, left + right)
    dl, dr = 2 ** len(left), 2 ** len(right)
    reshuffled = ordered.reshape(dl, dr, dl, dr).transpose(0, 2, 1, 3).reshape(dl * dl, dr * dr)
    u, s, vh = linalg.svd(reshuffled, full_matrices=False)

    cutoff = tol * max(1.0, float(s[0]) if len(s) else 0.0)
    keep = [i for i, value in enumerate(s) if value > cutoff]
    left_factors = [np.sqrt(s[i]) * u[:, i].reshape(dl, dl) for i in keep]
    right_factors = [np.sqrt(s[i]) * vh[i].reshape(dr, dr) for i in keep]
    return OperatorSchmidt(left, right, left_factors, right_factors, s[keep])


def induced_algebra(term, qubits: Sequence, tol: float = 1e-8) -> OperatorAlgebra:
    """*-algebra generated by the identity and the left Schmidt factors of the term on `qubits`."""
    schmidt = operator_schmidt(term, qubits, tol)
    dim = 2 ** len(schmidt.left)
    basis = orthonormalize([np.eye(dim, dtype=complex)], tol)
    basis = orthonormalize(schmidt.left_factors, tol, basis)
    basis = orthonormalize([f.conj().T for f in schmidt.left_factors], tol, basis)

    rounds = 0
    while True:
        rounds += 1
        size = len(basis)
        candidates = [a @ b for a in basis for b in basis]
        candidates += [a.conj().T for a in basis]
        basis = orthonormalize(candidates, tol, basis)
        if len(basis) == size or len(basis) == dim * dim:
            break
    logging.debug(f"Induced algebra on {list(schmidt.left)} closed after {rounds} rounds, dim {len(basis)}")
    return OperatorAlgebra(schmidt.left, basis)


def _fix_sign(matrix: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    for value in matrix.reshape(-1):
        if abs(value) > tol:
            if abs(value.real) > tol:
                return matrix if value.real > 0 else -matrix
            return matrix if value.imag > 0 else -matrix
    return matrix


def pauli_generator(matrix: np.ndarray, tol: float = 1e-8) -> Optional[np.ndarray]:
    """
    Traceless Hermitian unitary on the line spanned by I and `matrix`, or None for a scalar.
    A traceless 2x2 p satisfies p^2 = (tr(p^2)/2) I, so dividing by that square root leaves +-P.
    """
    p = matrix - (np.trace(matrix) / 2.0) * I2
    norm = float(np.linalg.norm(p))
    if norm <= tol:
        return None
    root = np.sqrt(complex(np.trace(p @ p)) / 2.0)
    if abs(root) <= tol * norm:
        return None
    g = p / root
    g = (g + g.conj().T) / 2.0
    return _fix_sign(g * (np.sqrt(2.0) / float(np.linalg.norm(g))))


def classify_qubit_algebra(algebra: OperatorAlgebra, tol: float = 1e-8) -> QubitAlgebraClass:
    if len(algebra.qubits) != 1:
        raise ValueError("classification needs a single-qubit algebra")
    dim = algebra.dimension
    if dim == 1:
        return QubitAlgebraClass(TRIVIAL)
    if dim == 4:
        return QubitAlgebraClass(FULL)
    if dim == 3:
        raise DimThree(f"algebra on qubit {algebra.qubits[0]} has dimension 3", {"qubit": algebra.qubits[0]})

    identity = np.eye(2, dtype=complex) / np.sqrt(2.0)
    candidates = [b - _inner(identity, b) * identity for b in algebra.basis]
    best = max(candidates, key=lambda m: float(np.linalg.norm(m)))
    generator = pauli_generator(best, tol)
    if generator is None:
        return QubitAlgebraClass(TRIVIAL)
    return QubitAlgebraClass(PAULI_LINE, generator)


def qubit_class(term: LocalTerm, qubit, tol: float = 1e-8) -> QubitAlgebraClass:
    return classify_qubit_algebra(induced_algebra(term, [qubit], tol), tol)


def qubit_classes(instance: CLHInstance, qubit, tol: float = 1e-8) -> Dict[Site, QubitAlgebraClass]:
    return {site: qubit_class(instance.terms[site], qubit, tol) for site in instance.sites_on(qubit)}


# Normal forms and calibration ----------------------------------------

def _ordered_eigenbasis(matrix: np.ndarray) -> np.ndarray:
    """Eigenvectors of a Hermitian 2x2 matrix, larger eigenvalue first, each column phase-normalized."""
    _, vectors = linalg.eigh(matrix)
    vectors = vectors[:, ::-1]
    return np.column_stack([phase_normalize(vectors[:, i]) for i in range(2)])


def _hermitian_up_to_phase(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Remove a global phase that makes the matrix Hermitian; fall back to its Hermitian part."""
    scale = max(1.0, float(np.linalg.norm(matrix)))
    entries = [v for v in np.diag(matrix) if abs(v) > tol] + [v for v in matrix.reshape(-1) if abs(v) > tol]
    for candidate in [matrix] + [matrix * (abs(v) / v) for v in entries[:1] + entries[-1:]]:
        if np.linalg.norm(candidate - candidate.conj().T) <= tol * scale:
            return candidate
    return (matrix + matrix.conj().T) / 2.0


def anticommute_normal_form(c: np.ndarray, d: np.ndarray, tol: float = 1e-8) -> NormalForm:
    """
    Basis U with U^dagger C U ~ Z and U^dagger D U ~ X (regular), or U^dagger C U ~ I+Z and
    U^dagger D U ~ I-Z (complementary projectors).
    """
    c = np.asarray(c, dtype=complex)
    d = np.asarray(d, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(c)) * float(np.linalg.norm(d)))
    if np.linalg.norm(c) <= tol or np.linalg.norm(d) <= tol:
        raise NotAnticommuting("normal form needs nonzero operators")
    residual = float(np.linalg.norm(c @ d + d @ c))
    if residual > tol * scale:
        raise NotAnticommuting(f"operators do not anticommute (residual {residual:.3g})",
                               {"residual": residual})

    c = _hermitian_up_to_phase(c, tol)
    singular = linalg.svdvals(c)
    if singular[-1] > tol * singular[0]:
        w = _ordered_eigenbasis(c)
        d_rotated = w.conj().T @ d @ w
        d10 = d_rotated[1, 0]
        if abs(d10) <= tol:
            raise NotAnticommuting("second operator has no off-diagonal part in the first one's eigenbasis")
        u = w @ np.diag([1.0, d10 / abs(d10)])
        return NormalForm(True, u)

    w = _ordered_eigenbasis(c @ c.conj().T)
    return NormalForm(False, w)


@dataclass
class QubitCalibration:
    unitaries: Dict[Hashable, np.ndarray]

    def unitary(self, qubit) -> np.ndarray:
        return self.unitaries.get(qubit, I2)

    def apply(self, instance: CLHInstance, config: dict = None) -> CLHInstance:
        """Calibrated instance with every term h replaced by U^dagger h U."""
        inverse = {q: u.conj().T for q, u in self.unitaries.items()}
        return conjugate(instance, inverse, config)

    def frame(self, qubits: Sequence) -> np.ndarray:
        return kron_all([self.unitary(q) for q in qubits])

    def is_identity(self, tol: float = 1e-9) -> bool:
        return all(abs(abs(np.trace(u)) / 2.0 - 1.0) <= tol for u in self.unitaries.values())

    def to_dict(self) -> dict:
        return {str(q): [[[float(v.real), float(v.imag)] for v in row] for row in u]
                for q, u in self.unitaries.items()}


def _first_line(classes: Dict[Site, QubitAlgebraClass], kind: str) -> Optional[Tuple[Site, np.ndarray]]:
    for site, cls in classes.items():
        if site[0] == kind and cls.tag == PAULI_LINE:
            return site, cls.generator
    return None


def calibrate(instance: CLHInstance, config: dict = None) -> QubitCalibration:
    """
    Per-qubit frame sending a star-induced Pauli line to Z and a plaquette-induced line into X.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "rank")
    unitaries = {}
    for q in instance.qubits:
        classes = qubit_classes(instance, q, tol)
        star = _first_line(classes, STAR)
        plaquette = _first_line(classes, PLAQUETTE)
        if star is not None:
            w = _ordered_eigenbasis(star[1])
            if plaquette is None:
                unitaries[q] = w
                continue
            rotated = w.conj().T @ plaquette[1] @ w
            beta = float(rotated[1, 0].real)
            gamma = float(rotated[1, 0].imag)
            rho = float(np.hypot(beta, gamma))
            if rho <= tol:
                raise CalibrationConflict(
                    f"qubit {q}: lines of {site_label(star[0])} and {site_label(plaquette[0])} commute",
                    {"qubit": q, "star": list(star[0]), "plaquette": list(plaquette[0])})
            unitaries[q] = w @ np.diag([1.0, (beta + 1j * gamma) / rho])
        elif plaquette is not None:
            unitaries[q] = _ordered_eigenbasis(plaquette[1]) @ H
        else:
            unitaries[q] = I2.copy()
    calibration = QubitCalibration(unitaries)
    logging.info(f"Calibrated {len(unitaries)} qubits (identity frame: {calibration.is_identity()})")
    return calibration


# Two-qubit structure -------------------------------------------------

def algebra_span_labels(algebra: OperatorAlgebra, tol: float = 1e-8) -> List[str]:
    labels = set()
    for b in algebra.basis:
        labels.update(pauli_decompose(b, tol))
    return sorted(labels)


def is_line_algebra(algebra: OperatorAlgebra, letters: str, tol: float = 1e-8) -> bool:
    """True when the algebra equals span{I, P} for the given Pauli string."""
    if algebra.dimension != 2:
        return False
    return span_contains(algebra.basis, pauli_matrix(letters), tol)


def two_qubit_structure(instance: CLHInstance, site: Site, q1, q2, tol: float = 1e-8) -> TwoQubitReport:
    algebra = induced_algebra(instance.terms[site], [q1, q2], tol)
    if is_line_algebra(algebra, "ZZ", tol):
        return TwoQubitReport("ZZ", ["II", "ZZ"])
    if is_line_algebra(algebra, "XX", tol):
        return TwoQubitReport("XX", ["II", "XX"])
    return TwoQubitReport("other", algebra_span_labels(algebra, tol))


def algebra_report(instance: CLHInstance, calibration: Optional[QubitCalibration] = None,
                   tol: float = 1e-8) -> Dict:
    """Per qubit: the class induced by every term on it, plus the calibration unitary when given."""
    report = {}
    for q in instance.qubits:
        entry = {"terms": {site_label(site): cls.describe()
                           for site, cls in qubit_classes(instance, q, tol).items()}}
        if calibration is not None:
            u = calibration.unitary(q)
            entry["calibration"] = [[[float(v.real), float(v.imag)] for v in row] for row in u]
        report[str(q)] = entry
    return report
