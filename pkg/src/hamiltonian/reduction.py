# src/hamiltonian/reduction.py

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from src.core.config import DEFAULTS, cap, tolerance
from src.core.errors import NotInvariant, TooLarge, TooLargeForProver
from src.core.linalg import commutator_norm, compress_qubit, phase_normalize
from src.core.models import ReductionStep, ReductionWitness, site_label
from src.hamiltonian.clh_instance import CLHInstance, attach_terms, exact_ground_energy
from src.hamiltonian.operator_algebra import FULL, PAULI_LINE, qubit_classes


def _line_projectors(generator: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _, vectors = linalg.eigh(generator)
    plus = phase_normalize(vectors[:, 1])
    minus = phase_normalize(vectors[:, 0])
    return np.outer(plus, plus.conj()), np.outer(minus, minus.conj())


def find_classical_qubit(instance: CLHInstance, config: dict = None) -> Optional[Tuple]:
    """
    First non-trivial qubit whose induced single-qubit algebras pairwise commute.

    Returns (qubit, (pi_0, pi_1)) or None; pi_0 projects on the +1 eigenvector of the shared line.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "rank")
    for q in instance.qubits:
        classes = qubit_classes(instance, q, tol)
        active = [cls for cls in classes.values() if cls.tag != "trivial"]
        if not active or any(cls.tag == FULL for cls in active):
            continue
        generators = [cls.generator for cls in active if cls.tag == PAULI_LINE]
        reference = generators[0]
        if all(np.linalg.norm(reference @ g - g @ reference) <= tol for g in generators[1:]):
            logging.debug(f"Qubit {q} is classical ({len(generators)} commuting lines)")
            return q, _line_projectors(reference)
    return None


def _vector_of(projector: np.ndarray, tol: float) -> np.ndarray:
    if (np.linalg.norm(projector @ projector - projector) > tol
            or np.linalg.norm(projector - projector.conj().T) > tol
            or abs(np.trace(projector) - 1.0) > tol):
        raise NotInvariant("witness matrix is not a rank-1 orthogonal projector",
                           {"trace": float(np.trace(projector).real)})
    _, vectors = linalg.eigh(projector)
    return phase_normalize(vectors[:, -1])


def project_out(instance: CLHInstance, qubit, projector: np.ndarray, config: dict = None) -> CLHInstance:
    """
    Restrict every term on `qubit` to the invariant subspace of `projector`; the qubit becomes trivial.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "invariance")
    projector = np.asarray(projector, dtype=complex)
    vector = _vector_of(projector, max(tol, 1e-9))

    term_map = {}
    for site in instance.sites:
        term = instance.terms[site]
        if qubit not in term.qubits:
            term_map[site] = term.matrix
            continue
        residual = commutator_norm(term.matrix, term.qubits, projector, (qubit,))
        if residual > tol:
            raise NotInvariant(f"projector on qubit {qubit} is not invariant under {site_label(site)}",
                               {"qubit": qubit, "site": list(site), "residual": residual})
        term_map[site] = compress_qubit(term.matrix, term.qubits, qubit, vector)
    return attach_terms(instance.complex, term_map, config)


def apply_witness(instance: CLHInstance, witness: ReductionWitness, config: dict = None) -> CLHInstance:
    current = instance
    for step in witness.steps:
        current = project_out(current, step.qubit, step.projector, config)
    return current


def _branch_energy(candidate: CLHInstance, config: dict) -> float:
    try:
        return exact_ground_energy(candidate, config)
    except TooLarge as e:
        raise TooLargeForProver(f"branch selection on {candidate.n} qubits needs a witness",
                                {"n": candidate.n, "cap": cap(config, "sparse_max_qubits")}) from e


def remove_all_classical(instance: CLHInstance, config: dict = None,
                         witness: Optional[ReductionWitness] = None) -> Tuple[CLHInstance, ReductionWitness]:
    """
    Project out classical qubits until none is left.

    witness: replayed first when given; the search then continues on the result
    """
    config = config or DEFAULTS
    current = instance
    steps = []
    if witness is not None:
        current = apply_witness(instance, witness, config)
        steps.extend(witness.steps)

    for _ in range(instance.n):
        found = find_classical_qubit(current, config)
        if found is None:
            break
        qubit, projectors = found
        branches = [project_out(current, qubit, p, config) for p in projectors]
        energies = [_branch_energy(b, config) for b in branches]
        choice = 0 if energies[0] <= energies[1] else 1
        logging.info(f"Classical qubit {qubit}: branch energies {energies[0]:.6f}/{energies[1]:.6f}, "
                     f"keeping {choice}")
        steps.append(ReductionStep(qubit, projectors[choice], choice))
        current = branches[choice]

    return current, ReductionWitness(steps)
