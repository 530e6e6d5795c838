# src/hamiltonian/clh_instance.py

import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Tuple

import numpy as np
import yaml
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, eigsh

from src.core.config import DEFAULTS, cap, tolerance
from src.core.errors import BadParams, NonCommuting, NormExceeded, NotClosed, NotHermitian, TooLarge, \
    WrongDimension
from src.core.linalg import apply_local, commutator_norm, compress_qubit, haar_unitary, is_hermitian, \
    kron_all, pauli_decompose, pauli_matrix
from src.core.models import PLAQUETTE, STAR, Site, site_label, sorted_sites
from src.core.rng import derive_rng
from src.lattice.surface_complex import SurfaceComplex


@dataclass
class LocalTerm:
    kind: str
    site_id: Hashable
    qubits: Tuple[Hashable, ...]
    matrix: np.ndarray

    @property
    def site(self) -> Site:
        return (self.kind, self.site_id)

    def __repr__(self):
        return f"<LocalTerm {self.kind}:{self.site_id} qubits={list(self.qubits)}>"


@dataclass
class DefectCoefficients:
    """Per star (u, u') and per plaquette (v, v') for the terms uI + u'Z..Z and vI + v'X..X."""
    stars: Dict[Hashable, Tuple[float, float]] = field(default_factory=dict)
    plaquettes: Dict[Hashable, Tuple[float, float]] = field(default_factory=dict)


class CLHInstance:
    def __init__(self, complex_: SurfaceComplex, terms: Dict[Site, LocalTerm]):
        self.complex = complex_
        self.terms = dict(terms)
        self._qubit_sites = None

    @property
    def sites(self) -> List[Site]:
        return sorted_sites(self.terms)

    @property
    def qubits(self) -> List:
        return self.complex.edge_ids

    @property
    def n(self) -> int:
        return len(self.complex.edge_ids)

    @property
    def locality(self) -> int:
        return self.complex.locality

    def term(self, site: Site) -> LocalTerm:
        return self.terms[site]

    def sites_on(self, qubit) -> List[Site]:
        """Sites whose term carries `qubit` in its qubit list."""
        if self._qubit_sites is None:
            index = {q: [] for q in self.qubits}
            for site in self.sites:
                for q in self.terms[site].qubits:
                    index[q].append(site)
            self._qubit_sites = index
        return list(self._qubit_sites[qubit])

    def with_matrices(self, matrices: Dict[Site, np.ndarray]) -> "CLHInstance":
        """Copy with some term matrices replaced (no validation)."""
        terms = dict(self.terms)
        for site, matrix in matrices.items():
            old = terms[site]
            terms[site] = LocalTerm(old.kind, old.site_id, old.qubits, matrix)
        return CLHInstance(self.complex, terms)

    def __repr__(self):
        return f"<CLHInstance n={self.n} terms={len(self.terms)} k={self.locality}>"


def site_qubits(complex_: SurfaceComplex, site: Site) -> Tuple:
    kind, ident = site
    if kind == STAR:
        return tuple(complex_.vertex_edges(ident))
    return tuple(complex_.face_edges(ident))


def all_sites(complex_: SurfaceComplex) -> List[Site]:
    return [(STAR, v) for v in complex_.vertex_ids] + [(PLAQUETTE, f) for f in complex_.face_ids]


def max_commutator_residual(instance: CLHInstance) -> Tuple[float, Optional[Tuple[Site, Site]]]:
    worst, pair = 0.0, None
    for a, b in intersecting_pairs(instance):
        ta, tb = instance.terms[a], instance.terms[b]
        residual = commutator_norm(ta.matrix, ta.qubits, tb.matrix, tb.qubits)
        if residual > worst:
            worst, pair = residual, (a, b)
    return worst, pair


def intersecting_pairs(instance: CLHInstance) -> List[Tuple[Site, Site]]:
    pairs = []
    seen = set()
    for q in instance.qubits:
        sites = instance.sites_on(q)
        for i, a in enumerate(sites):
            for b in sites[i + 1:]:
                if (a, b) not in seen:
                    seen.add((a, b))
                    pairs.append((a, b))
    return pairs


def attach_terms(complex_: SurfaceComplex, term_map: Dict, config: dict = None) -> CLHInstance:
    """
    Validate one Hermitian matrix per site and build the instance.

    term_map: site -> matrix (or LocalTerm); sites missing from the map get the identity
    """
    config = config or DEFAULTS
    herm_tol = tolerance(config, "hermitian")
    norm_warn = tolerance(config, "norm_warn")
    comm_tol = tolerance(config, "commutation")

    terms = {}
    for site in all_sites(complex_):
        qubits = site_qubits(complex_, site)
        dim = 2 ** len(qubits)
        raw = term_map.get(site)
        if raw is None:
            matrix = np.eye(dim, dtype=complex)
        else:
            matrix = np.asarray(raw.matrix if isinstance(raw, LocalTerm) else raw, dtype=complex)
        if matrix.shape != (dim, dim):
            raise WrongDimension(f"{site_label(site)} needs a {dim}x{dim} matrix, got {matrix.shape}",
                                 {"site": list(site), "expected": dim, "shape": list(matrix.shape)})
        if not is_hermitian(matrix, herm_tol):
            raise NotHermitian(f"{site_label(site)} is not Hermitian", {"site": list(site)})
        norm = float(np.linalg.norm(matrix, 2))
        if norm > 1.0 + norm_warn:
            raise NormExceeded(f"{site_label(site)} has operator norm {norm:.6g} > 1",
                               {"site": list(site), "norm": norm})
        if norm > 1.0:
            logging.warning(f"{site_label(site)} has operator norm {norm:.12g}, slightly above 1")
        terms[site] = LocalTerm(site[0], site[1], qubits, matrix)

    instance = CLHInstance(complex_, terms)

    offending = []
    for a, b in intersecting_pairs(instance):
        ta, tb = terms[a], terms[b]
        residual = commutator_norm(ta.matrix, ta.qubits, tb.matrix, tb.qubits)
        if residual >= comm_tol:
            offending.append({"pair": [list(a), list(b)], "residual": residual})
    if offending:
        first = offending[0]
        raise NonCommuting(f"terms {first['pair'][0]} and {first['pair'][1]} do not commute "
                           f"(residual {first['residual']:.3g})", {"pairs": offending})

    logging.debug(f"Attached {len(terms)} terms on {instance.n} qubits")
    return instance


def toric_instance(complex_: SurfaceComplex, config: dict = None) -> CLHInstance:
    if not complex_.is_closed:
        raise NotClosed("toric instance needs a closed complex", {"boundary_edges": True})
    return surface_code_instance(complex_, config=config)


def surface_code_instance(complex_: SurfaceComplex, identity_stars: Iterable = (),
                          identity_plaquettes: Iterable = (), config: dict = None) -> CLHInstance:
    """Stars -Z..Z and plaquettes -X..X on any complex; listed sites carry the identity."""
    identity_stars = set(identity_stars)
    identity_plaquettes = set(identity_plaquettes)
    term_map = {}
    for site in all_sites(complex_):
        r = len(site_qubits(complex_, site))
        if site[0] == STAR and site[1] not in identity_stars:
            term_map[site] = -pauli_matrix("Z" * r)
        elif site[0] == PLAQUETTE and site[1] not in identity_plaquettes:
            term_map[site] = -pauli_matrix("X" * r)
    return attach_terms(complex_, term_map, config)


def defected_toric_instance(complex_: SurfaceComplex, coefficients: DefectCoefficients,
                            config: dict = None) -> CLHInstance:
    if not complex_.is_closed:
        raise NotClosed("defected toric instance needs a closed complex")
    term_map = {}
    for site in all_sites(complex_):
        r = len(site_qubits(complex_, site))
        if site[0] == STAR:
            u, u_pauli = coefficients.stars[site[1]]
            letter = "Z"
        else:
            u, u_pauli = coefficients.plaquettes[site[1]]
            letter = "X"
        if u_pauli == 0:
            raise BadParams(f"{site_label(site)} needs a nonzero Pauli coefficient", {"site": list(site)})
        term_map[site] = u * np.eye(2 ** r, dtype=complex) + u_pauli * pauli_matrix(letter * r)
    return attach_terms(complex_, term_map, config)


def random_defect_coefficients(complex_: SurfaceComplex, rng: np.random.Generator,
                               low: float = -0.4, high: float = 0.4) -> DefectCoefficients:
    def draw_nonzero():
        while True:
            value = float(rng.uniform(low, high))
            if abs(value) > 1e-3:
                return value

    stars = {v: (float(rng.uniform(low, high)), draw_nonzero()) for v in complex_.vertex_ids}
    plaquettes = {f: (float(rng.uniform(low, high)), draw_nonzero()) for f in complex_.face_ids}
    return DefectCoefficients(stars, plaquettes)


def classicalize(instance: CLHInstance, qubit, config: dict = None) -> CLHInstance:
    """
    Replace every term h on `qubit` by sum_b <b|h|b> (x) |b><b|, making the qubit classical.
    """
    basis = np.eye(2, dtype=complex)
    term_map = {}
    for site in instance.sites:
        term = instance.terms[site]
        if qubit not in term.qubits:
            term_map[site] = term.matrix
            continue
        matrix = np.zeros_like(term.matrix)
        for b in range(2):
            compressed = compress_qubit(term.matrix, term.qubits, qubit, basis[b])
            projector = np.outer(basis[b], basis[b])
            position = list(term.qubits).index(qubit)
            factors = [np.eye(2)] * len(term.qubits)
            factors[position] = projector
            matrix = matrix + compressed @ kron_all(factors)
        term_map[site] = matrix
    return attach_terms(instance.complex, term_map, config)


def conjugate(instance: CLHInstance, unitaries: Dict, config: dict = None) -> CLHInstance:
    """Every term h becomes U h U^dagger with U the tensor product of the per-qubit unitaries."""
    term_map = {}
    for site in instance.sites:
        term = instance.terms[site]
        u = kron_all([unitaries.get(q, np.eye(2, dtype=complex)) for q in term.qubits])
        term_map[site] = u @ term.matrix @ u.conj().T
    return attach_terms(instance.complex, term_map, config)


def scramble_unitaries(instance: CLHInstance, seed: int) -> Dict:
    rng = derive_rng(seed, "scramble")
    return {q: haar_unitary(rng) for q in instance.qubits}


def scramble(instance: CLHInstance, seed: int, config: dict = None) -> CLHInstance:
    return conjugate(instance, scramble_unitaries(instance, seed), config)


def pauli_form(matrix: np.ndarray, tol: float = 1e-9) -> Optional[Tuple[float, float, Optional[str]]]:
    """
    (a, b, P) when matrix = aI + bP for a single non-identity Pauli string P, (a, 0, None) for
    scalars, and None otherwise.
    """
    r = int(round(np.log2(matrix.shape[0])))
    coefficients = pauli_decompose(matrix, tol)
    identity = "I" * r
    a = coefficients.pop(identity, 0.0)
    if abs(np.imag(a)) > tol:
        return None
    if not coefficients:
        return float(np.real(a)), 0.0, None
    if len(coefficients) > 1:
        return None
    letters, b = next(iter(coefficients.items()))
    if abs(np.imag(b)) > tol:
        return None
    return float(np.real(a)), float(np.real(b)), letters


def energy(instance: CLHInstance, state) -> float:
    return float(sum(state.expectation(term.qubits, term.matrix) for term in instance.terms.values()))


# Exact diagonalization ----------------------------------------------

def _positions(instance: CLHInstance) -> Dict[Site, List[int]]:
    index = instance.complex.edge_index()
    return {site: [index[q] for q in term.qubits] for site, term in instance.terms.items()}


def hamiltonian_operator(instance: CLHInstance) -> LinearOperator:
    n = instance.n
    positions = _positions(instance)
    terms = [(instance.terms[s].matrix, positions[s]) for s in instance.sites]

    def matvec(psi):
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        out = np.zeros_like(psi)
        for matrix, pos in terms:
            out += apply_local(psi, matrix, pos, n)
        return out

    return LinearOperator((2 ** n, 2 ** n), matvec=matvec, dtype=complex)


def dense_hamiltonian(instance: CLHInstance) -> np.ndarray:
    n = instance.n
    positions = _positions(instance)
    identity = np.eye(2 ** n, dtype=complex)
    total = np.zeros_like(identity)
    for site in instance.sites:
        total += apply_local(identity, instance.terms[site].matrix, positions[site], n)
    return total


def _cache_key(instance: CLHInstance) -> str:
    digest = hashlib.sha256()
    digest.update(repr(instance.qubits).encode("utf-8"))
    for site in instance.sites:
        term = instance.terms[site]
        digest.update(site_label(site).encode("utf-8"))
        digest.update(repr(list(term.qubits)).encode("utf-8"))
        digest.update(np.ascontiguousarray(term.matrix).tobytes())
    return digest.hexdigest()


def _cache_path(instance: CLHInstance) -> Optional[str]:
    directory = os.environ.get("CLH2D_CACHE")
    if not directory:
        return None
    return os.path.join(directory, f"{_cache_key(instance)}.yaml")


def exact_ground_state(instance: CLHInstance, config: dict = None) -> Tuple[float, np.ndarray]:
    """Minimal eigenvalue of the sum of stored terms and one of its eigenvectors."""
    config = config or DEFAULTS
    n = instance.n
    if n <= cap(config, "dense_max_qubits"):
        # lowest eigenpair only
        values, vectors = eigh(dense_hamiltonian(instance), subset_by_index=[0, 0])
        return float(values[0]), vectors[:, 0]
    if n <= cap(config, "sparse_max_qubits"):
        logging.debug(f"Sparse ground state search on {n} qubits")
        v0 = np.random.default_rng(0).standard_normal(2 ** n).astype(complex)
        values, vectors = eigsh(hamiltonian_operator(instance), k=1, which="SA", v0=v0, tol=1e-12)
        return float(values[0]), vectors[:, 0]
    raise TooLarge(f"{n} qubits exceeds the exact diagonalization cap",
                   {"n": n, "cap": cap(config, "sparse_max_qubits")})


def exact_ground_energy(instance: CLHInstance, config: dict = None) -> float:
    path = _cache_path(instance)
    if path and os.path.exists(path):
        with open(path, "r") as f:
            cached = yaml.safe_load(f)
        logging.debug(f"Ground energy cache hit {os.path.basename(path)}")
        return float(cached["energy"])

    value, _ = exact_ground_state(instance, config)

    if path:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump({"energy": value, "n": instance.n}, f, sort_keys=True)
    return value
