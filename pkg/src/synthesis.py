# src/synthesis.py

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from src import __version__
from src.backends.stabilizer_backend import bits_pauli, destabilizers, independent_rows, pauli_bits, \
    signed_pauli
from src.backends.state_engine import AUTO, STABILIZER, STATEVECTOR, apply_string, from_vector, init_product, \
    resolve_backend, term_observable
from src.core.abstractions import QuantumStateBackend
from src.core.config import DEFAULTS, cap, tolerance
from src.core.errors import BackendUnsupported, Clh2dError, EquivalenceViolation, MethodUnsupported, \
    NotClosed, NotDefectedForm, OddExcitations, TooLarge
from src.core.linalg import I2
from src.core.models import PLAQUETTE, STAR, PauliString, Site, StringOperator, SynthesisReport, \
    id_key, site_label
from src.core.rng import derive_rng
from src.core.serialization import matrix_from_list, qubit_lookup, string_operator_from_dict, \
    witness_from_dict, witness_to_dict
from src.hamiltonian.clh_instance import CLHInstance, energy, exact_ground_energy, exact_ground_state, pauli_form
from src.hamiltonian.operator_algebra import QubitCalibration, calibrate
from src.hamiltonian.partition import SuperParticlePartition, build_superparticles, two_local_violations
from src.hamiltonian.reduction import apply_witness, find_classical_qubit, remove_all_classical
from src.hamiltonian.structure import COPATH_Z, PATH_X, PuncturedHamiltonian, certify_string_operator, \
    classify_roles, fixable_set, puncture, special_qubits, verify_equivalence
from src.lattice.surface_complex import connected_components, dual_components
from src.lattice.traversal import face_distances, find_copath, find_path, vertex_distances

CLOSED = "closed"
PUNCTURED = "punctured"
EXACT = "exact"
TABLEAU = "stabilizer"
METHODS = (AUTO, EXACT, TABLEAU)

# Single-qubit Pauli anticommuting with the given letter.
_FLIP = {"X": "Z", "Y": "Z", "Z": "X"}


# Defected toric form -------------------------------------------------

def _defected_forms(instance: CLHInstance, tol: float) -> Dict[Site, Tuple[float, float, Optional[str]]]:
    forms = {}
    for site in instance.sites:
        term = instance.terms[site]
        form = pauli_form(term.matrix, tol)
        letter = "Z" if site[0] == STAR else "X"
        if form is None or (form[2] is not None and form[2] != letter * len(term.qubits)):
            raise NotDefectedForm(f"{site_label(site)} is not of the form aI + b{letter}..{letter}",
                                  {"site": list(site)})
        forms[site] = form
    return forms


def _closed_dual_component(complex_, faces: List) -> bool:
    return all(len(complex_.edge_faces(e)) == 2 for f in faces for e in complex_.face_edges(f))


def _parity_groups(instance: CLHInstance) -> List[Tuple[str, List]]:
    """Groups of sites whose Pauli parts multiply to the identity."""
    complex_ = instance.complex
    groups = [(STAR, component) for component in connected_components(complex_)]
    groups += [(PLAQUETTE, component) for component in dual_components(complex_)
               if _closed_dual_component(complex_, component)]
    return groups


def defected_ground_energy(instance: CLHInstance, config: dict = None) -> float:
    """
    Sum of a - |b| over all terms, plus 2 min|b| for every star or plaquette group holding an odd
    number of positive Pauli coefficients.
    """
    config = config or DEFAULTS
    forms = _defected_forms(instance, tolerance(config, "rank"))
    total = sum(a - abs(b) for a, b, _ in forms.values())
    for kind, component in _parity_groups(instance):
        coefficients = [forms[(kind, s)][1] for s in component]
        if sum(1 for b in coefficients if b > 0) % 2:
            total += 2.0 * min(abs(b) for b in coefficients)
    return float(total)


# Closed case ---------------------------------------------------------

def _observable(term, form) -> PauliString:
    _, b, letters = form
    return PauliString(tuple(term.qubits), letters, -1 if b > 0 else 1)


def _nearest_pairs(excited: List, distances) -> List[Tuple]:
    remaining = sorted(excited, key=id_key)
    pairs = []
    while remaining:
        a = remaining.pop(0)
        table = distances(a)
        b = min(remaining, key=lambda s: (table.get(s, np.inf), id_key(s)))
        remaining.remove(b)
        pairs.append((a, b))
    return pairs


def _pair_string(instance: CLHInstance, kind: str, a, b) -> StringOperator:
    if kind == STAR:
        path = find_path(instance.complex, a, b)
        return StringOperator(PATH_X, (STAR, a), tuple(path.edges), "X" * len(path.edges), case="pair")
    copath = find_copath(instance.complex, a, b)
    return StringOperator(COPATH_Z, (PLAQUETTE, a), tuple(copath.edges), "Z" * len(copath.edges), case="pair")


def toric_groundstate(instance: CLHInstance, seed: int = 0, backend: str = AUTO, config: dict = None,
                      rng: Optional[np.random.Generator] = None) -> Tuple[QuantumStateBackend, SynthesisReport]:
    """
    Start from |0...0>, measure every star then every plaquette, and annihilate excitations pairwise
    with X strings along paths (stars) and Z strings along copaths (plaquettes). A group with an odd
    number of positive coefficients keeps its smallest-|b| term excited.
    """
    config = config or DEFAULTS
    if not instance.complex.is_closed:
        raise NotClosed("the closed-case algorithm needs a closed complex")
    forms = _defected_forms(instance, tolerance(config, "rank"))
    scalar = [site_label(s) for s, form in forms.items() if form[2] is None]
    if scalar:
        raise NotDefectedForm("the closed-case algorithm needs a Pauli part on every term", {"sites": scalar})

    name = resolve_backend(backend, True, instance.n, config)
    rng = rng if rng is not None else derive_rng(seed, "synthesis", CLOSED)
    state = init_product(instance.qubits, name, rng, config)
    report = SynthesisReport(CLOSED)
    groups = _parity_groups(instance)

    for kind, distances in ((STAR, lambda v: vertex_distances(instance.complex, v)),
                            (PLAQUETTE, lambda f: face_distances(instance.complex, f))):
        outcomes = {}
        for site in instance.sites:
            if site[0] != kind:
                continue
            term = instance.terms[site]
            outcome = state.measure(term.qubits, _observable(term, forms[site]).matrix())
            outcomes[site[1]] = outcome
            report.measurements[site_label(site)] = outcome
            report.outcome_sequence.append(outcome)

        for group_kind, component in groups:
            if group_kind != kind:
                continue
            excited = [s for s in component if outcomes[s] < 0]
            odd = sum(1 for s in component if forms[(kind, s)][1] > 0) % 2
            if len(excited) % 2 != odd:
                raise OddExcitations(f"{len(excited)} {kind} excitations where parity {odd} is forced",
                                     {"kind": kind, "excited": excited})
            if odd:
                keeper = min(component, key=lambda s: (abs(forms[(kind, s)][1]), id_key(s)))
                excited = [s for s in excited if s != keeper] if keeper in excited else excited + [keeper]
            for a, b in _nearest_pairs(excited, distances):
                op = _pair_string(instance, kind, a, b)
                apply_string(state, op)
                report.corrections.append(op)
        logging.info(f"Closed case: {sum(1 for o in outcomes.values() if o < 0)} {kind} excitations")

    report.final_energy = energy(instance, state)
    report.expected_energy = defected_ground_energy(instance, config)
    report.certified = abs(report.final_energy - report.expected_energy) <= tolerance(config, "deterministic")
    report.checks["backend"] = name
    return state, report


# Prover oracle -------------------------------------------------------

def _pauli_generators(instance: CLHInstance) -> Optional[List[PauliString]]:
    generators = []
    for site in instance.sites:
        term = instance.terms[site]
        form = pauli_form(term.matrix, 1e-9)
        if form is None:
            return None
        if form[2] is not None:
            generators.append(_observable(term, form))
    return generators


def complete_tableau(state: QuantumStateBackend, generators: List[PauliString]) -> QuantumStateBackend:
    """
    Measure an independent subset of the signed generators and flip every -1 outcome with a Pauli
    that anticommutes with that generator only.
    """
    if not generators:
        return state
    index = {q: i for i, q in enumerate(state.qubits)}
    n = state.n
    rows = []
    for g in generators:
        _, x, z = pauli_bits(g, index, n)
        rows.append(np.concatenate([x, z]))
    rows = np.array(rows, dtype=np.uint8)
    chosen = independent_rows(rows)
    flips = destabilizers(rows[chosen])
    for j, i in enumerate(chosen):
        g = generators[i]
        if state.measure(g.qubits, g.matrix()) < 0:
            state.apply_pauli(bits_pauli(0, flips[j, :n], flips[j, n:], state.qubits))
    frustrated = [str(g) for g in generators if state.pauli_expectation(g) < 1.0 - 1e-9]
    if frustrated:
        raise MethodUnsupported("signed generators are inconsistent; use the exact method",
                                {"frustrated": frustrated[:8]})
    logging.debug(f"Tableau completion: {len(chosen)} independent of {len(generators)} generators")
    return state


def punctured_groundstate(punctured: PuncturedHamiltonian, method: str = AUTO, backend: str = AUTO,
                          config: dict = None, rng: Optional[np.random.Generator] = None,
                          seed: int = 0) -> Tuple[QuantumStateBackend, str]:
    """Groundstate of the punctured instance and the name of the oracle that produced it."""
    config = config or DEFAULTS
    instance = punctured.instance
    rng = rng if rng is not None else derive_rng(seed, "synthesis", "prover")
    generators = _pauli_generators(instance)
    if method not in METHODS:
        raise MethodUnsupported(f"unknown method {method}", {"method": method})
    if method == AUTO:
        method = TABLEAU if generators is not None else EXACT

    if method == TABLEAU:
        if generators is None:
            raise MethodUnsupported("tableau completion needs Pauli-form terms", {"method": method})
        state = init_product(instance.qubits, resolve_backend(backend, True, instance.n, config), rng, config)
        return complete_tableau(state, generators), "tableau"

    if backend == STABILIZER:
        raise MethodUnsupported("the exact oracle produces a statevector", {"backend": backend})
    limit = cap(config, "statevector_max_qubits")
    if instance.n > limit:
        raise TooLarge(f"{instance.n} qubits exceeds the statevector cap", {"n": instance.n, "cap": limit})
    _, vector = exact_ground_state(instance, config)
    return from_vector(instance.qubits, vector, rng, config), "exact"


# Full pipeline -------------------------------------------------------

def _reset_classical(state: QuantumStateBackend, witness) -> None:
    """Measure 2 pi - I on each reduced qubit and flip it into the recorded branch on -1."""
    for step in witness.steps:
        observable = 2.0 * np.asarray(step.projector, dtype=complex) - I2
        if state.measure((step.qubit,), observable) > 0:
            continue
        pauli = signed_pauli((step.qubit,), observable)
        if pauli is not None:
            state.apply_pauli(PauliString((step.qubit,), _FLIP[pauli.letters]))
            continue
        values, vectors = np.linalg.eigh(step.projector)
        v, w = vectors[:, 1], vectors[:, 0]
        state.apply_local((step.qubit,), np.outer(v, w.conj()) + np.outer(w, v.conj()))


def _energy_bound(instance: CLHInstance) -> float:
    return float(sum(np.linalg.eigvalsh(instance.terms[s].matrix)[0] for s in instance.sites))


def _expected_energy(instance: CLHInstance, final: float, config: dict) -> Optional[float]:
    bound = _energy_bound(instance)
    if abs(final - bound) <= tolerance(config, "deterministic"):
        return bound
    try:
        return exact_ground_energy(instance, config)
    except TooLarge:
        logging.warning(f"No reference energy for {instance.n} qubits")
        return None


def full_pipeline(instance: CLHInstance, seed: int = 0, triangulation=None, backend: str = AUTO,
                  method: str = AUTO, config: dict = None) -> Tuple[QuantumStateBackend, SynthesisReport]:
    """
    Reduce, calibrate, then either run the closed-case algorithm or puncture the fixable terms,
    prepare the punctured groundstate, measure every removed term and correct each violation with
    its string operator. The state is returned in the frame of the input instance.
    """
    config = config or DEFAULTS
    reduced, witness = remove_all_classical(instance, config)
    calibration = calibrate(reduced, config)
    calibrated = calibration.apply(reduced, config)
    roles, interior = classify_roles(calibrated, config)
    equivalence = verify_equivalence(calibrated, roles, config)
    identity_frame = calibration.is_identity(tolerance(config, "rank"))
    pauli_resets = all(signed_pauli((s.qubit,), 2.0 * s.projector - I2) is not None for s in witness.steps)
    checks = {"reduction_steps": len(witness), "calibration_identity": identity_frame,
              "equivalence": equivalence["passed"], "special_qubits": len(special_qubits(roles))}

    if not special_qubits(roles):
        name = resolve_backend(backend, identity_frame and pauli_resets, instance.n, config)
        state, report = toric_groundstate(calibrated, backend=name, config=config,
                                          rng=derive_rng(seed, "synthesis", CLOSED))
    else:
        fixable = fixable_set(calibrated, config)
        punctured = puncture(calibrated, fixable, config)
        checks["fixable"] = len(fixable)
        if triangulation is not None:
            partition = build_superparticles(punctured, triangulation, config)
            checks["two_local"] = not two_local_violations(punctured, partition)
            checks["max_block"] = partition.max_block
        pauli_terms = all(pauli_form(calibrated.terms[s].matrix, 1e-9) is not None for s in calibrated.sites)
        name = resolve_backend(backend, identity_frame and pauli_resets and pauli_terms, instance.n, config)
        state, oracle = punctured_groundstate(punctured, method, name, config,
                                              rng=derive_rng(seed, "synthesis", PUNCTURED))
        report = SynthesisReport(PUNCTURED, oracle=oracle)
        ground_tol = tolerance(config, "ground_space")
        for site in punctured.removed:
            term = calibrated.terms[site]
            outcome = state.measure(term.qubits, term_observable(term.matrix, ground_tol))
            report.measurements[site_label(site)] = outcome
            report.outcome_sequence.append(outcome)
            if outcome < 0:
                op = punctured.witnesses[site]
                apply_string(state, op)
                report.corrections.append(op)
        logging.info(f"Punctured case: {len(punctured.removed)} removed terms, "
                     f"{len(report.corrections)} corrections")

    if not identity_frame:
        if state.name != STATEVECTOR:
            raise BackendUnsupported("frame change needs a statevector", {"backend": state.name})
        for q in instance.qubits:
            state.apply_local((q,), calibration.unitary(q))
    _reset_classical(state, witness)

    report.final_energy = energy(instance, state)
    if report.branch == CLOSED:
        report.expected_energy = defected_ground_energy(calibrated, config)
    else:
        report.expected_energy = _expected_energy(instance, report.final_energy, config)
    report.certified = (report.expected_energy is not None
                        and abs(report.final_energy - report.expected_energy) <= tolerance(config, "deterministic"))
    report.checks.update(checks)
    report.checks["backend"] = state.name
    logging.info(f"Pipeline finished on the {report.branch} branch: energy {report.final_energy:.9f}, "
                 f"certified {report.certified}")
    return state, report


def term_eigenvalues(instance: CLHInstance, state: QuantumStateBackend, config: dict = None) -> Dict[str, float]:
    """<2 pi_h - I> for every term; +1 means the term sits in its ground space."""
    tol = tolerance(config or DEFAULTS, "ground_space")
    return {site_label(s): state.expectation(instance.terms[s].qubits, term_observable(instance.terms[s].matrix, tol))
            for s in instance.sites}


# Certificates --------------------------------------------------------

def _punctured_energy(punctured: PuncturedHamiltonian, config: dict) -> Optional[float]:
    try:
        return exact_ground_energy(punctured.instance, config)
    except TooLarge:
        generators = _pauli_generators(punctured.instance)
        if generators is None:
            return None
        state = init_product(punctured.instance.qubits, STABILIZER, np.random.default_rng(0), config)
        try:
            complete_tableau(state, generators)
        except MethodUnsupported:
            return None
        return energy(punctured.instance, state)


def np_certificate(instance: CLHInstance, triangulation=None, config: dict = None) -> Dict:
    """
    Verifier-side artifact: reduction witness, calibration, string-operator witnesses, optional
    partition blocks, and the ground energy they imply.
    """
    config = config or DEFAULTS
    reduced, witness = remove_all_classical(instance, config)
    calibration = calibrate(reduced, config)
    calibrated = calibration.apply(reduced, config)
    roles, interior = classify_roles(calibrated, config)
    verify_equivalence(calibrated, roles, config)
    certificate = {
        "version": __version__,
        "qubits": instance.n,
        "reduction": witness_to_dict(witness),
        "calibration": calibration.to_dict(),
        "special_qubits": sorted((str(q) for q in special_qubits(roles))),
    }
    if not special_qubits(roles):
        certificate["branch"] = CLOSED
        certificate["ground_energy"] = defected_ground_energy(calibrated, config)
        return certificate

    fixable = fixable_set(calibrated, config)
    punctured = puncture(calibrated, fixable, config)
    certificate["branch"] = PUNCTURED
    certificate["witnesses"] = []
    for op in fixable.values():
        entry = op.to_dict()
        entry["residuals"] = {k: v for k, v in op.residuals.items() if k != "certified"}
        certificate["witnesses"].append(entry)
    if triangulation is not None:
        partition = build_superparticles(punctured, triangulation, config)
        certificate["partition"] = {
            "blocks": {str(label): sorted(str(q) for q in edges) for label, edges in partition.blocks.items()},
            "max_block": partition.max_block,
            "size_bound": partition.size_bound,
            "triangulation": {"r": triangulation.r, "R": triangulation.R, "D": triangulation.D},
            "two_local": not two_local_violations(punctured, partition),
        }
    e_tilde = _punctured_energy(punctured, config)
    certificate["punctured_energy"] = e_tilde
    certificate["energy_shift"] = punctured.energy_shift()
    certificate["ground_energy"] = None if e_tilde is None else e_tilde + punctured.energy_shift()
    logging.info(f"Certificate: {len(fixable)} witnesses, ground energy {certificate['ground_energy']}")
    return certificate


def _check_partition(punctured: PuncturedHamiltonian, claimed, lookup: Dict, config: dict) -> Tuple[bool, bool]:
    """Rebuild the claimed blocks and recheck two-locality and the block-size bound."""
    blocks = claimed.get("blocks") if isinstance(claimed, dict) else None
    params = claimed.get("triangulation") if isinstance(claimed, dict) else None
    if not isinstance(blocks, dict) or not isinstance(params, dict):
        logging.warning("Partition claim carries no blocks or triangulation parameters")
        return False, False
    try:
        partition = SuperParticlePartition({label: frozenset(lookup[str(q)] for q in qubits)
                                            for label, qubits in blocks.items()})
        k = punctured.instance.locality
        bound = int(params["D"]) * k ** (int(params["R"]) + 2)
    except (KeyError, TypeError, ValueError) as e:
        logging.warning(f"Partition claim is malformed: {e}")
        return False, False
    disjoint = sum(len(edges) for edges in partition.blocks.values()) == len(partition.block_of())
    two_local = disjoint and not two_local_violations(punctured, partition, tolerance(config, "rank"))
    sized = partition.max_block <= bound and claimed.get("max_block") == partition.max_block
    return two_local, sized


def verify_certificate(instance: CLHInstance, certificate: Dict, config: dict = None) -> Dict:
    """Re-check every component of a certificate against the instance; accepted only when all pass."""
    config = config or DEFAULTS
    tol = tolerance(config, "deterministic")
    checks = {}
    lookup = qubit_lookup(instance.qubits)

    try:
        reduced = apply_witness(instance, witness_from_dict(certificate.get("reduction")), config)
        checks["reduction"] = find_classical_qubit(reduced, config) is None
    except Clh2dError as e:
        logging.warning(f"Reduction witness rejected: {e.message}")
        return {"accepted": False, "checks": {"reduction": False}}

    unitaries = {lookup[k]: matrix_from_list(v) for k, v in certificate.get("calibration", {}).items()}
    checks["calibration"] = all(np.allclose(u @ u.conj().T, I2, atol=1e-8) for u in unitaries.values())
    calibrated = QubitCalibration(unitaries).apply(reduced, config)
    roles, interior = classify_roles(calibrated, config)
    try:
        verify_equivalence(calibrated, roles, config)
        checks["equivalence"] = True
    except EquivalenceViolation:
        checks["equivalence"] = False

    claimed = certificate.get("ground_energy")
    if certificate.get("branch") == CLOSED:
        checks["closed"] = not special_qubits(roles)
        try:
            checks["energy"] = (claimed is not None
                                and abs(defected_ground_energy(calibrated, config) - claimed) <= tol)
        except NotDefectedForm as e:
            logging.warning(f"Closed-branch energy cannot be recomputed: {e.message}")
            checks["energy"] = False
    else:
        ops = [string_operator_from_dict(row) for row in certificate.get("witnesses", [])]
        certify_tol = tolerance(config, "certificate")
        results = {site_label(op.target): certify_string_operator(calibrated, op, certify_tol)["certified"]
                   and op.target in interior for op in ops}
        checks["witnesses"] = all(results.values())
        checks["witness_results"] = results
        punctured = puncture(calibrated, {op.target: op for op in ops}, config)
        e_tilde = _punctured_energy(punctured, config)
        checks["energy"] = (claimed is not None and e_tilde is not None
                            and abs(e_tilde + punctured.energy_shift() - claimed) <= tol)
        if "partition" in certificate:
            checks["two_local"], checks["block_size"] = _check_partition(punctured, certificate["partition"],
                                                                         lookup, config)

    verdicts = [v for k, v in checks.items() if isinstance(v, bool)]
    accepted = all(verdicts)
    logging.info(f"Certificate {'accepted' if accepted else 'rejected'}")
    return {"accepted": accepted, "checks": checks}
