# src/hamiltonian/structure.py

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.core.config import DEFAULTS, cap, tolerance
from src.core.errors import EquivalenceViolation, NoSpecialEdge, NotInterior, NotSimple, Unreachable
from src.core.linalg import acts_trivially, commutator_norm, is_scalar
from src.core.models import PLAQUETTE, STAR, Path, QubitRole, Site, StringOperator, site_label, \
    sorted_ids, sorted_sites
from src.hamiltonian.clh_instance import CLHInstance, attach_terms, pauli_form
from src.hamiltonian.operator_algebra import algebra_span_labels, induced_algebra, is_line_algebra
from src.hamiltonian.reduction import find_classical_qubit
from src.lattice.traversal import complete_path_to_ribbon, find_path, ribbon_copath, ribbon_path, \
    truncate_ribbon, vertex_rotation

PATH_X = "PathX"
COPATH_Z = "CopathZ"


@dataclass
class PuncturedHamiltonian:
    base: CLHInstance
    removed: List[Site]
    witnesses: Dict[Site, StringOperator]
    instance: CLHInstance = None

    def energy_shift(self) -> float:
        """Ground energy of the base minus that of the punctured instance."""
        shift = 0.0
        for site in self.removed:
            values = np.linalg.eigvalsh(self.base.terms[site].matrix)
            shift += float(values[0]) - float(np.trace(self.instance.terms[site].matrix).real
                                              / self.instance.terms[site].matrix.shape[0])
        return shift


# Roles ---------------------------------------------------------------

def classify_roles(instance: CLHInstance, config: dict = None) -> Tuple[Dict[Hashable, QubitRole], Set[Site]]:
    """
    Boundary/coboundary flags per qubit from counting the plaquettes and stars acting non-trivially,
    and the set of terms acting only on interior qubits.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "rank")
    roles = {}
    for q in instance.qubits:
        stars = plaquettes = 0
        for site in instance.sites_on(q):
            term = instance.terms[site]
            if acts_trivially(term.matrix, term.qubits, q, tol):
                continue
            if site[0] == STAR:
                stars += 1
            else:
                plaquettes += 1
        roles[q] = QubitRole(in_boundary=plaquettes <= 1, in_coboundary=stars <= 1)

    interior = {site for site in instance.sites
                if all(roles[q].interior for q in instance.terms[site].qubits)}
    special = sum(1 for r in roles.values() if r.special)
    logging.info(f"Roles: {special} special qubits, {len(interior)} interior terms")
    return roles, interior


def special_qubits(roles: Dict[Hashable, QubitRole]) -> Set:
    return {q for q, role in roles.items() if role.special}


# Equivalence to the toric code ---------------------------------------

def _runs(order: Sequence, closed: bool, include: Callable, weak: Callable) -> List[List]:
    """
    Maximal runs of consecutive included qubits; a run is cut between two weak neighbours.
    """
    order = list(order)
    n = len(order)
    if n == 0:
        return []

    def linked(a, b) -> bool:
        return include(a) and include(b) and not (weak(a) and weak(b))

    if closed and n > 1:
        breaks = [i for i in range(n) if not linked(order[i], order[(i + 1) % n])]
        if not breaks:
            return [order]
        start = breaks[0] + 1
        order = order[start:] + order[:start]

    runs, current = [], []
    for q in order:
        if not include(q):
            if current:
                runs.append(current)
            current = []
            continue
        if current and not linked(current[-1], q):
            runs.append(current)
            current = []
        current.append(q)
    if current:
        runs.append(current)
    return runs


def _site_runs(instance: CLHInstance, site: Site, roles: Dict[Hashable, QubitRole]) -> List[List]:
    kind, ident = site
    if kind == STAR:
        order, closed = vertex_rotation(instance.complex, ident)
        return _runs(order, closed, lambda q: not roles[q].in_coboundary, lambda q: roles[q].in_boundary)
    walk = instance.complex.face_edges(ident)
    return _runs(walk, True, lambda q: not roles[q].in_boundary, lambda q: roles[q].in_coboundary)


def verify_equivalence(instance: CLHInstance, roles: Optional[Dict] = None, config: dict = None) -> Dict:
    """
    Check that stars induce Z..Z lines and plaquettes X..X lines on every qualifying run of their qubits.
    Returns the recovered (a, b, P) form of every term.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "rank")
    found = find_classical_qubit(instance, config)
    if found is not None:
        raise EquivalenceViolation(f"qubit {found[0]} is classical; reduce the instance first",
                                   {"qubit": found[0]})
    if roles is None:
        roles, _ = classify_roles(instance, config)

    closed_form = not special_qubits(roles)
    checked = 0
    for site in instance.sites:
        term = instance.terms[site]
        letter = "Z" if site[0] == STAR else "X"
        if closed_form and is_scalar(term.matrix, tol):
            raise EquivalenceViolation(f"{site_label(site)} is a scalar on a complex without special qubits",
                                       {"site": list(site)})
        for run in _site_runs(instance, site, roles):
            algebra = induced_algebra(term, run, tol)
            if not is_line_algebra(algebra, letter * len(run), tol):
                raise EquivalenceViolation(
                    f"{site_label(site)} does not induce {letter * len(run)} on {run}",
                    {"site": list(site), "qubits": list(run), "span": algebra_span_labels(algebra, tol)})
            checked += 1

    coefficients = {}
    for site in instance.sites:
        form = pauli_form(instance.terms[site].matrix, 1e-8)
        if form is not None:
            coefficients[site_label(site)] = {"a": form[0], "b": form[1], "pauli": form[2]}
    logging.info(f"Equivalence verified on {checked} runs")
    return {"passed": True, "checked_runs": checked, "closed_form": closed_form,
            "special_qubits": len(special_qubits(roles)), "coefficients": coefficients}


# String operators ----------------------------------------------------

def certify_string_operator(instance: CLHInstance, op: StringOperator, tol: float = 1e-10) -> Dict:
    """
    Anticommutator of the operator with the target's traceless part, and the largest commutator
    with every other term; each is evaluated on the overlap of supports only.
    """
    support = set(op.support)
    pauli = op.pauli
    worst, worst_site = 0.0, None
    anti = float("inf")
    for site in instance.sites:
        term = instance.terms[site]
        overlap = [q for q in term.qubits if q in support]
        if site == op.target:
            dim = term.matrix.shape[0]
            traceless = term.matrix - (np.trace(term.matrix) / dim) * np.eye(dim)
            if np.linalg.norm(traceless) <= tol:
                anti = float("inf")
            elif not overlap:
                anti = 2.0 * float(np.linalg.norm(traceless))
            else:
                anti = commutator_norm(traceless, term.qubits, pauli.restricted(overlap), overlap, anti=True)
            continue
        if not overlap:
            continue
        residual = commutator_norm(term.matrix, term.qubits, pauli.restricted(overlap), overlap)
        if residual > worst:
            worst, worst_site = residual, site
    return {
        "anticommutator": anti,
        "commutator": worst,
        "worst_site": site_label(worst_site) if worst_site is not None else None,
        "certified": anti < tol and worst < tol,
    }


def ribbon_case(instance: CLHInstance, ribbon, config: dict = None) -> Dict:
    """
    Terminal-edge analysis: case "a" when the last plaquette induces X(x)X on (q_{m-1}, q_m),
    case "b" when the last star induces Z(x)Z; "both" or "none" otherwise.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "rank")
    if len(ribbon.edges) < 2:
        return {"case": "none", "terminal": ribbon.edges[-1], "star_acts": None, "plaquette_acts": None}
    q_prev, q_last = ribbon.edges[-2], ribbon.edges[-1]
    star = instance.terms[(STAR, ribbon.stars[-1])]
    plaquette = instance.terms[(PLAQUETTE, ribbon.plaquettes[-1])]
    case_a = is_line_algebra(induced_algebra(plaquette, [q_prev, q_last], tol), "XX", tol)
    case_b = is_line_algebra(induced_algebra(star, [q_prev, q_last], tol), "ZZ", tol)
    case = "both" if case_a and case_b else "a" if case_a else "b" if case_b else "none"
    return {
        "case": case,
        "terminal": q_last,
        "star_acts": not acts_trivially(star.matrix, star.qubits, q_last, tol),
        "plaquette_acts": not acts_trivially(plaquette.matrix, plaquette.qubits, q_last, tol),
    }


def _candidate_paths(instance: CLHInstance, site: Site, targets: Set) -> List[Tuple[Path, Hashable]]:
    """(path from the first edge to a target edge, face the first ribbon corner avoids), shortest first."""
    complex_ = instance.complex
    kind, ident = site
    starts = []
    if kind == STAR:
        for e0 in sorted_ids(complex_.vertex_edges(ident)):
            s1 = complex_.other_endpoint(e0, ident)
            for face in complex_.edge_faces(e0):
                starts.append((e0, ident, s1, face))
    else:
        for e0 in complex_.face_edges(ident):
            a, b = complex_.endpoints(e0)
            for s0, s1 in ((a, b), (b, a)):
                starts.append((e0, s0, s1, ident))

    candidates = []
    for index, (e0, s0, s1, avoid) in enumerate(starts):
        try:
            tail = find_path(complex_, s1, targets, blocked={s0})
        except Unreachable:
            continue
        path = Path((s0,) + tail.stars, (e0,) + tail.edges)
        candidates.append((len(path), index, path, avoid))
    candidates.sort(key=lambda c: (c[0], c[1]))
    return [(path, avoid) for _, _, path, avoid in candidates]


def _string_on(instance: CLHInstance, site: Site, ribbon) -> Optional[StringOperator]:
    kind, ident = site
    if kind == STAR:
        string = ribbon_path(instance.complex, ribbon, first_star=ident)
        if string.stars[0] != ident:
            return None
        return StringOperator(PATH_X, site, tuple(string.edges), "X" * len(string.edges))
    string = ribbon_copath(instance.complex, ribbon, first_plaquette=ident)
    if string.plaquettes[0] != ident:
        return None
    return StringOperator(COPATH_Z, site, tuple(string.edges), "Z" * len(string.edges))


def access_check(instance: CLHInstance, site: Site, roles: Optional[Dict] = None,
                 interior: Optional[Set[Site]] = None, config: dict = None) -> Optional[StringOperator]:
    """
    Certified X string along a path (star target) or Z string along a copath (plaquette target)
    from the term to the first special edge of a ribbon; None when no candidate certifies.

    Ribbons towards any special edge are tried first, then ribbons ending at the first coboundary
    edge (stars) or boundary edge (plaquettes); each family is cut at the ribbon budget.
    """
    config = config or DEFAULTS
    budget = cap(config, "ribbon_budget")
    tol = tolerance(config, "certificate")
    if roles is None or interior is None:
        roles, interior = classify_roles(instance, config)
    special = special_qubits(roles)
    if not special:
        raise NoSpecialEdge("instance has no boundary or coboundary qubit; use the closed-case algorithm")
    if site not in interior:
        raise NotInterior(f"{site_label(site)} is not an interior term", {"site": list(site)})

    if site[0] == STAR:
        preferred = {q for q, role in roles.items() if role.in_coboundary}
    else:
        preferred = {q for q, role in roles.items() if role.in_boundary}
    families = [special]
    if preferred and preferred != special:
        families.append(preferred)

    attempt = 0
    for targets in families:
        for path, avoid in _candidate_paths(instance, site, targets)[:budget]:
            attempt += 1
            try:
                ribbon = complete_path_to_ribbon(instance.complex, path, avoid_first_face=avoid)
            except (Unreachable, NotSimple) as e:
                logging.debug(f"{site_label(site)} candidate {attempt}: no ribbon ({e.message})")
                continue
            ribbon = truncate_ribbon(ribbon, targets)
            if ribbon is None:
                continue
            op = _string_on(instance, site, ribbon)
            if op is None:
                continue
            op.case = ribbon_case(instance, ribbon, config)["case"]
            op.residuals = certify_string_operator(instance, op, tol)
            logging.debug(f"{site_label(site)} candidate {attempt}: {op.kind} over {len(op.support)} edges, "
                          f"case {op.case}, certified {op.residuals['certified']}")
            if op.residuals["certified"]:
                return op
    return None


def fixable_set(instance: CLHInstance, config: dict = None) -> Dict[Site, StringOperator]:
    """Every interior term with a certified string operator, keyed by site."""
    roles, interior = classify_roles(instance, config)
    if not special_qubits(roles):
        logging.info("No special qubits: nothing is fixable")
        return {}
    witnesses = {}
    for site in sorted_sites(interior):
        op = access_check(instance, site, roles, interior, config)
        if op is not None:
            witnesses[site] = op
    logging.info(f"Fixable set: {len(witnesses)} of {len(interior)} interior terms")
    return witnesses


def puncture(instance: CLHInstance, witnesses: Dict[Site, StringOperator], config: dict = None) -> PuncturedHamiltonian:
    """Replace every fixable term by the identity."""
    term_map = {}
    for site in instance.sites:
        term = instance.terms[site]
        if site in witnesses:
            term_map[site] = np.eye(term.matrix.shape[0], dtype=complex)
        else:
            term_map[site] = term.matrix
    punctured = attach_terms(instance.complex, term_map, config)
    removed = sorted_sites(witnesses)
    return PuncturedHamiltonian(instance, removed, dict(witnesses), punctured)


def main_lemma_violations(instance: CLHInstance, interior: Set[Site],
                          fixable: Dict[Site, StringOperator]) -> List[Tuple[Site, Site]]:
    """Adjacent interior star/plaquette pairs with neither member fixable."""
    violations = []
    for site in sorted_sites(interior):
        if site[0] != STAR:
            continue
        for f in sorted_ids(instance.complex.vertex_faces(site[1])):
            plaquette = (PLAQUETTE, f)
            if plaquette not in interior:
                continue
            if site not in fixable and plaquette not in fixable:
                violations.append((site, plaquette))
    return violations
