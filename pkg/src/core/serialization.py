# src/core/serialization.py

import sys
from typing import Any, Dict, Hashable

import numpy as np
import yaml

from src.core.errors import WrongDimension
from src.core.linalg import expand_operator
from src.core.models import ReductionStep, ReductionWitness, StringOperator, site_label


def matrix_to_list(matrix: np.ndarray) -> list:
    """Row-major [re, im] pairs."""
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(matrix, dtype=complex)]


def matrix_from_list(rows) -> np.ndarray:
    return np.array([[complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in row]
                     for row in rows], dtype=complex)


def read_yaml(path: str) -> Any:
    with open(path, "r") as f:
        return yaml.safe_load(f)


def to_plain(data: Any) -> Any:
    """Recursively turn numpy values, tuples and sets into YAML-safe builtins."""
    if isinstance(data, dict):
        return {k if isinstance(k, (str, int)) else str(k): to_plain(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_plain(v) for v in data]
    if isinstance(data, (set, frozenset)):
        return sorted((to_plain(v) for v in data), key=str)
    if isinstance(data, np.ndarray):
        return to_plain(data.tolist())
    if isinstance(data, np.generic):
        return data.item()
    if isinstance(data, complex):
        return [data.real, data.imag]
    return data


def dump_text(data: Any) -> str:
    return yaml.safe_dump(to_plain(data), sort_keys=True, default_flow_style=None)


def write_yaml(data: Any, path: str = None) -> str:
    text = dump_text(data)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)
    return text


# Complexes and instances ---------------------------------------------

def complex_to_dict(complex_) -> Dict:
    data = complex_.to_dict()
    data["regular"] = bool(complex_.regular)
    if complex_.grid is not None:
        grid = complex_.grid
        data["grid"] = {"n": grid.n, "m": grid.m, "periodic": grid.periodic}
    return data


def complex_from_dict(data: Dict):
    from src.lattice.surface_complex import GridShape, build_complex

    grid = GridShape(**data["grid"]) if data.get("grid") else None
    return build_complex(data["vertices"], data["edges"], data["faces"],
                         strict=data.get("regular", True), grid=grid)


def instance_to_dict(instance) -> Dict:
    terms = []
    for site in instance.sites:
        term = instance.terms[site]
        terms.append({"kind": site[0], "site": site[1], "qubits": list(term.qubits),
                      "matrix": matrix_to_list(term.matrix)})
    return {"complex": complex_to_dict(instance.complex), "terms": terms}


def instance_from_dict(data: Dict, config: dict = None):
    from src.hamiltonian.clh_instance import attach_terms, site_qubits

    complex_ = complex_from_dict(data["complex"])
    term_map = {}
    for row in data.get("terms", []):
        site = (row["kind"], row["site"])
        canonical = list(site_qubits(complex_, site))
        matrix = matrix_from_list(row["matrix"])
        listed = list(row.get("qubits", canonical))
        if sorted(map(str, listed)) != sorted(map(str, canonical)):
            raise WrongDimension(f"{site_label(site)} lists qubits {listed}, expected {canonical}",
                                 {"site": list(site), "qubits": listed})
        if listed != canonical:
            matrix = expand_operator(matrix, listed, canonical)
        term_map[site] = matrix
    return attach_terms(complex_, term_map, config)


def load_instance(path: str, config: dict = None):
    return instance_from_dict(read_yaml(path), config)


# Witnesses -----------------------------------------------------------

def witness_to_dict(witness: ReductionWitness) -> Dict:
    return {"steps": [{"qubit": s.qubit, "branch": s.branch, "projector": matrix_to_list(s.projector)}
                      for s in witness.steps]}


def witness_from_dict(data: Dict) -> ReductionWitness:
    return ReductionWitness([ReductionStep(row["qubit"], matrix_from_list(row["projector"]), int(row["branch"]))
                             for row in (data or {}).get("steps", [])])


def string_operator_from_dict(data: Dict) -> StringOperator:
    return StringOperator(data["kind"], (data["target"][0], data["target"][1]), tuple(data["support"]),
                          data["letters"], data.get("case", "undetermined"))


def qubit_lookup(qubits) -> Dict[str, Hashable]:
    """Map the string keys used in artifacts back to qubit ids."""
    return {str(q): q for q in qubits}


# Triangulations ------------------------------------------------------

def triangulation_to_dict(triangulation) -> Dict:
    return {
        "r": triangulation.r,
        "R": triangulation.R,
        "D": triangulation.D,
        "regions": [{"edges": sorted(region.edges, key=str), "witness_center": region.witness_center,
                     "side_centers": list(region.side_centers), "corners": list(region.corners),
                     "anchors": list(region.anchors)}
                    for region in triangulation.regions],
    }


def triangulation_from_dict(data: Dict):
    from src.hamiltonian.partition import TriangleRegion, Triangulation

    regions = []
    for row in data["regions"]:
        corners = tuple(row.get("corners", row.get("anchors", ())))
        anchors = tuple(row.get("anchors", corners))
        regions.append(TriangleRegion(frozenset(row["edges"]), row["witness_center"],
                                      tuple(row["side_centers"]), corners, anchors))
    return Triangulation(regions, int(data["r"]), int(data["R"]), int(data["D"]))


def punctured_to_dict(punctured) -> Dict:
    data = instance_to_dict(punctured.instance)
    data["removed"] = [site_label(s) for s in punctured.removed]
    data["witnesses"] = [op.to_dict() for op in punctured.witnesses.values()]
    data["energy_shift"] = punctured.energy_shift()
    return data
