# src/core/models.py

from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.linalg import pauli_matrix

STAR = "star"
PLAQUETTE = "plaquette"

Site = Tuple[str, Hashable]


def id_key(value) -> tuple:
    """Sort key for ids that may mix integers and strings."""
    return (isinstance(value, str), value)


def site_key(site: Site) -> tuple:
    kind, ident = site
    return (0 if kind == STAR else 1, id_key(ident))


def sorted_ids(ids) -> list:
    return sorted(ids, key=id_key)


def sorted_sites(sites) -> list:
    return sorted(sites, key=site_key)


def site_label(site: Site) -> str:
    return f"{site[0]}:{site[1]}"


@dataclass(frozen=True)
class Path:
    """Stars s_0..s_r joined by the shared edges e_1..e_r."""
    stars: Tuple[Hashable, ...]
    edges: Tuple[Hashable, ...]

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Copath:
    """
    Plaquettes p_0..p_r joined by shared edges e_1..e_r.
    The last plaquette is None when the copath leaves through the topological boundary.
    """
    plaquettes: Tuple[Optional[Hashable], ...]
    edges: Tuple[Hashable, ...]

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Ribbon:
    """
    Edges e_0..e_m where the pair (e_{i-1}, e_i) is shared by stars[i-1] and plaquettes[i-1].
    """
    edges: Tuple[Hashable, ...]
    stars: Tuple[Hashable, ...]
    plaquettes: Tuple[Hashable, ...]

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class PauliString:
    qubits: Tuple[Hashable, ...]
    letters: str
    sign: int = 1

    def matrix(self) -> np.ndarray:
        return self.sign * pauli_matrix(self.letters)

    def letter(self, qubit) -> str:
        if qubit in self.qubits:
            return self.letters[self.qubits.index(qubit)]
        return "I"

    def restricted(self, qubits: Sequence) -> np.ndarray:
        """Matrix of the letters on `qubits` (identity elsewhere), ignoring the sign."""
        return pauli_matrix("".join(self.letter(q) for q in qubits))

    def __str__(self) -> str:
        sign = "+" if self.sign > 0 else "-"
        body = " ".join(f"{c}[{q}]" for q, c in zip(self.qubits, self.letters))
        return f"{sign}{body}"


@dataclass
class StringOperator:
    kind: str  # "PathX" or "CopathZ"
    target: Site
    support: Tuple[Hashable, ...]
    letters: str
    case: str = "undetermined"
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def pauli(self) -> PauliString:
        return PauliString(tuple(self.support), self.letters)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "target": [self.target[0], self.target[1]],
            "support": list(self.support),
            "letters": self.letters,
            "case": self.case,
        }


@dataclass(frozen=True)
class QubitRole:
    in_boundary: bool
    in_coboundary: bool

    @property
    def interior(self) -> bool:
        return not (self.in_boundary or self.in_coboundary)

    @property
    def special(self) -> bool:
        return not self.interior


@dataclass
class ReductionStep:
    qubit: Hashable
    projector: np.ndarray
    branch: int


@dataclass
class ReductionWitness:
    steps: List[ReductionStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def qubits(self) -> List[Hashable]:
        return [step.qubit for step in self.steps]


@dataclass
class SynthesisReport:
    branch: str
    oracle: str = "none"
    measurements: Dict[str, int] = field(default_factory=dict)
    outcome_sequence: List[int] = field(default_factory=list)
    corrections: List[StringOperator] = field(default_factory=list)
    final_energy: Optional[float] = None
    expected_energy: Optional[float] = None
    certified: bool = False
    checks: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "branch": self.branch,
            "oracle": self.oracle,
            "measurements": dict(self.measurements),
            "outcome_sequence": list(self.outcome_sequence),
            "corrections": [c.to_dict() for c in self.corrections],
            "final_energy": self.final_energy,
            "expected_energy": self.expected_energy,
            "certified": self.certified,
            "checks": self.checks,
        }
