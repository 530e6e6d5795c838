# src/lattice/surface_complex.py

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from src.core.errors import BadPolygon, IntersectionViolation, NonSurface, SizeTooSmall
from src.core.models import id_key, sorted_ids


@dataclass(frozen=True)
class GridShape:
    """Index arithmetic of the grid generators (no geometry is stored)."""
    n: int
    m: int
    periodic: bool

    def vertex(self, i: int, j: int):
        if self.periodic:
            return (i % self.n) + self.n * (j % self.m)
        return i + (self.n + 1) * j

    def vertex_coords(self, v) -> Tuple[int, int]:
        width = self.n if self.periodic else self.n + 1
        return v % width, v // width

    def h_edge(self, i: int, j: int):
        if self.periodic:
            return (i % self.n) + self.n * (j % self.m)
        return i + self.n * j

    def v_edge(self, i: int, j: int):
        if self.periodic:
            return self.n * self.m + (i % self.n) + self.n * (j % self.m)
        return self.n * (self.m + 1) + i + (self.n + 1) * j

    def face(self, i: int, j: int):
        if self.periodic:
            return (i % self.n) + self.n * (j % self.m)
        return i + self.n * j

    def face_coords(self, f) -> Tuple[int, int]:
        return f % self.n, f // self.n

    def edge_owner(self, e) -> Tuple[int, int]:
        """The cell that owns an edge: the cell above a horizontal edge, right of a vertical one."""
        if self.periodic:
            nm = self.n * self.m
            k = e if e < nm else e - nm
            return k % self.n, k // self.n
        split = self.n * (self.m + 1)
        if e < split:
            i, j = e % self.n, e // self.n
            return i, min(j, self.m - 1)
        k = e - split
        i, j = k % (self.n + 1), k // (self.n + 1)
        return min(i, self.n - 1), j


class SurfaceComplex:
    """
    Finite 2D polygonal complex: faces are cyclic edge walks, qubits sit on edges.
    """

    def __init__(self, vertices: Sequence, edges: Dict, faces: Dict, corners: Dict,
                 grid: Optional[GridShape] = None, regular: bool = True):
        self._vertices = list(vertices)
        self._edges = dict(edges)
        self._faces = {f: tuple(walk) for f, walk in faces.items()}
        self._corners = {f: tuple(c) for f, c in corners.items()}
        self.grid = grid
        self.regular = regular

        self._vertex_edges: Dict[Hashable, List] = {v: [] for v in self._vertices}
        for e, (a, b) in self._edges.items():
            self._vertex_edges[a].append(e)
            self._vertex_edges[b].append(e)

        self._edge_faces: Dict[Hashable, List] = {e: [] for e in self._edges}
        for f, walk in self._faces.items():
            for e in walk:
                self._edge_faces[e].append(f)

    # Incidence -------------------------------------------------------

    @property
    def vertex_ids(self) -> List:
        return list(self._vertices)

    @property
    def edge_ids(self) -> List:
        return list(self._edges)

    @property
    def face_ids(self) -> List:
        return list(self._faces)

    def endpoints(self, e) -> Tuple:
        return self._edges[e]

    def other_endpoint(self, e, v):
        a, b = self._edges[e]
        return b if a == v else a

    def vertex_edges(self, v) -> List:
        return list(self._vertex_edges[v])

    def edge_faces(self, e) -> List:
        return list(self._edge_faces[e])

    def face_edges(self, f) -> Tuple:
        return self._faces[f]

    def face_corners(self, f) -> Tuple:
        """corners[i] is the vertex between walk edges i and i+1."""
        return self._corners[f]

    def face_vertices(self, f) -> Set:
        return set(self._corners[f])

    def other_face(self, e, f) -> Optional[Hashable]:
        faces = self._edge_faces[e]
        for g in faces:
            if g != f:
                return g
        return None

    def neighbors(self, v) -> List[Tuple]:
        """(edge, vertex) pairs around v, ordered by edge id."""
        return [(e, self.other_endpoint(e, v)) for e in sorted_ids(self._vertex_edges[v])]

    def dual_neighbors(self, f) -> List[Tuple]:
        """(shared edge, face) pairs, ordered by edge id."""
        pairs = []
        for e in sorted_ids(self._faces[f]):
            g = self.other_face(e, f)
            if g is not None:
                pairs.append((e, g))
        return pairs

    def vertex_faces(self, v) -> List:
        faces = []
        for e in self._vertex_edges[v]:
            for f in self._edge_faces[e]:
                if f not in faces:
                    faces.append(f)
        return faces

    # Global properties ------------------------------------------------

    @property
    def is_closed(self) -> bool:
        return all(len(fs) == 2 for fs in self._edge_faces.values())

    @property
    def locality(self) -> int:
        degrees = [len(es) for es in self._vertex_edges.values()]
        degrees += [len(walk) for walk in self._faces.values()]
        return max(degrees) if degrees else 0

    def edge_index(self) -> Dict[Hashable, int]:
        return {e: i for i, e in enumerate(self._edges)}

    def to_dict(self) -> dict:
        return {
            "vertices": list(self._vertices),
            "edges": [[e, a, b] for e, (a, b) in self._edges.items()],
            "faces": [[f] + list(walk) for f, walk in self._faces.items()],
        }

    def __repr__(self):
        return (f"<SurfaceComplex vertices={len(self._vertices)} edges={len(self._edges)} "
                f"faces={len(self._faces)} closed={self.is_closed}>")


def _walk_corners(walk: Sequence, edges: Dict) -> Optional[Tuple]:
    first = walk[0]
    for start in edges[first]:
        a, b = edges[first]
        current = b if a == start else a
        corners = [current]
        ok = True
        for e in walk[1:]:
            u, w = edges[e]
            if current == u:
                current = w
            elif current == w:
                current = u
            else:
                ok = False
                break
            corners.append(current)
        if ok and current == start:
            return tuple(corners)
    return None


def build_complex(vertices: Iterable, edges, faces, strict: bool = True,
                  grid: Optional[GridShape] = None) -> SurfaceComplex:
    """
    Validate raw incidence lists and build a SurfaceComplex.

    vertices: iterable of vertex ids
    edges: [[id, v1, v2], ...] or {id: (v1, v2)}
    faces: [[id, e1, ..., er], ...] or {id: [e1, ..., er]}
    strict: enforce the pairwise-intersection condition
    """
    vertex_list = list(vertices)
    vertex_set = set(vertex_list)
    if isinstance(edges, dict):
        edge_map = {e: tuple(ends) for e, ends in edges.items()}
    else:
        edge_map = {}
        for row in edges:
            edge_map[row[0]] = (row[1], row[2])
    if isinstance(faces, dict):
        face_map = {f: list(walk) for f, walk in faces.items()}
    else:
        face_map = {row[0]: list(row[1:]) for row in faces}

    violations = []

    for e, (a, b) in edge_map.items():
        if a not in vertex_set or b not in vertex_set:
            violations.append({"kind": "bad_polygon", "edge": e, "reason": "undeclared endpoint"})
        elif a == b:
            violations.append({"kind": "bad_polygon", "edge": e, "reason": "loop edge"})

    corners = {}
    for f, walk in face_map.items():
        if len(walk) < 3:
            violations.append({"kind": "bad_polygon", "face": f, "reason": "fewer than 3 edges"})
            continue
        if len(set(walk)) != len(walk):
            violations.append({"kind": "bad_polygon", "face": f, "reason": "repeated edge"})
            continue
        missing = [e for e in walk if e not in edge_map]
        if missing:
            violations.append({"kind": "bad_polygon", "face": f, "reason": f"undeclared edges {missing}"})
            continue
        walk_corners = _walk_corners(walk, edge_map)
        if walk_corners is None:
            violations.append({"kind": "bad_polygon", "face": f, "reason": "open boundary walk"})
            continue
        corners[f] = walk_corners

    incidence = defaultdict(list)
    for f, walk in face_map.items():
        for e in walk:
            incidence[e].append(f)
    for e in edge_map:
        count = len(incidence[e])
        if count == 0 or count > 2:
            violations.append({"kind": "non_surface", "edge": e, "faces": count})

    if strict:
        face_sets = {f: set(walk) for f, walk in face_map.items()}
        face_list = list(face_map)
        for i, f in enumerate(face_list):
            for g in face_list[i + 1:]:
                shared = face_sets[f] & face_sets[g]
                if len(shared) > 1:
                    violations.append({"kind": "intersection", "faces": [f, g],
                                       "shared_edges": sorted_ids(shared)})
        seen_pairs = {}
        for e, (a, b) in edge_map.items():
            key = frozenset((a, b))
            if key in seen_pairs and len(key) == 2:
                violations.append({"kind": "intersection", "edges": [seen_pairs[key], e]})
            else:
                seen_pairs[key] = e

    if violations:
        kinds = {"non_surface": NonSurface, "bad_polygon": BadPolygon, "intersection": IntersectionViolation}
        first = violations[0]
        logging.debug(f"Complex rejected with {len(violations)} violations, first: {first}")
        raise kinds[first["kind"]](f"invalid complex: {first}", {"violations": violations})

    return SurfaceComplex(vertex_list, edge_map, face_map, corners, grid=grid, regular=strict)


def torus_grid(n: int, m: int) -> SurfaceComplex:
    """n x m periodic square grid; n = 2 or m = 2 yields a non-regular complex."""
    if n < 2 or m < 2:
        raise SizeTooSmall(f"torus grid needs n, m >= 2, got {n}x{m}", {"n": n, "m": m})
    grid = GridShape(n, m, periodic=True)
    vertices = [grid.vertex(i, j) for j in range(m) for i in range(n)]
    edges = {}
    for j in range(m):
        for i in range(n):
            edges[grid.h_edge(i, j)] = (grid.vertex(i, j), grid.vertex(i + 1, j))
    for j in range(m):
        for i in range(n):
            edges[grid.v_edge(i, j)] = (grid.vertex(i, j), grid.vertex(i, j + 1))
    faces = {}
    for j in range(m):
        for i in range(n):
            faces[grid.face(i, j)] = [grid.h_edge(i, j), grid.v_edge(i + 1, j),
                                      grid.h_edge(i, j + 1), grid.v_edge(i, j)]
    return build_complex(vertices, edges, faces, strict=min(n, m) > 2, grid=grid)


def planar_grid(n: int, m: int) -> SurfaceComplex:
    """n x m square patch with a topological boundary."""
    if n < 1 or m < 1:
        raise SizeTooSmall(f"planar grid needs n, m >= 1, got {n}x{m}", {"n": n, "m": m})
    grid = GridShape(n, m, periodic=False)
    vertices = [grid.vertex(i, j) for j in range(m + 1) for i in range(n + 1)]
    edges = {}
    for j in range(m + 1):
        for i in range(n):
            edges[grid.h_edge(i, j)] = (grid.vertex(i, j), grid.vertex(i + 1, j))
    for j in range(m):
        for i in range(n + 1):
            edges[grid.v_edge(i, j)] = (grid.vertex(i, j), grid.vertex(i, j + 1))
    faces = {}
    for j in range(m):
        for i in range(n):
            faces[grid.face(i, j)] = [grid.h_edge(i, j), grid.v_edge(i + 1, j),
                                      grid.h_edge(i, j + 1), grid.v_edge(i, j)]
    return build_complex(vertices, edges, faces, strict=True, grid=grid)


def topological_boundary(complex_: SurfaceComplex) -> Set:
    return {e for e in complex_.edge_ids if len(complex_.edge_faces(e)) == 1}


def connected_components(complex_: SurfaceComplex) -> List[List]:
    """Vertex components of the 1-skeleton, each sorted, listed by smallest member."""
    seen = set()
    components = []
    for v in sorted_ids(complex_.vertex_ids):
        if v in seen:
            continue
        stack = [v]
        seen.add(v)
        component = []
        while stack:
            x = stack.pop()
            component.append(x)
            for _, y in complex_.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        components.append(sorted(component, key=id_key))
    return components


def dual_components(complex_: SurfaceComplex) -> List[List]:
    seen = set()
    components = []
    for f in sorted_ids(complex_.face_ids):
        if f in seen:
            continue
        stack = [f]
        seen.add(f)
        component = []
        while stack:
            g = stack.pop()
            component.append(g)
            for _, h in complex_.dual_neighbors(g):
                if h not in seen:
                    seen.add(h)
                    stack.append(h)
        components.append(sorted(component, key=id_key))
    return components
