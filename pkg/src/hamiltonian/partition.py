# src/hamiltonian/partition.py

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, List, Optional, Set, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from src.core.config import DEFAULTS, tolerance
from src.core.errors import BadParams, NoCenter
from src.core.linalg import acts_trivially
from src.core.models import PLAQUETTE, STAR, Site, id_key, site_label, sorted_ids, sorted_sites
from src.lattice.surface_complex import SurfaceComplex
from src.lattice.traversal import vertex_distances, vertex_rotation


@dataclass(frozen=True)
class TriangleRegion:
    """
    One triangle as a set of complex edges.

    side_centers[i] lies on the side between corners[i] and corners[(i + 1) % 3];
    anchors[i] is a vertex of the region standing for corner i.
    """
    edges: FrozenSet[Hashable]
    witness_center: Hashable
    side_centers: Tuple[Hashable, Hashable, Hashable]
    corners: Tuple[Hashable, Hashable, Hashable]
    anchors: Tuple[Hashable, Hashable, Hashable]

    def vertices(self, complex_: SurfaceComplex) -> Set:
        found = set()
        for e in self.edges:
            found.update(complex_.endpoints(e))
        return found


@dataclass
class Triangulation:
    regions: List[TriangleRegion]
    r: int
    R: int
    D: int

    def degree(self) -> int:
        """Largest number of distinct corners sharing a triangle with one corner."""
        neighbours: Dict[Hashable, Set] = {}
        for region in self.regions:
            for a in region.corners:
                neighbours.setdefault(a, set()).update(c for c in region.corners if c != a)
        return max((len(ns) for ns in neighbours.values()), default=0)


@dataclass
class SuperParticlePartition:
    blocks: Dict[Hashable, FrozenSet[Hashable]]
    incidence: Dict[Site, Set[Hashable]] = field(default_factory=dict)
    centers: Dict[int, Site] = field(default_factory=dict)
    size_bound: Optional[int] = None

    def block_of(self) -> Dict[Hashable, Hashable]:
        owner = {}
        for label, edges in self.blocks.items():
            for e in edges:
                owner[e] = label
        return owner

    @property
    def max_block(self) -> int:
        return max((len(edges) for edges in self.blocks.values()), default=0)


# Counting bounds -----------------------------------------------------

def moore_bound(k: int, R: int) -> int:
    """Largest vertex count of a graph with maximum degree k and diameter R."""
    if k < 2 or R < 1:
        raise BadParams(f"Moore bound needs k >= 2 and R >= 1, got k={k}, R={R}", {"k": k, "R": R})
    return 1 + k * sum((k - 1) ** i for i in range(R))


def edge_bound(k: int, R: int) -> int:
    return math.ceil(k * moore_bound(k, R) / 2)


# Quasi-Euclidean check -----------------------------------------------

def _adjacency(complex_: SurfaceComplex, edges) -> Tuple[List, csr_matrix]:
    vertices = set()
    for e in edges:
        vertices.update(complex_.endpoints(e))
    order = sorted_ids(vertices)
    index = {v: i for i, v in enumerate(order)}
    rows, cols = [], []
    for e in edges:
        a, b = complex_.endpoints(e)
        rows += [index[a], index[b]]
        cols += [index[b], index[a]]
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(order), len(order)))
    return order, graph


def region_diameter(complex_: SurfaceComplex, edges) -> float:
    order, graph = _adjacency(complex_, edges)
    if not order:
        return 0.0
    distances = shortest_path(graph, method="D", unweighted=True, directed=False)
    return float(np.max(distances))


def ball_edges(complex_: SurfaceComplex, center, radius: int) -> Set:
    """Edges whose two endpoints lie within `radius` of `center` in the 1-skeleton."""
    distances = vertex_distances(complex_, center)
    inside = {v for v, d in distances.items() if d <= radius}
    return {e for e in complex_.edge_ids if set(complex_.endpoints(e)) <= inside}


def verify_quasi_euclidean(complex_: SurfaceComplex, triangulation: Triangulation, r: int, R: int,
                           D: int) -> Tuple[bool, List[Dict]]:
    """Coverage, ball containment, diameter and degree checks; returns (ok, violations)."""
    violations = []
    seen: Dict[Hashable, int] = {}
    for index, region in enumerate(triangulation.regions):
        for e in region.edges:
            if e in seen:
                violations.append({"kind": "overlap", "edge": e, "regions": [seen[e], index]})
            seen[e] = index
    missing = [e for e in complex_.edge_ids if e not in seen]
    if missing:
        violations.append({"kind": "coverage", "edges": sorted_ids(missing)})

    for index, region in enumerate(triangulation.regions):
        outside = ball_edges(complex_, region.witness_center, r) - region.edges
        if outside:
            violations.append({"kind": "ball", "region": index, "outside": len(outside)})
        diameter = region_diameter(complex_, region.edges)
        if diameter > R:
            violations.append({"kind": "diameter", "region": index, "diameter": diameter})

    degree = triangulation.degree()
    if degree > D:
        violations.append({"kind": "degree", "degree": degree})

    logging.debug(f"Quasi-Euclidean check: {len(triangulation.regions)} regions, {len(violations)} violations")
    return not violations, violations


# Grid triangulations -------------------------------------------------

def _nearest(complex_: SurfaceComplex, candidates: Set, target: Tuple[int, int]) -> Hashable:
    grid = complex_.grid

    def distance(v):
        x, y = grid.vertex_coords(v)
        dx, dy = abs(x - target[0]), abs(y - target[1])
        if grid.periodic:
            dx, dy = min(dx, grid.n - dx), min(dy, grid.m - dy)
        return (dx + dy, id_key(v))

    return min(candidates, key=distance)


def block_triangulation(complex_: SurfaceComplex, block: int, r: Optional[int] = None) -> Triangulation:
    """
    Cut a grid complex into block x block squares, each split into a lower and an upper triangle
    along its anti-diagonal. Requires the grid metadata of the generators.
    """
    grid = complex_.grid
    if grid is None:
        raise BadParams("block triangulation needs a grid-generated complex")
    if block < 3 or grid.n % block or grid.m % block:
        raise BadParams(f"block {block} must be >= 3 and divide {grid.n}x{grid.m}",
                        {"block": block, "n": grid.n, "m": grid.m})

    lower: Dict[Tuple[int, int], Set] = {}
    upper: Dict[Tuple[int, int], Set] = {}
    for e in complex_.edge_ids:
        i, j = grid.edge_owner(e)
        key = (i // block, j // block)
        if (i % block) + (j % block) < block:
            lower.setdefault(key, set()).add(e)
        else:
            upper.setdefault(key, set()).add(e)

    third = block // 3
    regions = []
    for by in range(grid.m // block):
        for bx in range(grid.n // block):
            x0, y0 = bx * block, by * block
            for edges, corner_coords, side_coords, witness in (
                (lower[(bx, by)],
                 [(x0, y0), (x0 + block, y0), (x0, y0 + block)],
                 [(x0 + block // 2, y0), (x0 + block // 2, y0 + block // 2), (x0, y0 + block // 2)],
                 (x0 + third, y0 + third)),
                (upper[(bx, by)],
                 [(x0 + block, y0), (x0 + block, y0 + block), (x0, y0 + block)],
                 [(x0 + block, y0 + block // 2), (x0 + block // 2, y0 + block), (x0 + block // 2, y0 + block // 2)],
                 (x0 + block - third, y0 + block - third)),
            ):
                region_vertices = set()
                for e in edges:
                    region_vertices.update(complex_.endpoints(e))
                corners = tuple(grid.vertex(x, y) for x, y in corner_coords)
                anchors = tuple(_nearest(complex_, region_vertices, c) for c in corner_coords)
                sides = tuple(_nearest(complex_, region_vertices, c) for c in side_coords)
                regions.append(TriangleRegion(frozenset(edges), grid.vertex(*witness), sides, corners, anchors))

    radius = r if r is not None else max(1, third - 1)
    diameter = 2 * block + 4
    triangulation = Triangulation(regions, radius, diameter, 6)
    logging.info(f"Block triangulation: {len(regions)} triangles, block {block}, r={radius}, R={diameter}")
    return triangulation


# Super-particles -----------------------------------------------------

def effective_support(instance, site: Site, tol: float = 1e-8) -> List:
    term = instance.terms[site]
    return [q for q in term.qubits if not acts_trivially(term.matrix, term.qubits, q, tol)]


def _interior_faces(complex_: SurfaceComplex, region: TriangleRegion) -> Set:
    return {f for f in complex_.face_ids if all(e in region.edges for e in complex_.face_edges(f))}


def _exit_edges(complex_: SurfaceComplex, region: TriangleRegion, interior: Set, side_center) -> Set:
    """Edges at a side center leading from an interior face out of the triangle's face set."""
    exits = set()
    for e in complex_.vertex_edges(side_center):
        faces = complex_.edge_faces(e)
        if sum(1 for f in faces if f in interior) == 1:
            exits.add(e)
    return exits


def _cut_copath(complex_: SurfaceComplex, start, interior: Set, blocked: Set, exits: Set):
    """Shortest face walk from `start` through unblocked interior faces to a face owning an exit edge."""
    parents = {start: None}
    queue = deque([start])
    while queue:
        f = queue.popleft()
        out = sorted_ids(e for e in complex_.face_edges(f) if e in exits)
        if out:
            faces, crossed = [f], []
            node = f
            while parents[node] is not None:
                e, node = parents[node]
                faces.append(node)
                crossed.append(e)
            return faces, crossed + [out[0]]
        for e, g in complex_.dual_neighbors(f):
            if g in parents or g in blocked or g not in interior:
                continue
            parents[g] = (e, f)
            queue.append(g)
    return None


def _components(complex_: SurfaceComplex, region: TriangleRegion, crossed: Set) -> Dict[Hashable, int]:
    vertices = region.vertices(complex_)
    label = {}
    count = 0
    for v in sorted_ids(vertices):
        if v in label:
            continue
        stack = [v]
        label[v] = count
        while stack:
            x = stack.pop()
            for e, y in complex_.neighbors(x):
                if e in region.edges and e not in crossed and y not in label:
                    label[y] = count
                    stack.append(y)
        count += 1
    return label


def _try_cut(complex_: SurfaceComplex, region: TriangleRegion, interior: Set, center, trivial_edge,
             exits: Tuple) -> Optional[Dict[Hashable, Hashable]]:
    used = {center}
    crossed = set(exits)
    for x, side_center in zip(exits, region.side_centers):
        g = complex_.other_face(x, center)
        if g is None or g not in interior or g in used:
            return None
        found = _cut_copath(complex_, g, interior, used, _exit_edges(complex_, region, interior, side_center))
        if found is None:
            return None
        faces, edges = found
        used.update(faces)
        crossed.update(edges)

    component = _components(complex_, region, crossed)
    owners = {}
    for anchor, corner in zip(region.anchors, region.corners):
        c = component.get(anchor)
        if c is None or c in owners:
            return None
        owners[c] = corner
    if len(owners) != len(set(component.values())):
        return None

    excluded = owners[component[complex_.endpoints(trivial_edge)[0]]]
    assignment = {}
    for e in region.edges:
        a, b = complex_.endpoints(e)
        labels = sorted({owners[component[a]], owners[component[b]]}, key=id_key)
        if e in exits:
            labels = [label for label in labels if label != excluded]
            if not labels:
                return None
        assignment[e] = labels[0]
    return assignment


def _cut_path(complex_: SurfaceComplex, start, target, allowed: Set, blocked: Set):
    """Shortest vertex walk from `start` to `target` over allowed edges, avoiding blocked vertices."""
    parents = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v == target:
            vertices, edges = [v], []
            while parents[v] is not None:
                e, v = parents[v]
                vertices.append(v)
                edges.append(e)
            return vertices, edges
        for e, w in complex_.neighbors(v):
            if e not in allowed or w in parents or w in blocked:
                continue
            parents[w] = (e, v)
            queue.append(w)
    return None


def _face_components(complex_: SurfaceComplex, interior: Set, cut: Set) -> Dict[Hashable, int]:
    label = {}
    count = 0
    for f in sorted_ids(interior):
        if f in label:
            continue
        stack = [f]
        label[f] = count
        while stack:
            g = stack.pop()
            for e, h in complex_.dual_neighbors(g):
                if e not in cut and h in interior and h not in label:
                    label[h] = count
                    stack.append(h)
        count += 1
    return label


def _try_star_cut(complex_: SurfaceComplex, region: TriangleRegion, interior: Set, center, trivial_edge,
                  legs: Tuple) -> Optional[Dict[Hashable, Hashable]]:
    """Dual of _try_cut: three paths from a star center to the sides split the faces into corner regions."""
    if not interior:
        return None
    allowed = set(region.edges)
    used = {center}
    cut = set(legs)
    for x, side_center in zip(legs, region.side_centers):
        start = complex_.other_endpoint(x, center)
        if start in used:
            return None
        found = _cut_path(complex_, start, side_center, allowed, used)
        if found is None:
            return None
        vertices, edges = found
        used.update(vertices)
        cut.update(edges)

    component = _face_components(complex_, interior, cut)
    owners = {}
    for anchor, corner in zip(region.anchors, region.corners):
        distances = vertex_distances(complex_, anchor, allowed_edges=allowed)
        near = min(interior, key=lambda f: (min(distances.get(v, math.inf) for v in complex_.face_corners(f)),
                                            id_key(f)))
        c = component[near]
        if c in owners:
            return None
        owners[c] = corner
    if len(owners) != len(set(component.values())):
        return None

    def labels_of(e) -> List:
        found = {owners[component[f]] for f in complex_.edge_faces(e) if f in interior}
        if not found:
            for v in complex_.endpoints(e):
                found.update(owners[component[f]] for f in complex_.vertex_faces(v) if f in interior)
        return sorted(found, key=id_key)

    excluded = labels_of(trivial_edge)[0]
    assignment = {}
    for e in region.edges:
        labels = labels_of(e)
        if e in legs:
            labels = [label for label in labels if label != excluded]
        if not labels:
            return None
        assignment[e] = labels[0]
    return assignment


def _center_candidates(complex_: SurfaceComplex, instance, region: TriangleRegion, interior: Set,
                       tol: float) -> List[Tuple[Site, Hashable]]:
    """
    (center site, trivially acted edge) pairs ordered by distance from the witness center.
    Plaquettes come first; stars whose whole neighbourhood lies inside the triangle follow.
    """
    distances = vertex_distances(complex_, region.witness_center, allowed_edges=set(region.edges))
    plaquettes, stars = [], []
    for f in interior:
        term = instance.terms[(PLAQUETTE, f)]
        trivial = [e for e in complex_.face_edges(f) if acts_trivially(term.matrix, term.qubits, e, tol)]
        if not trivial:
            continue
        reach = min(distances.get(v, math.inf) for v in complex_.face_corners(f))
        plaquettes.append((reach, id_key(f), (PLAQUETTE, f), trivial))
    for v in region.vertices(complex_):
        if not all(e in region.edges for e in complex_.vertex_edges(v)):
            continue
        if not all(f in interior for f in complex_.vertex_faces(v)):
            continue
        term = instance.terms[(STAR, v)]
        trivial = [e for e in term.qubits if acts_trivially(term.matrix, term.qubits, e, tol)]
        if trivial:
            stars.append((distances.get(v, math.inf), id_key(v), (STAR, v), trivial))
    ordered = sorted(plaquettes, key=lambda c: (c[0], c[1])) + sorted(stars, key=lambda c: (c[0], c[1]))
    return [(site, e) for _, _, site, trivial in ordered for e in trivial]


def _exit_choices(walk: Tuple, trivial_edge) -> List[Tuple]:
    """Three crossing edges of the center face: both walk neighbours of the trivial edge and one more."""
    r = len(walk)
    i = walk.index(trivial_edge)
    before, after = walk[(i - 1) % r], walk[(i + 1) % r]
    others = [walk[(i + j) % r] for j in range(2, r - 1)]
    choices = []
    for third in others:
        for order in itertools.permutations((after, third, before)):
            choices.append(order)
    return choices


def build_superparticles(punctured, triangulation: Triangulation, config: dict = None) -> SuperParticlePartition:
    """
    Per triangle: pick a center term acting trivially on some edge e, cut the triangle into three
    corner regions with e alone on one side, and merge regions by corner into blocks. Plaquette
    centers are cut with copaths, star centers with paths.
    """
    config = config or DEFAULTS
    tol = tolerance(config, "rank")
    instance = punctured.instance
    complex_ = instance.complex
    k = instance.locality
    if triangulation.r < 2 * k:
        logging.warning(f"Triangulation radius {triangulation.r} is below 2k = {2 * k}; centers may not exist")

    blocks: Dict[Hashable, Set] = {}
    centers = {}
    for index, region in enumerate(triangulation.regions):
        interior = _interior_faces(complex_, region)
        assignment = None
        for site, e in _center_candidates(complex_, instance, region, interior, tol):
            kind, center = site
            if kind == PLAQUETTE:
                walk = complex_.face_edges(center)
                if len(walk) < 4:
                    continue
                for exits in _exit_choices(walk, e):
                    assignment = _try_cut(complex_, region, interior, center, e, exits)
                    if assignment is not None:
                        break
            else:
                rotation, closed = vertex_rotation(complex_, center)
                if not closed or len(rotation) < 4:
                    continue
                for legs in _exit_choices(tuple(rotation), e):
                    assignment = _try_star_cut(complex_, region, interior, center, e, legs)
                    if assignment is not None:
                        break
            if assignment is not None:
                centers[index] = site
                logging.debug(f"Triangle {index}: center {site_label(site)}, trivial edge {e}")
                break
        if assignment is None:
            raise NoCenter(f"triangle {index} has no star or plaquette center whose cut separates its corners",
                           {"region": index, "interior_faces": len(interior)})
        for e, label in assignment.items():
            blocks.setdefault(label, set()).add(e)

    frozen = {label: frozenset(edges) for label, edges in blocks.items()}
    partition = SuperParticlePartition(frozen, centers=centers,
                                       size_bound=triangulation.D * k ** (triangulation.R + 2))
    partition.incidence = block_incidence(instance, partition, tol)
    logging.info(f"Super-particles: {len(frozen)} blocks, largest {partition.max_block} qubits")
    return partition


def block_incidence(instance, partition: SuperParticlePartition, tol: float = 1e-8) -> Dict[Site, Set]:
    owner = partition.block_of()
    return {site: {owner[q] for q in effective_support(instance, site, tol) if q in owner}
            for site in instance.sites}


def two_local_violations(punctured, partition: SuperParticlePartition, tol: float = 1e-8) -> List[Dict]:
    instance = punctured.instance
    owner = partition.block_of()
    violations = []
    for site in sorted_sites(instance.sites):
        support = effective_support(instance, site, tol)
        unowned = [q for q in support if q not in owner]
        labels = {owner[q] for q in support if q in owner}
        if unowned or len(labels) > 2:
            violations.append({"site": site_label(site), "blocks": sorted(labels, key=id_key),
                               "unowned": unowned})
    return violations


def verify_two_local(punctured, partition: SuperParticlePartition) -> bool:
    return not two_local_violations(punctured, partition)
