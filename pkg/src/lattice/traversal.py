# src/lattice/traversal.py

import logging
from collections import deque
from typing import Dict, Hashable, Iterable, List, Optional, Set, Tuple

from src.core.errors import NotSimple, Unreachable
from src.core.models import Copath, Path, Ribbon, id_key, sorted_ids
from src.lattice.surface_complex import SurfaceComplex


class _Boundary:
    def __repr__(self):
        return "BOUNDARY"


BOUNDARY = _Boundary()


def _trace(parents: Dict, node) -> Tuple[List, List]:
    nodes, links = [node], []
    while parents[node] is not None:
        link, node = parents[node]
        links.append(link)
        nodes.append(node)
    nodes.reverse()
    links.reverse()
    return nodes, links


def _on_path(parents: Dict, node, candidate) -> bool:
    while node is not None:
        if node == candidate:
            return True
        parent = parents[node]
        node = parent[1] if parent is not None else None
    return False


def find_path(complex_: SurfaceComplex, source, target, blocked: Iterable = ()) -> Path:
    """
    Breadth-first primal path from star `source` to a star or to the first edge of a target edge set.

    target: vertex id, or a set of edge ids (the path then ends with one of those edges)
    blocked: vertices the path may not enter
    """
    edge_targets = target if isinstance(target, (set, frozenset)) else None
    if edge_targets is None and target == source:
        return Path((source,), ())

    blocked = set(blocked)
    parents = {source: None}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for e, y in complex_.neighbors(x):
            if edge_targets is not None and e in edge_targets:
                if not _on_path(parents, x, y) and y not in blocked:
                    nodes, links = _trace(parents, x)
                    return Path(tuple(nodes + [y]), tuple(links + [e]))
            if y in parents or y in blocked:
                continue
            parents[y] = (e, x)
            if edge_targets is None and y == target:
                nodes, links = _trace(parents, y)
                return Path(tuple(nodes), tuple(links))
            queue.append(y)

    raise Unreachable(f"no path from star {source} to {target}", {"source": source})


def find_copath(complex_: SurfaceComplex, source, target, blocked: Iterable = ()) -> Copath:
    """
    Breadth-first dual path from plaquette `source`.

    target: plaquette id, BOUNDARY, or a set of edge ids (the copath then crosses one of them last)
    """
    if target is not BOUNDARY and not isinstance(target, (set, frozenset)) and target == source:
        return Copath((source,), ())

    blocked = set(blocked)
    edge_targets = None
    if isinstance(target, (set, frozenset)):
        edge_targets = target

    parents = {source: None}
    queue = deque([source])
    while queue:
        f = queue.popleft()
        for e in sorted_ids(complex_.face_edges(f)):
            g = complex_.other_face(e, f)
            terminal = (target is BOUNDARY and g is None) or (edge_targets is not None and e in edge_targets)
            if terminal and (g is None or (not _on_path(parents, f, g) and g not in blocked)):
                nodes, links = _trace(parents, f)
                return Copath(tuple(nodes + [g]), tuple(links + [e]))
            if g is None or g in parents or g in blocked:
                continue
            parents[g] = (e, f)
            if target is not BOUNDARY and edge_targets is None and g == target:
                nodes, links = _trace(parents, g)
                return Copath(tuple(nodes), tuple(links))
            queue.append(g)

    raise Unreachable(f"no copath from plaquette {source} to {target}", {"source": source})


def vertex_distances(complex_: SurfaceComplex, source, allowed_edges: Optional[Set] = None) -> Dict:
    distances = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for e, y in complex_.neighbors(x):
            if allowed_edges is not None and e not in allowed_edges:
                continue
            if y not in distances:
                distances[y] = distances[x] + 1
                queue.append(y)
    return distances


def face_distances(complex_: SurfaceComplex, source) -> Dict:
    distances = {source: 0}
    queue = deque([source])
    while queue:
        f = queue.popleft()
        for _, g in complex_.dual_neighbors(f):
            if g not in distances:
                distances[g] = distances[f] + 1
                queue.append(g)
    return distances


def corner_arcs(complex_: SurfaceComplex, v) -> Dict[Hashable, List[Tuple]]:
    """For each edge at v, the (face, edge) pairs consecutive with it around v."""
    arcs = {e: [] for e in complex_.vertex_edges(v)}
    for f in complex_.vertex_faces(v):
        walk = complex_.face_edges(f)
        corners = complex_.face_corners(f)
        r = len(walk)
        for i in range(r):
            if corners[i] != v:
                continue
            a, b = walk[i], walk[(i + 1) % r]
            if (f, b) not in arcs[a]:
                arcs[a].append((f, b))
            if (f, a) not in arcs[b]:
                arcs[b].append((f, a))
    for e in arcs:
        arcs[e].sort(key=lambda fb: (id_key(fb[1]), id_key(fb[0])))
    return arcs


def vertex_rotation(complex_: SurfaceComplex, v) -> Tuple[List, bool]:
    """
    Edges around v in corner order, and whether the rotation closes into a cycle.
    """
    arcs = corner_arcs(complex_, v)
    if not arcs:
        return [], False
    neighbours = {e: sorted_ids({b for _, b in pairs if b != e}) for e, pairs in arcs.items()}
    ends = [e for e, ns in neighbours.items() if len(ns) == 1]
    manifold = all(len(ns) <= 2 for ns in neighbours.values())
    start = sorted_ids(ends)[0] if ends else sorted_ids(arcs)[0]
    order, seen = [start], {start}
    current = start
    while True:
        nxt = [e for e in neighbours[current] if e not in seen]
        if not nxt:
            break
        current = nxt[0]
        order.append(current)
        seen.add(current)
    closed = manifold and not ends and len(order) == len(arcs)
    if len(order) < len(arcs):
        order += [e for e in sorted_ids(arcs) if e not in seen]
    return order, closed


def _corner_walk(complex_: SurfaceComplex, v, start, goal, avoid_face=None) -> List[Tuple]:
    """Shortest sequence of (face, edge) corner steps around v from edge `start` to `goal`."""
    arcs = corner_arcs(complex_, v)
    parents = {start: None}
    queue = deque([start])
    while queue:
        e = queue.popleft()
        for f, b in arcs[e]:
            if e == start and avoid_face is not None and f == avoid_face:
                continue
            if b in parents:
                continue
            parents[b] = (f, e)
            if b == goal:
                steps = []
                node = b
                while parents[node] is not None:
                    face, prev = parents[node]
                    steps.append((face, node))
                    node = prev
                steps.reverse()
                return steps
            queue.append(b)
    raise Unreachable(f"edges {start} and {goal} are not linked around vertex {v}",
                      {"vertex": v, "start": start, "goal": goal})


def complete_path_to_ribbon(complex_: SurfaceComplex, path: Path, avoid_first_face=None) -> Ribbon:
    """
    Insert, around every interior vertex of the path, the corner edges linking consecutive path edges.

    avoid_first_face: plaquette the first corner may not pass through
    """
    if len(set(path.stars)) != len(path.stars) or len(set(path.edges)) != len(path.edges):
        raise NotSimple("path repeats a star or an edge", {"stars": list(path.stars)})
    if not path.edges:
        raise NotSimple("empty path has no ribbon", {"stars": list(path.stars)})

    edges = [path.edges[0]]
    stars, plaquettes = [], []
    for i in range(1, len(path.edges)):
        v = path.stars[i]
        avoid = avoid_first_face if i == 1 else None
        for face, edge in _corner_walk(complex_, v, path.edges[i - 1], path.edges[i], avoid):
            edges.append(edge)
            stars.append(v)
            plaquettes.append(face)
    logging.debug(f"Ribbon of {len(edges)} edges completed from a path of length {len(path)}")
    return Ribbon(tuple(edges), tuple(stars), tuple(plaquettes))


def truncate_ribbon(ribbon: Ribbon, special: Set) -> Optional[Ribbon]:
    """Cut the ribbon after its first special edge; None when it has none."""
    for i, e in enumerate(ribbon.edges):
        if e in special:
            return Ribbon(ribbon.edges[:i + 1], ribbon.stars[:i], ribbon.plaquettes[:i])
    return None


def ribbon_path(complex_: SurfaceComplex, ribbon: Ribbon, first_star=None) -> Path:
    edges = ribbon.edges
    if ribbon.stars:
        s1 = ribbon.stars[0]
        s0 = complex_.other_endpoint(edges[0], s1)
        last = complex_.other_endpoint(edges[-1], ribbon.stars[-1])
    else:
        a, b = complex_.endpoints(edges[0])
        s0 = first_star if first_star is not None else a
        last = b if s0 == a else a
    sequence = [s0] + list(ribbon.stars) + [last]
    stars, links = [s0], []
    for j, e in enumerate(edges):
        if sequence[j + 1] != sequence[j]:
            links.append(e)
            stars.append(sequence[j + 1])
    return Path(tuple(stars), tuple(links))


def ribbon_copath(complex_: SurfaceComplex, ribbon: Ribbon, first_plaquette=None) -> Copath:
    """Collapsed copath p_0..p_{m+1}; a final None marks the virtual boundary plaquette."""
    edges = ribbon.edges
    if ribbon.plaquettes:
        p1 = ribbon.plaquettes[0]
        p0 = complex_.other_face(edges[0], p1)
        last = complex_.other_face(edges[-1], ribbon.plaquettes[-1])
    else:
        faces = complex_.edge_faces(edges[0])
        p0 = first_plaquette if first_plaquette is not None else faces[0]
        last = complex_.other_face(edges[0], p0)
    sequence = [p0] + list(ribbon.plaquettes) + [last]
    plaquettes, links = [p0], []
    for j, e in enumerate(edges):
        if sequence[j + 1] != sequence[j]:
            links.append(e)
            plaquettes.append(sequence[j + 1])
    return Copath(tuple(plaquettes), tuple(links))
