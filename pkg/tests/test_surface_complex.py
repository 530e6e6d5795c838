# tests/test_surface_complex.py

import unittest

from src.core.errors import BadPolygon, IntersectionViolation, NonSurface, NotSimple, SizeTooSmall, Unreachable
from src.core.models import Path
from src.lattice.surface_complex import build_complex, connected_components, dual_components, planar_grid, \
    topological_boundary, torus_grid
from src.lattice.traversal import BOUNDARY, complete_path_to_ribbon, find_copath, find_path, ribbon_path, \
    vertex_distances, vertex_rotation


def _triangle_pair(strict=True):
    """Two triangles glued along edge 'c'."""
    vertices = ["a", "b", "x", "y"]
    edges = {"c": ("a", "b"), "ax": ("a", "x"), "bx": ("b", "x"), "ay": ("a", "y"), "by": ("b", "y")}
    faces = {"up": ["c", "bx", "ax"], "down": ["c", "by", "ay"]}
    return build_complex(vertices, edges, faces, strict=strict)


class TestGrids(unittest.TestCase):

    def test_torus_counts(self):
        complex_ = torus_grid(3, 3)
        self.assertEqual(len(complex_.vertex_ids), 9)
        self.assertEqual(len(complex_.edge_ids), 18)
        self.assertEqual(len(complex_.face_ids), 9)
        self.assertTrue(complex_.is_closed)
        self.assertEqual(complex_.locality, 4)
        self.assertTrue(complex_.regular)

    def test_torus_ids_follow_grid_layout(self):
        complex_ = torus_grid(3, 4)
        grid = complex_.grid
        self.assertEqual(grid.vertex(1, 2), 1 + 3 * 2)
        self.assertEqual(grid.v_edge(0, 0), 12)
        self.assertEqual(tuple(complex_.face_edges(grid.face(2, 3))),
                         (grid.h_edge(2, 3), grid.v_edge(0, 3), grid.h_edge(2, 0), grid.v_edge(2, 3)))

    def test_two_by_two_torus_is_not_regular(self):
        complex_ = torus_grid(2, 2)
        self.assertFalse(complex_.regular)
        self.assertEqual(len(complex_.edge_ids), 8)

    def test_planar_counts_and_boundary(self):
        complex_ = planar_grid(2, 2)
        self.assertEqual(len(complex_.vertex_ids), 9)
        self.assertEqual(len(complex_.edge_ids), 12)
        self.assertFalse(complex_.is_closed)
        self.assertEqual(len(topological_boundary(complex_)), 8)

    def test_size_too_small(self):
        with self.assertRaises(SizeTooSmall):
            torus_grid(1, 3)
        with self.assertRaises(SizeTooSmall):
            planar_grid(0, 2)

    def test_components(self):
        self.assertEqual(len(connected_components(torus_grid(3, 3))), 1)
        self.assertEqual(len(dual_components(planar_grid(2, 3))), 1)


class TestValidation(unittest.TestCase):

    def test_glued_triangles_are_valid(self):
        complex_ = _triangle_pair()
        self.assertEqual(complex_.edge_faces("c"), ["up", "down"])
        self.assertEqual(complex_.other_face("c", "up"), "down")
        self.assertIsNone(complex_.other_face("ax", "up"))

    def test_short_face_is_bad_polygon(self):
        with self.assertRaises(BadPolygon):
            build_complex([0, 1], {0: (0, 1), 1: (1, 0)}, {0: [0, 1]})

    def test_open_walk_is_bad_polygon(self):
        edges = {0: (0, 1), 1: (1, 2), 2: (2, 3)}
        with self.assertRaises(BadPolygon):
            build_complex([0, 1, 2, 3], edges, {0: [0, 1, 2]})

    def test_edge_in_three_faces_is_not_a_surface(self):
        vertices = ["a", "b", "x", "y", "z"]
        edges = {"c": ("a", "b"), "ax": ("a", "x"), "bx": ("b", "x"), "ay": ("a", "y"), "by": ("b", "y"),
                 "az": ("a", "z"), "bz": ("b", "z")}
        faces = {"f1": ["c", "bx", "ax"], "f2": ["c", "by", "ay"], "f3": ["c", "bz", "az"]}
        with self.assertRaises(NonSurface) as ctx:
            build_complex(vertices, edges, faces)
        self.assertEqual(ctx.exception.details["violations"][0]["edge"], "c")

    def test_faces_sharing_two_edges_violate_intersection(self):
        vertices = [0, 1, 2, 3]
        edges = {0: (0, 1), 1: (1, 2), 2: (2, 3), 3: (3, 0), 4: (1, 3), 5: (0, 2)}
        faces = {"a": [0, 1, 2, 3], "b": [0, 4, 2, 5]}
        with self.assertRaises(IntersectionViolation):
            build_complex(vertices, edges, faces)

    def test_to_dict_lists_every_cell(self):
        data = planar_grid(1, 1).to_dict()
        self.assertEqual(len(data["vertices"]), 4)
        self.assertEqual(len(data["edges"]), 4)
        self.assertEqual(len(data["faces"]), 1)


class TestTraversal(unittest.TestCase):

    def test_shortest_path_on_torus(self):
        complex_ = torus_grid(3, 3)
        path = find_path(complex_, 0, 4)
        self.assertEqual(len(path), 2)
        self.assertEqual(path.stars[0], 0)
        self.assertEqual(path.stars[-1], 4)

    def test_trivial_path(self):
        self.assertEqual(len(find_path(torus_grid(3, 3), 5, 5)), 0)

    def test_blocked_path_is_unreachable(self):
        complex_ = planar_grid(1, 1)
        with self.assertRaises(Unreachable):
            find_path(complex_, 0, 3, blocked={1, 2})

    def test_copath_to_boundary(self):
        complex_ = planar_grid(3, 3)
        copath = find_copath(complex_, 4, BOUNDARY)
        self.assertEqual(len(copath), 2)
        self.assertIsNone(copath.plaquettes[-1])

    def test_copath_on_closed_complex_never_reaches_boundary(self):
        with self.assertRaises(Unreachable):
            find_copath(torus_grid(3, 3), 0, BOUNDARY)

    def test_vertex_rotation_closes_on_torus(self):
        edges, closed = vertex_rotation(torus_grid(3, 3), 4)
        self.assertTrue(closed)
        self.assertEqual(len(edges), 4)

    def test_vertex_rotation_is_open_on_boundary(self):
        _, closed = vertex_rotation(planar_grid(2, 2), 0)
        self.assertFalse(closed)

    def test_vertex_distances(self):
        distances = vertex_distances(torus_grid(4, 4), 0)
        self.assertEqual(max(distances.values()), 4)

    def test_ribbon_collapses_back_to_its_path(self):
        complex_ = torus_grid(4, 4)
        grid = complex_.grid
        path = find_path(complex_, grid.vertex(0, 0), grid.vertex(2, 2))
        ribbon = complete_path_to_ribbon(complex_, path)
        self.assertEqual(ribbon.edges[0], path.edges[0])
        self.assertEqual(ribbon_path(complex_, ribbon).edges, path.edges)

    def test_repeated_star_is_not_simple(self):
        complex_ = torus_grid(3, 3)
        grid = complex_.grid
        looped = Path((0, 1, 0), (grid.h_edge(0, 0), grid.h_edge(0, 0)))
        with self.assertRaises(NotSimple):
            complete_path_to_ribbon(complex_, looped)


if __name__ == '__main__':
    unittest.main()
