# tests/test_partition.py

import itertools
import unittest

import numpy as np
import yaml
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from src.core.errors import BadParams, NoCenter
from src.core.models import STAR
from src.core.serialization import dump_text
from src.hamiltonian.clh_instance import surface_code_instance, toric_instance
from src.hamiltonian.partition import SuperParticlePartition, TriangleRegion, Triangulation, block_triangulation, \
    build_superparticles, edge_bound, moore_bound, region_diameter, two_local_violations, \
    verify_quasi_euclidean, verify_two_local
from src.hamiltonian.structure import fixable_set, puncture
from src.lattice.surface_complex import build_complex, planar_grid, torus_grid
from src.synthesis import np_certificate, verify_certificate


def _diameter(n, edges):
    if not edges:
        return np.inf
    rows = [a for a, b in edges] + [b for a, b in edges]
    cols = [b for a, b in edges] + [a for a, b in edges]
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return np.max(shortest_path(graph, unweighted=True, directed=False))


def _max_degree(n, edges):
    degree = [0] * n
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    return max(degree)


def _graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield [p for i, p in enumerate(pairs) if mask >> i & 1]


class TestMooreBound(unittest.TestCase):

    def test_values(self):
        self.assertEqual(moore_bound(3, 2), 10)
        for k in range(2, 7):
            self.assertEqual(moore_bound(k, 1), 1 + k)
        self.assertEqual(edge_bound(3, 2), 15)

    def test_bad_params(self):
        with self.assertRaises(BadParams):
            moore_bound(1, 3)
        with self.assertRaises(BadParams):
            moore_bound(3, 0)

    def test_petersen_graph_meets_the_bound(self):
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        edges = outer + spokes + inner
        self.assertEqual(_max_degree(10, edges), 3)
        self.assertEqual(_diameter(10, edges), 2)
        self.assertEqual(moore_bound(3, 2), 10)
        self.assertLessEqual(len(edges), edge_bound(3, 2))

    def test_no_six_vertex_graph_beats_the_cycle_bound(self):
        bound = moore_bound(2, 2)
        self.assertEqual(bound, 5)
        for edges in _graphs(6):
            if edges and _max_degree(6, edges) <= 2:
                self.assertGreater(_diameter(6, edges), 2)

    def test_five_cycle_is_tight(self):
        tight = [edges for edges in _graphs(5)
                 if edges and _max_degree(5, edges) <= 2 and _diameter(5, edges) <= 2]
        self.assertTrue(tight)
        self.assertTrue(all(len(edges) <= edge_bound(2, 2) for edges in tight))


class TestTriangulation(unittest.TestCase):

    def test_large_torus_is_quasi_euclidean(self):
        complex_ = torus_grid(56, 56)
        triangulation = block_triangulation(complex_, 28)
        self.assertEqual((triangulation.r, triangulation.R, triangulation.D), (8, 60, 6))
        self.assertEqual(len(triangulation.regions), 8)
        ok, violations = verify_quasi_euclidean(complex_, triangulation, 8, 60, 6)
        self.assertTrue(ok, violations)

    def test_oversized_radius_leaves_the_triangle(self):
        complex_ = torus_grid(56, 56)
        triangulation = block_triangulation(complex_, 28, r=20)
        ok, violations = verify_quasi_euclidean(complex_, triangulation, 20, 60, 6)
        self.assertFalse(ok)
        self.assertIn("ball", {v["kind"] for v in violations})

    def test_single_region_fails_diameter_and_overlap(self):
        complex_ = torus_grid(8, 8)
        everything = frozenset(complex_.edge_ids)
        region = TriangleRegion(everything, 0, (0, 1, 2), (0, 1, 2), (0, 1, 2))
        self.assertEqual(region_diameter(complex_, everything), 8.0)
        ok, violations = verify_quasi_euclidean(complex_, Triangulation([region, region], 1, 4, 6), 1, 4, 6)
        self.assertFalse(ok)
        kinds = {v["kind"] for v in violations}
        self.assertIn("diameter", kinds)
        self.assertIn("overlap", kinds)

    def test_bad_blocks(self):
        with self.assertRaises(BadParams):
            block_triangulation(torus_grid(9, 9), 4)
        with self.assertRaises(BadParams):
            block_triangulation(torus_grid(4, 4), 2)
        triangle = build_complex(["a", "b", "c"], {0: ("a", "b"), 1: ("b", "c"), 2: ("c", "a")},
                                 {"f": [0, 1, 2], "g": [0, 1, 2]}, strict=False)
        with self.assertRaises(BadParams):
            block_triangulation(triangle, 3)


class TestSuperParticles(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        complex_ = planar_grid(8, 8)
        cls.instance = surface_code_instance(complex_)
        cls.fixable = fixable_set(cls.instance)
        cls.punctured = puncture(cls.instance, cls.fixable)
        cls.triangulation = block_triangulation(complex_, 8)

    def test_planar_code_partition_is_two_local(self):
        with self.assertLogs(level="WARNING"):
            partition = build_superparticles(self.punctured, self.triangulation)
        self.assertTrue(verify_two_local(self.punctured, partition))
        self.assertEqual(len(partition.centers), 2)

    def test_star_centers_when_only_stars_are_punctured(self):
        stars = {site: op for site, op in self.fixable.items() if site[0] == STAR}
        self.assertTrue(stars)
        punctured = puncture(self.instance, stars)
        with self.assertLogs(level="WARNING"):
            partition = build_superparticles(punctured, self.triangulation)
        self.assertEqual({site[0] for site in partition.centers.values()}, {STAR})
        self.assertEqual(set(partition.block_of()), set(punctured.instance.qubits))
        self.assertTrue(verify_two_local(punctured, partition))

    def test_blocks_cover_every_qubit_once(self):
        partition = build_superparticles(self.punctured, self.triangulation)
        owner = partition.block_of()
        self.assertEqual(set(owner), set(self.punctured.instance.qubits))
        self.assertEqual(sum(len(edges) for edges in partition.blocks.values()), len(owner))
        self.assertLessEqual(partition.max_block, partition.size_bound)

    def test_certificate_partition_is_rechecked(self):
        certificate = yaml.safe_load(dump_text(np_certificate(self.instance, self.triangulation)))
        claimed = certificate["partition"]
        self.assertEqual(claimed["triangulation"]["D"], self.triangulation.D)
        self.assertEqual(sum(len(qubits) for qubits in claimed["blocks"].values()), self.instance.n)
        checks = verify_certificate(self.instance, certificate)["checks"]
        self.assertTrue(checks["two_local"])
        self.assertTrue(checks["block_size"])

    def test_triangulation_is_quasi_euclidean(self):
        t = self.triangulation
        ok, violations = verify_quasi_euclidean(self.punctured.instance.complex, t, t.r, t.R, t.D)
        self.assertTrue(ok, violations)

    def test_one_block_per_qubit_is_not_two_local(self):
        qubits = self.punctured.instance.qubits
        partition = SuperParticlePartition({q: frozenset([q]) for q in qubits})
        self.assertFalse(verify_two_local(self.punctured, partition))
        self.assertTrue(two_local_violations(self.punctured, partition))

    def test_missing_qubit_is_reported(self):
        partition = SuperParticlePartition({"all": frozenset(self.punctured.instance.qubits[1:])})
        violations = two_local_violations(self.punctured, partition)
        self.assertTrue(any(v["unowned"] == [self.punctured.instance.qubits[0]] for v in violations))

    def test_toric_code_has_no_center(self):
        complex_ = torus_grid(8, 8)
        punctured = puncture(toric_instance(complex_), {})
        with self.assertRaises(NoCenter):
            build_superparticles(punctured, block_triangulation(complex_, 8))

    def test_fully_special_instance_needs_one_block(self):
        complex_ = planar_grid(1, 1)
        punctured = puncture(surface_code_instance(complex_), {})
        partition = SuperParticlePartition({"all": frozenset(complex_.edge_ids)})
        self.assertTrue(verify_two_local(punctured, partition))


if __name__ == '__main__':
    unittest.main()
