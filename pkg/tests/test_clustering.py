import math

import numpy as np
import pytest

from core.config import PipelineConfig
from core.exceptions import ValidationError
from core.types import Region
from detection.audit import audit_partition, check_monotone, total_baseline_energy
from detection.clustering import (
    Partition, baselines_from_partition, cluster_distance, cluster_geometry, edge_priority, greedy_cluster,
    reduce_neighborhood, sort_edges, trace_line_end,
)
from detection.neighborhood import NeighborhoodSystem, build_neighborhood
from detection.regression import (
    cluster_statistics, curvilinearity, project_to_curve, regression_curve, regression_residuals,
)
from conftest import row_points


def geometry(points, theta=0.0, interline=64.0, degree=3):
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    return cluster_geometry(range(n), points, np.full(n, theta), np.full(n, interline), degree)


def rows_instance(ys, n_per_row=10, step=10.0, interline=64.0):
    """SP rows with states and sorted edges; along-row edges are bright, the rest dim."""
    positions = np.vstack([row_points(y, 0, (n_per_row - 1) * step, step) for y in ys])
    n = len(positions)
    thetas = np.zeros(n)
    interlines = np.full(n, interline)
    edges = build_neighborhood(positions).edges
    row_of = np.repeat(np.arange(len(ys)), n_per_row)
    gammas = np.where(row_of[edges[:, 0]] == row_of[edges[:, 1]], 1.0, 0.1)
    edges, gammas, _ = sort_edges(positions, edges, thetas, gammas)
    return positions, thetas, interlines, edges, gammas


class TestClusterStatistics:
    def test_uniform(self):
        assert cluster_statistics(np.zeros(4), np.full(4, 64.0)) == (0.0, 64.0)

    def test_axial_wraparound(self):
        theta, _ = cluster_statistics(np.radians([80.0, -80.0]), np.array([64.0, 32.0]))
        assert abs(theta) == pytest.approx(math.pi / 2)

    def test_singleton(self):
        theta, s = cluster_statistics(np.array([0.3]), np.array([25.6]))
        assert theta == pytest.approx(0.3) and s == 25.6


class TestRegression:
    def test_collinear_horizontal(self):
        pts = row_points(50, 0, 100, 10)
        curve = regression_curve(pts, np.zeros(len(pts)), 3)
        np.testing.assert_allclose(regression_residuals(pts, curve), 0.0, atol=1e-9)

    def test_cubic_is_exact(self):
        t = np.linspace(-2, 2, 15)
        pts = np.column_stack([t, t ** 3])
        curve = regression_curve(pts, np.zeros(len(t)), 3)
        np.testing.assert_allclose(regression_residuals(pts, curve), 0.0, atol=1e-9)
        np.testing.assert_allclose(curve.raw_coefficients(), [0, 0, 0, 1], atol=1e-9)

    def test_normal_equations(self, rng):
        pts = rng.uniform(-3, 3, (10, 2))
        curve = regression_curve(pts, np.zeros(10), 3, theta=0.0)
        design = np.vander(pts[:, 0], 4, increasing=True)
        expected = np.linalg.solve(design.T @ design, design.T @ pts[:, 1])
        np.testing.assert_allclose(curve.raw_coefficients(), expected, atol=1e-8)

    def test_degree_drops_with_few_points(self):
        curve = regression_curve(np.array([[0.0, 1.0], [10.0, 3.0]]), np.zeros(2), 3)
        assert curve.degree == 1

    def test_vertical_degeneracy(self):
        pts = np.array([[5.0, 1.0], [5.0, 4.0], [5.0, 10.0]])
        curve = regression_curve(pts, np.zeros(3), 3, theta=0.0)
        assert curve.degree == 0
        assert curve.evaluate(5.0) == pytest.approx(5.0)


class TestCurvilinearity:
    def test_collinear(self):
        pts = row_points(10, 0, 200, 10)
        assert curvilinearity(pts, np.zeros(len(pts)), np.full(len(pts), 50.0), 3) == pytest.approx(0.0, abs=1e-9)

    def test_two_points(self):
        assert curvilinearity(np.array([[0, 0], [10, 7]]), np.zeros(2), np.full(2, 50.0), 3) == 0.0

    def test_full_circle_is_rejected(self):
        phi = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        pts = np.column_stack([100 * np.cos(phi), 100 * np.sin(phi)])
        assert curvilinearity(pts, np.zeros(100), np.full(100, 50.0), 3) > 0.3

    def test_semicircle(self):
        phi = np.linspace(0, math.pi, 50)
        pts = np.column_stack([100 * np.cos(phi), 100 * np.sin(phi)])
        cur = curvilinearity(pts, np.zeros(50), np.full(50, 50.0), 3)
        assert 0.05 < cur < 0.3

    def test_rigid_motion_invariance(self, rng):
        x = np.linspace(0, 200, 21)
        pts = np.column_stack([x, 0.002 * (x - 100) ** 2 + rng.normal(0, 2, len(x))])
        thetas = rng.normal(0, 0.05, len(x))
        s = np.full(len(x), 40.0)
        base = curvilinearity(pts, thetas, s, 3)
        angle = 0.5
        c, si = math.cos(angle), math.sin(angle)
        moved = pts @ np.array([[c, si], [-si, c]]) + (300.0, -70.0)
        assert curvilinearity(moved, thetas + angle, s, 3) == pytest.approx(base, abs=1e-6)


class TestProjection:
    def test_points_on_curve_unchanged(self):
        pts = row_points(20, 0, 50, 10)[::-1]
        projected = project_to_curve(pts, regression_curve(pts, np.zeros(len(pts)), 3))
        np.testing.assert_allclose(projected.points, pts[::-1], atol=1e-9)
        np.testing.assert_array_equal(projected.order, np.arange(len(pts))[::-1])

    def test_offset_point_lands_on_fit(self):
        pts = np.array([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [30.0, 0.0], [15.0, 4.0]])
        curve = regression_curve(pts, np.zeros(5), 1)
        projected = project_to_curve(pts, curve)
        assert list(projected.t) == [0.0, 10.0, 15.0, 20.0, 30.0]
        np.testing.assert_allclose(projected.points[:, 1], curve.evaluate(projected.t), atol=1e-9)
        assert projected.points[2, 0] == pytest.approx(15.0)

    def test_cubic_fit(self, rng):
        x = np.linspace(0, 100, 12)
        pts = np.column_stack([x, 1e-4 * x ** 3 - 0.01 * x ** 2 + rng.normal(0, 1, 12)])
        curve = regression_curve(pts, np.zeros(12), 3)
        projected = project_to_curve(pts, curve)
        np.testing.assert_allclose(projected.points[:, 0], x, atol=1e-9)
        np.testing.assert_allclose(projected.points[:, 1], curve.evaluate(x), atol=1e-9)


class TestClusterDistance:
    def test_parallel_rows(self):
        a = geometry(row_points(100, 0, 100, 10))
        b = geometry(row_points(130, 20, 120, 10))
        assert cluster_distance(a, b) == pytest.approx(30.0)

    def test_gate(self):
        a = geometry(row_points(100, 0, 100, 10))
        b = geometry(row_points(10100, 0, 100, 10))
        assert cluster_distance(a, b) == math.inf

    def test_slanted_rows(self):
        d = np.array([1.0, 1.0]) / math.sqrt(2)
        n = np.array([-1.0, 1.0]) / math.sqrt(2)
        a = geometry([k * 10 * d for k in range(8)], theta=math.pi / 4)
        b = geometry([k * 10 * d + 20 * n + 3 * d for k in range(8)], theta=math.pi / 4)
        assert cluster_distance(a, b) == pytest.approx(20.0, abs=1e-6)

    def test_symmetric(self):
        a = geometry(row_points(100, 0, 100, 10))
        b = geometry(row_points(140, 50, 150, 10), interline=32.0)
        assert cluster_distance(a, b) == pytest.approx(cluster_distance(b, a))


class TestEdgePriority:
    def test_horizontal_on_bright_baseline(self):
        assert edge_priority((0, 0), (10, 0), 0.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_vertical_edge(self):
        assert edge_priority((0, 0), (0, 10), 0.0, 0.0, 0.9) == pytest.approx(0.0)

    def test_diagonal(self):
        assert edge_priority((0, 0), (10, 10), 0.0, 0.0, 0.8) == pytest.approx((1 - math.sqrt(2) / 2) * 0.8)

    def test_zero_length(self):
        with pytest.raises(ValidationError):
            edge_priority((3, 3), (3, 3), 0.0, 0.0, 1.0)

    def test_sort_order(self):
        positions = np.array([[0, 0], [10, 0], [0, 10], [10, 10]], dtype=float)
        edges = np.array([[2, 3], [0, 2], [0, 1]])
        ordered, gammas, priorities = sort_edges(positions, edges, np.zeros(4), np.array([0.5, 0.9, 0.5]))
        assert ordered.tolist() == [[0, 1], [2, 3], [0, 2]]
        np.testing.assert_allclose(priorities, [0.5, 0.5, 0.0])
        np.testing.assert_allclose(gammas, [0.5, 0.5, 0.9])


class TestReduceNeighborhood:
    @pytest.fixture
    def pair(self):
        return NeighborhoodSystem(np.array([[0, 1]]), 2), np.array([[10.0, 20.0], [40.0, 20.0]])

    def test_orientation_change(self, pair, config):
        nbh, positions = pair
        assert len(reduce_neighborhood(nbh, positions, np.array([0.0, math.pi / 3]), None, None, config)) == 0
        assert len(reduce_neighborhood(nbh, positions, np.array([0.0, 0.5]), None, None, config)) == 1

    def test_axial_orientation(self, pair, config):
        nbh, positions = pair
        thetas = np.radians([88.0, -88.0])
        assert len(reduce_neighborhood(nbh, positions, thetas, None, None, config)) == 1

    def test_separator_bar(self, pair, config):
        nbh, positions = pair
        separator = np.zeros((40, 60))
        assert len(reduce_neighborhood(nbh, positions, np.zeros(2), separator, None, config)) == 1
        separator[:, 25] = 1.0
        assert len(reduce_neighborhood(nbh, positions, np.zeros(2), separator, None, config)) == 0

    def test_regions(self, pair, config):
        nbh, positions = pair
        left = Region.from_points([(0, 0), (20, 0), (20, 40), (0, 40)])
        right = Region.from_points([(30, 0), (50, 0), (50, 40), (30, 40)])
        whole = Region.from_points([(0, 0), (50, 0), (50, 40), (0, 40)])
        assert len(reduce_neighborhood(nbh, positions, np.zeros(2), None, [left, right], config)) == 0
        assert len(reduce_neighborhood(nbh, positions, np.zeros(2), None, [left, whole], config)) == 1

    def test_constraints_only_remove(self, rng, config):
        positions = rng.uniform(0, 100, (40, 2))
        thetas = rng.normal(0, 0.4, 40)
        nbh = build_neighborhood(positions)
        separator = (rng.uniform(size=(100, 100)) > 0.97).astype(float)
        region = Region.from_points([(0, 0), (60, 0), (60, 100), (0, 100)])
        plain = set(reduce_neighborhood(nbh, positions, thetas, None, None, config))
        with_sep = set(reduce_neighborhood(nbh, positions, thetas, separator, None, config))
        with_both = set(reduce_neighborhood(nbh, positions, thetas, separator, [region], config))
        assert with_both <= with_sep <= plain <= set(nbh)


class TestGreedyCluster:
    def test_two_separated_rows(self, config):
        positions, thetas, interlines, edges, gammas = rows_instance([100, 164])
        partition, log = greedy_cluster(positions, thetas, interlines, edges, gammas, config)
        assert partition.clusters == (tuple(range(10)), tuple(range(10, 20)))
        assert partition.clutter == ()
        assert audit_partition(partition, positions, thetas, interlines, edges, config) == []
        assert check_monotone(log)
        assert total_baseline_energy(partition, edges, gammas) == pytest.approx(log.moves[-1].energy)
        assert log.count('create') == 2

    def test_single_row(self, config):
        positions, thetas, interlines, edges, gammas = rows_instance([50])
        partition, log = greedy_cluster(positions, thetas, interlines, edges, gammas, config)
        assert partition.clusters == (tuple(range(10)),)
        assert log.count('extend') == 8

    @pytest.mark.parametrize("gap", [6.0, 12.0, 20.0])
    def test_close_rows_stay_feasible(self, config, gap):
        positions, thetas, interlines, edges, gammas = rows_instance([100, 100 + gap])
        partition, log = greedy_cluster(positions, thetas, interlines, edges, gammas, config)
        assert audit_partition(partition, positions, thetas, interlines, edges, config) == []
        assert len(partition.clusters) <= 2
        assert check_monotone(log)

    def test_random_instances_pass_audit(self, config):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            positions = rng.uniform(0, 200, (60, 2))
            thetas = rng.normal(0, 0.2, 60)
            interlines = rng.choice([25.6, 32.0, 42.7], 60)
            nbh = build_neighborhood(positions)
            gammas = rng.uniform(0, 1, len(nbh))
            edges, gammas, _ = sort_edges(positions, nbh.edges, thetas, gammas)
            partition, log = greedy_cluster(positions, thetas, interlines, edges, gammas, config)
            assert audit_partition(partition, positions, thetas, interlines, edges, config) == []
            assert check_monotone(log)

    def test_no_edges(self, config):
        positions = row_points(0, 0, 30, 10)
        partition, log = greedy_cluster(positions, np.zeros(4), np.full(4, 64.0), np.zeros((0, 2)),
                                        np.zeros(0), config)
        assert partition.clusters == () and partition.clutter == (0, 1, 2, 3)
        assert len(log) == 0

    def test_partition_labels(self):
        partition = Partition(clutter=(2,), clusters=((0, 1), (3, 4)))
        np.testing.assert_array_equal(partition.labels(5), [1, 1, 0, 2, 2])


class TestAudit:
    def test_detects_missing_superpixel(self, config):
        positions, thetas, interlines, edges, _ = rows_instance([100])
        partition = Partition(clutter=(), clusters=(tuple(range(9)),))
        assert any('not a partition' in v for v in
                   audit_partition(partition, positions, thetas, interlines, edges, config))

    def test_detects_close_clusters(self, config):
        positions, thetas, interlines, edges, _ = rows_instance([100, 110])
        partition = Partition(clutter=(), clusters=(tuple(range(10)), tuple(range(10, 20))))
        assert any('too close' in v for v in
                   audit_partition(partition, positions, thetas, interlines, edges, config))

    @pytest.mark.parametrize("gap,close", [(20, True), (30, True), (40, False), (70, False)])
    def test_separation_matches_clusterer(self, config, gap, close):
        positions, thetas, interlines, edges, _ = rows_instance([100, 100 + gap])
        rows = (tuple(range(10)), tuple(range(10, 20)))
        violations = audit_partition(Partition((), rows), positions, thetas, interlines, edges, config)
        a, b = (geometry(positions[list(r)]) for r in rows)
        assert (cluster_distance(a, b) <= config.delta * 64.0) is close
        assert any('too close' in v for v in violations) is close

    def test_does_not_trust_clusterer_geometry(self, config, monkeypatch):
        import detection.clustering as clustering

        monkeypatch.setattr(clustering, 'cluster_distance', lambda a, b: math.inf)
        monkeypatch.setattr(clustering, 'curvilinearity', lambda *args: 0.0)
        positions, thetas, interlines, edges, _ = rows_instance([100, 110])
        partition = Partition(clutter=(), clusters=(tuple(range(10)), tuple(range(10, 20))))
        assert any('too close' in v for v in
                   audit_partition(partition, positions, thetas, interlines, edges, config))

    def test_curved_row_is_feasible(self, config):
        x = np.linspace(0, 200, 21)
        positions = np.column_stack([x, 100 + 1e-4 * (x - 100) ** 2])
        edges = np.array([[i, i + 1] for i in range(20)])
        partition = Partition((), (tuple(range(21)),))
        assert audit_partition(partition, positions, np.zeros(21), np.full(21, 40.0), edges, config) == []

    def test_detects_unlinked_cluster(self, config):
        positions, thetas, interlines, edges, _ = rows_instance([100])
        partition = Partition(clutter=tuple(range(1, 9)), clusters=((0, 9),))
        assert any('not linked' in v for v in
                   audit_partition(partition, positions, thetas, interlines, edges, config))


class TestBaselinesFromPartition:
    def test_collinear_cluster(self, config):
        positions = row_points(30, 0, 40, 10)[[3, 0, 4, 1, 2]]
        chains = baselines_from_partition(Partition((), ((0, 1, 2, 3, 4),)), positions, np.zeros(5),
                                          np.full(5, 64.0), config)
        assert len(chains) == 1
        xs = chains[0].array[:, 0]
        assert len(xs) == 5 and np.all(np.diff(xs) > 0)

    def test_singleton_dropped(self, config):
        positions = row_points(30, 0, 40, 10)
        chains = baselines_from_partition(Partition((4,), ((0, 1, 2), (3,))), positions, np.zeros(5),
                                          np.full(5, 64.0), config)
        assert len(chains) == 1

    def test_curved_cluster_on_cubic(self, config):
        x = np.linspace(0, 100, 11)
        positions = np.column_stack([x, 50 + 2e-4 * x ** 3 - 0.02 * x ** 2])
        n = len(x)
        chains = baselines_from_partition(Partition((), (tuple(range(n)),)), positions, np.zeros(n),
                                          np.full(n, 64.0), PipelineConfig())
        curve = regression_curve(positions, np.zeros(n), config.reg_degree)
        pts = chains[0].array
        np.testing.assert_allclose(pts[:, 1], curve.evaluate(pts[:, 0]), atol=1e-6)
        np.testing.assert_allclose(pts[:, 1], positions[:, 1], atol=1e-6)


class TestChainEnds:
    @staticmethod
    def chain_over(line_cols, config, shape=(100, 200)):
        baseline = np.zeros(shape)
        baseline[50, line_cols[0]:line_cols[1] + 1] = 1.0
        positions = row_points(50, 40, 150, 10)
        n = len(positions)
        chains = baselines_from_partition(Partition((), (tuple(range(n)),)), positions, np.zeros(n),
                                          np.full(n, 64.0), config, baseline)
        return chains[0].array

    def test_ends_reach_line_ends(self, config):
        pts = self.chain_over((20, 170), config)
        assert (pts[0, 0], pts[-1, 0]) == pytest.approx((20.0, 170.0))
        np.testing.assert_allclose(pts[:, 1], 50.0)

    def test_extension_capped(self, config):
        pts = self.chain_over((0, 199), config.replace(end_extension=5))
        assert (pts[0, 0], pts[-1, 0]) == pytest.approx((35.0, 155.0))

    def test_stops_at_image_border(self, config):
        pts = self.chain_over((0, 199), config.replace(end_extension=100))
        assert (pts[0, 0], pts[-1, 0]) == pytest.approx((0.0, 199.0))

    def test_disabled(self, config):
        pts = self.chain_over((0, 199), config.replace(end_extension=0))
        assert (pts[0, 0], pts[-1, 0]) == pytest.approx((40.0, 150.0))

    def test_follows_a_sloped_line(self):
        baseline = np.zeros((60, 120))
        cols = np.arange(10, 111)
        baseline[np.round(20 + 0.2 * cols).astype(int), cols] = 1.0
        end = trace_line_end(np.array([60.0, 32.0]), np.array([1.0, 0.0]), baseline, 0.2, 80)
        assert end[0] == 110.0 and abs(end[1] - 42.0) <= 1.0
