import math

import numpy as np
import pytest

from crfconv.core.diffusion import compare_crf_vs_diffusion, diffuse_to_steady, diffusion_step
from crfconv.core.energy import dirichlet_energy
from crfconv.core.errors import ShapeMismatchError, SolverConvergenceError
from crfconv.models.cloud import NeighborGraph
from crfconv.models.crf import SimilarityField
from crfconv.models.diffusion import DiffusionConfig
from crfconv.utils.fixtures import random_crf_instance


def _ring(n):
    return NeighborGraph.from_lists(
        [[(i - 1) % n, (i + 1) % n] for i in range(n)], [[0.5, 0.5] for _ in range(n)]
    )


@pytest.fixture
def weighted_pair(two_node_graph):
    return two_node_graph.with_weights([1.0, 1.0])


class TestDiffusionStep:
    def test_constant_is_unchanged(self):
        h = np.full((7, 2), 3.25)
        np.testing.assert_array_equal(diffusion_step(h, _ring(7)), h)

    def test_two_nodes_average(self, weighted_pair):
        np.testing.assert_array_equal(diffusion_step(np.array([0.0, 2.0]), weighted_pair), [1.0, 1.0])

    def test_zero_coefficient_is_identity(self, rng):
        h = rng.standard_normal((7, 3))
        np.testing.assert_array_equal(diffusion_step(h, _ring(7), c=0.0), h)

    def test_isolated_nodes_keep_their_value(self):
        graph = NeighborGraph.from_lists([[1], [0], []], [[1.0], [1.0]])
        np.testing.assert_array_equal(diffusion_step(np.array([0.0, 2.0, 5.0]), graph), [1.0, 1.0, 5.0])

    def test_rejects_negative_coefficient(self, weighted_pair):
        with pytest.raises(ValueError):
            diffusion_step(np.zeros(2), weighted_pair, c=-0.1)

    def test_maximum_principle(self, rng):
        instance = random_crf_instance(rng, 40, 2)
        graph = instance.similarity.as_weighted_graph()
        h = instance.Z
        for _ in range(20):
            nxt = diffusion_step(h, graph, c=0.9)
            assert np.all(nxt.max(axis=0) <= h.max(axis=0) + 1e-12)
            assert np.all(nxt.min(axis=0) >= h.min(axis=0) - 1e-12)
            h = nxt

    def test_dirichlet_energy_decreases_on_symmetric_ring(self, rng):
        graph = _ring(12)
        h = rng.standard_normal(12)
        energy = dirichlet_energy(graph, h)
        for _ in range(30):
            h = diffusion_step(h, graph)
            nxt = dirichlet_energy(graph, h)
            assert nxt <= energy + 1e-12
            energy = nxt


class TestDiffuseToSteady:
    def test_constant_needs_no_step(self):
        h, steps = diffuse_to_steady(np.ones((5, 1)), _ring(5))
        assert steps == 0
        np.testing.assert_array_equal(h, np.ones((5, 1)))

    def test_two_nodes_reach_average(self, weighted_pair):
        h, steps = diffuse_to_steady(np.array([0.0, 2.0]), weighted_pair)
        assert steps == 1
        np.testing.assert_array_equal(h, [1.0, 1.0])

    def test_oscillation_raises_with_residual(self, weighted_pair):
        with pytest.raises(SolverConvergenceError) as err:
            diffuse_to_steady(np.array([0.0, 2.0]), weighted_pair, c=1.0)
        assert err.value.residual == 2.0

    def test_rejects_nonpositive_tolerance(self, weighted_pair):
        with pytest.raises(ValueError):
            diffuse_to_steady(np.zeros(2), weighted_pair, tol=0.0)


class TestCompareCrfVsDiffusion:
    def test_first_step_coincides(self, rng):
        for _ in range(20):
            instance = random_crf_instance(rng, int(rng.integers(2, 40)), int(rng.integers(1, 4)))
            report = compare_crf_vs_diffusion(instance.Z, instance.graph, instance.similarity, 3)
            assert report.step1_max_difference <= 1e-12
            assert len(report.rows) == 4
            assert [row.step for row in report.rows] == [0, 1, 2, 3]

    def test_two_node_limits(self, two_node_graph):
        sim = SimilarityField.from_weights(two_node_graph, [1.0, 1.0])
        report = compare_crf_vs_diffusion(np.array([0.0, 2.0]), two_node_graph, sim, 60)
        first, last = report.rows[0], report.rows[-1]
        assert first.crf_fidelity == first.diff_fidelity == 0.0
        assert first.crf_dirichlet == pytest.approx(4.0)
        assert last.diff_fidelity == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert last.crf_fidelity == pytest.approx(math.sqrt(8.0) / 3.0, abs=1e-12)
        assert last.crf_fidelity < last.diff_fidelity
        assert last.diff_dirichlet == pytest.approx(0.0, abs=1e-12)

    def test_constant_signal_is_stationary(self, rng):
        instance = random_crf_instance(rng, 15, 2)
        Z = np.tile([0.5, -2.0], (15, 1))
        report = compare_crf_vs_diffusion(Z, instance.graph, instance.similarity, 5)
        for row in report.rows:
            assert row.crf_fidelity == pytest.approx(0.0, abs=1e-12)
            assert row.diff_fidelity == pytest.approx(0.0, abs=1e-12)

    def test_rejects_graph_of_another_field(self):
        ring = _ring(4)
        star = NeighborGraph.from_lists([[1, 2, 3], [0], [0], [0]])
        sim = SimilarityField.from_weights(ring, np.ones(ring.num_edges))
        with pytest.raises(ShapeMismatchError, match="different neighbor graph"):
            compare_crf_vs_diffusion(np.zeros((4, 1)), star, sim, 3)

    def test_rejects_zero_steps(self, two_node_graph):
        sim = SimilarityField.from_weights(two_node_graph, [1.0, 1.0])
        with pytest.raises(ValueError):
            compare_crf_vs_diffusion(np.zeros((2, 1)), two_node_graph, sim, 0)


class TestDiffusionConfig:
    def test_default_steps_scale_with_nodes(self):
        assert DiffusionConfig().steps_for(7) == 70
        assert DiffusionConfig(steps=3).steps_for(7) == 3

    @pytest.mark.parametrize("c", [0.0, 1.5, math.inf])
    def test_rejects_unstable_coefficients(self, c):
        with pytest.raises(ValueError):
            DiffusionConfig(c=c)
