"""Energy, conditionals and exact likelihood of the binary RBM."""
import itertools
import math

import numpy as np
import pytest

from boltzmann.services.data import BinaryDataset
from boltzmann.services.exceptions import ContractViolation, IntractableSizeError, ShapeError
from boltzmann.services.model import (
    ParamStats,
    RbmParams,
    apply_step,
    binary_states,
    energy,
    exact_avg_log_likelihood,
    exact_log_partition,
    exact_visible_log_probs,
    free_energy,
    g_value,
    hidden_probs,
    logistic,
    visible_probs,
)

from .conftest import random_params


def _brute_force_log_z(params: RbmParams) -> float:
    terms = [
        -energy(params, np.array(v, float), np.array(h, float))
        for v in itertools.product((0, 1), repeat=params.m)
        for h in itertools.product((0, 1), repeat=params.n)
    ]
    return float(np.log(np.sum(np.exp(terms))))


class TestRbmParams:

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ShapeError):
            RbmParams(np.zeros((2, 3)), np.zeros(3), np.zeros(3))

    def test_rejects_non_finite(self):
        with pytest.raises(ContractViolation):
            RbmParams(np.array([[np.nan]]), np.zeros(1), np.zeros(1))

    def test_arrays_are_frozen_copies(self):
        w = np.zeros((1, 2))
        params = RbmParams(w, np.zeros(2), np.zeros(1))
        w[0, 0] = 5.0
        assert params.w[0, 0] == 0.0
        with pytest.raises(ValueError):
            params.w[0, 0] = 1.0

    def test_transposed_swaps_layers(self, small_params):
        swapped = small_params.transposed()
        assert (swapped.m, swapped.n) == (small_params.n, small_params.m)
        np.testing.assert_array_equal(swapped.b, small_params.c)

    def test_apply_step_with_zero_rate_is_identity(self, small_params):
        step = ParamStats.full_like(small_params, 3.0)
        assert apply_step(small_params, step, 0.0) == small_params

    def test_apply_step_rejects_foreign_shapes(self, small_params):
        other = ParamStats.zeros_like(RbmParams.zeros(3, 3))
        with pytest.raises(ShapeError):
            apply_step(small_params, other, 0.1)
        with pytest.raises(ShapeError):
            apply_step(small_params, ParamStats.zeros_like(small_params), other)


class TestEnergy:

    def test_zero_params(self):
        params = RbmParams.zeros(3, 2)
        assert energy(params, np.array([1, 0, 1]), np.array([1, 1])) == 0.0

    def test_single_unit(self):
        params = RbmParams([[1.0]], [0.0], [0.0])
        assert energy(params, np.array([1.0]), np.array([1.0])) == -1.0

    def test_matches_term_by_term_sum(self):
        params = random_params(2, 2, seed=3)
        v, h = np.array([1.0, 0.0]), np.array([1.0, 1.0])
        expected = -sum(h[i] * params.w[i, j] * v[j] for i in range(2) for j in range(2))
        expected -= params.b @ v + params.c @ h
        assert energy(params, v, h) == pytest.approx(expected, abs=1e-12)

    def test_shape_mismatch(self, small_params):
        with pytest.raises(ShapeError):
            energy(small_params, np.zeros(3), np.zeros(3))


class TestConditionals:

    def test_zero_params_give_half(self):
        params = RbmParams.zeros(3, 4)
        np.testing.assert_array_equal(hidden_probs(params, np.array([1, 0, 1])), 0.5)
        np.testing.assert_array_equal(visible_probs(params, np.ones(4)), 0.5)

    def test_cancelling_weights(self):
        params = RbmParams([[2.0, -2.0]], [0.0, 0.0], [0.0])
        np.testing.assert_allclose(hidden_probs(params, np.array([1.0, 1.0])), [0.5])

    def test_logistic_of_one(self):
        params = RbmParams([[1.0, 1.0]], [0.0, 0.0], [-1.0])
        np.testing.assert_allclose(hidden_probs(params, np.array([1.0, 1.0])), [0.73106], atol=1e-5)

    def test_visible_biases_only(self):
        params = RbmParams(np.zeros((2, 2)), [3.0, -3.0], np.zeros(2))
        np.testing.assert_allclose(visible_probs(params, np.array([1.0, 0.0])),
                                   [logistic(3.0), logistic(-3.0)])

    def test_transposition_symmetry(self, small_params):
        h = np.array([1.0, 0.0, 1.0])
        np.testing.assert_allclose(visible_probs(small_params, h),
                                   hidden_probs(small_params.transposed(), h))


class TestGValue:

    def test_zero_params(self):
        assert g_value(RbmParams.zeros(3, 3), np.array([1.0, 1.0, 0.0])) == pytest.approx(3 * math.log(2))

    def test_two_state_enumeration(self):
        params = random_params(3, 1, seed=11)
        v = np.array([1.0, 0.0, 1.0])
        expected = np.logaddexp(-energy(params, v, np.array([0.0])), -energy(params, v, np.array([1.0])))
        assert g_value(params, v) == pytest.approx(expected, abs=1e-12)

    def test_visible_bias_is_linear(self, small_params):
        v = np.array([0.0, 1.0, 1.0, 0.0])
        shifted = small_params.replace(b=small_params.b + np.array([0.0, 0.7, 0.0, 0.0]))
        assert g_value(shifted, v) - g_value(small_params, v) == pytest.approx(0.7, abs=1e-12)

    def test_batched_rows(self, small_params):
        states = binary_states(4)
        np.testing.assert_allclose(g_value(small_params, states),
                                   [g_value(small_params, row) for row in states])

    def test_free_energy_gives_visible_probabilities(self, small_params):
        states, log_probs = exact_visible_log_probs(small_params)
        np.testing.assert_allclose(free_energy(small_params, states), -g_value(small_params, states))
        unnormalised = np.exp(-free_energy(small_params, states))
        np.testing.assert_allclose(unnormalised / unnormalised.sum(), np.exp(log_probs), rtol=1e-10)


class TestExactLogPartition:

    def test_zero_params(self):
        assert exact_log_partition(RbmParams.zeros(3, 5)) == pytest.approx(8 * math.log(2))

    def test_single_pair(self):
        params = RbmParams([[1.0]], [0.0], [0.0])
        assert exact_log_partition(params) == pytest.approx(math.log(3 + math.e), abs=1e-5)

    def test_enumeration_side_agrees(self):
        params = random_params(3, 5, seed=2)
        visible = exact_log_partition(params, side='visible')
        hidden = exact_log_partition(params, side='hidden')
        assert abs(visible - hidden) < 1e-10
        assert abs(visible - _brute_force_log_z(params)) < 1e-10

    def test_blocks_cover_wide_layers(self):
        # 18 units enumerate in several blocks of 2^16 states
        params = random_params(18, 20, seed=4, scale=0.05)
        assert exact_log_partition(params, side='visible') == pytest.approx(
            exact_log_partition(params, side='hidden'), abs=1e-8)

    def test_cap(self):
        with pytest.raises(IntractableSizeError):
            exact_log_partition(RbmParams.zeros(30, 30))

    def test_visible_distribution_normalised(self, small_params):
        states, log_probs = exact_visible_log_probs(small_params)
        assert states.shape == (16, 4)
        assert np.exp(log_probs).sum() == pytest.approx(1.0, abs=1e-12)


class TestExactAvgLogLikelihood:

    def test_zero_params(self):
        data = np.random.default_rng(0).integers(0, 2, (20, 9))
        assert exact_avg_log_likelihood(RbmParams.zeros(9, 4), data) == pytest.approx(-9 * math.log(2), abs=1e-4)

    def test_single_sample_matches_joint_table(self, small_params):
        v = np.array([1.0, 0.0, 0.0, 1.0])
        joint = [-energy(small_params, v, np.array(h, float))
                 for h in itertools.product((0, 1), repeat=small_params.n)]
        expected = float(np.log(np.sum(np.exp(joint)))) - _brute_force_log_z(small_params)
        assert exact_avg_log_likelihood(small_params, v) == pytest.approx(expected, abs=1e-10)

    def test_duplicating_dataset(self, small_params):
        data = np.array([[1, 0, 0, 1], [0, 1, 1, 1], [0, 0, 0, 0]], dtype=float)
        once = exact_avg_log_likelihood(small_params, data)
        twice = exact_avg_log_likelihood(small_params, np.vstack([data, data]))
        assert abs(once - twice) < 1e-12

    def test_weights_match_expanded_rows(self, small_params):
        dataset = BinaryDataset([[1, 0, 0, 1], [0, 1, 1, 1]], weights=[1, 3])
        assert exact_avg_log_likelihood(small_params, dataset) == pytest.approx(
            exact_avg_log_likelihood(small_params, dataset.expanded()), abs=1e-12)

    def test_empty_dataset(self, small_params):
        with pytest.raises(ShapeError):
            exact_avg_log_likelihood(small_params, np.zeros((0, 4)))
