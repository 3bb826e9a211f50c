import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhsictest import (
    ComponentData,
    DegenerateSchemeError,
    DegenerateVarianceError,
    GramStack,
    InvalidInputError,
    KernelSpec,
    Sample,
    WeightScheme,
    asymptotic_test,
    asymptotic_test_from_grams,
    build_gram_stack,
    dhsic_naive,
    gaussian_gram,
    normal_quantile,
    permutation_test,
    permutation_test_from_grams,
    permute_stack,
    two_sided_p,
)
from conftest import random_kernel_stack, random_vector_sample

SCHEME = WeightScheme.alternating(0.32)
GAUSS = KernelSpec.gaussian(0.5)


class TestNormalHelpers:
    def test_quantile_round_trip(self):
        # Phi(Phi^-1(q)) = q to near double precision
        for q in (0.5, 0.9, 0.975, 0.995):
            z = normal_quantile(q)
            assert 0.5 * math.erfc(-z / math.sqrt(2)) == pytest.approx(q, abs=1e-12)

    def test_boundary_is_not_rejected(self):
        # at |z| exactly Phi^-1(1 - alpha/2) the p-value is alpha and the
        # strict rule keeps the null for every common alpha
        for alpha in (0.01, 0.05, 0.1, 0.32):
            z = normal_quantile(1.0 - alpha / 2.0)
            p = two_sided_p(z)
            assert p == pytest.approx(alpha, abs=1e-12)
            assert not (p < alpha)


class TestAsymptoticTest:
    def test_fields_and_rule(self, rng):
        sample = random_vector_sample(rng, 40, 3)
        res = asymptotic_test(sample, [GAUSS] * 3, SCHEME, alpha=0.05)
        assert res.method == "asymptotic_modified"
        assert res.n == 40 and res.d == 3
        assert res.gamma == 0.32
        assert res.scale > 0.0
        assert res.z_score == pytest.approx(math.sqrt(40) * res.statistic / res.scale)
        assert res.p_value == pytest.approx(two_sided_p(res.z_score))
        assert res.reject == (res.p_value < res.alpha)

    def test_threshold_form_equivalence(self, rng):
        # reject iff |statistic| > n^(-1/2) * sigma_hat * Phi^-1(1 - alpha/2)
        for alpha in (0.01, 0.05, 0.2):
            sample = random_vector_sample(rng, 30, 2)
            res = asymptotic_test(sample, [GAUSS] * 2, SCHEME, alpha=alpha)
            threshold = res.scale * normal_quantile(1.0 - alpha / 2.0) / math.sqrt(res.n)
            assert res.reject == (abs(res.statistic) > threshold)

    def test_degenerate_variance_on_constant_data(self):
        comps = tuple(ComponentData(np.tile([float(k + 1)], (5, 1))) for k in range(3))
        with pytest.raises(DegenerateVarianceError):
            asymptotic_test(Sample(comps), [GAUSS] * 3, SCHEME)

    def test_constant_one_scheme_rejected(self, rng):
        sample = random_vector_sample(rng, 10, 2)
        with pytest.raises(DegenerateSchemeError):
            asymptotic_test(sample, [GAUSS] * 2, WeightScheme.constant_one())

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_alpha_validation(self, rng, alpha):
        sample = random_vector_sample(rng, 10, 2)
        with pytest.raises(InvalidInputError):
            asymptotic_test(sample, [GAUSS] * 2, SCHEME, alpha=alpha)

    def test_needs_two_observations(self):
        stack = GramStack((np.array([[1.0]]), np.array([[1.0]])))
        with pytest.raises(InvalidInputError):
            asymptotic_test_from_grams(stack, SCHEME)


@settings(max_examples=200, deadline=None, derandomize=True)
@given(
    d_hat=st.floats(-1.0, 1.0, allow_nan=False),
    sigma=st.floats(1e-6, 10.0, allow_nan=False),
    n=st.integers(2, 10_000),
    alpha=st.floats(0.001, 0.999, allow_nan=False),
)
def test_rule_forms_agree(d_hat, sigma, n, alpha):
    z = math.sqrt(n) * d_hat / sigma
    p_rule = two_sided_p(z) < alpha
    threshold_rule = abs(d_hat) > sigma * normal_quantile(1.0 - alpha / 2.0) / math.sqrt(n)
    assert p_rule == threshold_rule


class TestPermutationTest:
    def test_add_one_estimator_single_permutation(self, rng):
        # strongly dependent pair: any non-identity permutation lowers the
        # statistic, so with B = 1 the p-value is exactly (1 + 0) / 2
        values = rng.normal(size=(10, 2))
        comp = ComponentData(values)
        sample = Sample((comp, ComponentData(values.copy())))
        res = permutation_test(sample, [GAUSS] * 2, num_permutations=1, alpha=0.05, seed=3)
        assert res.p_value == 0.5

    def test_identical_rows_give_p_one(self):
        comps = tuple(ComponentData(np.tile([1.0, 2.0], (6, 1))) for _ in range(2))
        res = permutation_test(Sample(comps), [GAUSS] * 2, num_permutations=25, seed=0)
        assert res.statistic == 0.0
        assert res.p_value == 1.0
        assert not res.reject

    def test_fields(self, rng):
        sample = random_vector_sample(rng, 12, 3)
        res = permutation_test(sample, [GAUSS] * 3, num_permutations=19, alpha=0.1, seed=5)
        assert res.method == "permutation"
        assert res.scale == 0.0 and res.z_score is None and res.gamma is None
        assert res.num_permutations == 19 and res.seed == 5
        assert res.statistic == pytest.approx(dhsic_naive(build_gram_stack(sample, [GAUSS] * 3)))
        assert res.reject == (res.p_value < res.alpha)

    def test_deterministic_given_seed(self, rng):
        sample = random_vector_sample(rng, 15, 2)
        a = permutation_test(sample, [GAUSS] * 2, num_permutations=30, seed=11)
        b = permutation_test(sample, [GAUSS] * 2, num_permutations=30, seed=11)
        assert a.to_dict() == b.to_dict()
        assert a.to_json() == b.to_json()

    def test_validation(self, rng):
        sample = random_vector_sample(rng, 6, 2)
        with pytest.raises(InvalidInputError):
            permutation_test(sample, [GAUSS] * 2, num_permutations=0)

    def test_rejects_on_dependent_data(self, rng):
        values = rng.normal(size=(40, 2))
        sample = Sample((ComponentData(values), ComponentData(values * 2.0)))
        res = permutation_test(sample, [GAUSS, KernelSpec.gaussian(0.125)], num_permutations=99, seed=2)
        assert res.reject

    def test_level_validity_under_exchangeable_null(self):
        # add-one estimator is conservative: empirical P(p <= alpha) stays
        # within alpha + 2/sqrt(replicates)
        rng = np.random.default_rng(99)
        alpha, reps, hits = 0.05, 200, 0
        for _ in range(reps):
            sample = random_vector_sample(rng, 25, 2, dim=1)
            res = permutation_test(sample, [GAUSS] * 2, num_permutations=39, alpha=alpha,
                                   seed=int(rng.integers(2**31)))
            hits += res.p_value <= alpha
        assert hits / reps <= alpha + 2.0 / math.sqrt(reps)


class TestPermuteStack:
    def test_shortcut_matches_recomputed_grams(self, rng):
        # permuting rows/columns of a Gram equals building the Gram of the
        # permuted observations
        values = [rng.normal(size=(8, 3)) for _ in range(2)]
        sample = Sample(tuple(ComponentData(v) for v in values))
        stack = build_gram_stack(sample, [GAUSS] * 2)
        perms = [rng.permutation(8), rng.permutation(8)]
        shortcut = permute_stack(stack, perms)
        recomputed = build_gram_stack(
            Sample(tuple(ComponentData(v[p]) for v, p in zip(values, perms))), [GAUSS] * 2
        )
        for a, b in zip(shortcut.grams, recomputed.grams):
            assert np.array_equal(a, b)

    def test_identity_entries_pass_through(self, rng):
        stack = random_kernel_stack(rng, 5, 2)
        same = permute_stack(stack, [None, None])
        for a, b in zip(same.grams, stack.grams):
            assert np.array_equal(a, b)

    def test_wrong_count(self, rng):
        stack = random_kernel_stack(rng, 5, 2)
        with pytest.raises(InvalidInputError):
            permute_stack(stack, [None])


class TestResultSerialization:
    def test_json_key_order_is_stable(self, rng):
        sample = random_vector_sample(rng, 10, 2)
        res = asymptotic_test(sample, [GAUSS] * 2, SCHEME)
        keys = list(json.loads(res.to_json()).keys())
        assert keys == [
            "method", "statistic", "scale", "z_score", "p_value", "alpha",
            "reject", "n", "d", "gamma", "num_permutations", "seed",
        ]

    def test_optional_fields_null(self, rng):
        sample = random_vector_sample(rng, 10, 2)
        res = permutation_test(sample, [GAUSS] * 2, num_permutations=5, seed=1)
        data = json.loads(res.to_json())
        assert data["z_score"] is None and data["gamma"] is None
        assert data["num_permutations"] == 5 and data["seed"] == 1
