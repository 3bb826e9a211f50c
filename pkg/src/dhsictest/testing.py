"""Joint-independence decision procedures.

Two tests are provided on top of the estimators: an asymptotic z-test built
on the weight-modified statistic (whose null distribution is standard normal
after studentization), and a permutation baseline built on the plain
V-statistic. Both reduce their decision to the single rule
``reject iff p_value < alpha`` (strict at the boundary), which for the
asymptotic test is equivalent to |statistic| exceeding
n^(-1/2) * sigma_hat * Phi^(-1)(1 - alpha/2).
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSchemeError,
    DegenerateVarianceError,
    InvalidInputError,
)
from .estimator import (
    WeightScheme,
    _dhsic_naive_arrays,
    alpha_hat_sq,
    dhsic_modified,
    sigma_hat_sq,
)
from .kernel import GramStack, Sample, build_gram_stack

ASYMPTOTIC_MODIFIED = "asymptotic_modified"
PERMUTATION = "permutation"

_STD_NORMAL = statistics.NormalDist()

# Fixed field order; part of the CLI report contract.
_RESULT_FIELDS = (
    "method",
    "statistic",
    "scale",
    "z_score",
    "p_value",
    "alpha",
    "reject",
    "n",
    "d",
    "gamma",
    "num_permutations",
    "seed",
)


def normal_quantile(q: float) -> float:
    """Standard normal quantile Phi^(-1), rational approximation exact to double."""
    return _STD_NORMAL.inv_cdf(q)


def two_sided_p(z: float) -> float:
    """2 * (1 - Phi(|z|)) via the complementary error function."""
    return math.erfc(abs(z) / math.sqrt(2.0))


@dataclass(frozen=True)
class TestResult:
    """Outcome of one joint-independence test.

    ``scale`` holds the estimated null scale sigma_hat for the asymptotic
    test and 0 for the permutation test, whose p-value needs no
    studentization.
    """

    method: str
    statistic: float
    scale: float
    z_score: float | None
    p_value: float
    alpha: float
    reject: bool
    n: int
    d: int
    gamma: float | None = None
    num_permutations: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _RESULT_FIELDS}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def asymptotic_test_from_grams(grams: GramStack, scheme, alpha: float = 0.05) -> TestResult:
    """Asymptotic normal test evaluated on a prebuilt Gram stack.

    Finite-sample caveat: the weight family's mean over 1..n enters the
    statistic directly. Alternating weights average exactly 1 for even n but
    1 - gamma/n for odd n; that deterministic O(1/n) offset is asymptotically
    negligible yet can dwarf the estimated null scale when the kernel values
    concentrate (small alpha_hat_sq), wrecking calibration at odd n. Prefer
    even n with the alternating scheme; drop one observation if needed.
    """
    alpha = _check_alpha(alpha)
    if grams.n < 2:
        raise InvalidInputError(f"asymptotic test needs n >= 2, got n = {grams.n}")
    if scheme.w_squared_limit <= 1.0:
        raise DegenerateSchemeError(
            "the asymptotic test needs a weight scheme with quadratic-mean limit > 1"
        )
    d_hat = dhsic_modified(grams, scheme)
    sigma_sq = sigma_hat_sq(alpha_hat_sq(grams), scheme)
    sigma = math.sqrt(sigma_sq)
    if sigma == 0.0:
        raise DegenerateVarianceError(
            "estimated null variance is zero: all per-observation mean kernel "
            "products coincide (e.g. constant data or a constant kernel), so "
            "no z-score exists"
        )
    z = math.sqrt(grams.n) * d_hat / sigma
    p = two_sided_p(z)
    gamma = scheme.gamma if isinstance(scheme, WeightScheme) else None
    return TestResult(
        method=ASYMPTOTIC_MODIFIED,
        statistic=d_hat,
        scale=sigma,
        z_score=z,
        p_value=p,
        alpha=alpha,
        reject=p < alpha,
        n=grams.n,
        d=grams.d,
        gamma=gamma,
    )


def asymptotic_test(sample: Sample, specs, scheme, alpha: float = 0.05) -> TestResult:
    """Build Gram matrices from the sample and run the asymptotic normal test."""
    return asymptotic_test_from_grams(build_gram_stack(sample, specs), scheme, alpha)


def permute_stack(grams: GramStack, permutations) -> GramStack:
    """Jointly permute rows and columns of each Gram matrix.

    ``permutations`` holds one index array (or None for the identity) per
    component. Permuting a Gram this way equals recomputing the Gram of the
    permuted observations, with no kernel re-evaluation.
    """
    permutations = tuple(permutations)
    if len(permutations) != grams.d:
        raise InvalidInputError(
            f"got {len(permutations)} permutations for {grams.d} components"
        )
    return GramStack(tuple(_permute_gram(g, p) for g, p in zip(grams.grams, permutations)))


def _permute_gram(g: np.ndarray, perm) -> np.ndarray:
    if perm is None:
        return g
    return g[np.ix_(perm, perm)]


def _permutation_pvalue(gram_arrays, seed_seq, num_permutations: int) -> tuple[float, float]:
    n = gram_arrays[0].shape[0]
    observed = _dhsic_naive_arrays(gram_arrays)
    exceed = 0
    for child in seed_seq.spawn(num_permutations):
        rng = np.random.default_rng(child)
        # Component 1 stays fixed; permuting the other d-1 already breaks any
        # joint dependence.
        permuted = [gram_arrays[0]]
        for g in gram_arrays[1:]:
            p = rng.permutation(n)
            permuted.append(g[np.ix_(p, p)])
        if _dhsic_naive_arrays(tuple(permuted)) >= observed:
            exceed += 1
    p_value = (1.0 + exceed) / (num_permutations + 1.0)
    return observed, p_value


def permutation_test_from_grams(
    grams: GramStack,
    num_permutations: int = 100,
    alpha: float = 0.05,
    seed: int | None = None,
) -> TestResult:
    """Permutation test of the plain V-statistic on a prebuilt Gram stack.

    The p-value uses the add-one estimator (1 + #{T_b >= T_0}) / (B + 1),
    which never returns 0 and keeps the test level-valid. Each permutation's
    randomness is derived from (seed, b), so results are fully deterministic
    given the seed and independent of evaluation order.
    """
    alpha = _check_alpha(alpha)
    if grams.n < 2:
        raise InvalidInputError(f"permutation test needs n >= 2, got n = {grams.n}")
    if num_permutations < 1:
        raise InvalidInputError(f"need at least one permutation, got {num_permutations}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    observed, p = _permutation_pvalue(grams.grams, root, num_permutations)
    return TestResult(
        method=PERMUTATION,
        statistic=observed,
        scale=0.0,
        z_score=None,
        p_value=p,
        alpha=alpha,
        reject=p < alpha,
        n=grams.n,
        d=grams.d,
        num_permutations=int(num_permutations),
        seed=seed if isinstance(seed, int) else None,
    )


def permutation_test(
    sample: Sample,
    specs,
    num_permutations: int = 100,
    alpha: float = 0.05,
    seed: int | None = None,
) -> TestResult:
    """Build Gram matrices from the sample and run the permutation test."""
    return permutation_test_from_grams(
        build_gram_stack(sample, specs), num_permutations, alpha, seed
    )
