"""dHSIC estimators: the plug-in V-statistic, its weight-modified variant, and
the plug-in null-variance estimator.

All estimators run in O(d * n^2) from a :class:`~dhsictest.kernel.GramStack`
by sharing per-component row sums; a brute-force index-summation oracle is
provided for testing on tiny inputs. Accumulation is float64 throughout and
reductions go through numpy, whose pairwise summation keeps the third term
stable (it subtracts two O(1) quantities whose difference is O(n^-1/2)).

Everything here is a pure function of immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateSchemeError,
    InvalidInputError,
    OracleSizeError,
)
from .kernel import GramStack

ALTERNATING = "alternating"
SINUSOIDAL = "sinusoidal"
CONSTANT_ONE = "constant_one"

_ORACLE_MAX_N = 6
_ORACLE_MAX_D = 3


@dataclass(frozen=True)
class WeightScheme:
    """Observation-weight family w_{i,n}(gamma) used by the modified estimator.

    ``alternating`` is 1 + (-1)^i * gamma with quadratic-mean limit
    1 + gamma^2; ``sinusoidal`` is 1 + sin(i*pi*gamma) with limit 3/2; both
    have limits above 1, which is what injects a nonzero normal-limit
    variance. ``constant_one`` is the unweighted case: it reproduces the
    plain V-statistic exactly and is rejected by the variance estimator.
    Indexing is 1-based. The weights average to 1 + O(1/n) and are bounded
    by 2, the properties the normal limit rests on.
    """

    kind: str
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in (ALTERNATING, SINUSOIDAL, CONSTANT_ONE):
            raise ConfigurationError(f"unknown weight scheme {self.kind!r}")
        if not (0.0 < self.gamma <= 1.0):
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma!r}")

    @classmethod
    def alternating(cls, gamma: float) -> "WeightScheme":
        return cls(ALTERNATING, float(gamma))

    @classmethod
    def sinusoidal(cls, gamma: float) -> "WeightScheme":
        return cls(SINUSOIDAL, float(gamma))

    @classmethod
    def constant_one(cls) -> "WeightScheme":
        return cls(CONSTANT_ONE)

    @property
    def w_squared_limit(self) -> float:
        if self.kind == ALTERNATING:
            return 1.0 + self.gamma * self.gamma
        if self.kind == SINUSOIDAL:
            return 1.5
        return 1.0

    def weights(self, n: int) -> np.ndarray:
        """Weight vector (w_{1,n}, ..., w_{n,n})."""
        i = np.arange(1, n + 1)
        if self.kind == ALTERNATING:
            return np.where(i % 2 == 0, 1.0 + self.gamma, 1.0 - self.gamma)
        if self.kind == SINUSOIDAL:
            return 1.0 + np.sin(i * np.pi * self.gamma)
        return np.ones(n)


@dataclass(frozen=True, eq=False)
class CustomWeights:
    """Escape hatch: an explicit positive weight vector with a user-asserted
    quadratic-mean limit.

    The constructor checks the summability bound |mean(w) - 1| <= tau/n for
    the supplied tau and rejects nonpositive weights; the caller is trusted
    on ``w_squared`` (must exceed 1 for the variance estimator to be usable).
    """

    values: np.ndarray
    w_squared: float
    tau: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 1 or vals.size < 1:
            raise InvalidInputError("custom weights must be a nonempty 1-d vector")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise InvalidInputError("custom weights must be finite and strictly positive")
        if not (self.tau > 0):
            raise InvalidInputError(f"tau must be positive, got {self.tau!r}")
        n = vals.size
        drift = abs(float(vals.mean()) - 1.0)
        if drift > self.tau / n:
            raise ConfigurationError(
                f"|mean(w) - 1| = {drift:.3e} exceeds tau/n = {self.tau / n:.3e}"
            )
        if not (self.w_squared > 1.0):
            raise ConfigurationError(
                f"asserted quadratic-mean limit must exceed 1, got {self.w_squared!r}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def w_squared_limit(self) -> float:
        return float(self.w_squared)

    def weights(self, n: int) -> np.ndarray:
        if n != self.values.size:
            raise InvalidInputError(
                f"custom weight vector has length {self.values.size}, sample has n = {n}"
            )
        return self.values


def weight_at(scheme: WeightScheme, i: int, n: int) -> float:
    """Single weight w_{i,n}, 1-based index."""
    if not 1 <= i <= n:
        raise InvalidInputError(f"index i = {i} outside 1..{n}")
    if scheme.kind == ALTERNATING:
        return 1.0 + (-1.0) ** i * scheme.gamma
    if scheme.kind == SINUSOIDAL:
        return 1.0 + math.sin(i * math.pi * scheme.gamma)
    return 1.0


def w_squared_limit(scheme) -> float:
    """Limit of (1/n) sum_i w_{i,n}^2; exceeds 1 except for constant_one."""
    return scheme.w_squared_limit


def _product_matrix(grams: tuple[np.ndarray, ...]) -> np.ndarray:
    p = grams[0].copy()
    for g in grams[1:]:
        p *= g
    return p


def _row_mean_product(grams: tuple[np.ndarray, ...]) -> np.ndarray:
    # m_i = prod_l ( (1/n) sum_j G_l[i, j] ); normalized per component to keep
    # intermediates O(1) and avoid n^(2d) overflow for large n.
    m = grams[0].mean(axis=1)
    for g in grams[1:]:
        m = m * g.mean(axis=1)
    return m


def _naive_terms(grams: tuple[np.ndarray, ...]) -> tuple[float, float, np.ndarray]:
    term1 = float(_product_matrix(grams).mean())
    term2 = 1.0
    for g in grams:
        term2 *= float(g.mean())
    return term1, term2, _row_mean_product(grams)


def _dhsic_naive_arrays(grams: tuple[np.ndarray, ...]) -> float:
    term1, term2, m = _naive_terms(grams)
    return term1 + term2 - 2.0 * float(m.mean())


def dhsic_naive(grams: GramStack) -> float:
    """Plug-in V-statistic for dHSIC, computed via per-component row sums.

    Equals the squared RKHS distance between the empirical joint embedding
    and the product of empirical marginal embeddings, so the exact value is
    nonnegative; the raw float is returned unclamped (rounding can leave it
    a hair below zero).
    """
    return _dhsic_naive_arrays(grams.grams)


def dhsic_modified(grams: GramStack, scheme) -> float:
    """Weight-modified statistic: observation i's cross term is scaled by w_{i,n}.

    With ``constant_one`` this reproduces :func:`dhsic_naive` bit for bit
    (same summation order). May be negative by construction.
    """
    term1, term2, m = _naive_terms(grams.grams)
    w = scheme.weights(grams.n)
    return term1 + term2 - 2.0 * float(np.mean(w * m))


def dhsic_oracle(grams: GramStack) -> float:
    """Brute-force evaluation of the V-statistic by explicit index summation.

    Test-only reference path, deliberately independent of the row-sum
    implementation: plain Python loops over all index tuples. Guarded to
    n <= 6 and d <= 3 (the middle term iterates over n^(2d) tuples).
    """
    n, d = grams.n, grams.d
    if n > _ORACLE_MAX_N or d > _ORACLE_MAX_D:
        raise OracleSizeError(
            f"oracle limited to n <= {_ORACLE_MAX_N} and d <= {_ORACLE_MAX_D}, got n={n}, d={d}"
        )
    mats = [g.tolist() for g in grams.grams]

    term1 = 0.0
    for i in range(n):
        for j in range(n):
            term1 += math.prod(mats[k][i][j] for k in range(d))
    term1 /= n**2

    term2 = 0.0
    for idx in itertools.product(range(n), repeat=2 * d):
        term2 += math.prod(mats[k][idx[2 * k]][idx[2 * k + 1]] for k in range(d))
    term2 /= n ** (2 * d)

    # Cross term: one observation index shared across components, one free
    # index per component.
    term3 = 0.0
    for idx in itertools.product(range(n), repeat=d + 1):
        i = idx[0]
        term3 += math.prod(mats[k][i][idx[k + 1]] for k in range(d))
    term3 *= 2.0 / n ** (d + 1)

    return term1 + term2 - term3


def alpha_hat_sq(grams: GramStack) -> float:
    """Empirical variance of the per-observation mean kernel products.

    With r_i = (1/n) sum_j prod_l G_l[i, j], returns
    (1/n) sum_i r_i^2 - ((1/n) sum_i r_i)^2. The exact value is a variance,
    hence nonnegative; rounding of the one-pass difference is floored at 0.
    """
    r = _product_matrix(grams.grams).mean(axis=1)
    value = float(np.mean(r * r) - float(np.mean(r)) ** 2)
    return value if value > 0.0 else 0.0


def sigma_hat_sq(alpha_sq: float, scheme) -> float:
    """Plug-in estimator 4 * (w^2(gamma) - 1) * alpha_sq of the null variance."""
    if alpha_sq < 0:
        raise InvalidInputError(f"alpha_sq must be nonnegative, got {alpha_sq!r}")
    limit = scheme.w_squared_limit
    if limit <= 1.0:
        raise DegenerateSchemeError(
            "weight scheme has quadratic-mean limit <= 1; the null variance "
            "vanishes and no z-score exists (constant_one is only valid for "
            "the unweighted statistic)"
        )
    return 4.0 * (limit - 1.0) * alpha_sq


@dataclass(frozen=True)
class EstimateBundle:
    """Statistic plus variance estimates from one pass over a Gram stack."""

    d_hat: float
    alpha_hat_sq: float
    sigma_hat_sq: float
    n: int
    d: int
    gamma: float | None
    scheme_kind: str


def estimate(grams: GramStack, scheme) -> EstimateBundle:
    """Compute the modified statistic and its variance estimate together."""
    d_hat = dhsic_modified(grams, scheme)
    a2 = alpha_hat_sq(grams)
    s2 = sigma_hat_sq(a2, scheme)
    gamma = scheme.gamma if isinstance(scheme, WeightScheme) else None
    kind = scheme.kind if isinstance(scheme, WeightScheme) else "custom"
    return EstimateBundle(
        d_hat=d_hat,
        alpha_hat_sq=a2,
        sigma_hat_sq=s2,
        n=grams.n,
        d=grams.d,
        gamma=gamma,
        scheme_kind=kind,
    )
