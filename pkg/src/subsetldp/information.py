"""Closed-form mutual information analysis of subset-response LDP mechanisms.

Under an epsilon-LDP constraint and a uniform prior on a size-d domain, the
mutual information between a secret and its private view is maximized by a
mechanism that answers with a random size-k subset of the domain.  This module
computes the per-size mutual information curve, its real-valued maximizer, the
optimal integer subset size, and the analytic upper bounds that cap the curve
for every domain size.  It also evaluates the exact mutual information of the
bitwise randomized response mechanism (a weighted mixture over all subset
sizes) together with its closed-form upper bound.

All information quantities are in nats.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PrivacyParams",
    "SubsetSizeChoice",
    "subset_mutual_info",
    "mi_optimal_size_real",
    "mi_optimal_size",
    "max_mutual_info",
    "mi_privacy_bound",
    "brr_mutual_info",
    "brr_mutual_info_bound",
]


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget and domain size, the pair every formula depends on.

    Attributes:
        epsilon: privacy budget, must be > 0 (smaller = stronger privacy).
        d: domain size, integer >= 2.
    """

    epsilon: float
    d: int

    def __post_init__(self):
        if not (isinstance(self.d, (int, np.integer)) and not isinstance(self.d, bool)):
            raise ValueError(f"d must be an integer, got {self.d!r}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps <= 0.0:
            raise ValueError(f"epsilon must be a finite positive real, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "d", int(self.d))


@dataclass(frozen=True)
class SubsetSizeChoice:
    """An optimized subset size.

    Attributes:
        beta: real-valued optimizer of the underlying objective.
        k: selected integer size in [1, d-1].
        objective_value: objective evaluated at k (mutual information in nats,
            or expected squared l2 estimation error, depending on the chooser).
    """

    beta: float
    k: int
    objective_value: float


def subset_mutual_info(params: PrivacyParams, k):
    """Mutual information (nats) of the size-k subset mechanism, uniform prior.

    Accepts a scalar or array ``k``; real values in [0, d] are allowed since
    the expression extends continuously (the integer-k values are the ones a
    mechanism can realize).  Both endpoints k=0 and k=d carry no information
    and evaluate to exactly 0.

    Raises:
        ValueError: if any k lies outside [0, d].
    """
    k_arr = np.asarray(k, dtype=float)
    d = params.d
    if np.any(k_arr < 0) or np.any(k_arr > d):
        raise ValueError(f"k must lie in [0, {d}], got {k!r}")
    ee = math.exp(params.epsilon)
    denom = k_arr * ee + (d - k_arr)
    # Keep the log arguments as ratios: at k=0 and k=d they are exactly 1.0
    # in floating point, making the endpoint values exact zeros.
    val = (k_arr * ee * np.log(d * ee / denom) + (d - k_arr) * np.log(d / denom)) / denom
    if np.ndim(k) == 0:
        return float(val)
    return val


def mi_optimal_size_real(params: PrivacyParams) -> float:
    """Real-valued subset size maximizing the mutual information curve.

    Evaluates (eps*e^eps - e^eps + 1) * d / (e^eps - 1)^2 in a cancellation-free
    form so that the eps -> 0 limit (= d/2) is met to full precision.  The
    result always lies in (0, d/2).
    """
    eps = params.epsilon
    m = math.expm1(eps)
    # eps*e^eps - e^eps + 1 == eps*m - (m - eps), all three terms O(eps^2)
    return params.d * (eps * m - (m - eps)) / (m * m)


def _bracket(d: int, real_opt: float) -> list[int]:
    """Clamped integer candidates around a real optimizer, ascending."""
    lo = min(max(math.floor(real_opt), 1), d - 1)
    hi = min(max(math.ceil(real_opt), 1), d - 1)
    return [lo] if lo == hi else [lo, hi]


def mi_optimal_size(params: PrivacyParams) -> SubsetSizeChoice:
    """Integer subset size maximizing mutual information.

    Checks floor and ceil of the real optimizer, clamped to [1, d-1]; ties
    break toward the smaller size (cheaper views, same information).
    """
    beta = mi_optimal_size_real(params)
    best_k = None
    best_v = -1.0
    for k in _bracket(params.d, beta):
        v = subset_mutual_info(params, k)
        if best_k is None or v > best_v:
            best_k, best_v = k, v
    return SubsetSizeChoice(beta=beta, k=best_k, objective_value=best_v)


def max_mutual_info(params: PrivacyParams) -> float:
    """Largest mutual information (nats) any epsilon-LDP mechanism can attain."""
    return mi_optimal_size(params).objective_value


def mi_privacy_bound(epsilon: float) -> float:
    """Domain-independent cap on LDP mutual information (nats).

    Returns ln((e^eps - 1)/eps) + eps/(e^eps - 1) - 1, which equals the subset
    mutual information curve evaluated at its real maximizer for every d, and
    is itself at most eps^2/8.
    """
    eps = float(epsilon)
    if not math.isfinite(eps) or eps <= 0.0:
        raise ValueError(f"epsilon must be a finite positive real, got {epsilon!r}")
    m = math.expm1(eps)
    return math.log(m / eps) + eps / m - 1.0


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def brr_mutual_info(params: PrivacyParams) -> float:
    """Exact mutual information (nats) of bitwise randomized response.

    The mechanism one-hot encodes the secret and flips each of the d bits
    independently with probability 1/(e^(eps/2) + 1); its mutual information
    decomposes as a binomially weighted average of the per-size subset curve.
    The sum runs in log space with compensated accumulation, so the
    (e^(eps/2)+1)^d normalizer never overflows.

    Raises:
        ArithmeticError: if the series exceeds its closed-form upper bound,
            which indicates a parameter range where the evaluation lost
            precision.
    """
    d = params.d
    eps = params.epsilon
    half = 0.5 * eps
    log_norm = d * np.logaddexp(half, 0.0) + math.log(d)
    mis = subset_mutual_info(params, np.arange(d + 1))
    terms = []
    for k in range(d + 1):
        if k == 0:
            log_s = math.log(d)
        elif k == d:
            log_s = math.log(d) + eps
        else:
            log_s = np.logaddexp(math.log(k) + eps, math.log(d - k))
        log_w = _log_binom(d, k) + half * (d - k - 1) + log_s - log_norm
        terms.append(math.exp(log_w) * mis[k])
    value = math.fsum(terms)
    bound = brr_mutual_info_bound(params)
    if value > bound + 1e-12:
        raise ArithmeticError(
            f"bitwise RR mutual info series {value!r} exceeds its bound {bound!r} "
            f"at d={d}, epsilon={eps}; parameters out of the accurate range"
        )
    return value


def brr_mutual_info_bound(params: PrivacyParams) -> float:
    """Closed-form upper bound on the bitwise randomized response mutual info.

    Equals (1 - (e^(eps(d-1)/2) + e^(-eps/2)) / (e^(eps/2)+1)^d) times the
    maximal subset mutual information; strictly below the subset-mechanism
    optimum for every d >= 2.
    """
    d = params.d
    half = 0.5 * params.epsilon
    log_num = np.logaddexp(half * (d - 1), -half)
    log_den = d * np.logaddexp(half, 0.0)
    return (1.0 - math.exp(log_num - log_den)) * max_mutual_info(params)
