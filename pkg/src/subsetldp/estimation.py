"""Frequency aggregation and the unbiased remapping estimator.

The aggregator counts, for each domain symbol, how many received views contain
it.  For any mechanism where the view contains the true symbol with
probability g and any fixed other symbol with probability h (g > h), the count
expectation is an affine function of the true frequency, so inverting the
affine map gives an unbiased estimate of the distribution:

    theta_hat[j] = (count[j] - n*h) / (n * (g - h))

Hit-rate pairs are provided for the size-k subset mechanism, plain randomized
response (the k=1 case), and bitwise randomized response.  Post-processing
projects the raw estimate onto the probability simplex with the
sort-and-threshold algorithm.  The expected squared l2 error of the raw
estimator has a closed form independent of the underlying distribution, which
yields the error-optimal subset size.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .information import PrivacyParams, SubsetSizeChoice
from .sampling import ViewFormatError

__all__ = [
    "HitRates",
    "FrequencyVector",
    "DistributionEstimate",
    "ksubset_hit_rates",
    "mrr_hit_rates",
    "brr_hit_rates",
    "scaled_subset_hit_rates",
    "aggregate",
    "aggregate_view_file",
    "remap_estimate",
    "project_simplex",
    "analytic_l2_error",
    "l2_optimal_size",
    "l2_optimal_size_real",
    "mixture_l2_objective",
    "estimate_to_csv",
]


@dataclass(frozen=True)
class HitRates:
    """Per-view membership probabilities of the true and of any other symbol.

    g = P(true symbol in view), h = P(fixed other symbol in view); the
    estimator divides by g - h, so g > h is required.
    """

    g: float
    h: float

    def __post_init__(self):
        g, h = float(self.g), float(self.h)
        if not (0.0 <= h < g <= 1.0):
            raise ValueError(f"hit rates need 0 <= h < g <= 1, got g={g}, h={h}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class FrequencyVector:
    """Per-symbol membership counts over n aggregated views."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or not np.issubdtype(counts.dtype, np.integer):
            raise ValueError("counts must be a 1-d integer array")
        if counts.size and counts.min() < 0:
            raise ValueError("counts must be non-negative")
        if self.n < 0:
            raise ValueError("n must be non-negative")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class DistributionEstimate:
    """Estimated distribution; raw estimates may leave the simplex."""

    theta_hat: np.ndarray
    projected: bool = False

    def __post_init__(self):
        object.__setattr__(self, "theta_hat", np.asarray(self.theta_hat, dtype=float))


def ksubset_hit_rates(params: PrivacyParams, k: int) -> HitRates:
    """Hit rates of the size-k subset mechanism.

    g = k*e^eps / (k*e^eps + d - k); h mixes the two branches: when the view
    contains the secret the other symbol occupies one of k-1 remaining slots,
    otherwise one of k slots among d-1 candidates.  k = d would make every
    symbol a certain member (g = h = 1), so it is rejected.
    """
    d = params.d
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must be in [1, {d - 1}], got {k}")
    ee = math.exp(params.epsilon)
    denom = k * ee + d - k
    g = k * ee / denom
    h = (k * ee * (k - 1) + (d - k) * k) / (denom * (d - 1))
    return HitRates(g, h)


def mrr_hit_rates(params: PrivacyParams) -> HitRates:
    """Hit rates of plain randomized response (single-symbol views)."""
    ee = math.exp(params.epsilon)
    return HitRates(ee / (ee + params.d - 1), 1.0 / (ee + params.d - 1))


def brr_hit_rates(params: PrivacyParams) -> HitRates:
    """Hit rates of bitwise randomized response: each bit survives or turns on
    independently, so the rates are the per-bit keep and flip probabilities."""
    s = math.exp(0.5 * params.epsilon)
    return HitRates(s / (s + 1.0), 1.0 / (s + 1.0))


def scaled_subset_hit_rates(params: PrivacyParams, k: int, boost: float):
    """Raw (g, h) for a symmetric power-set mechanism restricted to size k.

    ``boost`` is the factor (between 1 and e^eps) by which a view containing
    the secret is more likely than one of equal size not containing it.  At
    boost = e^eps these reduce to the size-k subset rates.  Returned as a
    plain tuple: for k = 0 or k = d the pair degenerates to g = h and is not
    a valid :class:`HitRates`.
    """
    d = params.d
    if not 0 <= k <= d:
        raise ValueError(f"k must be in [0, {d}], got {k}")
    ee = math.exp(params.epsilon)
    if not 1.0 <= boost <= ee * (1 + 1e-12):
        raise ValueError(f"boost must lie in [1, e^eps], got {boost}")
    denom = k * ee + d - k
    g = k * boost / denom
    h = (k * boost * (k - 1) + (d - k) * k) / (denom * (d - 1))
    return g, h


def aggregate(views, d: int) -> FrequencyVector:
    """Count per-symbol memberships over views in a single pass.

    ``views`` may be a 2-d integer array (one fixed-size view per row), a 2-d
    boolean membership matrix with d columns, a 1-d integer array of
    single-symbol views, or an iterable of index sequences.
    """
    if isinstance(views, np.ndarray) and views.ndim == 2 and views.dtype == bool:
        if views.shape[1] != d:
            raise ValueError(f"membership matrix has {views.shape[1]} columns, expected {d}")
        return FrequencyVector(views.sum(axis=0).astype(np.int64), views.shape[0])
    if isinstance(views, np.ndarray):
        flat = views.ravel()
        n = views.shape[0] if views.ndim == 2 else views.size
    else:
        views = list(views)
        n = len(views)
        flat = np.concatenate([np.asarray(v, dtype=np.int64).ravel() for v in views]) if views else np.empty(0, dtype=np.int64)
    if flat.size == 0:
        return FrequencyVector(np.zeros(d, dtype=np.int64), n)
    if not np.issubdtype(flat.dtype, np.integer):
        raise ValueError("views must contain integer indices")
    if flat.min() < 0 or flat.max() >= d:
        raise ValueError(f"view index outside domain [0, {d})")
    return FrequencyVector(np.bincount(flat, minlength=d), n)


def remap_estimate(freq: FrequencyVector, rates: HitRates) -> DistributionEstimate:
    """Invert the affine count expectation; unbiased for the true distribution.

    Raises:
        ValueError: if no views were aggregated.
    """
    if freq.n < 1:
        raise ValueError("cannot estimate from zero views")
    n = freq.n
    theta = (freq.counts - n * rates.h) / (n * (rates.g - rates.h))
    return DistributionEstimate(theta, projected=False)


def _project_vector(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {p : p >= 0, sum(p) = 1}, sort-and-threshold."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u * j > css - 1.0)[0][-1])
    shift = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + shift, 0.0)


def project_simplex(estimate):
    """Project onto the probability simplex.

    Accepts a plain vector (returns a vector) or a
    :class:`DistributionEstimate` (returns one flagged as projected).
    """
    if isinstance(estimate, DistributionEstimate):
        return DistributionEstimate(_project_vector(estimate.theta_hat), projected=True)
    return _project_vector(estimate)


def analytic_l2_error(params: PrivacyParams, k: int, n: int) -> float:
    """Expected squared l2 error of the raw subset-mechanism estimate.

    (g(1-g) + (d-1) h(1-h)) / (n (g-h)^2); the counts are binomial mixtures
    whose variances telescope so the total does not depend on the underlying
    distribution.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    r = ksubset_hit_rates(params, k)
    d = params.d
    return (r.g * (1 - r.g) + (d - 1) * r.h * (1 - r.h)) / (n * (r.g - r.h) ** 2)


def l2_optimal_size_real(params: PrivacyParams) -> float:
    """Real-valued minimizer of the analytic l2 error: d / (1 + e^eps)."""
    return params.d / (1.0 + math.exp(params.epsilon))


def l2_optimal_size(params: PrivacyParams, n: int = 10000) -> SubsetSizeChoice:
    """Integer subset size minimizing the analytic l2 error.

    Checks floor and ceil of d/(1 + e^eps) clamped to [1, d-1]; ties break
    toward the smaller size.  The choice of n scales the reported objective
    but never the argmin.
    """
    target = l2_optimal_size_real(params)
    lo = min(max(math.floor(target), 1), params.d - 1)
    hi = min(max(math.ceil(target), 1), params.d - 1)
    best_k = None
    best_v = math.inf
    for k in sorted({lo, hi}):
        v = analytic_l2_error(params, k, n)
        if best_k is None or v < best_v:
            best_k, best_v = k, v
    return SubsetSizeChoice(beta=target, k=best_k, objective_value=best_v)


def mixture_l2_objective(g: float, h: float, d: int) -> float:
    """Variance objective (g(1-g) + h(1-h)*d) / (g-h)^2 used to compare
    symmetric power-set mechanisms through their hit rates.

    Quasiconcave along hit-rate mixtures, which is what forces any size
    mixture to do no better than the best fixed size.

    Raises:
        ValueError: if g <= h (the estimator denominator would vanish).
    """
    if not (0.0 <= h < g <= 1.0):
        raise ValueError(f"need 0 <= h < g <= 1, got g={g}, h={h}")
    return (g * (1 - g) + h * (1 - h) * d) / (g - h) ** 2


def estimate_to_csv(estimate: DistributionEstimate, file, projected=None) -> None:
    """Write one row per symbol: index, raw value and, if available, the
    projected value."""
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "w", encoding="utf-8") if own else file
    try:
        if projected is not None:
            fh.write("index,theta_hat_raw,theta_hat_projected\n")
            for i, (a, b) in enumerate(zip(estimate.theta_hat, projected.theta_hat)):
                fh.write(f"{i},{float(a)!r},{float(b)!r}\n")
        else:
            fh.write("index,theta_hat_raw\n")
            for i, a in enumerate(estimate.theta_hat):
                fh.write(f"{i},{float(a)!r}\n")
    finally:
        if own:
            fh.close()


def aggregate_view_file(file, d: int, required_size: int | None = None) -> FrequencyVector:
    """Stream a view file into per-symbol counts.

    Validates as it goes and raises :class:`ViewFormatError` naming the first
    bad line (non-integer tokens, out-of-range indices, or, when
    ``required_size`` is given, a view of the wrong size).  Runs a byte-level
    fast path when every view must have the same size, which is the layout
    the subset mechanism produces.
    """
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "rb") if own else file
    try:
        counts = np.zeros(d, dtype=np.int64)
        n = 0
        lineno = 0
        leftover = b""
        while True:
            buf = fh.read(1 << 22)
            if not buf:
                break
            buf = leftover + buf
            cut = buf.rfind(b"\n")
            if cut < 0:
                leftover = buf
                continue
            leftover = buf[cut + 1 :]
            n_block, lineno = _aggregate_block(buf[:cut], d, required_size, counts, lineno)
            n += n_block
        if leftover:
            n_block, lineno = _aggregate_block(leftover, d, required_size, counts, lineno)
            n += n_block
        return FrequencyVector(counts, n)
    finally:
        if own:
            fh.close()


# Bytes that may not appear in a well-formed fixed-size view block.
_FOREIGN_BYTES = bytes(v for v in range(256) if v not in b"0123456789,\n")


def _aggregate_block(block: bytes, d: int, required_size, counts, lineno: int):
    """Accumulate one block of complete lines into counts; returns (#views, lineno)."""
    lines = block.split(b"\n")
    if required_size is not None and _fast_block_ok(block, lines, required_size):
        flat = _parse_flat(block)
        if flat is not None and flat.size == required_size * len(lines):
            if flat.size and (flat.min() < 0 or flat.max() >= d):
                bad = _first_out_of_range(lines, d)
                raise ViewFormatError(lineno + bad + 1, f"index outside domain [0, {d})")
            counts += np.bincount(flat, minlength=d)
            return len(lines), lineno + len(lines)
    for i, line in enumerate(lines):
        members = _parse_line_checked(line, d, lineno + i + 1, required_size)
        if members.size:
            counts += np.bincount(members, minlength=d)
    return len(lines), lineno + len(lines)


def _fast_block_ok(block: bytes, lines, required_size: int) -> bool:
    if block.translate(None, _FOREIGN_BYTES) != block:
        return False  # let the per-line parser pinpoint the bad token
    return all(ln.count(b",") + 1 == required_size and ln != b"" for ln in lines)


def _parse_flat(block: bytes):
    data = block.replace(b"\n", b",")
    try:
        return np.fromstring(data, dtype=np.int64, sep=",")  # noqa: NPY201 - fast text path
    except Exception:
        try:
            return np.array([int(tok) for tok in data.split(b",")], dtype=np.int64)
        except ValueError:
            return None


def _first_out_of_range(lines, d: int) -> int:
    for i, ln in enumerate(lines):
        vals = [int(t) for t in ln.split(b",")]
        if any(v < 0 or v >= d for v in vals):
            return i
    return 0


def _parse_line_checked(line: bytes, d: int, lineno: int, required_size) -> np.ndarray:
    if line == b"":
        if required_size is not None:
            raise ViewFormatError(lineno, f"view has 0 members, expected {required_size}")
        return np.empty(0, dtype=np.int64)
    try:
        members = np.array([int(tok) for tok in line.split(b",")], dtype=np.int64)
    except ValueError:
        raise ViewFormatError(lineno, f"non-integer token in {line[:80]!r}") from None
    if required_size is not None and members.size != required_size:
        raise ViewFormatError(lineno, f"view has {members.size} members, expected {required_size}")
    if members.min() < 0 or members.max() >= d:
        raise ViewFormatError(lineno, f"index outside domain [0, {d})")
    return members
