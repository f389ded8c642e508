"""Explicit channel matrices and brute-force oracles for small domains.

Every mechanism in this package has a closed-form analysis; this module builds
the corresponding conditional-probability matrices outright (rows = secrets,
columns = outputs) so that each closed form can be checked against a direct
computation.  Channels here are deliberately capped at desk scale: exceeding
the enumeration limits raises instead of silently approximating.

Also provided is the weighted-pattern ("staircase") representation: a channel
whose columns are patterns over {e^eps, 1} scaled by per-column weights.  Any
such mechanism can be averaged within each pattern-size class without changing
its mutual information, which is the transformation the optimality argument
for subset mechanisms rests on; a seeded generator produces asymmetric valid
instances to exercise that invariance.
"""

import io
import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from .information import PrivacyParams

__all__ = [
    "ROW_SUM_TOL",
    "Channel",
    "LdpAudit",
    "StaircaseMechanism",
    "ksubset_channel",
    "mrr_channel",
    "brr_channel",
    "brute_force_mi",
    "validate_ldp",
    "staircase_channel",
    "amortize",
    "random_valid_staircase",
    "channel_to_csv",
]

ROW_SUM_TOL = 1e-12

# Enumeration guards: explicit channels exist to verify closed forms at small
# d, not to run mechanisms at scale.
_MAX_EXPLICIT_D = 20


@dataclass(frozen=True)
class Channel:
    """Conditional probability matrix of a mechanism on a finite domain.

    Attributes:
        probs: (d, num_outputs) matrix, probs[x, j] = P(output j | secret x).
        output_labels: one integer per column; a subset bitmask (bit x set
            means secret x is a member) or a plain symbol index, depending on
            the mechanism's output alphabet.
    """

    probs: np.ndarray
    output_labels: tuple

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2:
            raise ValueError("probs must be a 2-d matrix")
        labels = tuple(int(z) for z in self.output_labels)
        if len(labels) != probs.shape[1]:
            raise ValueError(
                f"{len(labels)} labels for {probs.shape[1]} output columns"
            )
        if np.any(probs < 0):
            raise ValueError("negative conditional probability")
        bad = np.abs(probs.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if bad.any():
            x = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"row {x} sums to {probs[x].sum()!r}, not 1 within {ROW_SUM_TOL}"
            )
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "output_labels", labels)

    @property
    def d(self) -> int:
        return self.probs.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class LdpAudit:
    """Outcome of a privacy-ratio check over all output columns."""

    ok: bool
    worst_ratio: float
    worst_column: int
    worst_label: int

    def __bool__(self) -> bool:
        return self.ok


def ksubset_channel(params: PrivacyParams, k: int) -> Channel:
    """Explicit channel of the size-k subset mechanism.

    One column per size-k subset of the domain; a column containing the secret
    carries probability (d*e^eps / (k*e^eps + d - k)) / C(d, k) and any other
    column (d / (k*e^eps + d - k)) / C(d, k).
    """
    d = params.d
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must be in [1, {d - 1}], got {k}")
    if d > _MAX_EXPLICIT_D:
        raise ValueError(f"explicit subset channel capped at d <= {_MAX_EXPLICIT_D}")
    ee = math.exp(params.epsilon)
    denom = (k * ee + d - k) * math.comb(d, k)
    p_in = d * ee / denom
    p_out = d / denom
    labels = []
    cols = []
    xs = np.arange(d)
    for subset in itertools.combinations(range(d), k):
        mask = 0
        for x in subset:
            mask |= 1 << x
        labels.append(mask)
        member = (mask >> xs) & 1
        cols.append(np.where(member, p_in, p_out))
    return Channel(np.column_stack(cols), tuple(labels))


def mrr_channel(params: PrivacyParams) -> Channel:
    """Randomized response over the original alphabet: keep the secret with
    probability e^eps/(e^eps + d - 1), otherwise emit one of the other symbols
    uniformly.  Column labels are the symbol indices."""
    d = params.d
    ee = math.exp(params.epsilon)
    off = 1.0 / (ee + d - 1)
    probs = np.full((d, d), off)
    np.fill_diagonal(probs, ee * off)
    return Channel(probs, tuple(range(d)))


def brr_channel(params: PrivacyParams) -> Channel:
    """Bitwise randomized response channel over the full power set.

    The secret's one-hot bitmap has each bit flipped independently with
    probability 1/(e^(eps/2) + 1); column z (a subset bitmask) then has
    probability e^(eps/2 * (d - |z| +/- 1)) / (e^(eps/2) + 1)^d, the sign
    depending on membership of the secret in z.  Probabilities are formed in
    log space so large eps*d cannot overflow.
    """
    d = params.d
    if d > _MAX_EXPLICIT_D:
        raise ValueError(f"explicit power-set channel capped at d <= {_MAX_EXPLICIT_D}")
    half = 0.5 * params.epsilon
    log_norm = d * np.logaddexp(half, 0.0)
    z = np.arange(1 << d, dtype=np.int64)
    sizes = np.zeros(1 << d, dtype=np.int64)
    for b in range(d):
        sizes += (z >> b) & 1
    probs = np.empty((d, 1 << d))
    for x in range(d):
        member = ((z >> x) & 1).astype(bool)
        expo = half * (d - sizes + np.where(member, 1, -1)) - log_norm
        probs[x] = np.exp(expo)
    return Channel(probs, tuple(int(v) for v in z))


def brute_force_mi(channel: Channel) -> float:
    """Mutual information (nats) between a uniform secret and the channel
    output, by direct summation over the full matrix.

    Uses the 0*log(0) = 0 convention and compensated summation; intended as
    the independent oracle every closed form is compared against.
    """
    probs = channel.probs
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > ROW_SUM_TOL) or np.any(probs < 0):
        raise ValueError("invalid channel: rows are not probability distributions")
    d = channel.d
    marginal = probs.mean(axis=0)
    contrib = []
    for x in range(d):
        row = probs[x]
        nz = row > 0
        contrib.extend(row[nz] * (np.log(row[nz]) - np.log(marginal[nz])))
    return math.fsum(contrib) / d


def validate_ldp(channel: Channel, epsilon: float) -> LdpAudit:
    """Check the defining privacy constraint column by column.

    A channel satisfies epsilon-LDP iff within every reachable output column
    the largest and smallest conditional probabilities differ by at most a
    factor e^eps.  Columns never emitted (all-zero) impose no constraint; a
    column reachable from some secrets but not others has an infinite ratio.
    Returns the worst ratio and where it occurs.
    """
    probs = channel.probs
    mx = probs.max(axis=0)
    mn = probs.min(axis=0)
    active = mx > 0
    if not active.any():
        return LdpAudit(True, 1.0, -1, -1)
    ratios = np.full(channel.num_outputs, -np.inf)
    with np.errstate(divide="ignore"):
        ratios[active] = np.where(mn[active] > 0, mx[active] / mn[active], np.inf)
    worst = int(np.argmax(ratios))
    worst_ratio = float(ratios[worst])
    ok = worst_ratio <= math.exp(epsilon) * (1.0 + 1e-9)
    return LdpAudit(ok, worst_ratio, worst, channel.output_labels[worst])


@dataclass(frozen=True)
class StaircaseMechanism:
    """A channel given as weighted {e^eps, 1} pattern columns.

    ``weights[c]`` scales the pattern with bitmask c, where bit x set means
    row x receives weight * e^eps in that column (and plain weight otherwise).
    A mechanism is valid when every induced row sums to 1.
    """

    epsilon: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 4 or w.size & (w.size - 1):
            raise ValueError("weights must be a 1-d array of length 2^d, d >= 2")
        if np.any(w < 0):
            raise ValueError("pattern weights must be non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def d(self) -> int:
        return self.weights.size.bit_length() - 1


def _pattern_sizes(d: int) -> np.ndarray:
    c = np.arange(1 << d, dtype=np.int64)
    sizes = np.zeros(1 << d, dtype=np.int64)
    for b in range(d):
        sizes += (c >> b) & 1
    return sizes


def staircase_channel(mech: StaircaseMechanism) -> Channel:
    """Materialize the pattern representation as an explicit Channel."""
    d = mech.d
    ee = math.exp(mech.epsilon)
    c = np.arange(1 << d, dtype=np.int64)
    probs = np.empty((d, 1 << d))
    for x in range(d):
        member = ((c >> x) & 1).astype(bool)
        probs[x] = mech.weights * np.where(member, ee, 1.0)
    return Channel(probs, tuple(int(v) for v in c))


def amortize(mech: StaircaseMechanism) -> StaircaseMechanism:
    """Average the weights within each pattern-size class.

    All C(d, k) columns whose pattern has k high entries receive the class
    mean sum(W_k)/C(d, k).  The result is again valid, and its mutual
    information equals the input's exactly; subset mechanisms are fixed
    points.
    """
    staircase_channel(mech)  # raises if the input rows do not sum to 1
    sizes = _pattern_sizes(mech.d)
    sums = np.bincount(sizes, weights=mech.weights, minlength=mech.d + 1)
    counts = np.bincount(sizes, minlength=mech.d + 1)
    return StaircaseMechanism(mech.epsilon, (sums / counts)[sizes])


# Support classes for the random generator: the smallest families that admit
# asymmetric valid weight assignments (d=2 forces symmetry within classes).
_GENERATOR_CLASSES = {3: (2,), 4: (2, 3)}


def random_valid_staircase(d: int, epsilon: float, seed) -> StaircaseMechanism:
    """Draw a valid staircase mechanism with unequal weights inside a class.

    Weights on the pair (and, at d=4, triple) patterns are sampled uniformly;
    the d singleton-pattern weights are then solved from the row-sum
    constraints.  Draws yielding a negative solution are rejected, shrinking
    the sampling scale so termination is certain away from pathological
    parameters.

    Raises:
        ValueError: unsupported d (only 3 and 4 admit the construction).
        RuntimeError: rejection budget exhausted.
    """
    if d not in _GENERATOR_CLASSES:
        raise ValueError(f"random staircase generator supports d in (3, 4), got {d}")
    eps = float(epsilon)
    if not math.isfinite(eps) or eps <= 0:
        raise ValueError(f"epsilon must be a finite positive real, got {epsilon!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    ee = math.exp(eps)
    sizes = _pattern_sizes(d)
    free_cols = np.flatnonzero(np.isin(sizes, _GENERATOR_CLASSES[d]))
    pattern = np.zeros((d, free_cols.size))
    for j, c in enumerate(free_cols):
        for x in range(d):
            pattern[x, j] = ee if (int(c) >> x) & 1 else 1.0
    # Row-sum matrix of the d singleton patterns: (ee-1) I + ones.
    singles = np.full((d, d), 1.0)
    np.fill_diagonal(singles, ee)
    # Scale so the sampled columns take about half of each row's mass.
    scale = 1.0 / pattern.sum(axis=1).max()
    for _ in range(500):
        w_free = rng.uniform(0.0, scale, size=free_cols.size)
        residual = 1.0 - pattern @ w_free
        w_single = np.linalg.solve(singles, residual)
        if (w_single >= 0).all() and (residual > 0).all():
            weights = np.zeros(1 << d)
            weights[free_cols] = w_free
            weights[[1 << x for x in range(d)]] = w_single
            return StaircaseMechanism(eps, weights)
        scale *= 0.8
    raise RuntimeError(
        f"could not draw a valid staircase mechanism at d={d}, epsilon={eps}"
    )


def channel_to_csv(channel: Channel, file) -> None:
    """Write the matrix as CSV for debugging: a header of hex output labels,
    then one row of conditional probabilities per input symbol."""
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "w", encoding="utf-8") if own else file
    try:
        fh.write(",".join(f"0x{z:x}" for z in channel.output_labels) + "\n")
        for x in range(channel.d):
            fh.write(",".join(repr(float(v)) for v in channel.probs[x]) + "\n")
    finally:
        if own:
            fh.close()


def channel_from_csv(file) -> Channel:
    """Read a matrix written by :func:`channel_to_csv`."""
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "r", encoding="utf-8") if own else file
    try:
        header = fh.readline().strip()
        labels = tuple(int(tok, 16) for tok in header.split(","))
        rows = [[float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()]
    finally:
        if own:
            fh.close()
    return Channel(np.array(rows), labels)
