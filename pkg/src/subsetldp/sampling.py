"""Per-provider randomizers and the private-view wire format.

Each secret is randomized locally: the subset mechanism answers with a size-k
subset of the domain that contains the secret with boosted probability, plain
randomized response answers with a single symbol, and bitwise randomized
response flips each bit of the one-hot encoding independently.

Randomness comes exclusively from numpy's PCG64 generator with explicit
64-bit seeding, so identical seeds reproduce identical view sequences on any
platform.  Scalar randomizers run in O(d) time and memory per view (the
subset sampler uses reservoir sampling over the domain minus the secret,
never materializing the complement); the ``*_batch`` variants produce the
same distributions vectorized for simulation-scale workloads.  Scalar and
batch paths consume their generator differently, so matching seeds do not
imply matching views across the two paths.

Views travel as text: one view per line, comma-separated ascending decimal
indices, with an empty line encoding the empty set.
"""

import math
import os

import numpy as np

from .information import PrivacyParams

__all__ = [
    "ViewFormatError",
    "make_rng",
    "derive_rng",
    "ksubset_randomize",
    "ksubset_randomize_batch",
    "mrr_randomize",
    "mrr_randomize_batch",
    "brr_randomize",
    "brr_randomize_batch",
    "write_views",
    "read_views",
]


class ViewFormatError(ValueError):
    """A view file line that cannot be parsed; carries its 1-based line number."""

    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno


def make_rng(seed) -> np.random.Generator:
    """Deterministic PCG64 stream for an explicit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_rng(master_seed, *path: int) -> np.random.Generator:
    """Independent substream for (master seed, integer path).

    Uses numpy's SeedSequence spawn-key derivation, so streams for distinct
    paths are statistically independent and any parallel schedule that assigns
    one stream per task reproduces the serial results.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(seq))


def _check_secret(x, d: int) -> int:
    xi = int(x)
    if not 0 <= xi < d:
        raise ValueError(f"secret {x!r} outside domain [0, {d})")
    return xi


def _check_secrets(xs, d: int) -> np.ndarray:
    arr = np.asarray(xs)
    if arr.ndim != 1 or not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("secrets must be a 1-d integer array")
    if arr.size and (arr.min() < 0 or arr.max() >= d):
        raise ValueError(f"secret outside domain [0, {d})")
    return arr


def _reservoir_excluding(x: int, d: int, m: int, rng) -> np.ndarray:
    """Uniform m-subset of {0..d-1} minus {x} via reservoir sampling.

    Single pass over the domain indices, skipping x; O(d) time, O(m) memory.
    """
    res = np.empty(m, dtype=np.int64)
    seen = 0
    for idx in range(d):
        if idx == x:
            continue
        seen += 1
        if seen <= m:
            res[seen - 1] = idx
        else:
            j = rng.integers(0, seen)
            if j < m:
                res[j] = idx
    return res


def ksubset_randomize(x, params: PrivacyParams, k: int, rng) -> np.ndarray:
    """One private view of the size-k subset mechanism: a sorted index array.

    With probability k*e^eps / (k*e^eps + d - k) the view is the secret plus
    k-1 uniform distinct others; otherwise k uniform distinct non-secret
    symbols.
    """
    d = params.d
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must be in [1, {d - 1}], got {k}")
    xi = _check_secret(x, d)
    ee = math.exp(params.epsilon)
    p_true = k * ee / (k * ee + d - k)
    if rng.random() < p_true:
        members = np.append(_reservoir_excluding(xi, d, k - 1, rng), xi)
    else:
        members = _reservoir_excluding(xi, d, k, rng)
    members.sort()
    return members


def ksubset_randomize_batch(xs, params: PrivacyParams, k: int, rng) -> np.ndarray:
    """Vectorized subset randomizer: one sorted size-k view per row.

    Per row, a partial Fisher-Yates pass over a scratch index array draws the
    required distinct non-secret symbols; scratch arrays are processed in
    cache-sized blocks whose size depends only on d, keeping results
    independent of the total batch size split.
    """
    d = params.d
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must be in [1, {d - 1}], got {k}")
    xs = _check_secrets(xs, d)
    n = xs.size
    m = d - 1
    ee = math.exp(params.epsilon)
    include = rng.random(n) < k * ee / (k * ee + d - k)
    out = np.empty((n, k), dtype=np.int32)
    scratch_dtype = np.int16 if d <= 32000 else np.int32
    block = max(1, (1 << 22) // (2 * m))
    base = np.arange(m, dtype=scratch_dtype)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        rows = hi - lo
        scratch = np.tile(base, rows)
        offs = np.arange(rows, dtype=np.int64) * m
        for j in range(k):
            pos = offs + rng.integers(j, m, size=rows)
            jpos = offs + j
            picked = scratch[pos]
            scratch[pos] = scratch[jpos]
            scratch[jpos] = picked
        part = scratch.reshape(rows, m)[:, :k].astype(np.int32)
        x_col = xs[lo:hi, None].astype(np.int32)
        others = part + (part >= x_col)  # reinsert the gap left by the secret
        inc = include[lo:hi]
        blk = out[lo:hi]
        blk[inc, 0] = x_col[inc, 0]
        blk[inc, 1:] = others[inc, : k - 1]
        blk[~inc] = others[~inc]
    out.sort(axis=1)
    return out


def mrr_randomize(x, params: PrivacyParams, rng) -> int:
    """Randomized response on the original alphabet: keep the secret with
    probability e^eps/(e^eps + d - 1), else answer a uniform other symbol."""
    d = params.d
    xi = _check_secret(x, d)
    ee = math.exp(params.epsilon)
    if rng.random() < ee / (ee + d - 1):
        return xi
    return int((xi + rng.integers(1, d)) % d)


def mrr_randomize_batch(xs, params: PrivacyParams, rng) -> np.ndarray:
    d = params.d
    xs = _check_secrets(xs, d)
    ee = math.exp(params.epsilon)
    keep = rng.random(xs.size) < ee / (ee + d - 1)
    offsets = rng.integers(1, d, size=xs.size)
    return np.where(keep, xs, (xs + offsets) % d).astype(np.int64)


def brr_randomize(x, params: PrivacyParams, rng) -> np.ndarray:
    """Bitwise randomized response: sorted indices of the surviving bits.

    Starts from the one-hot bitmap of the secret and flips every bit
    independently with probability 1/(e^(eps/2) + 1); the view may have any
    size, including empty.
    """
    d = params.d
    xi = _check_secret(x, d)
    flip = rng.random(d) < 1.0 / (math.exp(0.5 * params.epsilon) + 1.0)
    flip[xi] = ~flip[xi]  # bit x starts at 1: flipped means cleared
    return np.flatnonzero(flip)


def brr_randomize_batch(xs, params: PrivacyParams, rng) -> np.ndarray:
    """Vectorized bitwise randomized response: (n, d) boolean membership rows."""
    d = params.d
    xs = _check_secrets(xs, d)
    n = xs.size
    q = 1.0 / (math.exp(0.5 * params.epsilon) + 1.0)
    out = np.empty((n, d), dtype=bool)
    block = max(1, (1 << 21) // max(d, 1))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        out[lo:hi] = rng.random((hi - lo, d)) < q
    rows = np.arange(n)
    out[rows, xs] = ~out[rows, xs]
    return out


def _format_view(members) -> str:
    return ",".join(str(int(v)) for v in members)


def write_views(file, views, d: int | None = None) -> None:
    """Write views one per line in the wire format.

    ``views`` may be a 2-d integer array (fixed-size views, written via a
    byte-table fast path), a 2-d boolean membership matrix, a 1-d integer
    array of single symbols, or any iterable of index sequences.
    """
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "wb") if own else file
    try:
        arr = views if isinstance(views, np.ndarray) else None
        if arr is not None and arr.ndim == 2 and arr.dtype != bool:
            top = int(arr.max()) + 1 if arr.size else 1
            _write_matrix_fast(fh, arr, top if d is None else max(top, d))
        elif arr is not None and arr.ndim == 2:
            for row in arr:
                fh.write(_format_view(np.flatnonzero(row)).encode() + b"\n")
        elif arr is not None and arr.ndim == 1:
            for v in arr:
                fh.write(str(int(v)).encode() + b"\n")
        else:
            for view in views:
                fh.write(_format_view(view).encode() + b"\n")
    finally:
        if own:
            fh.close()


def _write_matrix_fast(fh, matrix: np.ndarray, top: int) -> None:
    """Format an (n, k) index matrix with a per-value byte lookup table."""
    n, k = matrix.shape
    if k == 0:
        fh.write(b"\n" * n)
        return
    width = len(str(max(top - 1, 0))) + 1
    lut_sep = np.zeros((top, width), dtype=np.uint8)
    lut_end = np.zeros((top, width), dtype=np.uint8)
    for v in range(top):
        tok = str(v).encode()
        lut_sep[v, : len(tok) + 1] = np.frombuffer(tok + b",", dtype=np.uint8)
        lut_end[v, : len(tok) + 1] = np.frombuffer(tok + b"\n", dtype=np.uint8)
    chunk = 1 << 16
    for lo in range(0, n, chunk):
        blk = matrix[lo : lo + chunk]
        buf = np.empty((blk.shape[0], k, width), dtype=np.uint8)
        buf[:, : k - 1] = lut_sep[blk[:, : k - 1]]
        buf[:, k - 1] = lut_end[blk[:, k - 1]]
        flat = buf.reshape(-1)
        fh.write(flat[flat != 0].tobytes())  # drop the lookup-table padding


def read_views(file, d: int) -> list[np.ndarray]:
    """Parse a view file into a list of sorted index arrays.

    An empty line is the empty set.  Raises :class:`ViewFormatError` naming
    the first offending line for non-integer tokens, out-of-range indices,
    duplicates, or unsorted members.
    """
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "rb") if own else file
    try:
        data = fh.read()
    finally:
        if own:
            fh.close()
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()  # trailing newline, not an empty view
    views = []
    for i, line in enumerate(lines, start=1):
        views.append(_parse_view_line(line, d, i))
    return views


def _parse_view_line(line: bytes, d: int, lineno: int) -> np.ndarray:
    if line == b"":
        return np.empty(0, dtype=np.int64)
    try:
        members = np.array([int(tok) for tok in line.split(b",")], dtype=np.int64)
    except ValueError:
        raise ViewFormatError(lineno, f"non-integer token in {line[:80]!r}") from None
    if members.min() < 0 or members.max() >= d:
        raise ViewFormatError(lineno, f"index outside domain [0, {d})")
    if members.size > 1 and (np.diff(members) <= 0).any():
        raise ViewFormatError(lineno, "members must be strictly ascending")
    return members
