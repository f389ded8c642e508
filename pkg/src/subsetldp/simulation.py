"""Monte Carlo harness for private discrete distribution estimation.

Each repetition draws a true distribution uniformly from the simplex, samples
n provider secrets i.i.d. from it, pushes every secret through each requested
mechanism, estimates the distribution with the remapping estimator, projects
onto the simplex, and records the squared l2 and the l1 error.  Reported
numbers are means with standard errors over repetitions.

Reproducibility scheme: repetition r draws its true distribution and secrets
from the substream (master_seed, r, 0); the mechanism with canonical slot s
uses (master_seed, r, 1 + s).  Streams therefore depend neither on thread
count nor on which other mechanisms run, so any schedule produces identical
output.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import estimation, sampling
from .information import PrivacyParams, mi_optimal_size

__all__ = [
    "MECHANISMS",
    "TABLE_GRID",
    "ExperimentConfig",
    "MechanismResult",
    "ExperimentResult",
    "random_theta",
    "run_experiment",
    "run_grid",
    "results_to_csv",
    "results_to_json",
]

# Canonical mechanism order; the position is the RNG slot.
MECHANISMS = ("brr", "mrr", "kss_mi", "kss_l2")

# The (d, epsilon) cells of the reference error table.
TABLE_GRID = (
    (2, 0.1), (2, 1.0),
    (4, 0.01), (4, 0.1), (4, 0.5), (4, 1.0),
    (6, 0.01), (6, 0.1), (6, 0.5), (6, 1.0),
    (8, 0.01), (8, 0.1), (8, 0.5), (8, 1.0), (8, 2.0),
    (16, 0.01), (16, 0.1), (16, 0.5), (16, 1.0), (16, 2.0), (16, 3.0),
    (32, 0.01), (32, 0.1), (32, 1.0), (32, 1.5), (32, 2.0), (32, 3.0),
    (64, 0.1), (64, 0.5), (64, 1.0), (64, 1.5), (64, 2.0), (64, 3.0), (64, 5.0),
    (128, 0.1), (128, 1.0), (128, 3.0), (128, 5.0),
    (256, 1.0), (256, 3.0), (256, 5.0),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation cell.

    theta, when given, fixes the true distribution for every repetition;
    otherwise each repetition draws a fresh uniform-simplex vector.
    """

    d: int
    epsilon: float
    n: int = 10000
    reps: int = 100
    mechanisms: tuple = MECHANISMS
    master_seed: int = 0
    theta: np.ndarray | None = None
    threads: int = 1

    def __post_init__(self):
        PrivacyParams(self.epsilon, self.d)  # validates the pair
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        mechs = tuple(str(m).lower() for m in self.mechanisms)
        unknown = [m for m in mechs if m not in MECHANISMS]
        if unknown:
            raise ValueError(f"unknown mechanisms {unknown}; choose from {MECHANISMS}")
        if len(set(mechs)) != len(mechs):
            raise ValueError("duplicate mechanism requested")
        object.__setattr__(self, "mechanisms", mechs)
        if self.theta is not None:
            theta = np.asarray(self.theta, dtype=float)
            if theta.shape != (self.d,) or (theta < 0).any() or abs(theta.sum() - 1.0) > 1e-9:
                raise ValueError("theta must be a length-d distribution vector")
            object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class MechanismResult:
    mechanism: str
    k: int | None
    mean_l2_sq: float
    se_l2_sq: float
    mean_l1: float
    se_l1: float


@dataclass(frozen=True)
class ExperimentResult:
    d: int
    epsilon: float
    n: int
    reps: int
    master_seed: int
    results: tuple = field(default_factory=tuple)

    def for_mechanism(self, mechanism: str) -> MechanismResult:
        for r in self.results:
            if r.mechanism == mechanism:
                return r
        raise KeyError(mechanism)


def random_theta(d: int, rng) -> np.ndarray:
    """True distribution drawn uniformly from the probability simplex
    (symmetric Dirichlet with unit concentration)."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    return rng.dirichlet(np.ones(d))


def _chosen_sizes(params: PrivacyParams, mechanisms) -> dict:
    sizes = {}
    for mech in mechanisms:
        if mech == "kss_mi":
            sizes[mech] = mi_optimal_size(params).k
        elif mech == "kss_l2":
            sizes[mech] = estimation.l2_optimal_size(params).k
        else:
            sizes[mech] = None
    return sizes


def _run_rep(config: ExperimentConfig, params: PrivacyParams, sizes: dict, rep: int) -> dict:
    d, n = config.d, config.n
    data_rng = sampling.derive_rng(config.master_seed, rep, 0)
    theta = config.theta if config.theta is not None else random_theta(d, data_rng)
    secrets = data_rng.choice(d, size=n, p=theta)
    out = {}
    for mech in config.mechanisms:
        rng = sampling.derive_rng(config.master_seed, rep, 1 + MECHANISMS.index(mech))
        if mech == "brr":
            views = sampling.brr_randomize_batch(secrets, params, rng)
            rates = estimation.brr_hit_rates(params)
        elif mech == "mrr":
            views = sampling.mrr_randomize_batch(secrets, params, rng)
            rates = estimation.mrr_hit_rates(params)
        else:
            k = sizes[mech]
            views = sampling.ksubset_randomize_batch(secrets, params, k, rng)
            rates = estimation.ksubset_hit_rates(params, k)
        freq = estimation.aggregate(views, d)
        raw = estimation.remap_estimate(freq, rates)
        theta_hat = estimation.project_simplex(raw).theta_hat
        diff = theta_hat - theta
        out[mech] = (float(diff @ diff), float(np.abs(diff).sum()))
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every repetition of one cell and reduce to means and standard errors."""
    params = PrivacyParams(config.epsilon, config.d)
    sizes = _chosen_sizes(params, config.mechanisms)
    reps = range(config.reps)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            per_rep = list(pool.map(lambda r: _run_rep(config, params, sizes, r), reps))
    else:
        per_rep = [_run_rep(config, params, sizes, r) for r in reps]
    mech_results = []
    for mech in config.mechanisms:
        l2 = np.array([rep[mech][0] for rep in per_rep])
        l1 = np.array([rep[mech][1] for rep in per_rep])
        mech_results.append(
            MechanismResult(
                mechanism=mech,
                k=sizes[mech],
                mean_l2_sq=float(l2.mean()),
                se_l2_sq=_stderr(l2),
                mean_l1=float(l1.mean()),
                se_l1=_stderr(l1),
            )
        )
    return ExperimentResult(
        d=config.d,
        epsilon=config.epsilon,
        n=config.n,
        reps=config.reps,
        master_seed=config.master_seed,
        results=tuple(mech_results),
    )


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def run_grid(rows, n=10000, reps=100, mechanisms=MECHANISMS, master_seed=0,
             threads=1, time_budget=None, progress=None):
    """Run a sequence of (d, epsilon) cells with shared settings.

    ``time_budget`` (seconds) stops before starting a cell that no longer
    fits; completed cells are always reported.  ``progress`` is an optional
    callable receiving a status string per cell.
    """
    import time

    results = []
    started = time.monotonic()
    for d, eps in rows:
        if time_budget is not None and time.monotonic() - started > time_budget:
            if progress:
                progress(f"time budget exhausted, skipping d={d} eps={eps} onward")
            break
        config = ExperimentConfig(
            d=d, epsilon=eps, n=n, reps=reps, mechanisms=mechanisms,
            master_seed=master_seed, threads=threads,
        )
        results.append(run_experiment(config))
        if progress:
            progress(f"finished d={d} eps={eps}")
    return results


_CSV_HEADER = "d,epsilon,mechanism,k,mean_l2_sq,se_l2_sq,mean_l1,se_l1,reps,n,master_seed"


def results_to_csv(results, file, schema_comment=True) -> None:
    """Serialize experiment results; float fields use repr so identical runs
    are byte-identical."""
    own = isinstance(file, (str, bytes, os.PathLike))
    fh = open(file, "w", encoding="utf-8") if own else file
    try:
        if schema_comment:
            fh.write("# subsetldp-schema: results/1\n")
        fh.write(_CSV_HEADER + "\n")
        for res in results:
            for m in res.results:
                k = "" if m.k is None else m.k
                fh.write(
                    f"{res.d},{res.epsilon!r},{m.mechanism},{k},{m.mean_l2_sq!r},"
                    f"{m.se_l2_sq!r},{m.mean_l1!r},{m.se_l1!r},{res.reps},{res.n},"
                    f"{res.master_seed}\n"
                )
    finally:
        if own:
            fh.close()


def results_to_json(results) -> str:
    """JSON mirror of the CSV content, same fields and numbers."""
    rows = []
    for res in results:
        for m in res.results:
            rows.append(
                {
                    "d": res.d,
                    "epsilon": res.epsilon,
                    "mechanism": m.mechanism,
                    "k": m.k,
                    "mean_l2_sq": m.mean_l2_sq,
                    "se_l2_sq": m.se_l2_sq,
                    "mean_l1": m.mean_l1,
                    "se_l1": m.se_l1,
                    "reps": res.reps,
                    "n": res.n,
                    "master_seed": res.master_seed,
                }
            )
    return json.dumps({"schema": "subsetldp-results/1", "rows": rows}, indent=2)
