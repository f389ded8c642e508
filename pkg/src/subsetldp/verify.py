"""Self-verification suites: every closed form against an independent oracle.

Each check recomputes a claimed identity or inequality the slow, direct way
(explicit channel matrices, exhaustive scans over subset sizes, random
mixtures) and compares against the package's closed forms.  A correct build
passes all default-level checks in well under a minute; the deep level widens
domains and sample counts.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import channels, estimation
from .information import (
    PrivacyParams,
    brr_mutual_info,
    brr_mutual_info_bound,
    max_mutual_info,
    mi_optimal_size,
    mi_privacy_bound,
    subset_mutual_info,
)

__all__ = ["CheckResult", "run_checks", "EPS_GRID"]

EPS_GRID = (0.01, 0.1, 0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def __bool__(self):
        return self.ok


def _result(name, ok, detail):
    return CheckResult(name, bool(ok), detail)


def check_ksubset_mi_agreement(deep=False) -> CheckResult:
    """Closed-form subset mutual information vs the brute-force channel oracle."""
    max_d = 10 if deep else 8
    worst = 0.0
    where = None
    cases = 0
    for d in range(2, max_d + 1):
        for eps in EPS_GRID:
            params = PrivacyParams(eps, d)
            for k in range(1, d):
                direct = channels.brute_force_mi(channels.ksubset_channel(params, k))
                delta = abs(direct - subset_mutual_info(params, k))
                cases += 1
                if delta > worst:
                    worst, where = delta, (d, eps, k)
    return _result(
        "ksubset-mi-vs-bruteforce",
        worst <= 1e-9,
        f"{cases} cases, max |delta| {worst:.3e} at {where}",
    )


def check_brr_mi_agreement(deep=False) -> CheckResult:
    """Bitwise randomized response mutual information series vs brute force,
    plus its closed-form upper bound."""
    max_d = 12 if deep else 10
    worst = 0.0
    where = None
    cases = 0
    bound_ok = True
    for d in range(2, max_d + 1):
        for eps in EPS_GRID:
            params = PrivacyParams(eps, d)
            series = brr_mutual_info(params)
            direct = channels.brute_force_mi(channels.brr_channel(params))
            delta = abs(series - direct)
            cases += 1
            if delta > worst:
                worst, where = delta, (d, eps)
            if series > brr_mutual_info_bound(params) + 1e-12:
                bound_ok = False
    return _result(
        "brr-mi-vs-bruteforce",
        worst <= 1e-9 and bound_ok,
        f"{cases} cases, max |delta| {worst:.3e} at {where}, bound held: {bound_ok}",
    )


def check_mrr_equivalence() -> CheckResult:
    """Plain randomized response carries exactly the size-1 subset information."""
    worst = 0.0
    for d in range(2, 9):
        for eps in EPS_GRID:
            params = PrivacyParams(eps, d)
            direct = channels.brute_force_mi(channels.mrr_channel(params))
            worst = max(worst, abs(direct - subset_mutual_info(params, 1)))
    return _result("mrr-equals-1subset", worst <= 1e-9, f"max |delta| {worst:.3e}")


def check_amortization(seed=0, deep=False) -> CheckResult:
    """Class-averaging preserves mutual information; nothing beats the optimum.

    Draws random valid asymmetric staircase mechanisms, compares mutual
    information before and after amortization, and checks both stay at or
    below the subset-mechanism maximum.
    """
    per_d = 200 if deep else 100
    rng = np.random.Generator(np.random.PCG64(seed))
    worst_delta = 0.0
    worst_excess = -math.inf
    cases = 0
    changed = 0
    for d in (3, 4):
        for _ in range(per_d):
            eps = float(rng.uniform(0.05, 4.0))
            mech = channels.random_valid_staircase(d, eps, seed=int(rng.integers(1 << 62)))
            flat = channels.amortize(mech)
            mi_raw = channels.brute_force_mi(channels.staircase_channel(mech))
            mi_flat = channels.brute_force_mi(channels.staircase_channel(flat))
            worst_delta = max(worst_delta, abs(mi_raw - mi_flat))
            cap = max_mutual_info(PrivacyParams(eps, d))
            worst_excess = max(worst_excess, mi_raw - cap, mi_flat - cap)
            changed += int(not np.allclose(mech.weights, flat.weights, atol=0))
            cases += 1
    ok = worst_delta <= 1e-9 and worst_excess <= 1e-9 and changed > cases * 0.9
    return _result(
        "amortization-invariance",
        ok,
        f"{cases} mechanisms, max MI shift {worst_delta:.3e}, "
        f"max excess over optimum {worst_excess:.3e}, {changed} non-fixed-points",
    )


def check_bound_chain(deep=False) -> CheckResult:
    """Optimal MI <= domain-free cap <= eps^2/8, all in nats."""
    max_d = 128 if deep else 64
    worst = -math.inf
    for d in range(2, max_d + 1):
        for eps in EPS_GRID:
            params = PrivacyParams(eps, d)
            cap = mi_privacy_bound(eps)
            worst = max(worst, max_mutual_info(params) - cap, cap - eps * eps / 8.0)
    return _result("mi-bound-chain", worst <= 1e-12, f"max violation {worst:.3e}")


def check_size_selection(deep=False) -> CheckResult:
    """Bracket selections match exhaustive scans; the MI curve is unimodal."""
    max_d = 128 if deep else 64
    bad = []
    for d in range(2, max_d + 1):
        ks = np.arange(0, d + 1)
        for eps in EPS_GRID:
            params = PrivacyParams(eps, d)
            curve = subset_mutual_info(params, ks)
            top = int(np.argmax(curve))
            rising = np.all(np.diff(curve[: top + 1]) >= -1e-15)
            falling = np.all(np.diff(curve[top:]) <= 1e-15)
            star = mi_optimal_size(params)
            if not (rising and falling):
                bad.append(("unimodal", d, eps))
            if curve[top] > star.objective_value + 1e-12:
                bad.append(("mi-argmax", d, eps, top, star.k))
            if star.k in (0, d):
                bad.append(("mi-degenerate", d, eps))
            errs = [estimation.analytic_l2_error(params, k, 1) for k in range(1, d)]
            exh = 1 + int(np.argmin(errs))
            sharp = estimation.l2_optimal_size(params, 1)
            if errs[exh - 1] < sharp.objective_value - 1e-12 * abs(sharp.objective_value):
                bad.append(("l2-argmin", d, eps, exh, sharp.k))
    return _result(
        "size-selection-scans",
        not bad,
        f"{(max_d - 1) * len(EPS_GRID)} grid points, violations: {bad[:3] if bad else 'none'}",
    )


def check_mixture_inequality(seed=0, deep=False) -> CheckResult:
    """Quasiconcavity of the variance objective along hit-rate mixtures."""
    samples = 1_000_000 if deep else 100_000
    rng = np.random.Generator(np.random.PCG64(seed))
    d = rng.integers(2, 65, size=samples)
    h1 = rng.uniform(0.0, 1.0, samples)
    g1 = rng.uniform(h1, 1.0)
    h2 = rng.uniform(0.0, 1.0, samples)
    g2 = rng.uniform(h2, 1.0)
    p = rng.uniform(0.0, 1.0, samples)
    valid = (g1 > h1) & (g2 > h2)

    def f(g, h, dd):
        return (g * (1 - g) + h * (1 - h) * dd) / (g - h) ** 2

    gm = p * g1 + (1 - p) * g2
    hm = p * h1 + (1 - p) * h2
    valid &= gm > hm
    lhs = f(gm[valid], hm[valid], d[valid])
    rhs = np.minimum(f(g1[valid], h1[valid], d[valid]), f(g2[valid], h2[valid], d[valid]))
    viol = int(np.sum(lhs < rhs - 1e-12))
    worst = float(np.max(rhs - lhs)) if viol else 0.0
    return _result(
        "mixture-quasiconcavity",
        viol == 0,
        f"{int(valid.sum())} tuples, {viol} violations, worst gap {worst:.3e}",
    )


def check_powerset_dominance(seed=0, deep=False) -> CheckResult:
    """Random symmetric power-set mechanisms never beat the best fixed size.

    Each trial draws a random size distribution and random membership boosts
    in [1, e^eps], mixes the induced hit rates, and compares the variance
    objective against the bracketed subset-size minimum.
    """
    trials = 4000 if deep else 1000
    rng = np.random.Generator(np.random.PCG64(seed))
    viol = 0
    worst = 0.0
    tested = 0
    for _ in range(trials):
        d = int(rng.integers(2, 65))
        eps = float(rng.choice(EPS_GRID))
        params = PrivacyParams(eps, d)
        ee = math.exp(eps)
        size_probs = rng.dirichlet(np.ones(d + 1))
        boosts = rng.uniform(1.0, ee, size=d + 1)
        g = h = 0.0
        for k in range(d + 1):
            gk, hk = estimation.scaled_subset_hit_rates(params, k, float(boosts[k]))
            g += size_probs[k] * gk
            h += size_probs[k] * hk
        if g <= h:
            continue
        tested += 1
        mixture = estimation.mixture_l2_objective(g, h, d)
        target = estimation.l2_optimal_size(params, 1)
        lo = min(max(math.floor(target.beta), 1), d - 1)
        hi = min(max(math.ceil(target.beta), 1), d - 1)
        best = min(
            estimation.mixture_l2_objective(
                *_ksubset_gh(params, k), d
            )
            for k in {lo, hi}
        )
        if mixture < best * (1 - 1e-12):
            viol += 1
            worst = max(worst, (best - mixture) / best)
    return _result(
        "powerset-dominance",
        viol == 0,
        f"{tested} mechanisms, {viol} violations, worst rel gap {worst:.3e}",
    )


def _ksubset_gh(params, k):
    r = estimation.ksubset_hit_rates(params, k)
    return r.g, r.h


def check_hit_rate_consistency() -> CheckResult:
    """Hit-rate formulas against membership sums of the explicit channels."""
    worst = 0.0
    for d in range(2, 9):
        for eps in (0.1, 1.0, 3.0):
            params = PrivacyParams(eps, d)
            for k in range(1, d):
                chan = channels.ksubset_channel(params, k)
                rates = estimation.ksubset_hit_rates(params, k)
                labels = np.array(chan.output_labels)
                member = ((labels[None, :] >> np.arange(d)[:, None]) & 1).astype(bool)
                g_direct = float(chan.probs[0][member[0]].sum())
                h_direct = float(chan.probs[0][member[1]].sum())
                worst = max(worst, abs(g_direct - rates.g), abs(h_direct - rates.h))
            mrr = estimation.mrr_hit_rates(params)
            mc = channels.mrr_channel(params)
            worst = max(worst, abs(mc.probs[0, 0] - mrr.g), abs(mc.probs[0, 1] - mrr.h))
            brr = estimation.brr_hit_rates(params)
            if d <= 6:
                bc = channels.brr_channel(params)
                labels = np.array(bc.output_labels)
                m0 = ((labels >> 0) & 1).astype(bool)
                m1 = ((labels >> 1) & 1).astype(bool)
                worst = max(worst, abs(float(bc.probs[0][m0].sum()) - brr.g))
                worst = max(worst, abs(float(bc.probs[0][m1].sum()) - brr.h))
    return _result("hit-rates-vs-channels", worst <= 1e-12, f"max |delta| {worst:.3e}")


def check_ldp_validity() -> CheckResult:
    """Constructed channels meet their own budget and fail at half budget."""
    failures = []
    for d in (2, 3, 5, 8):
        for eps in (0.1, 1.0, 3.0):
            params = PrivacyParams(eps, d)
            built = [channels.mrr_channel(params)]
            if d <= 6:
                built.append(channels.brr_channel(params))
            built.extend(channels.ksubset_channel(params, k) for k in range(1, min(d, 4)))
            for chan in built:
                if not channels.validate_ldp(chan, eps):
                    failures.append(("own-eps", d, eps))
                if channels.validate_ldp(chan, eps / 2.0):
                    failures.append(("half-eps", d, eps))
    return _result("ldp-validity", not failures, f"violations: {failures[:3] if failures else 'none'}")


_CHECKS = (
    check_ksubset_mi_agreement,
    check_brr_mi_agreement,
    check_mrr_equivalence,
    check_amortization,
    check_bound_chain,
    check_size_selection,
    check_mixture_inequality,
    check_powerset_dominance,
    check_hit_rate_consistency,
    check_ldp_validity,
)


def run_checks(level: str = "default", seed: int = 0):
    """Run every suite; returns the list of :class:`CheckResult`."""
    if level not in ("default", "deep"):
        raise ValueError(f"level must be 'default' or 'deep', got {level!r}")
    deep = level == "deep"
    results = []
    for fn in _CHECKS:
        kwargs = {}
        if "deep" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
            kwargs["deep"] = deep
        if "seed" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
            kwargs["seed"] = seed
        results.append(fn(**kwargs))
    return results
