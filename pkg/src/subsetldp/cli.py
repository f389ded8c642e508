"""Command-line front end.

Subcommands: ``analyze`` (closed-form quantities for a (d, epsilon) pair),
``randomize`` (secrets file -> views file), ``estimate`` (views file ->
distribution estimate), ``simulate`` (one Monte Carlo cell), ``table`` (the
built-in grid of cells), and ``verify`` (oracle self-checks).

Conventions: CSV on stdout or --output, each stream starting with a
``# subsetldp-schema:`` line (view files are the one exception: they carry the
bare wire format).  A ``--json`` flag mirrors the same numbers as JSON.
Mutual information is reported in nats unless --bits is given.  Exit codes:
0 success, 1 usage error, 2 data error, 3 verification failure.  Seeds and
thread counts fall back to the SUBSETLDP_SEED / SUBSETLDP_THREADS environment
variables before their defaults.
"""

import argparse
import json
import math
import os
import re
import sys

import numpy as np

from . import estimation, sampling, simulation, verify
from .information import (
    PrivacyParams,
    brr_mutual_info,
    brr_mutual_info_bound,
    mi_optimal_size,
    subset_mutual_info,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3

_LN2 = math.log(2.0)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse front end whose usage failures exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _env_int(name):
    raw = os.environ.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"environment variable {name}={raw!r} is not an integer") from None


def _default_seed():
    v = _env_int("SUBSETLDP_SEED")
    return 0 if v is None else v


def _default_threads():
    v = _env_int("SUBSETLDP_THREADS")
    return 1 if v is None else v


def build_parser() -> _Parser:
    parser = _Parser(prog="subsetldp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form analysis of one (d, epsilon) pair")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, default=10000, help="providers assumed for the error figure")
    p.add_argument("--bits", action="store_true", help="report information in bits instead of nats")
    p.add_argument("--output", default=None)
    p.add_argument("--json", dest="json_path", default=None)

    p = sub.add_parser("randomize", help="randomize a file of secrets into private views")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mechanism", choices=("kss", "mrr", "brr"), default="kss")
    p.add_argument("--k", type=int, default=None, help="subset size (kss only; default: l2-optimal)")
    p.add_argument("--input", required=True, help="one secret index per line")
    p.add_argument("--output", required=True, help="view file to write")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("estimate", help="estimate the distribution from a view file")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mechanism", choices=("kss", "mrr", "brr"), default="kss")
    p.add_argument("--k", type=int, default=None, help="subset size (required for kss)")
    p.add_argument("--views", required=True)
    p.add_argument("--project", action="store_true", help="also project onto the simplex")
    p.add_argument("--output", default=None)

    p = sub.add_parser("simulate", help="run one Monte Carlo cell")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--mechanisms", default=",".join(simulation.MECHANISMS))
    p.add_argument("--theta-file", default=None, help="fix the true distribution (one weight per line)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--json", dest="json_path", default=None)

    p = sub.add_parser("table", help="run the built-in (d, epsilon) grid")
    p.add_argument("--rows", default=None, help="comma list like d16e1.0,d8e0.5 (default: full grid)")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--mechanisms", default=",".join(simulation.MECHANISMS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--budget", type=float, default=None, help="stop starting new rows after this many seconds")
    p.add_argument("--output", default=None)
    p.add_argument("--json", dest="json_path", default=None)

    p = sub.add_parser("verify", help="run the oracle self-check suites")
    p.add_argument("--level", choices=("default", "deep"), default="default")
    p.add_argument("--seed", type=int, default=None)
    return parser


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _resolved_seed(args):
    return _default_seed() if getattr(args, "seed", None) is None else args.seed


def _resolved_threads(args):
    t = _default_threads() if getattr(args, "threads", None) is None else args.threads
    if t < 1:
        raise UsageError(f"--threads must be >= 1, got {t}")
    return t


def _params(args) -> PrivacyParams:
    try:
        return PrivacyParams(args.eps, args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_analyze(args) -> int:
    params = _params(args)
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    star = mi_optimal_size(params)
    sharp = estimation.l2_optimal_size(params, args.n)
    row = {
        "d": params.d,
        "epsilon": params.epsilon,
        "n": args.n,
        "units": "bits" if args.bits else "nats",
        "beta": star.beta,
        "k_star": star.k,
        "mi_k_star": star.objective_value,
        "k_sharp": sharp.k,
        "l2_error_k_sharp": sharp.objective_value,
        "eps_sq_over_8": params.epsilon ** 2 / 8.0,
        "brr_mi": brr_mutual_info(params),
        "brr_mi_bound": brr_mutual_info_bound(params),
    }
    if args.bits:
        for key in ("mi_k_star", "eps_sq_over_8", "brr_mi", "brr_mi_bound"):
            row[key] = row[key] / _LN2
    fh, own = _open_out(args.output)
    try:
        fh.write("# subsetldp-schema: analyze/1\n")
        fh.write(",".join(row) + "\n")
        fh.write(",".join(_cell(v) for v in row.values()) + "\n")
    finally:
        if own:
            fh.close()
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as jf:
            json.dump({"schema": "subsetldp-analyze/1", **row}, jf, indent=2)
            jf.write("\n")
    return EXIT_OK


def _cell(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def _read_secrets(path, d):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(str(exc)) from None
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()  # trailing newline
    try:
        secrets = np.array([int(line) for line in lines], dtype=np.int64)
    except ValueError:
        for lineno, line in enumerate(lines, start=1):
            try:
                int(line)
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}: not an integer: {line[:40]!r}"
                ) from None
        raise
    if secrets.size and (secrets.min() < 0 or secrets.max() >= d):
        bad = int(np.flatnonzero((secrets < 0) | (secrets >= d))[0])
        raise DataError(
            f"{path}: line {bad + 1}: secret {secrets[bad]} outside domain [0, {d})"
        )
    return secrets


def cmd_randomize(args) -> int:
    params = _params(args)
    seed = _resolved_seed(args)
    k = args.k
    if args.mechanism == "kss":
        if k is None:
            k = estimation.l2_optimal_size(params).k
        if not 1 <= k <= params.d - 1:
            raise UsageError(f"--k must be in [1, {params.d - 1}], got {k}")
    elif k is not None:
        raise UsageError("--k applies only to the kss mechanism")
    secrets = _read_secrets(args.input, params.d)
    rng = sampling.make_rng(seed)
    chunk = 1 << 16
    with open(args.output, "wb") as out:
        for lo in range(0, secrets.size, chunk):
            block = secrets[lo : lo + chunk]
            if args.mechanism == "kss":
                views = sampling.ksubset_randomize_batch(block, params, k, rng)
            elif args.mechanism == "mrr":
                views = sampling.mrr_randomize_batch(block, params, rng)
            else:
                views = sampling.brr_randomize_batch(block, params, rng)
            sampling.write_views(out, views, d=params.d)
    summary = {
        "schema": "subsetldp-randomize/1",
        "mechanism": args.mechanism,
        "d": params.d,
        "epsilon": params.epsilon,
        "k": k,
        "seed": seed,
        "views": int(secrets.size),
        "output": args.output,
    }
    sys.stdout.write("# subsetldp-schema: randomize/1\n")
    keys = [k_ for k_ in summary if k_ != "schema"]
    sys.stdout.write(",".join(keys) + "\n")
    sys.stdout.write(",".join(_cell(summary[k_]) for k_ in keys) + "\n")
    return EXIT_OK


def cmd_estimate(args) -> int:
    params = _params(args)
    if args.mechanism == "kss":
        if args.k is None:
            raise UsageError("--k is required for the kss mechanism")
        if not 1 <= args.k <= params.d - 1:
            raise UsageError(f"--k must be in [1, {params.d - 1}], got {args.k}")
        rates = estimation.ksubset_hit_rates(params, args.k)
        required = args.k
    elif args.mechanism == "mrr":
        rates = estimation.mrr_hit_rates(params)
        required = 1
    else:
        rates = estimation.brr_hit_rates(params)
        required = None
    try:
        freq = estimation.aggregate_view_file(args.views, params.d, required_size=required)
    except sampling.ViewFormatError as exc:
        raise DataError(f"{args.views}: {exc}") from None
    except OSError as exc:
        raise DataError(str(exc)) from None
    if freq.n == 0:
        raise DataError(f"{args.views}: no views to estimate from")
    raw = estimation.remap_estimate(freq, rates)
    projected = estimation.project_simplex(raw) if args.project else None
    fh, own = _open_out(args.output)
    try:
        fh.write("# subsetldp-schema: estimate/1\n")
        estimation.estimate_to_csv(raw, fh, projected)
    finally:
        if own:
            fh.close()
    return EXIT_OK


def _mechanism_list(raw):
    mechs = tuple(tok.strip().lower() for tok in raw.split(",") if tok.strip())
    if not mechs:
        raise UsageError("no mechanisms given")
    return mechs


def _read_theta(path, d):
    try:
        values = [float(tok) for tok in open(path, "r", encoding="utf-8").read().split()]
    except OSError as exc:
        raise DataError(str(exc)) from None
    except ValueError:
        raise DataError(f"{path}: theta file must contain one weight per line") from None
    if len(values) != d:
        raise DataError(f"{path}: expected {d} weights, found {len(values)}")
    theta = np.asarray(values)
    if (theta < 0).any() or abs(theta.sum() - 1.0) > 1e-9:
        raise DataError(f"{path}: weights must be non-negative and sum to 1")
    return theta


def cmd_simulate(args) -> int:
    params = _params(args)
    theta = _read_theta(args.theta_file, params.d) if args.theta_file else None
    try:
        config = simulation.ExperimentConfig(
            d=params.d,
            epsilon=params.epsilon,
            n=args.n,
            reps=args.reps,
            mechanisms=_mechanism_list(args.mechanisms),
            master_seed=_resolved_seed(args),
            theta=theta,
            threads=_resolved_threads(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    results = [simulation.run_experiment(config)]
    _emit_results(results, args)
    return EXIT_OK


_ROW_RE = re.compile(r"^d(\d+)e([0-9.]+)$")


def _parse_rows(raw):
    rows = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        m = _ROW_RE.match(tok)
        if not m:
            raise UsageError(f"bad --rows entry {tok!r}; expected like d16e1.0")
        rows.append((int(m.group(1)), float(m.group(2))))
    if not rows:
        raise UsageError("no rows given")
    return rows


def cmd_table(args) -> int:
    rows = simulation.TABLE_GRID if args.rows is None else _parse_rows(args.rows)
    try:
        results = simulation.run_grid(
            rows,
            n=args.n,
            reps=args.reps,
            mechanisms=_mechanism_list(args.mechanisms),
            master_seed=_resolved_seed(args),
            threads=_resolved_threads(args),
            time_budget=args.budget,
            progress=lambda msg: print(msg, file=sys.stderr),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit_results(results, args)
    return EXIT_OK


def _emit_results(results, args):
    fh, own = _open_out(args.output)
    try:
        simulation.results_to_csv(results, fh)
    finally:
        if own:
            fh.close()
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as jf:
            jf.write(simulation.results_to_json(results))
            jf.write("\n")


def cmd_verify(args) -> int:
    results = verify.run_checks(level=args.level, seed=_resolved_seed(args))
    print("# subsetldp-schema: verify/1")
    failed = 0
    for res in results:
        status = "PASS" if res.ok else "FAIL"
        print(f"{status} {res.name} - {res.detail}")
        failed += 0 if res.ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


_COMMANDS = {
    "analyze": cmd_analyze,
    "randomize": cmd_randomize,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "table": cmd_table,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
