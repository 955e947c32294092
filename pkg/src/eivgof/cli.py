"""Command-line interface: fit/test CSV datasets, run simulation studies.

Input CSV format: header row ``a1,...,an,b1,...,bd``, one observation per
row, decimal-point floats, UTF-8.  Output is JSON on stdout.

Exit codes: 0 accept (or success), 1 reject, 2 usage/parse error,
3 estimator failure (degenerate or infinite TLS solution), 4 covariance
failure (a required matrix was not positive definite).
"""

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from ._backend import BACKEND
from .exceptions import (
    CovarianceNotPD,
    DegenerateInput,
    NoFiniteSolution,
    NotPositiveDefinite,
)
from .gof import run_test
from .nuisance import estimate_nuisance
from .simulate import (
    ConstantAlternative,
    DesignSpec,
    ErrorSpec,
    QuadraticAlternative,
    SimConfig,
    monte_carlo_level,
    monte_carlo_power,
    validate_estimator_clt,
)
from .tls import EivDataset, tls_estimate

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_ESTIMATOR = 3
EXIT_COVARIANCE = 4

SEED_ENV_VAR = "EIV_GOF_SEED"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _emit(obj):
    json.dump(_jsonable(obj), sys.stdout, indent=2)
    sys.stdout.write("\n")


def read_dataset_csv(path, n, d):
    """Parse a dataset CSV; errors name the offending row and column."""
    expected = [f"a{i}" for i in range(1, n + 1)] + [f"b{j}" for j in range(1, d + 1)]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file, expected header {','.join(expected)}")
        header = [h.strip() for h in header]
        if header != expected:
            raise ValueError(
                f"{path}: expected header {','.join(expected)}, got {','.join(header)}"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + d:
                raise ValueError(
                    f"{path}: row {line_no}: expected {n + d} fields, got {len(row)}"
                )
            vals = []
            for k, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: row {line_no}, column '{expected[k]}': "
                        f"could not parse {cell.strip()!r} as a number"
                    ) from None
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return EivDataset(arr[:, :n], arr[:, n:])


def _require_keys(doc, known, required, where):
    for key in doc:
        if key not in known:
            raise ValueError(f"config: unknown key '{where}{key}'")
    for key in required:
        if key not in doc:
            raise ValueError(f"config: missing key '{where}{key}'")


def _alternative_from_dict(doc):
    if not isinstance(doc, dict):
        raise ValueError("config: 'alternative' must be an object")
    kind = doc.get("kind")
    if kind == "constant":
        _require_keys(doc, {"kind", "c"}, {"kind", "c"}, "alternative.")
        return ConstantAlternative(c=doc["c"])
    if kind == "quadratic":
        _require_keys(doc, {"kind", "v", "q"}, {"kind", "v", "q"}, "alternative.")
        return QuadraticAlternative(v=doc["v"], q=doc["q"])
    raise ValueError(
        f"config: 'alternative.kind' must be 'constant' or 'quadratic', got {kind!r}"
    )


def config_from_dict(doc):
    """Build a SimConfig from a parsed config document, naming bad keys."""
    if not isinstance(doc, dict):
        raise ValueError("config: top level must be an object")
    known = {"design", "errors", "x0", "m", "reps", "alpha", "master_seed", "alternative"}
    required = {"design", "errors", "x0", "m", "reps", "alpha", "master_seed"}
    _require_keys(doc, known, required, "")

    design_doc = doc["design"]
    if not isinstance(design_doc, dict):
        raise ValueError("config: 'design' must be an object")
    _require_keys(
        design_doc,
        {"kind", "n", "mu_a", "s_a", "design_seed"},
        {"kind", "n", "mu_a", "s_a"},
        "design.",
    )
    errors_doc = doc["errors"]
    if not isinstance(errors_doc, dict):
        raise ValueError("config: 'errors' must be an object")
    _require_keys(errors_doc, {"law", "sigma"}, {"law", "sigma"}, "errors.")

    try:
        design = DesignSpec(
            kind=design_doc["kind"],
            n=design_doc["n"],
            mu_a=design_doc["mu_a"],
            s_a=design_doc["s_a"],
            design_seed=design_doc.get("design_seed", 0),
        )
    except (ValueError, TypeError) as exc:
        raise ValueError(f"config: key 'design': {exc}") from None
    try:
        errors = ErrorSpec(law=errors_doc["law"], sigma=errors_doc["sigma"])
    except (ValueError, TypeError) as exc:
        raise ValueError(f"config: key 'errors': {exc}") from None
    alternative = None
    if doc.get("alternative") is not None:
        alternative = _alternative_from_dict(doc["alternative"])
    try:
        return SimConfig(
            design=design,
            errors=errors,
            x0=doc["x0"],
            m=doc["m"],
            reps=doc["reps"],
            alpha=doc["alpha"],
            master_seed=doc["master_seed"],
            alternative=alternative,
        )
    except (ValueError, TypeError) as exc:
        raise ValueError(f"config: {exc}") from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from None
    return config_from_dict(doc)


def _config_echo(config):
    alt = config.alternative
    if alt is None:
        alt_doc = None
    elif isinstance(alt, ConstantAlternative):
        alt_doc = {"kind": "constant", "c": alt.c}
    else:
        alt_doc = {"kind": "quadratic", "v": alt.v, "q": alt.q}
    return {
        "design": {
            "kind": config.design.kind,
            "n": config.design.n,
            "mu_a": config.design.mu_a,
            "s_a": config.design.s_a,
            "design_seed": config.design.design_seed,
        },
        "errors": {"law": config.errors.law, "sigma": config.errors.sigma},
        "x0": config.x0,
        "m": config.m,
        "reps": config.reps,
        "alpha": config.alpha,
        "master_seed": config.master_seed,
        "alternative": alt_doc,
    }


def _resolve_seed(args, config):
    # precedence: --seed flag > EIV_GOF_SEED env > config file
    if args.seed is not None:
        return replace(config, master_seed=args.seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip() != "":
        try:
            seed = int(env)
        except ValueError:
            raise ValueError(
                f"{SEED_ENV_VAR} must be an integer, got {env!r}"
            ) from None
        return replace(config, master_seed=seed)
    return config


def cmd_fit(args):
    data = read_dataset_csv(args.input, args.n, args.d)
    fit = tls_estimate(data)
    nuis = estimate_nuisance(data, fit.x_hat)
    _emit(
        {
            "x_hat": fit.x_hat,
            "sigma2_hat": nuis.sigma2_hat,
            "va_hat": nuis.va_hat,
            "mu_a_hat": nuis.mu_a_hat,
            "loss": fit.loss_at_solution,
            "singular_gap": fit.singular_gap,
        }
    )
    return EXIT_ACCEPT


def cmd_test(args):
    data = read_dataset_csv(args.input, args.n, args.d)
    report = run_test(data, args.alpha)
    _emit(
        {
            "t0": report.t0,
            "t2": report.t2,
            "df": report.df,
            "p_value": report.p_value,
            "alpha": report.alpha,
            "quantile": report.quantile,
            "decision": report.decision,
            "x_hat": report.fit.x_hat,
            "sigma2_hat": report.nuisance.sigma2_hat,
            "singular_gap": report.fit.singular_gap,
        }
    )
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def _dump_t2(path, t2_by_rep):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rep_index", "t2"])
        for i, t2 in enumerate(t2_by_rep):
            if t2 is not None:
                writer.writerow([i, repr(float(t2))])


def cmd_simulate(args):
    config = _resolve_seed(args, load_config(args.config))
    t_start = time.perf_counter()
    if args.mode == "level":
        rep = monte_carlo_level(config, threads=args.threads)
        body = {"reject_rate": rep.reject_rate, "failed_runs": rep.failed_runs}
        t2_by_rep = rep.t2_by_rep
    elif args.mode == "power":
        rep = monte_carlo_power(config, threads=args.threads)
        body = {
            "reject_rate": rep.reject_rate,
            "failed_runs": rep.failed_runs,
            "tau_theoretical": rep.tau_theoretical,
            "power_theoretical": rep.power_theoretical,
        }
        t2_by_rep = rep.t2_by_rep
    else:
        rep = validate_estimator_clt(config, threads=args.threads)
        body = {
            "m_values": list(rep.m_values),
            "median_residuals": rep.median_residuals,
            "sandwich_rel_error": rep.sandwich_rel_error,
        }
        t2_by_rep = None
    elapsed = time.perf_counter() - t_start

    if args.dump is not None:
        if t2_by_rep is None:
            raise ValueError("--dump applies to level and power modes only")
        _dump_t2(args.dump, t2_by_rep)

    out = {"mode": args.mode, "backend": BACKEND, "config": _config_echo(config)}
    out.update(body)
    out["wall_time_s"] = elapsed
    _emit(out)
    return EXIT_ACCEPT


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eivgof",
        description="Total least squares and goodness-of-fit testing "
        "for errors-in-variables regression.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="TLS fit of a CSV dataset")
    p_fit.add_argument("input", help="CSV file with header a1..an,b1..bd")
    p_fit.add_argument("--n", type=int, required=True, help="number of input columns")
    p_fit.add_argument("--d", type=int, required=True, help="number of response columns")
    p_fit.set_defaults(func=cmd_fit)

    p_test = sub.add_parser("test", help="goodness-of-fit test of a CSV dataset")
    p_test.add_argument("input", help="CSV file with header a1..an,b1..bd")
    p_test.add_argument("--n", type=int, required=True)
    p_test.add_argument("--d", type=int, required=True)
    p_test.add_argument("--alpha", type=float, default=0.05, help="test level in (0, 1/2)")
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="Monte Carlo level/power/CLT study")
    p_sim.add_argument("config", help="JSON config file (see README)")
    p_sim.add_argument("--mode", choices=("level", "power", "clt"), default="level")
    p_sim.add_argument("--threads", type=int, default=1, help="worker thread count")
    p_sim.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_sim.add_argument("--dump", default=None, help="write per-replicate T2 CSV here")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NoFiniteSolution, DegenerateInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except (CovarianceNotPD, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COVARIANCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
