"""``liplab`` command-line entry point.

Machine-readable JSON goes to stdout (or ``--out``); human summaries go to
stderr.  Exit codes: 0 success, 1 failed assertive check, 2 usage or config
error, 3 budget or numerical failure.
"""

from __future__ import annotations

import argparse
import inspect
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as bd
from .estimators import EstimateConfig, pattern_hill_climb, sampled_lip_detail
from .exact_lip import Budget, BudgetExceeded, HypothesisError, exact_lipschitz
from .experiments import EXPERIMENTS, counterexample_suite, default_threads
from .feasibility import IndeterminateError
from .net_core import NetworkParams, ShapeError, forward, gradient_at
from .rand_init import BiasSpec, InitConfig, sample_network

log = logging.getLogger("liplab")

EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def parse_bias(text: str) -> BiasSpec:
    """``zero``, ``gaussian:1.0``, ``uniform:0.5``, ``rademacher:1`` or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        return BiasSpec.from_dict(json.loads(text))
    kind, _, arg = text.partition(":")
    param = {"gaussian": "sigma", "uniform": "m", "rademacher": "scale", "constant": "value"}.get(kind)
    if arg and param is None:
        raise ConfigError(f"bias kind {kind!r} takes no parameter")
    return BiasSpec(kind=kind, **({param: float(arg)} if arg else {}))


def parse_vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")], dtype=np.float64)


def _load_config(path) -> dict:
    if path is None:
        return {}
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    return obj


def _merge(args, cfg: dict, keys: dict) -> dict:
    """Explicit flags win over config entries, which win over defaults."""
    unknown = set(cfg) - set(keys)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, default in keys.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _threads(args) -> int:
    return args.threads if getattr(args, "threads", None) else default_threads()


# -- subcommands -------------------------------------------------------------------


def cmd_gen(args):
    cfg = _load_config(args.config)
    if "bias" in cfg and not isinstance(cfg["bias"], str):
        cfg["bias"] = json.dumps(cfg["bias"])
    m = _merge(args, cfg, {"d": None, "N": None, "L": None, "bias": "zero", "seed": 0})
    if None in (m["d"], m["N"], m["L"]):
        raise ConfigError("gen needs --d, --N and --L (flags or config)")
    init = InitConfig(int(m["d"]), int(m["N"]), int(m["L"]), parse_bias(str(m["bias"])), int(m["seed"]))
    net = sample_network(init)
    if args.out:
        net.save(args.out)
        print(f"wrote {args.out} (d={init.d}, N={init.N}, L={init.L})", file=sys.stderr)
    else:
        print(net.to_json())
    return EXIT_OK


def _points(args, net):
    if not args.x:
        raise ConfigError("give at least one --x point")
    pts = [parse_vector(x) for x in args.x]
    for p in pts:
        if p.shape != (net.d,):
            raise ConfigError(f"point {p.tolist()} has length {p.shape[0]}, network expects d={net.d}")
    return pts


def cmd_eval(args):
    net = NetworkParams.load(args.net)
    rows = []
    for x in _points(args, net):
        value, trace = forward(net, x)
        rows.append({"x": x.tolist(), "value": value, "pattern": str(trace.pattern),
                     "boundary_margin": trace.boundary_margin})
    _emit(rows[0] if len(rows) == 1 else rows, args.out)
    return EXIT_OK


def cmd_grad(args):
    net = NetworkParams.load(args.net)
    rows = []
    for x in _points(args, net):
        g, margin = gradient_at(net, x)
        rows.append({"x": x.tolist(), "gradient": g.tolist(), "norm": float(np.linalg.norm(g)),
                     "boundary_margin": margin, "differentiable": margin > 0})
    _emit(rows[0] if len(rows) == 1 else rows, args.out)
    return EXIT_OK


def cmd_lip_exact(args):
    net = NetworkParams.load(args.net)
    budget = Budget(max_lps=args.budget_lps, max_seconds=args.budget_seconds)
    res = exact_lipschitz(net, sup_all=args.sup_all, budget=budget)
    _emit(res.to_dict(), args.out)
    print(f"lip = {res.lip:.12g} over {res.full_dim_region_count} regions ({res.lp_calls} LPs)", file=sys.stderr)
    return EXIT_OK


def cmd_lip_estimate(args):
    net = NetworkParams.load(args.net)
    cfg = EstimateConfig(args.samples, args.law, args.radius, args.hill_climb, args.seed)
    sb = sampled_lip_detail(net, cfg)
    breakdown = {"sampled": sb.value, "samples_used": sb.n_used}
    best, pattern = sb.value, sb.pattern
    if cfg.hill_climb_steps > 0 and sb.point is not None:
        hc = pattern_hill_climb(net, sb.point, cfg.hill_climb_steps, seed=cfg.seed)
        breakdown["hill_climb"] = hc.grad_norm
        breakdown["hill_climb_steps_taken"] = len(hc.history) - 1
        if hc.grad_norm > best:
            best, pattern = hc.grad_norm, hc.pattern
    _emit({"lower_bound": best, "best_pattern": None if pattern is None else str(pattern),
           "method_breakdown": breakdown}, args.out)
    return EXIT_OK


BOUND_CHOICES = {
    "shallow-upper": (bd.shallow_upper, ("d", "N", "u", "t")),
    "shallow-upper-simple": (bd.shallow_upper_simple, ("d", "N")),
    "shallow-expectation": (bd.shallow_expectation, ("d", "N")),
    "deep-upper": (bd.deep_upper, ("d", "N", "L", "u", "t")),
    "deep-upper-convenience": (bd.deep_upper_convenience, ("d", "N", "L")),
    "deep-upper-main": (bd.deep_upper_main, ("d", "N", "L")),
    "deep-upper-expectation": (bd.deep_upper_expectation, ("d", "N", "L")),
    "deep-upper-expectation-main": (bd.deep_upper_expectation_main, ("d", "N", "L")),
    "shallow-lower": (bd.shallow_lower, ("d", "N", "u", "t")),
    "shallow-lower-convenience": (bd.shallow_lower_convenience, ("d", "N")),
    "shallow-lower-main": (bd.shallow_lower_main, ("d", "N")),
    "deep-lower": (bd.deep_lower, ("d", "N", "L", "u", "t")),
    "deep-lower-convenience": (bd.deep_lower_convenience, ("d", "N", "L")),
    "deep-lower-main": (bd.deep_lower_main, ("d", "N", "L")),
    "covering-shallow": None,
    "covering-deep": None,
    "dudley-shallow": None,
    "dudley-deep": None,
}


def _number(name, v):
    if name in ("u", "t"):
        return float(v)
    if name == "N" and str(v) == "inf":
        return math.inf
    return int(v)


def cmd_bounds(args):
    cfg = _load_config(args.config)
    consts_in = cfg.pop("constants", {})
    keys = {"which": None, "d": None, "N": None, "L": 1, "u": 0.0, "t": 0.0, "eps": None, "normW0": None,
            "k": None, "Lambda": None}
    m = _merge(args, cfg, keys)
    if m["which"] not in BOUND_CHOICES:
        raise ConfigError(f"--which must be one of {sorted(BOUND_CHOICES)}")
    consts = bd.BoundConstants(**{**consts_in, **{
        name: getattr(args, name) for name in ("C_upper", "c1", "C_lower", "c", "C_iso", "C_cov")
        if getattr(args, name) is not None}})
    if args.C is not None:
        consts = bd.BoundConstants(**{**consts.to_dict(), "C_upper": args.C, "C_lower": args.C})
    which = m["which"]

    def need(*names):
        missing = [n for n in names if m[n] is None]
        if missing:
            raise ConfigError(f"--which {which} needs {', '.join('--' + n for n in missing)}")
        return [m[n] for n in names]

    prob = None
    if which == "covering-shallow":
        normW0, k, eps = need("normW0", "k", "eps")
        value = bd.covering_bound_shallow(float(normW0), int(k), float(eps), consts.C_cov)
    elif which == "covering-deep":
        lam, d, N, L, eps = need("Lambda", "d", "N", "L", "eps")
        value = bd.covering_bound_deep(float(lam), int(d), int(N), int(L), float(eps))
    elif which == "dudley-shallow":
        normW0, k = need("normW0", "k")
        value = bd.dudley_entropy_integral(bd.shallow_log_covering(float(normW0), int(k), consts.C_cov), float(normW0))
    elif which == "dudley-deep":
        lam, d, N, L = need("Lambda", "d", "N", "L")
        bd._check_deep_width(int(d), int(N))
        value = bd.dudley_entropy_integral(bd.deep_log_covering(float(lam), int(d), int(N), int(L)), float(lam))
    else:
        fn, names = BOUND_CHOICES[which]
        vals = need(*names)
        out = fn(*[_number(n, v) for n, v in zip(names, vals)], k=consts)
        value, prob = out if isinstance(out, tuple) else (out, None)
    _emit({"which": which, "value": value, "prob_lower_bound": prob, "constants": consts.to_dict()}, args.out)
    return EXIT_OK


def _run_report(rep, out_dir):
    for c in rep.checks:
        print(c.line(), file=sys.stderr)
    if out_dir:
        rep.write(out_dir)
        print(f"wrote {out_dir}/rows.csv and summary.json", file=sys.stderr)
    else:
        _emit(rep.summary())
    return EXIT_OK if rep.passed else EXIT_ASSERT


def cmd_experiment(args):
    if args.name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {args.name!r}; choose from {sorted(EXPERIMENTS)}")
    fn = EXPERIMENTS[args.name]
    cfg = _load_config(args.config)
    params = inspect.signature(fn).parameters
    unknown = set(cfg) - set(params)
    if unknown:
        raise ConfigError(f"unknown config keys for {args.name}: {sorted(unknown)}")
    if args.seed is not None:
        if "seed" not in params:
            raise ConfigError(f"{args.name} takes no seed")
        cfg["seed"] = args.seed
    if "threads" in params:
        cfg["threads"] = _threads(args)
    try:
        rep = fn(**cfg)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return _run_report(rep, args.out)


def cmd_counterexamples(args):
    rep = counterexample_suite(n_random=args.n_random, seed=args.seed or 0, threads=_threads(args))
    for c in rep.checks:
        print(c.line())
    if args.out:
        rep.write(args.out)
    return EXIT_OK if rep.passed else EXIT_ASSERT


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liplab", description="Lipschitz constants of random ReLU networks")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="sample a network under the He-type initialization")
    g.add_argument("--d", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--L", type=int)
    g.add_argument("--bias", help="zero | gaussian:SIGMA | uniform:M | rademacher:SCALE | JSON")
    g.add_argument("--seed", type=int)
    g.add_argument("--config")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    for name, func, help_ in (("eval", cmd_eval, "evaluate Phi"), ("grad", cmd_grad, "gradient at points")):
        e = sub.add_parser(name, help=help_)
        e.add_argument("--net", required=True)
        e.add_argument("--x", action="append", help="comma-separated point; repeatable")
        e.add_argument("--out")
        e.set_defaults(func=func)

    x = sub.add_parser("lip-exact", help="exact Lipschitz constant by region enumeration")
    x.add_argument("--net", required=True)
    x.add_argument("--sup-all", action="store_true", help="also the sup over all realizable patterns")
    x.add_argument("--budget-lps", type=int, default=1_000_000)
    x.add_argument("--budget-seconds", type=float, default=60.0)
    x.add_argument("--out")
    x.set_defaults(func=cmd_lip_exact)

    s = sub.add_parser("lip-estimate", help="sampled lower bound refined by hill climbing")
    s.add_argument("--net", required=True)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--law", default="gaussian", choices=("gaussian", "sphere", "ball", "multiscale_ball"))
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--hill-climb", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_lip_estimate)

    b = sub.add_parser("bounds", help="evaluate a closed-form bound")
    b.add_argument("--which")
    b.add_argument("--d", type=int)
    b.add_argument("--N")
    b.add_argument("--L", type=int)
    b.add_argument("--u", type=float)
    b.add_argument("--t", type=float)
    b.add_argument("--eps", type=float)
    b.add_argument("--normW0", type=float)
    b.add_argument("--k", type=int)
    b.add_argument("--Lambda", type=float)
    b.add_argument("--C", type=float, help="sets both C_upper and C_lower")
    for name in ("C_upper", "c1", "C_lower", "c", "C_iso", "C_cov"):
        b.add_argument(f"--{name}", type=float)
    b.add_argument("--config")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    ex = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    ex.add_argument("name")
    ex.add_argument("--config")
    ex.add_argument("--out")
    ex.add_argument("--seed", type=int)
    ex.add_argument("--threads", type=int)
    ex.set_defaults(func=cmd_experiment)

    c = sub.add_parser("counterexamples", help="the fixed constructions plus random shallow nets")
    c.add_argument("--n-random", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threads", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_counterexamples)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * args.verbose, stream=sys.stderr)
        return args.func(args)
    except (BudgetExceeded, IndeterminateError, ArithmeticError) as exc:
        print(f"liplab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, HypothesisError, bd.BoundPreconditionError, ShapeError, ValueError, KeyError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"liplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
