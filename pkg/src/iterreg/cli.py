"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import BoundReport, evaluate
from .errors import ConfigError, IterRegError, NumericError
from .harness.config import DEFAULT_GRID, ExperimentConfig, grid_configs
from .harness.montecarlo import build_setup, monte_carlo, rate_study, run_replicate
from .harness.reports import emit_reports
from .model import sample_noise
from .selector import estimate_noise_variance

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, workers=args.workers, out_dir=args.out)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    ns = [args.n] if args.n else list(cfg.problem.n_list)
    reports = [monte_carlo(cfg, int(n)) for n in ns]
    emit_reports(reports, cfg.run.out_dir, fmt=args.format, figures=not args.no_figures)
    for rep in reports:
        a = rep.aggregates
        print(f"n={rep.n} adaptive={a['mean_loss_adaptive']:.6g} oracle={a['mean_loss_oracle']:.6g} "
              f"ratio={a['ratio_adaptive_to_oracle']:.3f}")
    return EXIT_OK


def cmd_rates(args) -> int:
    base = _load(args)
    configs = grid_configs(base, DEFAULT_GRID) if args.grid else [base]
    for cfg in configs:
        study = rate_study(cfg)
        out = Path(cfg.run.out_dir)
        if args.grid:
            out = out / f"p{cfg.problem.p:g}_mu{cfg.problem.mu:g}"
        emit_reports(study.reports, out, rates=[study], fmt=args.format, figures=not args.no_figures,
                     config=cfg.to_dict())
        print(f"p={study.p:g} mu={study.mu:g} target={study.target_slope:.4f} "
              f"oracle={study.oracle_fit.slope:.4f}+-{study.oracle_fit.stderr:.4f} "
              f"adaptive={study.adaptive_fit.slope:.4f}+-{study.adaptive_fit.stderr:.4f}")
    return EXIT_OK


def _read_data(path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=1).reshape(-1)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read observations from {path}: {exc}") from None


def cmd_select(args) -> int:
    cfg = _load(args)
    n = args.n or int(cfg.problem.n_list[0])
    setup = build_setup(cfg, n)
    if args.data:
        y = _read_data(args.data)
        if y.size != n:
            raise ConfigError(f"observation file has {y.size} values, expected n = {n}")
        sigma2 = estimate_noise_variance(setup.problem.system, y) if cfg.penalty.sigma2 == "plugin" else None
        trace = setup.plan.select(setup.problem.system.data_coefficients(y), sigma2)
    else:
        trace = run_replicate(cfg, n, cfg.run.base_seed).trace
    out = Path(cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        doc = trace.summary()
        doc["trace"] = [dict(zip(("k", "residual_sq", "trace", "radius", "penalty", "objective"), row))
                        for row in trace.rows()]
        (out / "selection.json").write_text(json.dumps(doc, indent=1) + "\n")
    else:
        (out / "selection_trace.csv").write_text(trace.to_csv())
        (out / "selection.json").write_text(trace.to_json() + "\n")
    print(f"k_hat={trace.k_hat}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    path = args.params or args.config
    if not path:
        raise ConfigError("bounds needs a parameter file (--params or --config)")
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read bound parameters {path}: {exc}") from None
    docs = doc if isinstance(doc, list) else [doc]
    reports = [evaluate(d).to_dict() for d in docs]
    text = json.dumps(reports if isinstance(doc, list) else reports[0], indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.format == "csv":
            rows = ["kind,value"] + [f"{r['kind']},{r['value']!r}" for r in reports]
            (out / "bounds.csv").write_text("\n".join(rows) + "\n")
        (out / "bounds.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .harness.verify import run_checks

    return EXIT_OK if run_checks() else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iterreg", description="Iterative spectral regularization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override run.base_seed")
        p.add_argument("--out", help="output directory (default: run.out_dir)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    p = common(sub.add_parser("simulate", help="one Monte Carlo experiment per n"))
    p.add_argument("--n", type=int, help="run a single sample size")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("select", help="select k for one dataset and dump the trace"))
    p.add_argument("--n", type=int)
    p.add_argument("--data", help="observations, one value per line")
    p.set_defaults(func=cmd_select)

    p = common(sub.add_parser("rates", help="rate study over the n grid"))
    p.add_argument("--grid", action="store_true", help="run every (p, mu) pair of the default grid")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_rates)

    p = common(sub.add_parser("bounds", help="evaluate bounds from a parameter file"))
    p.add_argument("--params", help="JSON object or list with a 'kind' key")
    p.set_defaults(func=cmd_bounds)

    p = common(sub.add_parser("verify", help="run built-in invariant checks"))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, IterRegError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
