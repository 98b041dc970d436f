"""Command-line interface.

Subcommands: run-fw, run-lasso, run-sparse-linear, run-sparse-opt, gen-data,
baseline. Exit codes: 0 success, 2 configuration error, 3 data error,
4 privacy budget error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .core import DataError, RandomStream
from .datagen import (
    FeatureDistribution,
    NoiseDistribution,
    gen_linear,
    gen_logistic,
    gen_wstar_l1,
    gen_wstar_sparse,
    load_csv,
    save_csv,
)
from .harness import (
    ExperimentConfig,
    emit_plot_series,
    polytope_baseline,
    run_experiment,
    sparse_baseline,
    write_results_csv,
)
from .losses import LossModel
from .mechanisms import BudgetExhaustedError

__all__ = ["main"]


def _int_list(text: str):
    return tuple(int(v) for v in text.split(","))


def _float_list(text: str):
    return tuple(float(v) for v in text.split(","))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_int_list, default=(10000,), help="comma-separated sample sizes")
    p.add_argument("--d", type=_int_list, default=(100,), help="comma-separated dimensions")
    p.add_argument("--eps", type=_float_list, default=(1.0,), help="comma-separated privacy budgets")
    p.add_argument("--delta-rule", default="n^-1.1", help="delta rule: n^-1.1 or fixed:<value>")
    p.add_argument("--trials", type=int, default=20, help="repetitions per grid point")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--dist", default="lognormal:0,0.6", help="feature distribution, e.g. lognormal:0,0.6 | student_t:10 | gaussian:5 | laplace:5")
    p.add_argument("--noise", default="gaussian:0.1", help="noise distribution (or 'none'), e.g. gaussian:0.1 | lognormal:0,0.5 | loglogistic:0.1 | loggamma:0.5 | logistic:0,0.5")
    p.add_argument("--gaussian-interp", choices=("variance", "stddev"), default="variance", help="how a bare gaussian parameter is read")
    p.add_argument("--csv", default=None, help="write per-trial results to this CSV")
    p.add_argument("--plot", default=None, help="write plot-ready series to this file")
    p.add_argument("--fig", default=None, help="render the series to this image (default: alongside --plot)")
    p.add_argument("--no-fig", action="store_true", help="skip figure rendering")
    p.add_argument("--data", default=None, help="run on this CSV instead of synthetic data")
    p.add_argument("--target-col", type=int, default=0, help="response column of --data")
    p.add_argument("--max-rows", type=int, default=None, help="row cap when loading --data")
    p.add_argument("--baseline-iters", type=int, default=2000, help="iterations of the noise-free baseline solver")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htdp",
        description="Differentially private optimization benchmarks for heavy-tailed data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-fw", help="robust-gradient Frank-Wolfe over the l1 ball (pure DP)")
    _add_common(p)
    p.add_argument("--loss", choices=("squared", "logistic"), default="squared")
    p.add_argument("--reg", type=float, default=0.0, help="l2 regularisation of the logistic loss")
    p.add_argument("--radius", type=float, default=1.0, help="l1 ball radius")

    p = sub.add_parser("run-lasso", help="clamped-data Frank-Wolfe for least squares")
    _add_common(p)
    p.add_argument("--radius", type=float, default=1.0, help="l1 ball radius")

    p = sub.add_parser("run-sparse-linear", help="sparse linear regression on clamped data")
    _add_common(p)
    p.add_argument("--sstar", type=_int_list, default=(20,), help="comma-separated target sparsities")
    p.add_argument("--smult", type=int, default=2, help="working sparsity = smult * s_star")

    p = sub.add_parser("run-sparse-opt", help="sparsity-constrained optimisation with robust gradients")
    _add_common(p)
    p.add_argument("--sstar", type=_int_list, default=(20,), help="comma-separated target sparsities")
    p.add_argument("--c2", type=int, default=1, help="estimator scale multiplier (scale = c2 * n * eps)")
    p.add_argument("--loss", choices=("logistic", "squared"), default="logistic")
    p.add_argument("--reg", type=float, default=0.01, help="l2 regularisation of the logistic loss")

    p = sub.add_parser("gen-data", help="generate a synthetic dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--model", choices=("linear", "logistic"), default="linear")
    p.add_argument("--dist", default="lognormal:0,0.6")
    p.add_argument("--noise", default="gaussian:0.1")
    p.add_argument("--gaussian-interp", choices=("variance", "stddev"), default="variance")
    p.add_argument("--wstar", choices=("l1", "sparse"), default="l1")
    p.add_argument("--sstar", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("baseline", help="compute the noise-free baseline parameter for a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--target-col", type=int, default=0)
    p.add_argument("--max-rows", type=int, default=None)
    p.add_argument("--domain", choices=("l1", "sparse"), default="l1")
    p.add_argument("--loss", choices=("squared", "logistic"), default="squared")
    p.add_argument("--reg", type=float, default=0.0)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--sstar", type=int, default=20)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--out", required=True)

    return parser


def _loss_from(args, default_kind="squared") -> LossModel:
    kind = getattr(args, "loss", default_kind)
    if kind == "logistic":
        return LossModel.logistic(getattr(args, "reg", 0.0))
    return LossModel.squared()


def _run_command(args) -> int:
    name = args.command.replace("run-", "").replace("-", "_")
    noise = None if args.noise.lower() == "none" else NoiseDistribution.parse(args.noise, args.gaussian_interp)
    cfg = ExperimentConfig(
        algorithm=name,
        loss=_loss_from(args, "logistic" if name == "sparse_opt" else "squared"),
        n_grid=args.n,
        d_grid=args.d,
        eps_grid=args.eps,
        sstar_grid=getattr(args, "sstar", (0,)),
        trials=args.trials,
        seed=args.seed,
        delta_rule=args.delta_rule,
        feature_dist=FeatureDistribution.parse(args.dist, args.gaussian_interp),
        noise_dist=noise,
        data_path=args.data,
        target_column=args.target_col,
        max_rows=args.max_rows,
        radius=getattr(args, "radius", 1.0),
        smult=getattr(args, "smult", 2),
        c2=getattr(args, "c2", 1),
        baseline_iterations=args.baseline_iters,
    )
    result = run_experiment(cfg)
    for a in result.aggregates:
        point = f"n={a.n} d={a.d} eps={a.epsilon:g}"
        if cfg.algorithm in ("sparse_linear", "sparse_opt"):
            point += f" s*={a.s_star}"
        failed = f" ({a.n_failed} failed)" if a.n_failed else ""
        print(f"{point}: mean excess risk {a.mean_excess_risk:.6g} over {a.n_trials} trials{failed}")
    if args.csv:
        write_results_csv(result.records, args.csv, result.aggregates)
        print(f"wrote {args.csv}")
    if args.plot:
        emit_plot_series(result.aggregates, args.plot)
        print(f"wrote {args.plot}")
    fig_path = args.fig
    if fig_path is None and args.plot and not args.no_fig:
        fig_path = os.path.splitext(args.plot)[0] + ".png"
    if fig_path and not args.no_fig:
        from .plots import render_risk_curves

        render_risk_curves(result.aggregates, fig_path, title=cfg.algorithm)
        print(f"wrote {fig_path}")
    return 0


def _gen_data_command(args) -> int:
    stream = RandomStream(args.seed, 0)
    gen = stream.generator()
    if args.wstar == "l1":
        w_star = gen_wstar_l1(args.d, gen)
    else:
        w_star = gen_wstar_sparse(args.d, args.sstar, gen)
    feat = FeatureDistribution.parse(args.dist, args.gaussian_interp)
    noise = None if args.noise.lower() == "none" else NoiseDistribution.parse(args.noise, args.gaussian_interp)
    if args.model == "linear":
        data = gen_linear(args.n, args.d, w_star, feat, noise, gen)
    else:
        data = gen_logistic(args.n, args.d, w_star, feat, noise, gen)
    save_csv(data, args.out)
    print(f"wrote {args.out} ({data.n} rows, {data.d} features, target column {data.d})")
    return 0


def _baseline_command(args) -> int:
    data = load_csv(args.data, args.target_col, args.max_rows)
    model = LossModel.logistic(args.reg) if args.loss == "logistic" else LossModel.squared()
    if args.domain == "l1":
        w = polytope_baseline(data, model, args.radius, args.iters)
    else:
        w = sparse_baseline(data, model, args.sstar, args.iters)
    np.savetxt(args.out, w)
    from .losses import empirical_risk

    print(f"wrote {args.out}; baseline empirical risk {empirical_risk(model, w, data):.6g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "gen-data":
            return _gen_data_command(args)
        if args.command == "baseline":
            return _baseline_command(args)
        return _run_command(args)
    except BudgetExhaustedError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
