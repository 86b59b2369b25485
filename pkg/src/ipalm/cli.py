"""Command-line entry point: problem presets, sweeps, verification, synthesis.

Subcommands
-----------
``nmf`` / ``bid`` / ``convlasso``
    Run one problem (from files or the built-in synthetic desk instance)
    and write the trace plus problem-specific artifacts.
``sweep``
    Grid of runs over inertial settings; emits a checkpoint table with one
    row per setting and one column per checkpoint iteration count.
``verify``
    Standalone numerical verification battery; exit status is nonzero when
    any check reports a violation.
``synth``
    Generate the synthetic desk instances (with ground truth) as files.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import bid as bid_mod
from . import convlasso as cl_mod
from . import nmf as nmf_mod
from . import synthetic, verify
from .config import SCHEDULES, ConfigError, RunConfig, config_defaults_help, load_config
from .imageops import read_pgm, write_pgm
from .solver import run


def _fmt17(v) -> str:
    return f"{v:.17g}"


def _add_run_options(p: argparse.ArgumentParser) -> None:
    # defaults are None sentinels so that precedence is explicit flag, then
    # config file, then the built-in RunConfig defaults
    p.add_argument("--schedule", choices=SCHEDULES, default=None,
                   help="parameter regime (default: static-c)")
    p.add_argument("--alpha-bar", type=float, default=None,
                   help="extrapolation bound/value (default 0)")
    p.add_argument("--beta-bar", type=float, default=None,
                   help="gradient-point bound/value (default 0)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="descent margin (default 0)")
    p.add_argument("--iters", type=int, default=None, help="iteration budget (default 1000)")
    p.add_argument("--tol", type=float, default=None,
                   help="relative step-norm stop (default 1e-9)")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for data and initialization (default 0)")
    bt = p.add_mutually_exclusive_group()
    bt.add_argument("--backtrack", dest="backtrack", action="store_true", default=None,
                    help="estimate Lipschitz moduli by backtracking (default)")
    bt.add_argument("--exact-lipschitz", dest="backtrack", action="store_false",
                    help="use the problem's closed-form moduli")
    p.add_argument("--kernel-step-scale", type=float, default=None,
                   help="extra step-parameter multiplier for the kernel block "
                        "(bid presets default to 5)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--jobs", type=int, default=None, help="concurrent sweep cells")
    p.add_argument("--config", default=None,
                   help=f"key=value config file; defaults: {config_defaults_help()}")


def _config_from_args(args, kernel_default: float = 1.0) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    file_keys = getattr(cfg, "explicit_keys", frozenset())
    overrides = {
        key: value
        for key, value in dict(
            schedule=args.schedule,
            alpha_bar=args.alpha_bar,
            beta_bar=args.beta_bar,
            epsilon=args.epsilon,
            iters=args.iters,
            tol=args.tol,
            seed=args.seed,
            backtrack=args.backtrack,
            out=args.out,
            jobs=args.jobs,
        ).items()
        if value is not None
    }
    if args.kernel_step_scale is not None:
        overrides["kernel_step_scale"] = args.kernel_step_scale
    elif "kernel_step_scale" not in file_keys:
        overrides["kernel_step_scale"] = kernel_default
    for key, val in overrides.items():
        setattr(cfg, key, val)
    cfg.__post_init__()
    return cfg


def _write_trace(trace, cfg, label: str) -> None:
    if trace.meta.get("heuristic"):
        print(f"[{label}] heuristic mode: dynamic schedule, outside the descent theory")
    final = trace.rows[-1]
    print(f"[{label}] k={final.k} F={_fmt17(final.F)} step_norm={_fmt17(final.step_norm)}")
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, f"{label}_trace.csv")
        trace.to_csv(path)
        print(f"[{label}] trace written to {path}")
        _write_checkpoints(
            [(_setting_label(cfg), trace)], cfg.checkpoints,
            os.path.join(cfg.out, f"{label}_checkpoints.csv"),
        )


def _setting_label(cfg: RunConfig) -> str:
    if cfg.schedule == "dynamic":
        return "dynamic"
    return f"{cfg.schedule} alpha=beta={cfg.alpha_bar:g}/{cfg.beta_bar:g}"


def _write_checkpoints(labeled_traces, checkpoints, path) -> None:
    """Objective values at checkpoint iterations; cells for checkpoints the
    run never reached stay empty.  The wall-time column is informational
    only (hardware-dependent, never asserted against)."""
    header = "setting," + ",".join(f"K{k}" for k in checkpoints) + ",time_s"
    lines = [header]
    for label, trace in labeled_traces:
        cells = [label]
        for k in checkpoints:
            cells.append(_fmt17(trace.rows[k].F) if k < len(trace.rows) else "")
        cells.append(f"{trace.rows[-1].seconds:.2f}")
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"checkpoint table written to {path}")


def _load_nmf(args):
    if args.data:
        A = nmf_mod.load_matrix_csv(args.data)
        shape = None
    elif args.pgm_dir:
        A, shape = nmf_mod.load_pgm_dir(args.pgm_dir)
    else:
        A = synthetic.synth_nmf(seed=args.seed)["A"]
        shape = None
    return A, shape


def _drive(problem, x0, cfg):
    """One solver run keeping the final iterate (traces store scalars only)."""
    from .config import block_kinds
    from .solver import make_state, run_state

    state = make_state(
        problem, x0, block_kinds(problem, cfg),
        backtracking=cfg.backtrack, bt_growth=cfg.bt_growth, bt_shrink=cfg.bt_shrink,
        bt_max_rounds=cfg.bt_max_rounds, bt_L0=cfg.bt_l0,
        step_scale=cfg.resolved_step_scale(problem.num_blocks),
        constant_delta=cfg.constant_delta,
    )
    state.trace.meta.update({"schedule": cfg.schedule, "seed": cfg.seed,
                             "problem": problem.name})
    run_state(state, problem, cfg.iters, cfg.tol)
    return state.trace, state.x_cur


def cmd_nmf(args) -> int:
    cfg = _config_from_args(args)
    A, image_shape = _load_nmf(args)
    m = A.shape[0]
    s = args.s_count if args.s_count is not None else max(1, round(args.s_percent / 100.0 * m))
    problem = nmf_mod.make_nmf_problem(A, r=args.rank, s=s)
    x0 = nmf_mod.init_nmf(A, r=args.rank, s=s, seed=cfg.seed)
    trace, final = _drive(problem, x0, cfg)
    _write_trace(trace, cfg, "nmf")
    if cfg.out and image_shape is not None:
        nmf_mod.dump_basis_pgm(final[0], image_shape, os.path.join(cfg.out, "basis"))
    return 0


def cmd_bid(args) -> int:
    cfg = _config_from_args(args, kernel_default=5.0)
    if args.image:
        f = read_pgm(args.image)
    else:
        f = synthetic.synth_bid(seed=args.seed)["f"]
    ks = args.kernel_size
    params = bid_mod.BidParams(
        lam=args.lam, theta=args.theta, kernel_shape=(ks, ks),
        kernel_step_scale=cfg.kernel_step_scale,
    )
    problem = bid_mod.make_bid_problem(f, params, exact_lipschitz=not cfg.backtrack)
    cfg.step_scale = (1.0, params.kernel_step_scale)
    x0 = bid_mod.init_bid(f, params)
    trace, final = _drive(problem, x0, cfg)
    _write_trace(trace, cfg, "bid")
    if cfg.out:
        write_pgm(os.path.join(cfg.out, "bid_image.pgm"), final[0])
        write_pgm(os.path.join(cfg.out, "bid_kernel.pgm"), final[1])
    return 0


def cmd_convlasso(args) -> int:
    cfg = _config_from_args(args)
    if args.image:
        f = read_pgm(args.image)
    else:
        f = synthetic.synth_convlasso(seed=args.seed)["f"]
    problem = cl_mod.make_convlasso_problem(
        f, p=args.filters, l=args.filter_size, lam=args.lasso_weight,
        exact_lipschitz=not cfg.backtrack,
    )
    x0 = cl_mod.init_convlasso(f, p=args.filters, l=args.filter_size, seed=cfg.seed)
    trace, final = _drive(problem, x0, cfg)
    _write_trace(trace, cfg, "convlasso")
    if cfg.out:
        g = cl_mod.gaussian_filter(args.filter_size, args.filter_size / 4.0)
        cl_mod.dump_outputs(final, f, g, cfg.out)
    return 0


def _sweep_cell(problem_kind, alpha, schedule, args):
    """One sweep cell, isolated so cells can run concurrently."""
    ns = argparse.Namespace(**vars(args))
    ns.schedule = schedule
    ns.alpha_bar = alpha
    ns.beta_bar = alpha
    cfg = _config_from_args(ns, kernel_default=5.0 if problem_kind == "bid" else 1.0)
    cfg.out = None
    if problem_kind == "nmf":
        inst = synthetic.synth_nmf(seed=cfg.seed)
        problem = nmf_mod.make_nmf_problem(inst["A"], r=3, s=2)
        x0 = nmf_mod.init_nmf(inst["A"], r=3, s=2, seed=cfg.seed)
    elif problem_kind == "bid":
        inst = synthetic.synth_bid(seed=cfg.seed)
        params = bid_mod.BidParams(kernel_shape=(7, 7), kernel_step_scale=cfg.kernel_step_scale)
        problem = bid_mod.make_bid_problem(inst["f"], params, exact_lipschitz=not cfg.backtrack)
        cfg.step_scale = (1.0, params.kernel_step_scale)
        x0 = bid_mod.init_bid(inst["f"], params)
    else:
        inst = synthetic.synth_convlasso(seed=cfg.seed)
        problem = cl_mod.make_convlasso_problem(
            inst["f"], p=8, l=5, lam=0.2, exact_lipschitz=not cfg.backtrack
        )
        x0 = cl_mod.init_convlasso(inst["f"], p=8, l=5, seed=cfg.seed)
    label = "dynamic" if schedule == "dynamic" else f"alpha=beta={alpha:g}"
    return label, run(problem, x0, cfg)


def cmd_sweep(args) -> int:
    alphas = [float(a) for a in args.alphas.split(",") if a.strip() != ""]
    cells = [(args.problem, a, args.schedule, args) for a in alphas]
    if args.include_dynamic:
        cells.append((args.problem, 0.0, "dynamic", args))
    jobs = max(1, args.jobs or 1)
    if jobs == 1:
        results = [_sweep_cell(*cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_cell, *cell) for cell in cells]
            results = [f.result() for f in futures]  # grid order preserved
    checkpoints = tuple(int(c) for c in args.checkpoints.split(","))
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    _write_checkpoints(results, checkpoints, os.path.join(out_dir, "sweep_checkpoints.csv"))
    return 0


def cmd_verify(args) -> int:
    reports = verify.run_battery(
        seed=args.seed, trials=args.trials, points=args.points, out_dir=args.out
    )
    bad = 0
    for rep in reports:
        print(rep.summary())
        bad += len(rep.violations)
    return 1 if bad else 0


def cmd_synth(args) -> int:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    if args.problem == "nmf":
        inst = synthetic.synth_nmf(seed=args.seed)
        for key in ("A", "B_true", "C_true"):
            nmf_mod.save_matrix_csv(os.path.join(out, f"nmf_{key}.csv"), inst[key])
    elif args.problem == "bid":
        inst = synthetic.synth_bid(seed=args.seed)
        write_pgm(os.path.join(out, "bid_f.pgm"), inst["f"])
        write_pgm(os.path.join(out, "bid_u_true.pgm"), inst["u_true"])
        nmf_mod.save_matrix_csv(os.path.join(out, "bid_b_true.csv"), inst["b_true"])
    else:
        inst = synthetic.synth_convlasso(seed=args.seed)
        write_pgm(os.path.join(out, "convlasso_f.pgm"), inst["f"])
    print(f"synthetic {args.problem} instance written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipalm",
        description="Inertial proximal alternating linearized minimization runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nmf", help="column-sparse nonnegative matrix factorization")
    _add_run_options(p)
    p.add_argument("--data", default=None, help="CSV data matrix (no header)")
    p.add_argument("--pgm-dir", default=None, help="directory of PGM images as columns")
    p.add_argument("--rank", type=int, default=25, help="number of basis columns")
    sp = p.add_mutually_exclusive_group()
    sp.add_argument("--s-percent", type=float, default=33.0,
                    help="nonzeros per basis column, percent of rows")
    sp.add_argument("--s-count", type=int, default=None, help="nonzeros per basis column")
    p.set_defaults(func=cmd_nmf)

    p = sub.add_parser("bid", help="blind image deconvolution")
    _add_run_options(p)
    p.add_argument("--image", default=None, help="blurry PGM image")
    p.add_argument("--kernel-size", type=int, default=31, help="odd kernel side length")
    p.add_argument("--lam", type=float, default=1e6, help="data term weight")
    p.add_argument("--theta", type=float, default=1e4, help="edge penalty shape")
    p.set_defaults(func=cmd_bid)

    p = sub.add_parser("convlasso", help="convolutional dictionary learning")
    _add_run_options(p)
    p.add_argument("--image", default=None, help="PGM image to factorize")
    p.add_argument("--filters", type=int, default=81, help="dictionary size (incl. fixed)")
    p.add_argument("--filter-size", type=int, default=9, help="odd filter side length")
    p.add_argument("--lasso-weight", type=float, default=0.2, help="l1 penalty weight")
    p.set_defaults(func=cmd_convlasso)

    p = sub.add_parser("sweep", help="grid over inertial settings, checkpoint table out")
    _add_run_options(p)
    p.add_argument("--problem", choices=("nmf", "bid", "convlasso"), default="nmf")
    p.add_argument("--alphas", default="0,0.2,0.4",
                   help="comma-separated alpha=beta settings")
    p.add_argument("--include-dynamic", action="store_true",
                   help="append a dynamic-schedule row")
    p.add_argument("--checkpoints", default="100,500,1000,5000",
                   help="comma-separated checkpoint iteration counts")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="numerical verification battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000, help="proximal-bound trials")
    p.add_argument("--points", type=int, default=10000, help="step-rule grid points")
    p.add_argument("--out", default=None, help="directory for per-check CSV reports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="write synthetic desk instances")
    p.add_argument("--problem", choices=("nmf", "bid", "convlasso"), default="nmf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
