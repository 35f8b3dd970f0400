"""Command-line interface.

Subcommands: fit, project, certificate, benchmark, plot. Every command that
writes artifacts also writes a manifest.json with enough detail to rerun it.
Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure
(non-convergence or degeneracy).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, core, evaluation, io, kernel, svg
from .exceptions import DataError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

METHOD_CHOICES = ("cqs", "cas", "kcqs", "kcas", "pca", "kpca", "fld", "kfld")


def _add_data_args(p):
    p.add_argument("--data", required=True, help="input CSV file")
    p.add_argument("--label-col", default="last",
                   help="label column: 0-based index or 'last' (default)")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--delimiter", default=None,
                   help="override delimiter auto-detection")


def _add_fit_args(p):
    p.add_argument("--method", required=True, choices=METHOD_CHOICES)
    p.add_argument("--kernel", choices=("rbf", "linear", "polynomial"),
                   default="rbf", help="kernel family for kernel methods")
    p.add_argument("--sigma", type=float, default=0.4, help="rbf width")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="smoothing for the abs variant")
    p.add_argument("--delta", type=float, default=1e-8,
                   help="Frobenius-change stopping threshold")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    zs = p.add_mutually_exclusive_group()
    zs.add_argument("--zscore", dest="zscore", action="store_true", default=None)
    zs.add_argument("--no-zscore", dest="zscore", action="store_false")


def _load(args):
    header = {"auto": "auto", "yes": True, "no": False}[args.header]
    label_col = args.label_col
    if label_col != "last":
        label_col = int(label_col)
    return io.load_csv(args.data, label_col=label_col, header=header,
                       delimiter=args.delimiter)


def _resolve_zscore(method, flag):
    if flag is not None:
        return flag
    return method in evaluation.KERNEL_METHODS


def _fit_model(data, args):
    method = args.method
    zscore = _resolve_zscore(method, args.zscore)
    cfg = core.FitConfig(
        variant="abs" if method in ("cas", "kcas") else "quad",
        epsilon=args.epsilon,
        delta=args.delta,
        max_iter=args.max_iter,
        seed=args.seed,
        zscore=zscore,
    )
    spec = kernel.KernelSpec(kind=args.kernel, sigma=args.sigma,
                             degree=args.degree, offset=args.offset)
    x = data.X
    if zscore and method not in ("cqs", "cas", "kcqs", "kcas"):
        # Baselines have no internal standardization; bake it into the data.
        mean, scale = core.zscore_params(x)
        data = core.Dataset((x - mean) / scale, data.y, label_names=data.label_names)
    if method in ("cqs", "cas"):
        return core.fit_linear(data, cfg)
    if method in ("kcqs", "kcas"):
        return kernel.fit_kernel(data, spec, cfg)
    if method == "pca":
        return baselines.pca_fit(data, min(data.n_classes, data.n_features))
    if method == "kpca":
        return baselines.kpca_fit(data, spec, data.n_classes)
    if method == "fld":
        return baselines.fld_fit(data)
    return baselines.kfld_fit(data, spec)


def _manifest_params(args, keys):
    return {k: getattr(args, k.replace("-", "_")) for k in keys}


def cmd_fit(args):
    data = _load(args)
    model = _fit_model(data, args)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.bin")
    io.save_model(model_path, model)
    io.write_manifest(args.out, "fit", {
        "data": args.data, "label_col": args.label_col, "header": args.header,
        "delimiter": args.delimiter, "method": args.method,
        "kernel": args.kernel, "sigma": args.sigma, "degree": args.degree,
        "offset": args.offset, "epsilon": args.epsilon, "delta": args.delta,
        "max_iter": args.max_iter, "seed": args.seed, "zscore": args.zscore,
        "outputs": ["model.bin"], "label_names": list(data.label_names or ()),
    })
    converged = getattr(model, "converged", True)
    degenerate = getattr(model, "degenerate", False)
    trace = getattr(model, "objective_trace", None)
    print(f"model written to {model_path}")
    if trace is not None and len(trace):
        print(f"iterations {getattr(model, 'n_iter', len(trace))} "
              f"final_objective {trace[-1]:.10g}")
    if not converged:
        print("warning: did not converge within max-iter", file=sys.stderr)
        return EXIT_NUMERIC
    if degenerate:
        print("warning: degenerate update encountered", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_project(args):
    data = _load(args)
    model = io.load_model(args.model)
    coords = model.project(data.X)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "projections.tsv")
    with open(out_path, "w", encoding="utf-8") as fh:
        names = data.label_names or tuple(str(k) for k in range(data.n_classes))
        fh.write("\t".join(f"axis{j}" for j in range(coords.shape[1])) + "\tlabel\n")
        for row, lab in zip(coords, data.y):
            fh.write("\t".join(repr(float(v)) for v in row) + f"\t{names[lab]}\n")
    io.write_manifest(args.out, "project", {
        "data": args.data, "model": args.model, "label_col": args.label_col,
        "header": args.header, "delimiter": args.delimiter,
        "outputs": ["projections.tsv"],
    })
    print(f"projections written to {out_path}")
    return EXIT_OK


def cmd_certificate(args):
    data = _load(args)
    model = io.load_model(args.model)
    if isinstance(model, core.LinearModel):
        if model.variant != "quad":
            raise NumericalError("certificate applies to the quadratic variant only")
        x = data.X
        if model.feature_mean is not None:
            x = (x - model.feature_mean) / model.feature_scale
        std_data = core.Dataset(x, data.y, label_names=data.label_names)
        report = core.certificate_check(model.axes, std_data, tol=args.tol)
    elif isinstance(model, kernel.KernelModel):
        report = kernel.kernel_certificate(model, data, tol=args.tol)
    else:
        raise DataError("certificate requires a category-space model (cqs or kcqs)")
    lines = [
        f"first_order_residual {report.first_order_residual:.6e}",
        f"tangent_max_eig {report.tangent_max_eig:.6e}",
        f"full_max_eig {report.full_max_eig:.6e}",
        f"tol {report.tol:.6e}",
        f"is_second_order_necessary {str(report.is_second_order_necessary).lower()}",
        f"is_global_certified {str(report.is_global_certified).lower()}",
    ]
    print("\n".join(lines))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "certificate.json"), "w", encoding="utf-8") as fh:
            json.dump({
                "first_order_residual": report.first_order_residual,
                "tangent_max_eig": report.tangent_max_eig,
                "full_max_eig": report.full_max_eig,
                "tol": report.tol,
                "is_second_order_necessary": report.is_second_order_necessary,
                "is_global_certified": report.is_global_certified,
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
        io.write_manifest(args.out, "certificate", {
            "data": args.data, "model": args.model, "tol": args.tol,
            "outputs": ["certificate.json"],
        })
    return EXIT_OK


def cmd_benchmark(args):
    datasets = []
    for item in args.data:
        name, _, path = item.partition("=")
        if not path:
            raise DataError(f"--data expects name=path, got {item!r}")
        loaded = io.load_csv(path, label_col="last" if args.label_col == "last" else int(args.label_col),
                             header={"auto": "auto", "yes": True, "no": False}[args.header])
        datasets.append((name, loaded))
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for token in methods:
        base, classifier = evaluation.parse_method_token(token)
        if base not in METHOD_CHOICES:
            raise DataError(f"unknown method {token!r}")
        if classifier == "angle" and base not in evaluation.ANGLE_CAPABLE:
            raise DataError(f"angle classifier not applicable to {base!r}")
    plan = evaluation.SplitPlan(repeats=args.repeats, seed=args.seed)
    cfg = core.FitConfig(epsilon=args.epsilon, delta=args.delta,
                         max_iter=args.max_iter, seed=args.seed)
    table = evaluation.benchmark(datasets, methods, plan=plan, base_cfg=cfg,
                                 zscore=args.zscore)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "table.tsv")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(table.to_tsv())
    io.write_manifest(args.out, "benchmark", {
        "data": list(args.data), "methods": methods, "repeats": args.repeats,
        "seed": args.seed, "epsilon": args.epsilon, "delta": args.delta,
        "max_iter": args.max_iter, "zscore": args.zscore,
        "outputs": ["table.tsv"],
    })
    print(table.to_tsv(), end="")
    failures = [r for r in table.rows if r.error]
    for r in failures:
        print(f"warning: {r.dataset}/{r.method} failed: {r.error}", file=sys.stderr)
    return EXIT_OK


def cmd_plot(args):
    data = _load(args)
    model = io.load_model(args.model)
    coords = model.project(data.X)
    ax, _, ay = args.axes.partition(",")
    axes = (int(ax), int(ay))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"scatter_{axes[0]}_{axes[1]}.svg")
    names = data.label_names
    svg.emit_svg_scatter(coords, data.y, axes, out_path, class_names=names)
    io.write_manifest(args.out, "plot", {
        "data": args.data, "model": args.model, "axes": args.axes,
        "outputs": [os.path.basename(out_path)],
    })
    print(f"plot written to {out_path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="catspace",
        description="Supervised dimensionality reduction onto orthonormal category axes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a reducer and write a model file")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("project", help="project a CSV through a fitted model")
    _add_data_args(p)
    p.add_argument("--model", required=True, help="model.bin path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("certificate", help="optimality certificate of a fitted model")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("benchmark", help="accuracy table over datasets and methods")
    p.add_argument("--data", action="append", required=True,
                   help="name=path, repeatable")
    p.add_argument("--methods", required=True,
                   help="comma-separated method tokens (append -a for angle classification)")
    p.add_argument("--label-col", default="last")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    zs = p.add_mutually_exclusive_group()
    zs.add_argument("--zscore", dest="zscore", action="store_true", default=None)
    zs.add_argument("--no-zscore", dest="zscore", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plot", help="SVG scatter of two projection components")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--axes", default="0,1", help="component pair, e.g. 0,1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
