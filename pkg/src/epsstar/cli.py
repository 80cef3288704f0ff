"""``epsstar`` command line.

Exit codes: 0 success, 2 bad input (flags, files, domain), 3 numerical or
degenerate data. Errors go to stderr as one line.
"""
from __future__ import annotations

import argparse
import collections
import sys
from pathlib import Path

import numpy as np

from . import fileio, goodness_of_fit, landscape, mechanism_audit, simulation
from .config import METHODS, AuditConfig, auto_delta, check_delta
from .epsilon_core import default_t_grid, epsilon_star_audit
from .errors import DomainError, EpsStarError, InputError, NumericalError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _delta_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"delta must be a number or 'auto', got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ".." in part or "-" in part[1:]:
                lo, hi = part.replace("..", "-").split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(float(part)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or ranges like 1..5, got {text!r}") from None
    return out


def _out_path(arg, default_name: str) -> Path:
    return Path(arg) if arg else fileio.default_output_dir() / default_name


def _resolve_delta(delta, n_train: int) -> float:
    return auto_delta(n_train) if delta == "auto" else check_delta(delta)


def cmd_audit(args) -> int:
    kind = args.kind or "auto"
    train = fileio.read_losses(args.train, kind, clip=not args.no_clip)
    pop = fileio.read_losses(args.pop, kind, clip=not args.no_clip)
    cfg = AuditConfig(delta=args.delta, method=args.method, grid_size=args.grid_size,
                      alpha_shift=args.alpha, clip_predictions=not args.no_clip, seed=args.seed)
    res = epsilon_star_audit(train, pop, cfg)
    doc = res.to_dict()
    doc["provenance"] = fileio.provenance("audit", cfg.to_dict(), {"seed": args.seed},
                                          inputs={"train": args.train, "pop": args.pop})
    path = fileio.write_json(_out_path(args.out, "audit.json"), doc)
    print(f"epsilon_star = {res.epsilon_star!r} (delta = {res.delta!r}, method = {res.method}) -> {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = simulation.SimConfig(
        k1=args.k1, theta1=args.theta1, d_values=tuple(args.d_list), n_values=tuple(args.n_list),
        repeats=args.repeats, delta=args.delta, seed=args.seed, ecdf_grid=args.ecdf_grid,
    )
    result = simulation.run_shift_experiment(cfg, workers=args.workers)
    out_dir = Path(args.out_dir) if args.out_dir else fileio.default_output_dir()
    fileio.atomic_write(out_dir / "simulation_rows.csv", simulation.rows_to_csv(result))
    props = simulation.check_properties(result)
    summary = {
        "config": cfg.to_dict(),
        "summary": result.summary(),
        "true_cdf": {repr(d): simulation.true_epsilon_star_gamma(cfg.k1, cfg.theta1, d, cfg.delta)
                     for d in cfg.d_values},
        "properties": props,
        "provenance": fileio.provenance("simulate", cfg.to_dict(), {"seed": cfg.seed}),
    }
    fileio.write_json(out_dir / "simulation_summary.json", summary)
    if args.svg:
        fileio.atomic_write(out_dir / "simulation.svg", simulation.render_svg(result))
    failed = [k for k, v in props.items() if not v]
    print(f"{len(result.rows)} rows -> {out_dir}; {len(props) - len(failed)}/{len(props)} properties hold")
    for k in failed:
        print(f"  property does not hold: {k}")
    return EXIT_OK


def _load_pairs(manifest, args):
    kind = args.kind or "auto"
    return [(fileio.read_losses(e.train, kind, clip=not args.no_clip),
             fileio.read_losses(e.pop, kind, clip=not args.no_clip)) for e in manifest.entries]


def cmd_mechanism(args) -> int:
    manifest = fileio.read_manifest(args.manifest)
    pairs = _load_pairs(manifest, args)
    # auto delta follows the smallest training set so no instance is under-protected
    n_min = min(len(tr) for tr, _ in pairs)
    delta = _resolve_delta(args.delta, n_min)
    grid = default_t_grid(args.grid_size, delta)
    ens = mechanism_audit.ensemble_from_losses(pairs, grid, args.alpha)
    per = mechanism_audit.per_model_epsilon_star(ens, delta)
    eps_bar = mechanism_audit.epsilon_bar(ens, delta)
    bound, holds = mechanism_audit.jensen_check(per, eps_bar)
    config = {"delta": args.delta, "grid_size": args.grid_size, "alpha_shift": args.alpha,
              "clip_predictions": not args.no_clip}
    doc = {
        "eps_bar": eps_bar,
        "delta": delta,
        "per_model": [{"model_id": e.model_id, "epsilon_star": v} for e, v in zip(manifest.entries, per)],
        "jensen_bound": bound,
        "holds": holds,
        "n_models": ens.n_models,
        "provenance": fileio.provenance("mechanism", config, {},
                                        inputs={"manifest": args.manifest}),
    }
    path = fileio.write_json(_out_path(args.out, "mechanism.json"), doc)
    print(f"eps_bar = {eps_bar!r}, jensen bound = {bound!r}, holds = {holds} -> {path}")
    return EXIT_OK


def cmd_ksfit(args) -> int:
    losses = fileio.read_losses(args.losses, args.kind or "auto", clip=not args.no_clip)
    reports = goodness_of_fit.fit_quality_sweep(losses, args.components, args.n_samples, args.seed)
    path = fileio.atomic_write(_out_path(args.out, "ksfit.csv"), goodness_of_fit.sweep_to_csv(reports))
    passing = sum(r.passes_alpha for r in reports)
    print(f"{len(reports)} fits, {passing} with p > {goodness_of_fit.ALPHA} -> {path}")
    return EXIT_OK


def cmd_landscape(args) -> int:
    manifest = fileio.read_manifest(args.manifest)
    if any(e.utility is None for e in manifest.entries):
        raise DomainError("every landscape manifest entry needs a utility")
    pairs = _load_pairs(manifest, args)
    groups: dict = collections.OrderedDict()
    for e, (tr, po) in zip(manifest.entries, pairs):
        cfg = AuditConfig(delta=args.delta, method=args.method, alpha_shift=args.alpha)
        eps = epsilon_star_audit(tr, po, cfg).epsilon_star
        g = groups.setdefault(e.strategy, {"eps": [], "util": [], "tags": {}})
        g["eps"].append(eps)
        g["util"].append(e.utility)
        g["tags"].update({k: v for k, v in e.tags.items() if k != "strategy"})
    points = [landscape.StrategyPoint.from_repeats(sid, float(np.mean(g["util"])), g["eps"], g["tags"])
              for sid, g in groups.items()]
    frontier = landscape.pareto_frontier(points, use_max=args.use_max)
    marginals = landscape.build_marginals(points) if args.format == "json" else {}
    text = landscape.emit_landscape(points, frontier, marginals, args.format)
    path = fileio.atomic_write(_out_path(args.out, f"landscape.{args.format}"), text)
    print(f"{len(points)} strategies, frontier {list(frontier.dominance_set)}, "
          f"hull {list(frontier.hull_set)} -> {path}")
    return EXIT_OK


def _add_loss_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--losses", dest="kind", action="store_const", const="losses",
                   help="input files hold one 'loss' column")
    g.add_argument("--predictions", dest="kind", action="store_const", const="predictions",
                   help="input files hold predictions and labels")
    p.add_argument("--no-clip", action="store_true",
                   help="reject predictions of exactly 0 or 1 instead of clipping them")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="epsstar", description="Empirical privacy auditing from loss samples.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("audit", help="Epsilon* of one model instance")
    a.add_argument("--train", required=True, help="training-set loss file")
    a.add_argument("--pop", required=True, help="population (non-training) loss file")
    a.add_argument("--delta", type=_delta_arg, default="auto", help="probability or 'auto' (default)")
    a.add_argument("--method", choices=METHODS, default="parametric")
    a.add_argument("--grid-size", type=int, default=2_000_000)
    a.add_argument("--alpha", type=float, default=1.0, help="shift before exp(-x) in the transform")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", help="report path (default: $EPSSTAR_OUTPUT_DIR/audit.json)")
    _add_loss_flags(a)
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("simulate", help="Gamma-loss validation experiment")
    s.add_argument("--k1", type=float, default=2.0)
    s.add_argument("--theta1", type=float, default=5.0)
    s.add_argument("--d-list", type=_float_list, default=[0.0, 1.0, 2.0, 3.0])
    s.add_argument("--n-list", type=_int_list, default=[1_000, 10_000, 100_000])
    s.add_argument("--repeats", type=int, default=10)
    s.add_argument("--delta", type=float, default=1e-5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--ecdf-grid", type=int, default=2_000_000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-dir", help="default: $EPSSTAR_OUTPUT_DIR or the current directory")
    s.add_argument("--svg", action="store_true", help="also write simulation.svg")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mechanism", help="ensemble bound eps_bar and the Jensen check")
    m.add_argument("--manifest", required=True)
    m.add_argument("--delta", type=_delta_arg, default="auto")
    m.add_argument("--grid-size", type=int, default=100_000)
    m.add_argument("--alpha", type=float, default=1.0)
    m.add_argument("--out")
    _add_loss_flags(m)
    m.set_defaults(func=cmd_mechanism)

    k = sub.add_parser("ksfit", help="GMM fit-quality sweep with two-sample KS tests")
    k.add_argument("--losses", dest="losses", required=True, help="loss file to fit")
    k.add_argument("--components", type=_int_list, default=list(range(1, 21)), help="e.g. 1..5 or 1,3,5")
    k.add_argument("--n-samples", type=_int_list, default=[500])
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out")
    k.add_argument("--no-clip", action="store_true")
    k.set_defaults(func=cmd_ksfit, kind=None)

    ls = sub.add_parser("landscape", help="privacy-utility landscape from a manifest")
    ls.add_argument("--manifest", required=True)
    ls.add_argument("--format", default="json", help="json, csv or svg")
    ls.add_argument("--delta", type=_delta_arg, default="auto")
    ls.add_argument("--method", choices=METHODS, default="parametric")
    ls.add_argument("--alpha", type=float, default=1.0)
    ls.add_argument("--use-max", action="store_true", help="rank by worst repeat instead of the mean")
    ls.add_argument("--out")
    _add_loss_flags(ls)
    ls.set_defaults(func=cmd_landscape)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"epsstar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"epsstar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EpsStarError as exc:
        print(f"epsstar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
