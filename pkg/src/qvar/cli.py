"""Command-line surface.

One subcommand per operation family; JSON reports, CSV tables and figures
are written next to the --output path.  Exit codes: 0 success, 1 input
error, 2 numeric/degeneracy error, 3 precondition violation.  Threads come
from --threads or the QVAR_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analyticity, experiments, io, semigroups
from .errors import InputError, QvarError
from .lp_model import operator_pnorm
from .variation import jump_count, oscillation_norm, vq_norm, vq_norm_bruteforce

#: Theorem presets: family kind plus default grids for the verify command.
VERIFY_PRESETS = {
    "averages": {"kind": "ergodic_averages", "truncations": (64, 256, 1024), "budget": 500},
    "powers": {"kind": "powers", "truncations": (64, 128, 256, 512), "budget": 2000},
    "differences": {"kind": "differences", "order": 1, "truncations": (64, 128, 256, 512), "budget": 500},
    "oscillation": {"kind": "ergodic_averages", "mode": "o2", "truncations": (64, 256, 1024), "budget": 500},
    "continuous-averages": {"kind": "continuous_averages", "truncations": (16, 32, 64), "budget": 500},
    "continuous-powers": {"kind": "continuous_powers", "truncations": (16, 32, 64), "budget": 500},
    "jumps": {"kind": "ergodic_averages", "truncations": (64, 256, 1024), "budget": 500},
}


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _set_threads(value):
    if value is None:
        value = os.environ.get("QVAR_THREADS")
    if value is None:
        return
    try:
        n = max(1, int(value))
    except ValueError as exc:
        raise InputError(f"bad thread count {value!r}") from exc
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _add_operator_args(p, generator=False, zoo_size_flag="--N"):
    src = p.add_argument_group("operator source")
    src.add_argument("--op", help="matrix file (CSV or JSON)")
    if generator:
        src.add_argument("--generator", help="generator matrix file (CSV or JSON)")
    src.add_argument("--weights", help="atom weights file (default: uniform)")
    src.add_argument("--zoo", help="zoo member name", choices=sorted(experiments._ZOO))
    src.add_argument(zoo_size_flag, dest="zoo_size", type=int,
                     help="zoo size parameter")
    src.add_argument("--nu", help="convolution kernel, e.g. 0:0.5,1:0.25,-1:0.25")
    src.add_argument("--op-seed", type=int, default=0, help="seed for random zoo members")
    src.add_argument("--spectrum", help="spectrum for diagonal_normal, e.g. 1;0.5;0.2+0.1j")


def _resolve_operator(args):
    if getattr(args, "op", None):
        return io.load_operator(args.op, getattr(args, "weights", None))
    if getattr(args, "zoo", None):
        return _build_zoo(args)
    raise InputError("provide an operator via --op or --zoo")


def _build_zoo(args):
    zoo = args.zoo
    size = getattr(args, "zoo_size", None)
    params = {}
    if zoo in ("lazy_symmetric_walk", "rotation_shift"):
        if size is None:
            raise InputError(f"--zoo {zoo} needs the size flag (--N)")
        params["n"] = size
    elif zoo == "convolution":
        if size is None or args.nu is None:
            raise InputError("--zoo convolution needs --N and --nu")
        params["n"] = size
        params["nu"] = {k: v.real for k, v in io.parse_kernel(args.nu).items()}
    elif zoo == "random_positive_contraction":
        if size is None:
            raise InputError("--zoo random_positive_contraction needs --N")
        params["n"] = size
        params["seed"] = args.op_seed
    elif zoo == "diagonal_normal":
        if args.spectrum is None:
            raise InputError("--zoo diagonal_normal needs --spectrum")
        params["spectrum"] = io.parse_complex_list(args.spectrum)
    else:
        raise InputError(f"--zoo {zoo} is not directly buildable here")
    return experiments.build_operator(zoo, **params)


def _resolve_generator(args):
    if getattr(args, "generator", None):
        return io.load_generator(args.generator, getattr(args, "weights", None))
    if getattr(args, "op", None) or getattr(args, "zoo", None):
        return experiments.markov_generator_from(_resolve_operator(args))
    raise InputError("provide a generator via --generator, or --op/--zoo for T - I")


def _artifact_paths(output, no_figure):
    if output is None:
        return None, None, None
    out = Path(output)
    csv = out.with_suffix(".csv")
    fig = None if no_figure else out.with_suffix(".png")
    return out, csv, fig


def _emit(args, report_dict, csv_spec=None, figure_fn=None):
    out, csv, fig = _artifact_paths(args.output, getattr(args, "no_figure", False))
    if out is not None:
        io.write_json(out, report_dict)
        print(f"report: {out}")
        if csv_spec is not None:
            header, rows = csv_spec
            io.write_csv(csv, header, rows)
            print(f"table: {csv}")
        if fig is not None and figure_fn is not None:
            figure_fn(fig)
            print(f"figure: {fig}")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_vnorm(args):
    seq = io.load_sequence(args.input)
    value = vq_norm(seq, args.q)
    print(io.format_float(value))
    report = {"op": "vnorm", "q": args.q, "length": int(seq.size), "value": value}
    if args.oracle:
        oracle = vq_norm_bruteforce(seq, args.q)
        report["oracle"] = oracle
        print(f"oracle: {io.format_float(oracle)}")
    _emit(args, report)
    return 0


def _cmd_onorm(args):
    seq = io.load_sequence(args.input)
    blocks = io.parse_int_list(args.blocks)
    value = oscillation_norm(seq, blocks)
    print(io.format_float(value))
    _emit(args, {"op": "onorm", "blocks": blocks, "value": value})
    return 0


def _cmd_jumps(args):
    seq = io.load_sequence(args.input)
    count = jump_count(seq, args.tau)
    print(count)
    _emit(args, {"op": "jumps", "tau": args.tau, "count": int(count)})
    return 0


def _cmd_opnorm(args):
    T = _resolve_operator(args)
    est = operator_pnorm(T, args.p, seed=args.seed)
    print(f"{io.format_float(est.lower)} {io.format_float(est.upper)}"
          f" ({'exact' if est.exact else 'interval'})")
    _emit(args, {
        "op": "opnorm",
        "p": args.p,
        "lower": est.lower,
        "upper": est.upper,
        "exact": est.exact,
    })
    return 0


def _cmd_analytic(args):
    T = _resolve_operator(args)
    rep = analyticity.analyze(T, args.p, args.N)
    print(f"verdict: {rep.verdict}")
    print(f"stolz_K: {io.format_float(rep.stolz_k)}")
    if rep.gamma_min is not None:
        print(f"gamma_min: {io.format_float(rep.gamma_min)}")
    prof = rep.diff_profile
    report = {
        "op": "analytic",
        "p": args.p,
        "verdict": rep.verdict,
        "stolz_K": rep.stolz_k,
        "gamma_min": rep.gamma_min,
        "spectrum_trustworthy": rep.spectrum_trustworthy,
        "power_bound": {"lower": rep.power_bound.lower, "upper": rep.power_bound.upper},
        "ritt": {
            "lower": rep.ritt_sup.estimate.lower,
            "upper": rep.ritt_sup.estimate.upper,
            "radii": list(rep.ritt_sup.radii),
            "angles_per_radius": rep.ritt_sup.angles_per_radius,
        } if rep.ritt_sup is not None else None,
        "diff_profile": {
            "n": [int(v) for v in prof.n],
            "lower": [float(v) for v in prof.lower],
            "upper": [float(v) for v in prof.upper],
        },
        "notes": list(rep.notes),
    }
    csv_spec = (
        ["n", "lower", "upper"],
        [(int(n), float(lo), float(up)) for n, lo, up in zip(prof.n, prof.lower, prof.upper)],
    )
    from . import plots

    _emit(args, report, csv_spec,
          lambda p: plots.save_diff_profile(p, prof.n, prof.lower, prof.upper))
    return 0


def _cmd_ritt(args):
    T = _resolve_operator(args)
    radii = io.parse_float_list(args.radii)
    res = analyticity.ritt_resolvent_sup(T, args.p, radii, args.angles)
    print(f"{io.format_float(res.estimate.lower)} {io.format_float(res.estimate.upper)}")
    _emit(args, {
        "op": "ritt",
        "p": args.p,
        "lower": res.estimate.lower,
        "upper": res.estimate.upper,
        "radii": list(res.radii),
        "angles_per_radius": res.angles_per_radius,
        "note": "grid lower estimate of the supremum over |z| > 1",
    })
    return 0


def _cmd_nrange(args):
    T = _resolve_operator(args)
    res = analyticity.numerical_range_check(T, args.gamma, args.grid)
    print(f"contained: {res.contained}")
    print(f"margin: {io.format_float(res.margin)}")
    _emit(args, {
        "op": "nrange",
        "gamma": args.gamma,
        "contained": res.contained,
        "margin": res.margin,
        "n_theta": res.n_theta,
    })
    return 0


def _cmd_semigroup(args):
    G = _resolve_generator(args)
    if args.subordinate_alpha is not None:
        G = semigroups.fractional_generator(G, args.subordinate_alpha)
    grid = semigroups.default_time_grid(args.t_min, args.t_max, args.per_decade)
    prof = semigroups.analytic_profile(G, args.p, grid)
    print(f"C0: {io.format_float(prof.c0)}")
    print(f"C1: {io.format_float(prof.c1)}")
    report = {
        "op": "semigroup",
        "p": args.p,
        "subordinate_alpha": args.subordinate_alpha,
        "t_min": args.t_min,
        "t_max": args.t_max,
        "per_decade": args.per_decade,
        "C0": prof.c0,
        "C1": prof.c1,
    }
    csv_spec = (
        ["t", "T_t_norm", "tAT_t_norm"],
        [(float(t), float(a), float(b))
         for t, a, b in zip(prof.t_grid, prof.c0_values, prof.c1_values)],
    )
    from . import plots

    _emit(args, report, csv_spec,
          lambda p: plots.save_semigroup_profile(
              p, prof.t_grid, prof.c0_values, prof.c1_values))
    return 0


def _cmd_subordinate(args):
    G = _resolve_generator(args)
    report = {"op": "subordinate", "alpha": args.alpha, "t": args.t, "method": args.method}
    mats = {}
    for method in (("spectral", "quadrature") if args.method == "both" else (args.method,)):
        spec = semigroups.SubordinationSpec(args.alpha, args.t, method)
        op, details = semigroups.subordinate_with_details(G, spec)
        mats[method] = op
        report[method] = details
    if len(mats) == 2:
        diff = float(np.abs(mats["spectral"].matrix - mats["quadrature"].matrix).max())
        report["agreement"] = diff
        print(f"agreement: {io.format_float(diff)}")
    first = next(iter(mats.values()))
    print(f"row_stochastic: {first.row_stochastic}")
    if args.save_matrix:
        io.save_matrix_csv(args.save_matrix, first.matrix)
        print(f"matrix: {args.save_matrix}")
    _emit(args, report)
    return 0


def _make_family(kind, base, order, truncations, t_min, t_max):
    if kind in experiments.CONTINUOUS_KINDS:
        grid = np.logspace(np.log10(t_min), np.log10(t_max), max(truncations) + 1)
        return experiments.FamilySpec(kind, base, order=order, time_grid=grid)
    return experiments.FamilySpec(kind, base, order=order)


def _cmd_verify(args):
    preset = VERIFY_PRESETS[args.theorem]
    kind = preset["kind"]
    truncations = tuple(io.parse_int_list(args.truncations)) if args.truncations \
        else preset["truncations"]
    budget = args.budget if args.budget is not None else preset["budget"]
    mode = preset.get("mode", "vq")
    order = args.m if args.m is not None else preset.get("order", 0)
    blocks = tuple(io.parse_int_list(args.blocks)) if args.blocks else None
    if kind in experiments.CONTINUOUS_KINDS:
        base = _resolve_generator(args)
    else:
        base = _resolve_operator(args)
    family = _make_family(kind, base, order, truncations, args.t_min, args.t_max)
    cfg = experiments.ExperimentConfig(
        p=args.p,
        q=args.q,
        truncations=truncations,
        sample_budget=budget,
        seed=args.seed,
        ascent_steps=args.ascent_steps,
        mode=mode,
        blocks=blocks,
    )
    report = experiments.empirical_constant(family, cfg)
    for row in report.constants:
        print(f"truncation {row['truncation']}: {io.format_float(row['constant'])}")
    print(f"verdict: {report.verdict}")
    if args.theorem == "jumps":
        for row in report.jump_check:
            print(f"tau {row['tau']}: pointwise_ok={row['pointwise_ok']} "
                  f"lp_ok={row['lp_ok']}")
    d = report.to_dict()
    d["theorem"] = args.theorem
    csv_spec = (
        ["truncation", "constant"],
        [(row["truncation"], row["constant"]) for row in report.constants],
    )
    from . import plots

    _emit(args, d, csv_spec,
          lambda p: plots.save_constants(
              p,
              [row["truncation"] for row in report.constants],
              [row["constant"] for row in report.constants],
              title=f"{args.theorem}: {report.verdict}"))
    return 0


def _cmd_sweep(args):
    base = _resolve_operator(args)
    kind = args.family
    family = _make_family(kind, base, args.m or 0, (args.truncation,), 1e-2, 1e2)
    qs = io.parse_float_list(args.q_list)
    blocks = tuple(io.parse_int_list(args.blocks)) if args.blocks else None
    cfg = experiments.ExperimentConfig(
        p=args.p,
        q=qs[0],
        truncations=(args.truncation,),
        sample_budget=args.budget,
        seed=args.seed,
        blocks=blocks,
    )
    report = experiments.q_sweep(family, cfg, qs, o2_point=args.with_o2_point)
    for row in report.rows:
        print(f"q {row['q']}: {io.format_float(row['constant'])}")
    csv_spec = (
        ["q", "constant"],
        [(row["q"], row["constant"]) for row in report.rows],
    )
    from . import plots

    _emit(args, report.to_dict(), csv_spec,
          lambda p: plots.save_sweep(
              p, [r["q"] for r in report.rows], [r["constant"] for r in report.rows]))
    return 0


def _cmd_convergence(args):
    if args.mode in experiments._MODES_DISCRETE:
        base = _resolve_operator(args)
        schedule = io.parse_int_list(args.schedule)
    else:
        base = _resolve_generator(args)
        schedule = io.parse_float_list(args.schedule)
    if args.x is not None:
        x = io.load_sequence(args.x)
    else:
        rng = np.random.default_rng(args.seed)
        n = base.size
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    dist = experiments.pointwise_convergence(base, x, args.mode, schedule)
    for s, d in zip(schedule, dist):
        print(f"{s}: {io.format_float(d)}")
    csv_spec = (["schedule", "distance"], list(zip(schedule, map(float, dist))))
    from . import plots

    _emit(args, {
        "op": "convergence",
        "mode": args.mode,
        "schedule": list(schedule),
        "distances": [float(d) for d in dist],
        "seed": args.seed,
    }, csv_spec, lambda p: plots.save_convergence(p, schedule, dist))
    return 0


def _cmd_identity_check(args):
    T = _resolve_operator(args)
    defect = experiments.telescoping_check(T, args.n, args.N_upper, args.m)
    print(io.format_float(defect))
    _emit(args, {
        "op": "identity-check",
        "n": args.n,
        "N": args.N_upper,
        "m": args.m,
        "defect": defect,
    })
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qvar", description=__doc__)
    parser.add_argument("--threads", help="worker thread cap (or QVAR_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext, operator=False, generator=False, output=True,
            zoo_size_flag="--N"):
        p = sub.add_parser(name, help=helptext)
        p.set_defaults(fn=fn)
        if operator or generator:
            _add_operator_args(p, generator=generator, zoo_size_flag=zoo_size_flag)
        if output:
            p.add_argument("--output", help="JSON report path (CSV/figure alongside)")
            p.add_argument("--no-figure", action="store_true",
                           help="skip figure rendering")
        return p

    p = add("vnorm", _cmd_vnorm, "strong q-variation norm of a sequence")
    p.add_argument("--input", required=True, help="sequence CSV (re,im per line)")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--oracle", action="store_true",
                   help="also run the exhaustive oracle (length <= 20)")

    p = add("onorm", _cmd_onorm, "oscillation norm of a sequence")
    p.add_argument("--input", required=True)
    p.add_argument("--blocks", required=True, help="partition boundaries, e.g. 0,2,5")

    p = add("jumps", _cmd_jumps, "tau-jump count of a sequence")
    p.add_argument("--input", required=True)
    p.add_argument("--tau", type=float, required=True)

    p = add("opnorm", _cmd_opnorm, "operator p-norm (exact or interval)",
            operator=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("analytic", _cmd_analytic, "analyticity diagnostic with verdict",
            operator=True, zoo_size_flag="--zoo-size")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--N", dest="N", type=int, default=128,
                   help="difference profile length")

    p = add("ritt", _cmd_ritt, "sampled Ritt resolvent bound", operator=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--radii", default="1.5,1.1,1.01")
    p.add_argument("--angles", type=int, default=64)

    p = add("nrange", _cmd_nrange, "numerical range containment in B_gamma",
            operator=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--grid", type=int, default=720)

    p = add("semigroup", _cmd_semigroup, "analytic-semigroup profile C0/C1",
            generator=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--per-decade", type=int, default=200)
    p.add_argument("--subordinate-alpha", type=float,
                   help="profile the subordinated semigroup instead")

    p = add("subordinate", _cmd_subordinate, "fractional-power subordination",
            generator=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--method", choices=["spectral", "quadrature", "both"],
                   default="both")
    p.add_argument("--save-matrix", help="write the subordinated matrix as CSV")

    p = add("verify", _cmd_verify, "replay a theorem instance by name",
            operator=True, generator=True)
    p.add_argument("--theorem", required=True, choices=sorted(VERIFY_PRESETS))
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, default=3.0)
    p.add_argument("--truncations", help="override preset truncations, e.g. 64,256")
    p.add_argument("--budget", type=int, help="override preset sample budget")
    p.add_argument("--ascent-steps", type=int, default=0)
    p.add_argument("--m", type=int, help="difference/derivative order")
    p.add_argument("--blocks", help="o2 partition boundaries (default singleton)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--t-min", type=float, default=1e-2)
    p.add_argument("--t-max", type=float, default=1e2)

    p = add("sweep", _cmd_sweep, "empirical constants as q decreases toward 2",
            operator=True)
    p.add_argument("--family", default="ergodic_averages",
                   choices=sorted(experiments.DISCRETE_KINDS))
    p.add_argument("--q-list", required=True, help="e.g. 4,3,2.5,2.2")
    p.add_argument("--truncation", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--m", type=int, help="difference order")
    p.add_argument("--blocks", help="o2 partition for the q = 2 point")
    p.add_argument("--with-o2-point", action="store_true")
    p.add_argument("--seed", type=int, required=True)

    p = add("convergence", _cmd_convergence, "pointwise convergence distances",
            operator=True, generator=True)
    p.add_argument("--mode", required=True,
                   choices=list(experiments._MODES_DISCRETE)
                   + list(experiments._MODES_CONTINUOUS))
    p.add_argument("--schedule", required=True, help="e.g. 1,2,4,8,16")
    p.add_argument("--x", help="vector file (default: seeded random draw)")
    p.add_argument("--seed", type=int, default=0)

    p = add("identity-check", _cmd_identity_check, "telescoping identity defect",
            operator=True, zoo_size_flag="--zoo-size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", dest="N_upper", type=int, required=True)
    p.add_argument("--m", type=int, required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_threads(args.threads)
        return args.fn(args)
    except QvarError as exc:
        print(f"qvar: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"qvar: numeric error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
