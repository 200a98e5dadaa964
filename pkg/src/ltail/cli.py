"""Command-line experiment runner.

Subcommands mirror the pipeline stages: sieve enumerates a twist family,
lvalues fills the central-value cache, tails and barrier run the
exceedance measurements, moments and quadform exercise the moment and
form suites, verify re-runs module invariants and sets the exit code.

Identical flags and seed give byte-identical CSV output; every report
carries the effective constants it was produced with.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .dpoly import ONE
from .ec import curve_by_label, hecke_table
from .family import TwistFamily, family_by_address, union_families
from .lcentral import (
    VALUE_FLOOR,
    cached_family_values,
    family_central_values,
)
from .moments import (
    MomentRow,
    beta_factors,
    conditional_moment_check,
    render_moment_csv,
    walk_moment_bound,
    walk_moment_empirical,
)
from .primes import primes_up_to
from .reports import (
    check_alpha_grid,
    render_tail_csv,
    run_suites,
    tail_report,
)
from .schedule import build_schedule, desk_overrides
from .walk import WalkTrace, empirical_decomposition, family_flags, family_partials

OVERRIDE_FLAGS = ("s_param", "r_const", "trunc_exp", "a1_trunc", "l1", "V",
                  "omega_bound")


def _overrides(args):
    picked = {k: getattr(args, k) for k in OVERRIDE_FLAGS
              if getattr(args, k, None) is not None}
    return desk_overrides(**picked)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _address_line(args) -> str:
    return ("# curve=%s sign=%d residue=%d divisor=%d X=%.17g\n"
            % (args.curve, args.sign, args.residue, args.divisor, args.X))


def _constants_line(sched) -> str:
    cd = sched.constants.as_dict()
    parts = ["%s=%s" % (k, "none" if cd[k] is None else "%.17g" % cd[k])
             for k in sorted(cd)]
    return "# alpha=%.17g V=%.17g R=%d %s\n" % (
        sched.alpha, sched.V, sched.R, " ".join(parts)
    )


def _members_and_values(args, curve):
    """Resolve the discriminant set and central values for tails/barrier.

    Full scope goes through the persistent cache at cache-grade
    tolerance.  A positive --sample draws a seeded subset and evaluates
    directly at the looser --rel-tol, bypassing the cache.
    """
    if args.scope == "union":
        fams, ds = union_families(curve, args.X, divisor=args.divisor)
        key = (0, 0, args.divisor)
    else:
        fam = family_by_address(curve, args.sign, args.residue,
                                args.divisor, args.X)
        fams, ds = [fam], fam.discriminants
        key = (args.sign, args.residue, args.divisor)
    if args.sample and args.sample > 0:
        m = min(args.sample, ds.size)
        rng = np.random.default_rng(args.seed)
        idx = np.sort(rng.choice(ds.size, size=m, replace=False))
        ds = ds[idx]
        rel = args.rel_tol if args.rel_tol else 1e-4
        values, _, _ = family_central_values(curve, ds, rel_tol=rel)
    else:
        rel = args.rel_tol if args.rel_tol else 1e-8
        chunks = []
        for fam in fams:
            if len(fam) == 0:
                continue
            v, _cache = cached_family_values(fam, rel_tol=rel)
            chunks.append(v)
        values = (np.concatenate(chunks) if chunks
                  else np.zeros(0, dtype=np.float64))
        if args.scope == "union":
            # cache walk is per class; re-sort values into |d| order
            order = np.argsort(
                np.abs(np.concatenate([f.discriminants for f in fams
                                       if len(f)])), kind="stable"
            )
            values = values[order]
    return ds, values, key


def cmd_sieve(args) -> int:
    curve = curve_by_label(args.curve)
    fam = family_by_address(curve, args.sign, args.residue, args.divisor,
                            args.X)
    lines = [_address_line(args), "d\n"]
    lines += ["%d\n" % d for d in fam.discriminants]
    _emit("".join(lines), args.out)
    print("family size %d" % len(fam), file=sys.stderr)
    return 0


def cmd_lvalues(args) -> int:
    curve = curve_by_label(args.curve)
    fam = family_by_address(curve, args.sign, args.residue, args.divisor,
                            args.X)
    rel = args.rel_tol if args.rel_tol else 1e-8
    values, cache = cached_family_values(fam, rel_tol=rel)
    if args.out:
        cache.save(args.out)
    print(
        "cached %d values  mean %.6g  min %.3g  vanishing %.4f"
        % (len(values), float(np.mean(values)), float(np.min(values)),
           float(np.mean(values < 1e-10))),
        file=sys.stderr,
    )
    return 0


def cmd_tails(args) -> int:
    curve = curve_by_label(args.curve)
    alphas = args.alpha if args.alpha else [0.1, 0.2, 0.3]
    check_alpha_grid(alphas)
    ds, values, key = _members_and_values(args, curve)
    rows = []
    sched = None
    for a in alphas:
        sched = build_schedule(args.X, a, _overrides(args))
        rows.append(tail_report(sched, key, values))
    text = render_tail_csv(rows, sched.constants)
    _emit(text, args.out)
    for t in rows:
        print(
            "alpha=%.3g V=%.4f count=%d/%d ratio=%.4g frac=%.4g/%.4g"
            % (t.alpha, t.V, t.count_H, t.family_size, t.ratio,
               t.frac_moment, t.frac_reference),
            file=sys.stderr,
        )
    return 0


def cmd_barrier(args) -> int:
    curve = curve_by_label(args.curve)
    sched = build_schedule(args.X, args.alpha, _overrides(args))
    ds, values, _key = _members_and_values(args, curve)
    if args.scope == "union":
        # decomposition wants one concrete family object; wrap the merged set
        base = family_by_address(curve, +1, 1, args.divisor, args.X)
        fam = TwistFamily(base.constraints, ds)
    else:
        fam = family_by_address(curve, args.sign, args.residue,
                                args.divisor, args.X)
        if args.sample and args.sample > 0:
            fam = TwistFamily(fam.constraints, ds)
    partials = family_partials(curve, sched, ds)
    logLs = np.log(np.maximum(values, VALUE_FLOOR))
    flags = family_flags(sched, partials, logLs, ds,
                         h_uses_d=args.h_uses_d)
    report = empirical_decomposition(fam, flags, sched)
    text = _address_line(args) + _constants_line(sched) + report.render()
    _emit(text, args.out)
    print(
        "family %d  in tail %d  prob %.5g"
        % (report.family_size, report.count_H, report.prob_H),
        file=sys.stderr,
    )
    return 0


def cmd_moments(args) -> int:
    curve = curve_by_label(args.curve)
    sched = build_schedule(args.X, args.alpha, _overrides(args))
    fam = family_by_address(curve, args.sign, args.residue, args.divisor,
                            args.X)
    partials = family_partials(curve, sched, fam.discriminants)
    rows = []
    for r in (1, 2, 3):
        emp = walk_moment_empirical(partials, 1, sched.R, r)
        rows.append(MomentRow(
            "walk_moment", "j=1,k=%d,r=%d" % (sched.R, r), emp,
            walk_moment_bound(sched, 1, sched.R, r),
        ))
    n_traces = min(len(fam), 500)
    increments = np.diff(partials[:n_traces], axis=1, prepend=0.0)
    traces = [
        WalkTrace(int(d), increments[i], partials[i])
        for i, d in enumerate(fam.discriminants[:n_traces])
    ]
    lhs, rhs = conditional_moment_check(sched, 1, traces, ONE, -0.5)
    rows.append(MomentRow("conditional_bucket", "r=1,w=-0.5", lhs, rhs))
    table = hecke_table(curve, 1024)
    worst = 0.0
    for p in primes_up_to(1000):
        p = int(p)
        if p < 11:
            continue
        bf = beta_factors(table, p)
        worst = max(worst, abs(bf.beta_odd / bf.beta_even_tail) * p ** 1.5)
    rows.append(MomentRow("beta_ratio_p32", "p in [11,1000]", worst, 10.0))
    _emit(render_moment_csv(rows), args.out)
    for row in rows:
        print("%s %s ratio=%.4g" % (row.quantity, row.params, row.ratio),
              file=sys.stderr)
    return 0


def cmd_quadform(args) -> int:
    runs = run_suites(["quadform"])
    _name, results, secs = runs[0]
    lines = ["check,margin,passed\n"]
    ok = True
    for r in results:
        lines.append("%s,%.17g,%d\n" % (r.name, r.margin, int(r.passed)))
        ok = ok and r.passed
        print("%-36s margin=% .3e %s"
              % (r.name, r.margin, "ok" if r.passed else "FAIL"),
              file=sys.stderr)
    _emit("".join(lines), args.out)
    print("quadform suite %.1f s" % secs, file=sys.stderr)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    names = (["ecarith", "family", "dpoly", "moments", "quadform"]
             if args.suite == "all" else [args.suite])
    ok = True
    for name, results, secs in run_suites(names):
        print("== %s (%.1f s)" % (name, secs))
        for r in results:
            ok = ok and r.passed
            print("  %-36s margin=% .3e %s"
                  % (r.name, r.margin, "ok" if r.passed else "FAIL"))
    print("verify: %s" % ("ok" if ok else "FAILED"))
    return 0 if ok else 1


def _add_common(p):
    p.add_argument("--curve", default="11a1")
    p.add_argument("--sign", type=int, default=1, choices=(1, -1))
    p.add_argument("--residue", type=int, default=1)
    p.add_argument("--divisor", type=int, default=1)
    p.add_argument("-X", type=float, default=1e5, dest="X")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    for flag in ("--s-param", "--r-const", "--trunc-exp", "--a1-trunc",
                 "--V"):
        p.add_argument(flag, type=float, default=None,
                       dest=flag.lstrip("-").replace("-", "_"))
    p.add_argument("--l1", type=int, default=None)
    p.add_argument("--omega-bound", type=int, default=None,
                   dest="omega_bound")


def _add_scope(p):
    p.add_argument("--scope", choices=("union", "single"), default="single")
    p.add_argument("--sample", type=int, default=0,
                   help="positive: seeded subsample evaluated cache-free")
    p.add_argument("--rel-tol", type=float, default=None, dest="rel_tol")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ltail",
        description="tail statistics of central values in twist families",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", help="enumerate a twist family")
    _add_common(p)
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("lvalues", help="fill the central-value cache")
    _add_common(p)
    p.add_argument("--rel-tol", type=float, default=None, dest="rel_tol")
    p.set_defaults(func=cmd_lvalues)

    p = sub.add_parser("tails", help="tail exceedance report")
    _add_common(p)
    _add_scope(p)
    p.add_argument("--alpha", type=float, action="append")
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("barrier", help="first-exit decomposition report")
    _add_common(p)
    _add_scope(p)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--h-uses-d", action="store_true", dest="h_uses_d")
    p.set_defaults(func=cmd_barrier)

    p = sub.add_parser("moments", help="walk and Euler-factor moment rows")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=0.3)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("quadform", help="quadratic-form dominance suite")
    _add_common(p)
    p.set_defaults(func=cmd_quadform)

    p = sub.add_parser("verify", help="run module invariant suites")
    p.add_argument("suite", choices=("ecarith", "family", "dpoly",
                                     "moments", "quadform", "all"))
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
