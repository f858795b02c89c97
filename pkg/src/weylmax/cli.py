"""Command-line front door.

Subcommands: weyl-table, verify-deligne, good-set, solution-eval,
decompose, build-xn, measure-xn, ratio-experiment, fit, lattice-count,
selftest. Exit codes: 0 success, 2 input error, 3 resource guard,
4 invariant violation.

Every output starts with the resolved run configuration and the package
version so results are reproducible from the artifact alone. Structured
single results are JSON; tables and ladders are CSV with a JSON header
comment. Numeric CSV fields carry 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import datum as datum_mod
from . import decomp, divset, experiment, numtheory, poly, weyl
from .errors import InputError, InvariantError, ResourceError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RESOURCE = 3
EXIT_INVARIANT = 4


def _load_poly(args) -> poly.IntPolynomial:
    if getattr(args, "poly_file", None):
        with open(args.poly_file) as fh:
            p = poly.parse_polynomial(fh.read())
    elif getattr(args, "poly", None):
        p = poly.parse_polynomial(args.poly)
    else:
        raise InputError("a polynomial is required (--poly or --poly-file)")
    want_d = getattr(args, "d", None)
    if want_d is not None and want_d != p.dim:
        raise InputError(f"--d {want_d} does not match polynomial dimension {p.dim}")
    want_k = getattr(args, "k", None)
    if want_k is not None and want_k != p.degree():
        raise InputError(f"--k {want_k} does not match polynomial degree {p.degree()}")
    return p


def _config(args, p: poly.IntPolynomial | None = None) -> dict:
    cfg = {"version": __version__}
    for key in ("q", "n", "s", "c", "rho", "seed", "budget", "samples", "threads", "method"):
        if hasattr(args, key) and getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if p is not None:
        cfg["poly"] = json.loads(poly.to_json(p))
        cfg["d"] = p.dim
        cfg["k"] = p.degree()
    return cfg


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json_out(obj: dict, out_path: str | None) -> None:
    _emit(json.dumps(obj, sort_keys=True, default=float), out_path)


def _parse_vector(text: str, name: str) -> tuple:
    try:
        return tuple(float(v) if "." in v or "e" in v.lower() else int(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse {name} {text!r}: {exc}") from exc


def cmd_weyl_table(args) -> int:
    p = _load_poly(args)
    table = weyl.weyl_table(p, args.q, method=args.method or "dft")
    buf = io.StringIO()
    buf.write("# " + json.dumps(_config(args, p), sort_keys=True) + "\n")
    writer = csv.writer(buf)
    writer.writerow([f"b{i}" for i in range(p.dim)] + ["re", "im", "modulus"])
    for b in np.ndindex(*table.values.shape):
        v = table.values[b]
        writer.writerow([*b, format(v.real, ".17g"), format(v.imag, ".17g"), format(abs(v), ".17g")])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_verify_deligne(args) -> int:
    p = _load_poly(args)
    table = weyl.weyl_table(p, args.q)
    report = weyl.deligne_check(table, p.degree())
    _json_out({
        "config": _config(args, p), "q": args.q, "d": p.dim, "k": p.degree(),
        "max_modulus": report.max_modulus, "bound": report.bound, "ok": report.ok,
    }, args.out)
    return EXIT_OK


def cmd_good_set(args) -> int:
    p = _load_poly(args)
    gs = weyl.good_set_for(p, args.q, args.c, p.degree())
    obj = {
        "config": _config(args, p), "q": args.q, "d": p.dim, "k": p.degree(),
        "c": args.c, "threshold": gs.threshold, "count": int(gs.members.shape[0]),
        "density": gs.density,
    }
    if args.out:
        buf = io.StringIO()
        buf.write("# " + json.dumps(_config(args, p), sort_keys=True) + "\n")
        writer = csv.writer(buf)
        writer.writerow([f"b{i}" for i in range(p.dim)])
        for row in gs.members:
            writer.writerow(list(map(int, row)))
        _emit(buf.getvalue(), args.out)
    _json_out(obj, None)
    return EXIT_OK


def cmd_solution_eval(args) -> int:
    p = _load_poly(args)
    f = datum_mod.datum_coefficients(args.n, p.dim)
    b = _parse_vector(args.b, "--b")
    delta = _parse_vector(args.delta, "--delta") if args.delta else (0.0,) * p.dim
    pt = datum_mod.RationalPoint(b=tuple(int(v) for v in b), q=args.q, delta=delta)
    u = datum_mod.evaluate_solution(p, f, pt, unsafe_float=args.unsafe_float)
    _json_out({
        "config": _config(args, p), "re": u.real, "im": u.imag, "modulus": abs(u),
    }, args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    p = _load_poly(args)
    f = datum_mod.datum_coefficients(args.n, p.dim)
    b = tuple(int(v) for v in _parse_vector(args.b, "--b"))
    delta = _parse_vector(args.delta, "--delta") if args.delta else (0.0,) * p.dim
    pt = datum_mod.RationalPoint(b=b, q=args.q, delta=delta)
    table = weyl.weyl_table(p, args.q)
    split = decomp.main_error_split(p, f, pt, table)
    _json_out({
        "config": _config(args, p),
        "M_re": split.main.real, "M_im": split.main.imag,
        "E_re": split.error.real, "E_im": split.error.imag,
        "ratio": split.ratio, "Zhat0": abs(split.zhat0),
    }, args.out)
    return EXIT_OK


def cmd_build_xn(args) -> int:
    p = _load_poly(args)
    x = divset.build_divergence_set(p, args.n, c=args.c, rho=args.rho)
    cfg = _config(args, p)
    cfg["Q"] = x.Q
    buf = io.StringIO()
    buf.write("# " + json.dumps(cfg, sort_keys=True) + "\n")
    writer = csv.writer(buf)
    writer.writerow(["q"] + [f"b{i}" for i in range(p.dim)])
    for q, b in x.ball_list():
        writer.writerow([q, *b])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _read_xn(path: str) -> divset.DivergenceSet:
    with open(path) as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise InputError(f"{path}: missing JSON header comment")
    cfg = json.loads(lines[0][2:])
    body = [ln for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(body)
    balls = []
    d = int(cfg["d"])
    for rec in reader:
        balls.append((int(rec["q"]), tuple(int(rec[f"b{i}"]) for i in range(d))))
    p = poly.parse_polynomial(json.dumps(cfg["poly"])) if "poly" in cfg else None
    return divset.from_balls(
        N=int(cfg["n"]), d=d, rho=float(cfg["rho"]), c=float(cfg["c"]),
        Q=int(cfg["Q"]), balls=balls, polynomial=p,
    )


def cmd_measure_xn(args) -> int:
    x = _read_xn(args.infile)
    method = args.method or ("exact" if x.d == 1 else "montecarlo")
    res = divset.measure(x, method=method, samples=args.samples, seed=args.seed)
    _json_out({
        "config": {"version": __version__, "in": args.infile, "method": method,
                   "samples": args.samples, "seed": args.seed},
        "estimate": res.estimate, "stderr": res.error,
        "upper_bound": res.upper_bound, "lower_bound": res.lower_bound,
        "J": x.ball_count, "overlap_pairs": res.overlap_pairs,
        "low_samples": res.low_samples,
    }, args.out)
    return EXIT_OK


def cmd_ratio_experiment(args) -> int:
    p = _load_poly(args)
    ladder = [int(v) for v in args.n_ladder.split(",")]
    cfg = experiment.ExperimentConfig(
        c=args.c, rho=args.rho, seed=args.seed,
        sample_budget=args.budget, mc_samples=args.samples, threads=args.threads,
    )
    rows = experiment.ratio_experiment(p, args.s, ladder, cfg)
    header = _config(args, p)
    header["ladder"] = ladder
    header["experiment_config"] = experiment.config_dict(cfg)
    _emit(experiment.rows_to_csv(rows, header), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    with open(args.infile) as fh:
        rows = experiment.rows_from_csv(fh.read())
    res = experiment.fit_exponent(rows)
    _json_out({
        "config": {"version": __version__, "in": args.infile},
        "slope": res.slope, "intercept": res.intercept, "residual": res.residual,
        "n_points": res.n_points, "log_corrected_slope": res.log_corrected_slope,
    }, args.out)
    return EXIT_OK


def cmd_lattice_count(args) -> int:
    count = numtheory.lattice_pair_count(args.q, args.qp, args.bound)
    bound = 2 * args.bound
    if bound == int(bound):
        bound = int(bound)
    _json_out({"count": count, "bound": bound, "ok": count <= 2 * args.bound}, args.out)
    return EXIT_OK


def _selftest_checks():
    sqrt5 = math.sqrt(5.0)
    p_sq = poly.family_diagonal(1, 2)
    p_cube = poly.family_diagonal(1, 3)

    def primes_small():
        return numtheory.primes_in_band(10, 21).primes == (11, 13, 17, 19)

    def poly_eval_mod():
        return numtheory.eval_poly_mod(p_sq, (7,), 5) == 4

    def lattice_small():
        return numtheory.lattice_pair_count(3, 5, 2) == 4

    def laplacian_families():
        pl = poly.family_power_laplacian(2, 2)
        return pl.terms == {(4, 0): 1, (2, 2): 2, (0, 4): 1}

    def bump_values():
        return datum_mod.bump(0.75) == 1.0 and datum_mod.bump(0.1) == 0.0 and abs(datum_mod.bump(0.375) - 0.5) < 1e-15

    def gauss_q5():
        s = weyl.weyl_sum_direct(p_sq, 5, (0,))
        return abs(s - sqrt5) < 1e-12

    def cubic_q7_table():
        t = weyl.weyl_table(p_cube, 7)
        direct = [weyl.weyl_sum_direct(p_cube, 7, (b,)) for b in range(7)]
        return max(abs(t.values[b] - direct[b]) for b in range(7)) < 1e-9 * math.sqrt(7)

    def parseval_small():
        return weyl.parseval_defect(weyl.weyl_table(p_sq, 5)) < 1e-12

    def good_set_q13():
        gs = weyl.good_set(weyl.weyl_table(p_sq, 13), 0.5, 2)
        return gs.density == 1.0

    def laplacian_constant():
        g = np.ones((7, 7))
        return np.abs(decomp.discrete_laplacian(g)).max() == 0.0

    def sbp_random():
        rng = np.random.default_rng(0)
        g = rng.normal(size=17) + 1j * rng.normal(size=17)
        h = rng.normal(size=17) + 1j * rng.normal(size=17)
        return decomp.sbp_check(g, h) < 1e-10

    def fold_conserves():
        f = datum_mod.datum_coefficients(64, 1)
        z = decomp.fold(f, 5, (0.0,))
        return abs(z.values.sum().real - f.axis_psi.sum()) < 1e-9

    def split_reconstructs():
        f = datum_mod.datum_coefficients(256, 1)
        pt = datum_mod.RationalPoint(b=(3,), q=17, delta=(0.0,))
        table = weyl.weyl_table(p_sq, 17)
        split = decomp.main_error_split(p_sq, f, pt, table)
        u = datum_mod.evaluate_solution(p_sq, f, pt)
        return abs(split.main + split.error - u) < 1e-9 * abs(u)

    def measure_single_ball():
        x = divset.from_balls(N=1024, d=1, rho=1 / 32, c=0.5, Q=32, balls=[(37, (5,))])
        res = divset.measure(x, "exact")
        return abs(res.estimate - 2 * (1 / 32) / 1024) < 1e-18

    def fit_powerlaw():
        rows = [
            experiment.ExperimentRow(
                N=n, Q=0, d=1, k=2, s=0.0, J=0, measure=0.0, measure_err=0.0,
                measure_method="", sup_lb=0.0, hs_norm=0.0, ratio=float(n) ** 0.25,
                wall_ms=0.0,
            )
            for n in (1024, 2048, 4096, 8192)
        ]
        res = experiment.fit_exponent(rows)
        return abs(res.slope - 0.25) < 1e-12

    return [
        ("primes-in-band", primes_small),
        ("eval-poly-mod", poly_eval_mod),
        ("lattice-count", lattice_small),
        ("power-laplacian-family", laplacian_families),
        ("bump-profile", bump_values),
        ("gauss-sum-q5", gauss_q5),
        ("cubic-table-two-path", cubic_q7_table),
        ("parseval", parseval_small),
        ("good-set-q13", good_set_q13),
        ("laplacian-constant", laplacian_constant),
        ("summation-by-parts", sbp_random),
        ("fold-conservation", fold_conserves),
        ("split-reconstruction", split_reconstructs),
        ("measure-single-ball", measure_single_ball),
        ("fit-power-law", fit_powerlaw),
    ]


def cmd_selftest(args) -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            ok = check()
        except Exception as exc:  # noqa: BLE001 -- selftest reports, never raises
            ok = False
            print(f"FAIL {name}: {exc}")
            failures += 1
            continue
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += 0 if ok else 1
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weylmax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_poly(sp):
        sp.add_argument("--poly", help="polynomial JSON")
        sp.add_argument("--poly-file", help="path to polynomial JSON")
        sp.add_argument("--d", type=int, help="expected dimension (validated)")
        sp.add_argument("--k", type=int, help="expected degree (validated)")

    def add_out(sp):
        sp.add_argument("--out", help="output path (default stdout)")

    sp = sub.add_parser("weyl-table", help="all S(b) for one prime, per-b CSV")
    add_poly(sp)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--method", choices=["dft", "direct"])
    add_out(sp)
    sp.set_defaults(func=cmd_weyl_table)

    sp = sub.add_parser("verify-deligne", help="max |S(b)| against the degree bound")
    add_poly(sp)
    sp.add_argument("--q", type=int, required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_verify_deligne)

    sp = sub.add_parser("good-set", help="residues with |S(b)| above the threshold")
    add_poly(sp)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--c", type=float, default=0.5)
    add_out(sp)
    sp.set_defaults(func=cmd_good_set)

    sp = sub.add_parser("solution-eval", help="solution at x = b/q + delta, t = 1/q")
    add_poly(sp)
    sp.add_argument("--n", type=int, required=True, help="frequency scale N")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--b", required=True, help="comma-separated residues")
    sp.add_argument("--delta", help="comma-separated perturbation")
    sp.add_argument("--unsafe-float", action="store_true",
                    help="demonstration-only floating phase reduction")
    add_out(sp)
    sp.set_defaults(func=cmd_solution_eval)

    sp = sub.add_parser("decompose", help="main/error split at a rational point")
    add_poly(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--delta")
    add_out(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("build-xn", help="divergence-set ball list as CSV")
    add_poly(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--c", type=float, default=0.5)
    sp.add_argument("--rho", type=float, default=1.0 / 32.0)
    add_out(sp)
    sp.set_defaults(func=cmd_build_xn)

    sp = sub.add_parser("measure-xn", help="measure a stored divergence set")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--method", choices=["exact", "montecarlo"])
    sp.add_argument("--samples", type=int, default=200_000)
    sp.add_argument("--seed", type=int, default=0)
    add_out(sp)
    sp.set_defaults(func=cmd_measure_xn)

    sp = sub.add_parser("ratio-experiment", help="full ladder of ratio rows")
    add_poly(sp)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--n-ladder", required=True, help="comma-separated ascending scales")
    sp.add_argument("--c", type=float, default=0.5)
    sp.add_argument("--rho", type=float, default=1.0 / 32.0)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--budget", type=int, default=10_000)
    sp.add_argument("--samples", type=int, default=200_000)
    sp.add_argument("--threads", type=int, default=1)
    add_out(sp)
    sp.set_defaults(func=cmd_ratio_experiment)

    sp = sub.add_parser("fit", help="exponent fit from a rows CSV")
    sp.add_argument("--in", dest="infile", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("lattice-count", help="pairs near the rational line")
    sp.add_argument("q", type=int)
    sp.add_argument("qp", type=int)
    sp.add_argument("bound", type=float)
    add_out(sp)
    sp.set_defaults(func=cmd_lattice_count)

    sp = sub.add_parser("selftest", help="run the built-in quick checks")
    sp.set_defaults(func=cmd_selftest)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def main() -> None:
    sys.exit(dispatch())
