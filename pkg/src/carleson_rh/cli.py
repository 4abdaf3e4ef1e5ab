"""Command-line front end: analyze contours, solve problems from files, run
the verification suite, and compare contour deformations.

Exit codes: 0 success, 2 validation error, 3 numerical singularity,
4 verification threshold failure.  Identical inputs produce byte-identical
outputs.  The environment variable CARLESON_RH_THREADS caps BLAS-level
parallelism (best effort, via threadpoolctl when installed).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SINGULAR = 3
EXIT_THRESHOLD = 4

VERIFY_DEFAULT_TOLS = {
    "involution": 1e-10,
    "projection": 1e-9,
    "projection-corner": 1e-4,
    "rational": 1e-9,
    "rational-oracle": 1e-7,
    "reproduction": 1e-9,
    "covariance": 1e-8,
    "isometry": 1e-10,
    "det": 1e-7,
    "deform": 1e-6,
    "spiral": 1e-3,
}


def _cap_threads():
    cap = os.environ.get("CARLESON_RH_THREADS")
    if not cap:
        return None
    try:
        import threadpoolctl

        return threadpoolctl.threadpool_limits(limits=int(cap))
    except Exception:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(int(cap))
        return None


def _split_tol_overrides(argv):
    """Pull --tol.NAME=VALUE (or --tol.NAME VALUE) flags out of argv."""
    tols, rest, k = {}, [], 0
    while k < len(argv):
        a = argv[k]
        if a.startswith("--tol."):
            body = a[len("--tol."):]
            if "=" in body:
                name, val = body.split("=", 1)
            else:
                name = body
                k += 1
                if k >= len(argv):
                    raise SystemExit(f"--tol.{name} needs a value")
                val = argv[k]
            tols[name] = float(val)
        else:
            rest.append(a)
        k += 1
    return tols, rest


def _grid_args(parser):
    parser.add_argument("--panels", type=int, default=16,
                        help="panels per arc (default 16)")
    parser.add_argument("--nodes", type=int, default=16,
                        help="Gauss nodes per panel (default 16)")
    parser.add_argument("--grading", type=float, default=0.5,
                        help="geometric grading ratio toward tagged endpoints")


def build_parser():
    p = argparse.ArgumentParser(
        prog="carleson-rh",
        description="L^2 Riemann-Hilbert problems on Carleson jump contours",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="validate a contour and estimate its constants")
    pa.add_argument("--contour", required=True)
    pa.add_argument("--p", type=float, default=2.0)
    pa.add_argument("--z0", type=str, default=None)
    pa.add_argument("--centers", type=int, default=256)
    pa.add_argument("--radii", type=int, default=64)
    pa.add_argument("--out", required=True)

    ps = sub.add_parser("solve", help="solve an RH problem from a problem file")
    ps.add_argument("--problem", required=True)
    _grid_args(ps)
    ps.add_argument("--p", type=float, default=2.0)
    ps.add_argument("--z0", type=str, default=None,
                    help="chart base point override for contours through infinity")
    ps.add_argument("--out", required=True)

    pv = sub.add_parser("verify", help="run the operator-identity verification suite")
    pv.add_argument("--fixtures", default="circle,two-circles,square",
                    help="comma list: circle,two-circles,square,spiral")
    _grid_args(pv)
    pv.add_argument("--out", required=True)

    pd = sub.add_parser("deform", help="compare a problem against its deformation")
    pd.add_argument("--deform-spec", required=True)
    _grid_args(pd)
    pd.add_argument("--out", required=True)
    return p


def cmd_analyze(args, tols):
    from .exprgrammar import parse_complex
    from .geometry import ConditioningWarning, carleson_constant, muckenhoupt_estimate
    from .textio import FileFormatError, read_contour, write_contour_samples_csv

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        contour = read_contour(args.contour)
    except (FileFormatError, Exception) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    z0 = parse_complex(args.z0) if args.z0 else None
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConditioningWarning)
        cc_half = carleson_constant(contour, args.centers // 2, (args.radii + 1) // 2)
        cc = carleson_constant(contour, args.centers, args.radii)
        mk = muckenhoupt_estimate(contour, args.p, z0, args.centers, args.radii)
        notes += [str(w.message) for w in caught]
    lines = [
        "verdict valid jump contour",
        f"arcs {len(contour.arcs)}",
        f"regions {len(contour.region_signs)}",
        f"contains-infinity {contour.contains_infinity}",
        f"carleson-estimate {cc:.16e}",
        f"carleson-estimate-coarse {cc_half:.16e}",
        f"refinement-stable {abs(cc - cc_half) <= 0.05 * max(cc, 1e-300)}",
        f"muckenhoupt-p {args.p:.16e}",
        f"muckenhoupt-estimate {mk:.16e}",
    ]
    for w in notes:
        lines.append(f"warning {w}")
    (out / "analysis.txt").write_text("\n".join(lines) + "\n")
    write_contour_samples_csv(contour, out / "contour_samples.csv")
    print("\n".join(lines))
    return EXIT_OK


def cmd_solve(args, tols):
    from .exprgrammar import parse_complex
    from .grid import build_grid
    from .operators import MobiusChart
    from .solver import NoUniqueSolutionError, diagnostics, region_probes, solve, \
        solve_through_infinity
    from .textio import (FileFormatError, read_problem, write_density_csv,
                         write_diagnostics_text, write_grid, write_solution_csv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        problem, _ = read_problem(args.problem)
    except (FileFormatError, Exception) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if problem.contour.contains_infinity:
            z0 = parse_complex(args.z0) if args.z0 else None
            chart = MobiusChart.build(problem.contour, z0, args.panels,
                                      args.nodes, args.grading)
            sol = solve_through_infinity(problem, chart)
        else:
            grid = build_grid(problem.contour, args.panels, args.nodes, args.grading)
            sol = solve(problem, grid, p=args.p)
    except NoUniqueSolutionError as e:
        print(f"numerically singular system: {e}", file=sys.stderr)
        return EXIT_SINGULAR
    diag = diagnostics(sol)
    probes = region_probes(problem.contour, sol.grid)
    write_density_csv(sol, out / "density.csv")
    write_solution_csv(sol, probes, out / "solution_probes.csv")
    write_diagnostics_text(diag, out / "diagnostics.txt")
    write_grid(sol.grid, out / "grid.txt")
    print(f"solved: N={sol.grid.size} n={sol.mu.n} "
          f"sigma_min_ratio={diag['sigma_min_ratio']:.3e} "
          f"jump_residual={diag['jump_residual_max']:.3e}")
    return EXIT_OK


def _verify_circle(tols, panels, nodes, grading):
    from . import fixtures, verifier

    c = fixtures.unit_circle()
    grids = [max(4, panels // 2), max(6, (3 * panels) // 4), panels]
    fields = {
        "one": lambda z: np.ones_like(z),
        "z": lambda z: z,
        "z3": lambda z: z**3,
        "zm2": lambda z: z**-2.0,
        "z3+zm2": lambda z: z**3 + z**-2.0,
    }
    reps = [
        verifier.check_involution(c, fields, grids, nodes, grading,
                                  threshold=tols["involution"]),
        verifier.check_projection_algebra(c, grids, nodes, grading,
                                          threshold=tols["projection"]),
        verifier.check_rational_eigenfunctions(c, 6, grids, nodes, grading,
                                               threshold=tols["rational"]),
        verifier.check_reproduction(
            c,
            {"z2": (lambda z: z**2, "+"),
             "exp": (lambda z: np.exp(z) / 4, "+"),
             "1/z": (lambda z: 1 / z, "-")},
            grids, nodes, grading, threshold=tols["reproduction"]),
        verifier.check_mobius_covariance(
            c, 0.0, {"z2": lambda z: z**2, "z3": lambda z: z**3},
            grids, nodes, grading, threshold=tols["covariance"]),
    ]
    return reps


def _verify_two_circles(tols, panels, nodes, grading):
    from . import fixtures, verifier

    tc = fixtures.two_circles()
    grids = [max(4, panels // 2), max(6, (3 * panels) // 4), panels]
    return [verifier.check_rational_eigenfunctions(
        tc, 6, grids, nodes, grading, threshold=tols["rational"])]


def _verify_square(tols, panels, nodes, grading):
    from . import fixtures, verifier

    sq = fixtures.corner_square()
    grids = [max(4, panels // 2), max(6, (3 * panels) // 4), panels]
    return [verifier.check_projection_algebra(
        sq, grids, nodes, grading, threshold=tols["projection-corner"])]


def _verify_spiral(tols, panels, nodes, grading):
    from . import fixtures, verifier
    from .geometry import carleson_constant

    sp = fixtures.spiral_contour()
    fields = {
        "one": lambda z: np.ones_like(z),
        "z": lambda z: z,
        "z3": lambda z: z**3,
    }
    grids = [max(6, panels // 2), max(9, (3 * panels) // 4), panels]
    reps = [
        verifier.check_involution(sp, fields, grids, nodes, grading,
                                  threshold=tols["spiral"]),
        verifier.check_projection_algebra(sp, grids, nodes, grading,
                                          threshold=tols["spiral"]),
    ]
    return reps


def cmd_verify(args, tols):
    from .textio import write_convergence_csv

    tt = dict(VERIFY_DEFAULT_TOLS)
    tt.update(tols)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runners = {
        "circle": _verify_circle,
        "two-circles": _verify_two_circles,
        "square": _verify_square,
        "spiral": _verify_spiral,
    }
    all_reports = []
    failed = []
    for name in [s.strip() for s in args.fixtures.split(",") if s.strip()]:
        if name not in runners:
            print(f"unknown fixture {name!r}", file=sys.stderr)
            return EXIT_VALIDATION
        reps = runners[name](tt, args.panels, args.nodes, args.grading)
        write_convergence_csv(reps, out / f"convergence_{name}.csv")
        for r in reps:
            all_reports.append((name, r))
            status = "pass" if r.passed else "FAIL"
            print(f"[{status}] {name}/{r.identity}: final error {r.errors[-1]:.3e} "
                  f"(threshold {r.threshold:.1e}, order {r.order:.2f})")
            if not r.passed:
                failed.append(f"{name}/{r.identity}")
    write_convergence_csv([r for _, r in all_reports], out / "convergence_all.csv")
    if failed:
        print("failed identities: " + ", ".join(failed), file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_deform(args, tols):
    from .textio import FileFormatError, read_deform_spec, write_convergence_csv
    from .verifier import check_deformation

    tt = dict(VERIFY_DEFAULT_TOLS)
    tt.update(tols)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        spec = read_deform_spec(args.deform_spec)
    except (FileFormatError, Exception) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    grids = [max(4, args.panels // 2), max(6, (3 * args.panels) // 4), args.panels]
    rep = check_deformation(spec, grids, args.nodes, args.grading,
                            threshold=tt["deform"])
    write_convergence_csv([rep], out / "deformation.csv")
    status = "pass" if rep.passed else "FAIL"
    print(f"[{status}] {rep.identity}: final agreement error {rep.errors[-1]:.3e} "
          f"(threshold {rep.threshold:.1e})")
    return EXIT_OK if rep.passed else EXIT_THRESHOLD


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    tols, rest = _split_tol_overrides(argv)
    args = build_parser().parse_args(rest)
    _cap_threads()
    handlers = {
        "analyze": cmd_analyze,
        "solve": cmd_solve,
        "verify": cmd_verify,
        "deform": cmd_deform,
    }
    return handlers[args.command](args, tols)


if __name__ == "__main__":
    sys.exit(main())
