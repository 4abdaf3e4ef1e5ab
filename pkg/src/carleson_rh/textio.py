"""Versioned structured-text formats and CSV writers.

Formats (one record per line, ``#`` comments allowed):

``carleson-rh-contour v1``
    ``z0 <complex>``, ``region <id> <+|->``, and one ``arc <kind> k=v ...
    left=<id> right=<id> [tag-start=<tag>] [tag-end=<tag>]`` per arc.
    Complex values use a+bi form; ``inf`` marks unbounded segment ends.

``carleson-rh-problem v1``
    ``contour <path>``, ``n <dim>``, ``v <row> <col> <expression>`` entries
    (expressions over z: rational functions, exp, complex constants),
    optional ``mode user`` with ``vplus``/``vminus`` entries, and optional
    ``invert-on-arcs <i,j,...>`` for data posed on reversed traversals.

``carleson-rh-deform v1``
    ``problem <path>``, ``m0 <row> <col> <expression>`` entries, and
    ``aux-arc <kind> k=v ...`` lines for the auxiliary closed curve.

``carleson-rh-grid v1``
    Grid echo for reproducibility: parameters plus one node per line.

All numbers are written with 17 significant digits so doubles round-trip.
"""

from __future__ import annotations

import csv
import shlex
from pathlib import Path

import numpy as np

from .exprgrammar import format_complex, parse_complex, parse_expression
from .geometry import build_arc, compose_contour
from .solver import RHProblem

CONTOUR_HEADER = "carleson-rh-contour v1"
PROBLEM_HEADER = "carleson-rh-problem v1"
DEFORM_HEADER = "carleson-rh-deform v1"
GRID_HEADER = "carleson-rh-grid v1"

FMT = "%.16e"


class FileFormatError(ValueError):
    """Malformed input file; the message carries the line number."""


def _fmt(x):
    return FMT % float(x)


def _lines(path):
    out = []
    for i, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((i, line))
    return out


def _kv(tokens, lineno):
    kv = {}
    for tok in tokens:
        if "=" not in tok:
            raise FileFormatError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = v
    return kv


_ARC_COMPLEX_KEYS = ("start", "end", "point", "direction", "center", "base", "coeff")
_ARC_FLOAT_KEYS = ("radius", "theta0", "theta1", "delta", "r0", "r1")


def _arc_from_tokens(tokens, lineno):
    kind = tokens[0]
    kv = _kv(tokens[1:], lineno)
    left = kv.pop("left", None)
    right = kv.pop("right", None)
    tags = {}
    if "tag-start" in kv:
        tags["start_tag"] = kv.pop("tag-start")
    if "tag-end" in kv:
        tags["end_tag"] = kv.pop("tag-end")
    params = {}
    for k, v in kv.items():
        if k in _ARC_COMPLEX_KEYS:
            params[k] = parse_complex(v)
        elif k in _ARC_FLOAT_KEYS:
            params[k] = float(v)
        elif k == "points":
            params[k] = np.array([parse_complex(p) for p in v.split(";")])
        else:
            raise FileFormatError(f"line {lineno}: unknown arc parameter {k!r}")
    try:
        arc = build_arc(kind, **tags, **params)
    except Exception as e:
        raise FileFormatError(f"line {lineno}: {e}") from e
    return arc, left, right


def read_contour(path):
    lines = _lines(path)
    if not lines or lines[0][1] != CONTOUR_HEADER:
        raise FileFormatError(f"line 1: expected header {CONTOUR_HEADER!r}")
    z0 = None
    signs = {}
    arcs, rmap = [], []
    for lineno, line in lines[1:]:
        toks = shlex.split(line)
        if toks[0] == "z0":
            z0 = parse_complex(toks[1])
        elif toks[0] == "region":
            if len(toks) != 3 or toks[2] not in ("+", "-"):
                raise FileFormatError(f"line {lineno}: region <id> <+|->")
            signs[toks[1]] = toks[2]
        elif toks[0] == "arc":
            arc, left, right = _arc_from_tokens(toks[1:], lineno)
            if left is None or right is None:
                raise FileFormatError(f"line {lineno}: arc needs left= and right=")
            arcs.append(arc)
            rmap.append((left, right))
        else:
            raise FileFormatError(f"line {lineno}: unknown record {toks[0]!r}")
    if z0 is None:
        raise FileFormatError("contour file never sets z0")
    try:
        return compose_contour(arcs, rmap, signs, z0)
    except Exception as e:
        raise FileFormatError(f"contour validation failed: {e}") from e


def write_contour(contour, path):
    out = [CONTOUR_HEADER, f"z0 {format_complex(contour.z0)}"]
    for rid, sign in sorted(contour.region_signs.items()):
        out.append(f"region {rid} {'+' if sign == 1 else '-'}")
    for arc, (left, right) in zip(contour.arcs, contour.region_map):
        parts = [f"arc {arc.kind}"]
        for k, v in arc.params.items():
            if k == "points":
                parts.append("points=" + ";".join(format_complex(p) for p in v))
            elif k in _ARC_COMPLEX_KEYS:
                parts.append(f"{k}={format_complex(v)}")
            else:
                parts.append(f"{k}={_fmt(v)}")
        parts.append(f"left={left}")
        parts.append(f"right={right}")
        if arc.start_tag != "smooth":
            parts.append(f"tag-start={arc.start_tag}")
        if arc.end_tag != "smooth":
            parts.append(f"tag-end={arc.end_tag}")
        out.append(" ".join(parts))
    Path(path).write_text("\n".join(out) + "\n")


def _entry_table(entries, n, lineno_by_key, what):
    table = np.empty((n, n), dtype=object)
    for (r, c), fn in entries.items():
        if not (1 <= r <= n and 1 <= c <= n):
            raise FileFormatError(
                f"line {lineno_by_key[(r, c)]}: {what} index ({r},{c}) outside {n}x{n}")
        table[r - 1, c - 1] = fn
    missing = [(r + 1, c + 1) for r in range(n) for c in range(n) if table[r, c] is None]
    if missing:
        raise FileFormatError(f"{what} entries missing: {missing}")

    def matrix_fn(z):
        scalarz = np.ndim(z) == 0
        out = np.empty((n, n), dtype=complex) if scalarz else \
            np.empty(np.shape(z) + (n, n), dtype=complex)
        for r in range(n):
            for c in range(n):
                val = table[r, c](z)
                if scalarz:
                    out[r, c] = val
                else:
                    out[..., r, c] = val
        return out

    return matrix_fn


def read_problem(path):
    """Problem file -> (RHProblem, contour path used)."""
    path = Path(path)
    lines = _lines(path)
    if not lines or lines[0][1] != PROBLEM_HEADER:
        raise FileFormatError(f"line 1: expected header {PROBLEM_HEADER!r}")
    contour_path = None
    n = 1
    mode = "trivial"
    invert = ()
    entries, linenos = {}, {}
    plus_entries, minus_entries = {}, {}
    for lineno, line in lines[1:]:
        toks = shlex.split(line)
        key = toks[0]
        if key == "contour":
            contour_path = (path.parent / toks[1]).resolve()
        elif key == "n":
            n = int(toks[1])
        elif key == "mode":
            mode = toks[1]
        elif key == "invert-on-arcs":
            invert = tuple(int(x) for x in toks[1].replace(",", " ").split())
        elif key in ("v", "vplus", "vminus"):
            if len(toks) < 4:
                raise FileFormatError(f"line {lineno}: {key} <row> <col> <expression>")
            r, c = int(toks[1]), int(toks[2])
            try:
                fn = parse_expression(" ".join(toks[3:]))
            except Exception as e:
                raise FileFormatError(f"line {lineno}: bad expression: {e}") from e
            target = {"v": entries, "vplus": plus_entries, "vminus": minus_entries}[key]
            target[(r, c)] = fn
            linenos[(r, c)] = lineno
        else:
            raise FileFormatError(f"line {lineno}: unknown record {key!r}")
    if contour_path is None:
        raise FileFormatError("problem file never names a contour")
    if not entries:
        raise FileFormatError("problem file has no jump entries")
    contour = read_contour(contour_path)
    vfn = _entry_table(entries, n, linenos, "v")
    if n == 1:
        base = vfn
        vfn = lambda z: base(z)[..., 0, 0] if np.ndim(z) else base(z)[0, 0]
    vp = vm = None
    if mode == "user":
        vpm = _entry_table(plus_entries, n, linenos, "vplus")
        vmm = _entry_table(minus_entries, n, linenos, "vminus")
        vp, vm = vpm, vmm
    problem = RHProblem(contour, vfn, n=n, mode=mode, v_plus=vp, v_minus=vm,
                        invert_on_arcs=invert)
    return problem, contour_path


def read_deform_spec(path):
    """Deform-spec file -> (base RHProblem, aux arcs, m0 callable, name)."""
    from .verifier import DeformationSpec

    path = Path(path)
    lines = _lines(path)
    if not lines or lines[0][1] != DEFORM_HEADER:
        raise FileFormatError(f"line 1: expected header {DEFORM_HEADER!r}")
    problem_path = None
    name = path.stem
    entries, linenos = {}, {}
    aux = []
    for lineno, line in lines[1:]:
        toks = shlex.split(line)
        if toks[0] == "problem":
            problem_path = (path.parent / toks[1]).resolve()
        elif toks[0] == "name":
            name = toks[1]
        elif toks[0] == "m0":
            r, c = int(toks[1]), int(toks[2])
            entries[(r, c)] = parse_expression(" ".join(toks[3:]))
            linenos[(r, c)] = lineno
        elif toks[0] == "aux-arc":
            arc, _, _ = _arc_from_tokens(toks[1:], lineno)
            aux.append(arc)
        else:
            raise FileFormatError(f"line {lineno}: unknown record {toks[0]!r}")
    if problem_path is None:
        raise FileFormatError("deform spec never names a problem file")
    if not aux:
        raise FileFormatError("deform spec has no auxiliary arcs")
    problem, _ = read_problem(problem_path)
    n = problem.n
    m0fn = _entry_table(entries, n, linenos, "m0") if entries else (lambda z: np.eye(n))
    if n == 1 and entries:
        base = m0fn
        m0fn = lambda z: base(z)[0, 0]
    return DeformationSpec(problem, aux, m0fn, name=name)


def write_grid(grid, path):
    out = [GRID_HEADER,
           f"panels-per-arc {grid.panels_per_arc}",
           f"nodes-per-panel {grid.nodes_per_panel}",
           f"grading-ratio {_fmt(grid.grading_ratio)}",
           f"size {grid.size}",
           "columns arc panel t re(z) im(z) re(dz) im(dz) arclength"]
    for j in range(grid.size):
        out.append(" ".join([
            str(int(grid.arc_index[j])), str(int(grid.panel_index[j])),
            _fmt(grid.t[j]), _fmt(grid.nodes[j].real), _fmt(grid.nodes[j].imag),
            _fmt(grid.dz[j].real), _fmt(grid.dz[j].imag), _fmt(grid.arclength[j]),
        ]))
    Path(path).write_text("\n".join(out) + "\n")


def read_grid_arrays(path):
    """Grid echo file -> dict of arrays (for reproducibility checks)."""
    lines = _lines(path)
    if not lines or lines[0][1] != GRID_HEADER:
        raise FileFormatError(f"line 1: expected header {GRID_HEADER!r}")
    rows = []
    meta = {}
    for _, line in lines[1:]:
        toks = line.split()
        if toks[0] in ("panels-per-arc", "nodes-per-panel", "grading-ratio", "size"):
            meta[toks[0]] = float(toks[1])
        elif toks[0] == "columns":
            continue
        else:
            rows.append([float(x) for x in toks])
    rows = np.asarray(rows)
    return {
        "meta": meta,
        "arc": rows[:, 0].astype(int),
        "panel": rows[:, 1].astype(int),
        "t": rows[:, 2],
        "nodes": rows[:, 3] + 1j * rows[:, 4],
        "dz": rows[:, 5] + 1j * rows[:, 6],
        "arclength": rows[:, 7],
    }


def write_contour_samples_csv(contour, path, samples_per_arc=512):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["arc", "t", "re_z", "im_z"])
        for i, arc in enumerate(contour.arcs):
            eps = 1.0 / (4 * samples_per_arc)
            lo = eps if arc.start_tag == "at-infinity" else 0.0
            hi = 1.0 - eps if arc.end_tag == "at-infinity" else 1.0
            ts = np.linspace(lo, hi, samples_per_arc)
            zs = arc.point(ts)
            for t, z in zip(ts, zs):
                w.writerow([i, FMT % t, FMT % z.real, FMT % z.imag])


def write_solution_csv(sol, probes, path):
    """Probe-point solution samples: re z, im z, region, entrywise m."""
    n = sol.mu.n
    from .solver import evaluate_solution

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        head = ["re_z", "im_z", "region"]
        for r in range(1, n + 1):
            for c in range(1, n + 1):
                head += [f"re_m{r}{c}", f"im_m{r}{c}"]
        w.writerow(head)
        for region in sorted(probes):
            zs = probes[region]
            ms = evaluate_solution(sol, zs)
            for z, m in zip(zs, ms):
                row = [FMT % z.real, FMT % z.imag, region]
                for r in range(n):
                    for c in range(n):
                        row += [FMT % m[r, c].real, FMT % m[r, c].imag]
                w.writerow(row)


def write_density_csv(sol, path):
    """Node-by-node solved density mu."""
    n = sol.mu.n
    g = sol.grid
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        head = ["arc", "t", "re_z", "im_z"]
        for r in range(1, n + 1):
            for c in range(1, n + 1):
                head += [f"re_mu{r}{c}", f"im_mu{r}{c}"]
        w.writerow(head)
        for j in range(g.size):
            row = [int(g.arc_index[j]), FMT % g.t[j],
                   FMT % g.nodes[j].real, FMT % g.nodes[j].imag]
            for r in range(n):
                for c in range(n):
                    v = sol.mu.values[j, r, c]
                    row += [FMT % v.real, FMT % v.imag]
            w.writerow(row)


def write_convergence_csv(reports, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["identity", "N", "error", "order"])
        for rep in reports:
            for identity, nn, err, order in rep.rows():
                w.writerow([identity, nn, FMT % err, FMT % order])


def write_diagnostics_text(diag, path):
    keys = sorted(k for k in diag if not isinstance(diag[k], np.ndarray))
    out = []
    for k in keys:
        v = diag[k]
        if isinstance(v, float):
            out.append(f"{k} {_fmt(v)}")
        else:
            out.append(f"{k} {v}")
    Path(path).write_text("\n".join(out) + "\n")
