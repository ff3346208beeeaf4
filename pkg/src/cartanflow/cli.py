"""Command line interface.

    cartanflow diagonalize SPEC [--grid a:b:n | --times t1,t2,...]
    cartanflow lift SPEC ...
    cartanflow flow SPEC ... [--gap-min X]
    cartanflow check SPEC ... [--seed N]
    cartanflow families
    cartanflow corpus [NAME]

SPEC is a path-specification JSON file, ``-`` for standard input, or
``builtin:NAME``.  Exit codes: 0 success, 1 input error, 2 solver failure,
3 near-singular abort, 4 check failure.

CSV output starts with the line ``# cartanflow v1`` and a ``# key=value``
line describing the run, then one header row and one row per sample.
Trailing ``# key=value`` lines carry summary metadata.  Complex entries
are written as interleaved ``_re``/``_im`` columns; group elements are
flattened column-major (``U_i_j`` is row i, column j, 1-based).
"""
import argparse
import io
import json
import math
import sys
import warnings

import numpy as np

from . import engine, oracles
from .config import DEFAULT
from .errors import (
    CartanflowError,
    MatchAmbiguous,
    MembershipError,
    NearSingularPoint,
    SolverFailure,
)
from .families import (
    KINDS,
    _REJECTED,
    adjoint_action,
    embed_a,
    parse_family,
    validate_p,
)
from .lie_ops import ad_inverse, bracket_kp, bracket_pp, commutant_projection, complement_projection
from .paths import BUILTINS, builtin, path_from_json, path_to_json
from .serialize import fmt

VERSION_LINE = "# cartanflow v1"
EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_SINGULAR, EXIT_CHECK = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# input
# --------------------------------------------------------------------------

def load_spec(source):
    if source.startswith("builtin:"):
        return builtin(source[len("builtin:"):])
    try:
        text = sys.stdin.read() if source == "-" else open(source, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {source}: {exc}") from exc
    try:
        return path_from_json(obj)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"invalid path specification: {exc}") from exc


def parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError("--grid expects a:b:n")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"bad --grid {text!r}") from exc
    if n < 2 or not a < b:
        raise InputError("--grid needs a < b and n >= 2")
    return (a, b, n)


def parse_times(text):
    try:
        ts = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad --times {text!r}") from exc
    if not ts or any(b <= a for a, b in zip(ts, ts[1:])):
        raise InputError("--times must be strictly increasing")
    return np.array(ts)


def parse_tolerances(items):
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects key=value, got {item!r}")
        try:
            overrides[key.strip()] = float(value)
        except ValueError as exc:
            raise InputError(f"bad tolerance value in {item!r}") from exc
    try:
        return DEFAULT.with_overrides(**overrides)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc.args[0]) if exc.args else str(exc)) from exc


def resolve_grid(args, spec):
    if args.grid and args.times:
        raise InputError("use either --grid or --times")
    if args.times:
        grid = parse_times(args.times)
    elif args.grid:
        grid = parse_grid(args.grid)
    else:
        grid = (spec.domain[0], spec.domain[1], 101)
    try:
        return engine.as_grid(spec, grid)
    except (ValueError, CartanflowError) as exc:
        raise InputError(str(exc)) from exc


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _num(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    x = float(x)
    return None if math.isnan(x) else x


def _text(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return fmt(v)


class Table:
    """Column-oriented result with CSV and JSON renderings."""

    def __init__(self, command, spec):
        self.command = command
        self.spec = spec
        self.columns = []
        self.rows = []
        self.meta = {}

    def to_csv(self):
        out = io.StringIO()
        out.write(VERSION_LINE + "\n")
        fam = self.spec.family
        out.write(f"# command={self.command} family={fam.name} kind={self.spec.kind}\n")
        out.write(",".join(self.columns) + "\n")
        for row in self.rows:
            out.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
        for key in sorted(self.meta):
            v = self.meta[key]
            out.write(f"# {key}={_text(v)}\n")
        return out.getvalue()

    def to_json(self):
        obj = {
            "format": VERSION_LINE[2:],
            "command": self.command,
            "family": self.spec.family.name,
            "kind": self.spec.kind,
            "columns": self.columns,
            "rows": [[v if isinstance(v, str) else _num(v) for v in row] for row in self.rows],
            "meta": {k: (v if isinstance(v, str) else _num(v)) for k, v in sorted(self.meta.items())},
        }
        return json.dumps(obj, indent=1) + "\n"


def _coord_columns(prefix, r):
    return [f"{prefix}_{i + 1}" for i in range(r)]


def _group_columns(fam):
    blocks = [("UL", fam.p), ("UR", fam.q)] if fam.is_svd else [("U", fam.n)]
    cols = []
    for name, m in blocks:
        for j in range(m):
            for i in range(m):
                base = f"{name}_{i + 1}_{j + 1}"
                cols.extend([base + "_re", base + "_im"] if fam.is_complex else [base])
    return cols


def _group_values(fam, u):
    blocks = (u.left, u.right) if fam.is_svd else (u,)
    vals = []
    for b in blocks:
        for z in np.asarray(b).ravel(order="F"):
            vals.extend([z.real, z.imag] if fam.is_complex else [np.real(z)])
    return vals


def emit(table, args):
    text = table.to_json() if args.format == "json" else table.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_diagonalize(args):
    spec = load_spec(args.spec)
    tol = parse_tolerances(args.tol)
    ts = resolve_grid(args, spec)
    fam = spec.family
    r = fam.a_dim
    table = Table("diagonalize", spec)
    table.columns = ["t"] + _coord_columns("lambda", r) + ["face", "residual_offdiag", "residual_group"]
    xs = spec.values(ts)
    failed = 0
    for i, t in enumerate(ts):
        try:
            _, lam, face, off, grp = engine._sorted_sample(fam, xs[i], i, tol)
        except MembershipError as exc:
            raise InputError(f"sample {i} (t={fmt(t)}): {exc}") from exc
        except SolverFailure:
            failed += 1
            table.rows.append([t] + [math.nan] * r + ["FAILED", math.nan, math.nan])
            continue
        table.rows.append([t] + list(lam) + [face.hash, off, grp])
    offs = [row[-2] for row in table.rows if row[-3] != "FAILED"]
    table.meta = {
        "samples": ts.size,
        "failed": failed,
        "max_residual_offdiag": max(offs) if offs else math.nan,
        "degenerate_samples": sum(1 for row in table.rows if row[-3] != "FAILED" and not _is_regular(row[-3])),
    }
    emit(table, args)
    return EXIT_SOLVER if failed else EXIT_OK


def _is_regular(face_hash):
    body = face_hash.split(":", 1)[1]
    classes = body.strip("{}").split("}{")
    sep = "," if "," in body else ""
    for c in classes:
        items = c.split(":")[0]
        count = len(items.split(",")) if sep else len(items)
        if count > 1 or ":0" in c:
            return False
    return True


def cmd_lift(args):
    spec = load_spec(args.spec)
    tol = parse_tolerances(args.tol)
    ts = resolve_grid(args, spec)
    if not spec.has_derivative:
        raise InputError("the lift needs derivatives; this path has none")
    r = spec.family.a_dim
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MatchAmbiguous)
        d = engine.c1_lift(spec, ts, tol)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    table = Table("lift", spec)
    table.columns = (["t"] + _coord_columns("lift", r) + _coord_columns("mu", r)
                     + _coord_columns("lambda", r) + ["face", "c1_defect"])
    for i, t in enumerate(ts):
        table.rows.append([t] + list(d.lambda_lift[i]) + list(d.mu[i]) + list(d.lambda_sorted[i])
                          + [d.face[i].hash, d.info["c1_defect"][i]])
    table.meta = {
        "samples": ts.size,
        "ambiguous_matches": len(d.info["ambiguous"]),
        "max_lift_jump": _max(engine.derivative_jumps(ts, d.lambda_lift)),
        "max_sorted_jump": _max(engine.derivative_jumps(ts, d.lambda_sorted)),
    }
    emit(table, args)
    return EXIT_OK


def _max(a):
    return float(np.max(a)) if np.size(a) else 0.0


def cmd_flow(args):
    spec = load_spec(args.spec)
    tol = parse_tolerances(args.tol)
    ts = resolve_grid(args, spec)
    if not spec.has_derivative:
        raise InputError("the flow needs derivatives; this path has none")
    if args.gap_min is not None and not args.gap_min > 0:
        raise InputError("--gap-min must be positive")
    fam = spec.family
    r = fam.a_dim
    try:
        d = engine.analytic_flow(spec, ts, gap_min=args.gap_min, tol=tol)
    except NearSingularPoint as exc:
        print(f"near-singular point at t={fmt(exc.t)}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    table = Table("flow", spec)
    table.columns = (["t"] + _coord_columns("lift", r) + _coord_columns("mu", r) + ["face", "residual_offdiag", "residual_group"]
                     + _group_columns(fam))
    for i, t in enumerate(ts):
        table.rows.append([t] + list(d.lambda_lift[i]) + list(d.mu[i])
                          + [d.face[i].hash, d.residual_offdiag[i], d.residual_group[i]] + _group_values(fam, d.U[i]))
    table.meta = {
        "samples": ts.size,
        "max_residual_offdiag": float(d.residual_offdiag.max()),
        "max_residual_group": float(d.residual_group.max()),
        "min_root": float(d.info["min_root"].min()),
        "relaxed": "true" if d.info["relaxed"] else "false",
    }
    emit(table, args)
    return EXIT_OK


# --------------------------------------------------------------------------
# invariant suite
# --------------------------------------------------------------------------

def _fnorm(x):
    if hasattr(x, "left"):
        return float(np.sqrt(np.linalg.norm(x.left) ** 2 + np.linalg.norm(x.right) ** 2))
    return float(np.linalg.norm(x))


def run_checks(spec, ts, tol, seed):
    """List of ``(name, status, value, limit, note)`` with status pass/fail/skip/info."""
    fam = spec.family
    xs = spec.values(ts)
    results = []

    worst = max(validate_p(fam, x) / (1.0 + np.linalg.norm(x)) for x in xs)
    ok = worst <= tol.member
    results.append(("membership", "pass" if ok else "fail", worst, tol.member, "relative violation of p constraints"))
    if not ok:
        return results

    gen = oracles.InstanceGenerator(fam, seed)
    picks = np.unique(np.linspace(0, ts.size - 1, min(ts.size, 8)).astype(int))

    eq = 0.0
    for i in picks:
        u, b = gen.k_element(), gen.p_element()
        x = xs[i]
        lhs = adjoint_action(fam, u, commutant_projection(fam, x, b, tol.cluster))
        rhs = commutant_projection(fam, adjoint_action(fam, u, x), adjoint_action(fam, u, b), tol.cluster)
        eq = max(eq, _fnorm(lhs - rhs) / (1.0 + _fnorm(b)))
    results.append(("equivariance", "pass" if eq <= 1e-8 else "fail", eq, 1e-8, "Ad_U Pi_x = Pi_{Ad_U x} Ad_U"))

    proj = 0.0
    for i in picks:
        x, b = xs[i], gen.p_element()
        pb = commutant_projection(fam, x, b, tol.cluster)
        scale = 1.0 + _fnorm(b)
        proj = max(proj, _fnorm(commutant_projection(fam, x, pb, tol.cluster) - pb) / scale)
        proj = max(proj, _fnorm(commutant_projection(fam, x, x, tol.cluster) - x) / (1.0 + _fnorm(x)))
        proj = max(proj, _fnorm(bracket_pp(fam, x, pb)) / (scale * (1.0 + _fnorm(x))))
        c = complement_projection(fam, x, b, tol.cluster)
        try:
            k = ad_inverse(fam, x, c, gap_min=1e-3 * (1.0 + _fnorm(x)), tol=tol)
        except CartanflowError:
            continue
        proj = max(proj, _fnorm(bracket_kp(fam, k, x) + c) / scale)
    results.append(("projection", "pass" if proj <= 1e-8 else "fail", proj, 1e-8,
                    "Pi idempotent, Pi x = x, [x, Pi b] = 0, ad_x ad_x^-1 = id"))

    m = engine.measurable_curve(spec, ts, tol)
    rec = 0.0
    for i in range(ts.size):
        back = adjoint_action(fam, m.U[i], embed_a(fam, m.lambda_sorted[i]))
        rec = max(rec, _fnorm(back - xs[i]) / (1.0 + _fnorm(xs[i])))
    results.append(("reconstruction", "pass" if rec <= tol.solve else "fail", rec, tol.solve, "Ad_U(lambda) = rho"))

    lip = 0.0
    for i in range(ts.size - 1):
        lip = max(lip, np.linalg.norm(m.lambda_sorted[i + 1] - m.lambda_sorted[i]) - np.linalg.norm(xs[i + 1] - xs[i]))
    results.append(("lipschitz", "pass" if lip <= 1e-10 else "fail", max(lip, 0.0), 1e-10,
                    "|dlambda_sorted| <= |drho| between samples"))

    if not spec.has_derivative:
        results.append(("product_rule", "skip", math.nan, math.nan, "no derivative"))
        results.append(("resolvent", "skip", math.nan, math.nan, "no derivative"))
        return results

    try:
        flow = engine.analytic_flow(spec, ts, tol=tol)
    except NearSingularPoint as exc:
        results.append(("product_rule", "skip", math.nan, math.nan, f"flow stops at t={fmt(exc.t)}"))
    else:
        pr = 0.0
        h = float(np.max(np.diff(ts)))
        for i in range(1, ts.size - 1):
            fd = (xs[i + 1] - xs[i - 1]) / (ts[i + 1] - ts[i - 1])
            model = adjoint_action(fam, flow.U[i], embed_a(fam, flow.mu[i])) + bracket_kp(fam, flow.info["k"][i], xs[i])
            pr = max(pr, _fnorm(model - fd))
        limit = h * (1.0 + max(_fnorm(d) for d in spec.derivatives(ts)))
        results.append(("product_rule", "pass" if pr <= limit else "fail", pr, limit,
                        f"central difference of rho vs Ad_U(mu) + [k, rho], O(h) with h={fmt(h)}"))

    best_gap, best = max((oracles.min_root_along(spec, [ts[i]]), i) for i in picks)
    if best_gap <= 1e-3:
        results.append(("resolvent", "skip", math.nan, math.nan, "no regular sample"))
    else:
        a, b = spec.domain
        t = min(max(float(ts[best]), a + 2e-5), b - 2e-5)
        val = engine.resolvent_crosscheck(spec, t, 1e-5, tol)
        results.append(("resolvent", "pass" if val <= 1e-6 else "fail", val, 1e-6, f"at t={fmt(t)}"))

    if not spec.has_derivative:
        return results
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MatchAmbiguous)
        lift = engine.c1_lift(spec, ts, tol)
    sj = _max(engine.derivative_jumps(ts, lift.lambda_sorted))
    lj = _max(engine.derivative_jumps(ts, lift.lambda_lift))
    results.append(("lift_kink", "info", lj, sj, f"sorted-curve derivative jump {fmt(round(sj, 12))}, lifted jump {fmt(round(lj, 12))}"))
    return results


def cmd_check(args):
    spec = load_spec(args.spec)
    tol = parse_tolerances(args.tol)
    ts = resolve_grid(args, spec)
    results = run_checks(spec, ts, tol, args.seed)
    passed = all(r[1] in ("pass", "skip", "info") for r in results)
    summary = {
        "format": VERSION_LINE[2:],
        "command": "check",
        "family": spec.family.name,
        "passed": passed,
        "checks": [
            {"name": n, "status": s, "value": _num(v), "limit": _num(lim), "note": note}
            for n, s, v, lim, note in results
        ],
    }
    lines = []
    if args.format != "json":
        lines.append(f"{'check':<16}{'status':<8}{'value':>14}{'limit':>12}  note")
        for n, s, v, lim, note in results:
            vs = "-" if math.isnan(v) else f"{v:.3e}"
            ls = "-" if math.isnan(lim) else f"{lim:.1e}"
            lines.append(f"{n:<16}{s:<8}{vs:>14}{ls:>12}  {note}")
    lines.append(json.dumps(summary, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_CHECK


def cmd_families(args):
    rows = []
    examples = ["real-sym-evd:3", "herm-evd:3", "real-svd:3x2", "complex-svd:3x2", "skew-evd:4", "skew-evd:5"]
    for name in examples:
        fam = parse_family(name)
        rows.append({"example": name, "kind": fam.kind, "a_dim": fam.a_dim, "weyl": fam.weyl_label})
    if args.format == "json":
        sys.stdout.write(json.dumps({"families": rows, "kinds": list(KINDS), "unsupported": sorted(_REJECTED)}, indent=1) + "\n")
    else:
        for r in rows:
            sys.stdout.write(f"{r['example']:<18}{r['kind']:<14}a_dim={r['a_dim']:<3}{r['weyl']}\n")
        sys.stdout.write("unsupported: " + ", ".join(sorted(_REJECTED)) + "\n")
    return EXIT_OK


def cmd_corpus(args):
    if not args.name:
        for name in sorted(BUILTINS):
            b = BUILTINS[name]
            sys.stdout.write(f"{name:<16}{b.family.name:<18}[{fmt(b.domain[0])}, {fmt(b.domain[1])}]\n")
        return EXIT_OK
    spec = oracles.corpus(args.name)
    text = json.dumps(path_to_json(spec), indent=1) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="cartanflow", description="Diagonalize matrix paths in Cartan families.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices=("csv", "json"), default="csv"):
        p.add_argument("spec", help="path spec JSON file, '-' for stdin, or builtin:NAME")
        p.add_argument("--grid", help="uniform grid a:b:n")
        p.add_argument("--times", help="explicit comma-separated times")
        p.add_argument("--tol", action="append", metavar="KEY=VALUE", help="override a tolerance (repeatable)")
        p.add_argument("--format", choices=fmt_choices, default=default)
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        return p

    common(sub.add_parser("diagonalize", help="sorted eigenvalues, faces and residuals per sample"))
    common(sub.add_parser("lift", help="differentiable lift through crossings"))
    p = common(sub.add_parser("flow", help="continuous U(t) along a regular path"))
    p.add_argument("--gap-min", type=float, default=None, dest="gap_min")
    common(sub.add_parser("check", help="run the invariant suite"), ("table", "json"), "table")
    p = sub.add_parser("families", help="list supported families")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p = sub.add_parser("corpus", help="list builtin paths or print one as JSON")
    p.add_argument("name", nargs="?")
    p.add_argument("--out")
    return parser


COMMANDS = {
    "diagonalize": cmd_diagonalize,
    "lift": cmd_lift,
    "flow": cmd_flow,
    "check": cmd_check,
    "families": cmd_families,
    "corpus": cmd_corpus,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NearSingularPoint as exc:
        print(f"near-singular point at t={fmt(exc.t) if exc.t is not None else '?'}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CartanflowError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
