"""Command-line frontend: ``msk <command> [flags]``.

Exit codes: 0 when every gate passes, 2 when a mathematical gate fails,
1 for usage, I/O and format errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .circle_spectrum import CircleMoments, ergodic_check, toeplitz_psd_test
from .errors import ExactIdentityError, GateFailure, NotConvergedError
from .matrix_sequences import (
    EigenvalueFamily,
    estimate_circle_symbol,
    estimate_symbol,
)
from .measure_reconstruct import symbol_ergodic_average
from .moment_core import MomentSequence, is_completely_monotonic
from .weil_systems import (
    QuadraticNumber,
    WeilMember,
    bound_check,
    compute_B,
    compute_N,
    exact_string,
    family_limits,
    synthesize_example,
    zeta_consistency,
)

EXIT_OK, EXIT_USAGE, EXIT_GATE = 0, 1, 2
FAMILY_KINDS = ("hermitian-real", "constant-modulus", "general", "weil")
ZETA_MAX_ORDER = 30

BASIS = {
    "complete-monotonicity": "Hausdorff moment theorem",
    "convergence": "trace-moment criterion for spectral symbols (limits of (1/n) Tr A_n^k)",
    "psd": "Caratheodory-Toeplitz theorem",
    "modulus": "circle moments need |lambda| = c for every eigenvalue",
    "summability": "sum |d_k| < inf gives a continuous angular density",
    "exact-identity": "Weil relations N_m = q^m + 1 - sum lambda^m = sum_{d|m} d B_d",
    "integrality": "Moebius congruence sum_{d|m} mu(m/d) N_d = 0 (mod m)",
    "zeta-consistency": "P(t) = prod(1 - lambda t) = (1-t)(1-qt) exp(sum N_n t^n/n) = (1-t)(1-qt) prod (1-t^m)^-B_m",
    "family-identity": "-nu_m = sum_{d|m} d beta_d",
    "bound": "sum m beta_m / (q^(m/2) - 1) <= 1",
}


class InputError(Exception):
    """Malformed input file or arguments (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (Fraction, QuadraticNumber)):
        return exact_string(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return repr(x)
        return x
    return x


class Report:
    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.verdicts = []
        self.tables = {}
        self.notes = []

    def verdict(self, gate: str, passed, order=None, detail: str = "", advisory: bool = False):
        self.verdicts.append({
            "gate": gate,
            "basis": BASIS.get(gate, gate),
            "order": order,
            "passed": passed,
            "advisory": advisory,
            "detail": detail,
        })

    @property
    def failed(self) -> bool:
        return any(v["passed"] is False and not v["advisory"] for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "header": {
                "tool": "msk",
                "version": __version__,
                "command": self.command,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            },
            "config": self.config,
            "status": "fail" if self.failed else "pass",
            "verdicts": self.verdicts,
            "tables": self.tables,
            "notes": self.notes,
        }

    def dumps(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(report: Report, out) -> int:
    text = report.dumps()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_GATE if report.failed else EXIT_OK


def _write_csv(path: str, header, rows):
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- input files

def read_moment_file(path: str) -> list:
    """One real per line; blank lines and '#' comments are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        token = body.strip()
        if not token:
            continue
        col = body.index(token) + 1
        try:
            values.append(Fraction(token))
        except (ValueError, ZeroDivisionError):
            raise InputError(f"{path}: line {lineno}, column {col}: cannot parse {token!r} as a real number") from None
    if not values:
        raise InputError(f"{path}: no moments found")
    return values


def _parse_number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise InputError(f"{where}: expected a number, got {v!r}")
    try:
        return Fraction(v) if isinstance(v, str) else v
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{where}: cannot parse {v!r}") from None


def _parse_eigenvalue(v, where, exact_ok: bool):
    if isinstance(v, dict):
        if not exact_ok:
            raise InputError(f"{where}: exact {{r, s, k}} entries are only allowed in weil files")
        try:
            r = Fraction(v.get("r", 0) if not isinstance(v.get("r", 0), float) else v["r"])
            s = Fraction(v.get("s", 0) if not isinstance(v.get("s", 0), float) else v["s"])
            k = int(v.get("k", 1))
        except (TypeError, ValueError, ZeroDivisionError):
            raise InputError(f"{where}: malformed exact entry {v!r}") from None
        if isinstance(v.get("r", 0), float) or isinstance(v.get("s", 0), float):
            raise InputError(f"{where}: exact entries need integer or 'p/q' string parts")
        return QuadraticNumber(r, s, k)
    if isinstance(v, list):
        if len(v) != 2:
            raise InputError(f"{where}: expected a [re, im] pair, got {v!r}")
        re_, im = (_parse_number(x, where) for x in v)
        return complex(float(re_), float(im))
    x = _parse_number(v, where)
    if exact_ok and isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


def read_family_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    if data.get("version") != 1:
        raise InputError(f"{path}: unsupported or missing version {data.get('version')!r} (expected 1)")
    kind = data.get("kind")
    if kind not in FAMILY_KINDS:
        raise InputError(f"{path}: unknown kind {kind!r}")
    members = data.get("members")
    if not isinstance(members, list) or not members:
        raise InputError(f"{path}: 'members' must be a non-empty list")
    meta = data.get("metadata") or {}
    if not isinstance(meta, dict):
        raise InputError(f"{path}: 'metadata' must be an object")
    parsed = []
    last = 0
    for i, mem in enumerate(members):
        where = f"{path}: members[{i}]"
        if not isinstance(mem, dict) or "n" not in mem or "eigenvalues" not in mem:
            raise InputError(f"{where}: needs 'n' and 'eigenvalues'")
        n = mem["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n <= last:
            raise InputError(f"{where}: n must be an integer larger than the previous member's ({last})")
        eigs = mem["eigenvalues"]
        if not isinstance(eigs, list):
            raise InputError(f"{where}: 'eigenvalues' must be a list")
        expected = (2 * n,) if kind == "weil" else (n, 2 * n)
        if len(eigs) not in expected:
            raise InputError(f"{where}: has {len(eigs)} eigenvalues, expected {' or '.join(map(str, expected))}")
        vals = [_parse_eigenvalue(v, f"{where}.eigenvalues[{j}]", kind == "weil") for j, v in enumerate(eigs)]
        parsed.append((n, vals))
        last = n
    return {"kind": kind, "members": parsed, "metadata": meta, "path": path}


def _numeric_family(fam: dict, kind: str) -> EigenvalueFamily:
    if fam["kind"] != kind:
        raise InputError(f"{fam['path']}: this command needs kind {kind!r}, file has {fam['kind']!r}")
    members = []
    for n, vals in fam["members"]:
        arr = np.array([complex(v) for v in vals])
        if kind == "hermitian-real":
            if np.any(arr.imag != 0):
                raise InputError(f"{fam['path']}: member n={n} has non-real eigenvalues")
            arr = arr.real
        members.append((n, arr))
    radius = fam["metadata"].get("c")
    try:
        return EigenvalueFamily(tuple(members), kind, radius=float(radius) if radius is not None else None)
    except ValueError as e:
        raise InputError(f"{fam['path']}: {e}") from None


# ------------------------------------------------------------------- commands

def cmd_moments_check(args) -> int:
    values = read_moment_file(args.file)
    K = len(values) - 1 if args.order is None else args.order
    if K < 0 or K > len(values) - 1:
        raise InputError(f"--order {K} needs {K + 1} moments, file has {len(values)}")
    try:
        m = MomentSequence(tuple(values[: K + 1]))
    except ValueError as e:
        raise InputError(f"{args.file}: {e}") from None
    report = Report("moments-check", {"file": Path(args.file).name, "order": K, "tol": args.tol})
    verdict = is_completely_monotonic(m, tol=args.tol)
    report.verdict("complete-monotonicity", verdict.passed, K, verdict.describe())
    report.tables["monotonicity"] = {
        "tol": verdict.tol,
        "worst_violation": verdict.worst_violation,
        "worst_at": list(verdict.worst_at),
        "witness": list(verdict.witness) if verdict.witness else None,
    }
    report.notes.extend(verdict.warnings)
    return _emit(report, args.out)


def _trace_table(report_obj):
    return [
        {"k": o.k, "limit": o.limit, "residual": o.residual, "ctol": o.ctol, "converged": o.converged}
        for o in report_obj.orders
    ]


def cmd_symbol(args) -> int:
    fam = _numeric_family(read_family_file(args.file), "hermitian-real")
    config = {"file": Path(args.file).name, "order": args.order, "grid": args.grid,
              "ctol": args.ctol, "window": args.window}
    report = Report("symbol", config)
    try:
        est = estimate_symbol(fam, args.order, args.grid, ctol=args.ctol, window=args.window)
    except NotConvergedError as e:
        report.verdict("convergence", False, args.order, str(e))
        if e.report is not None:
            report.tables["traces"] = _trace_table(e.report)
        return _emit(report, args.out)
    except GateFailure as e:
        report.verdict("convergence", True, args.order, "traces converged")
        report.verdict(e.gate, False, args.grid, str(e))
        return _emit(report, args.out)
    report.verdict("convergence", True, args.order, est.report.describe())
    report.verdict("complete-monotonicity", est.monotonicity.passed, est.reconstruction_order,
                   "rescaled moments " + est.monotonicity.describe())
    report.tables["traces"] = _trace_table(est.report)
    report.tables["bound_M"] = est.M
    report.tables["per_member_max_abs"] = fam.max_abs()
    report.tables["reconstruction_order"] = est.reconstruction_order
    eigs = fam.eigenvalues(-1)
    weyl = {}
    for name, F in (("x", lambda x: x), ("x^2", lambda x: x * x), ("x^3", lambda x: x ** 3), ("cos", math.cos)):
        emp = math.fsum(F(float(v)) for v in eigs) / len(eigs)
        weyl[name] = {"empirical": emp, "symbol": symbol_ergodic_average(est.symbol, F)}
    report.tables["weyl_check"] = weyl
    report.tables["symbol_summary"] = {
        "N": est.symbol.N, "min": float(est.symbol.values[0]), "max": float(est.symbol.values[-1]),
    }
    report.notes.extend(est.warnings)
    if args.out:
        _write_csv(f"{args.out}.symbol.csv", ("x", "k"), zip(est.symbol.grid, est.symbol.values))
    return _emit(report, args.out)


def cmd_circle(args) -> int:
    fam = _numeric_family(read_family_file(args.file), "constant-modulus")
    config = {"file": Path(args.file).name, "order": args.order, "grid": args.grid,
              "ctol": args.ctol, "window": args.window}
    report = Report("circle", config)
    try:
        est = estimate_circle_symbol(fam, args.order, ctol=args.ctol, window=args.window, N=args.grid)
    except GateFailure as e:
        if e.gate != "modulus":
            report.verdict("modulus", True, None, "constant modulus within 1e-6")
        report.verdict(e.gate, False, args.order if e.gate != "modulus" else None, str(e))
        if e.gate == "modulus":
            report.tables["modulus_spread"] = e.spread
        if isinstance(e, NotConvergedError) and e.report is not None:
            report.tables["traces"] = _trace_table(e.report)
        return _emit(report, args.out)
    m = est.moments
    report.verdict("modulus", True, None, f"relative spread {est.spread:.3e} (c = {m.radius!r})")
    report.verdict("convergence", True, args.order, est.report.describe())
    report.verdict("psd", est.psd.passed, est.psd.size - 1, est.psd.describe())
    if est.summability is not None:
        report.verdict("summability", None, args.order, est.summability.classification, advisory=True)
        report.tables["summability_partial_sums"] = est.summability.partial_sums
    report.tables["radius"] = m.radius
    report.tables["modulus_spread"] = est.spread
    report.tables["normalized_moments"] = list(m.d)
    report.tables["min_eigenvalue"] = est.psd.min_eigenvalue
    report.tables["density_summary"] = {
        "min": est.density.min_value, "max": float(est.density.values.max()),
        "mass": est.density.total_mass(),
    }
    n, eigs = fam.members[-1]
    angles = np.angle(eigs / m.radius)
    erg = ergodic_check({n: angles}, m, min(args.order, 8), args.order)
    report.tables["ergodic_check"] = {
        "n": erg.n,
        "moments": {str(k): v for k, v in erg.moment_discrepancy.items()},
        "functions": erg.function_discrepancy,
    }
    report.notes.extend(m.warnings)
    if args.out:
        _write_csv(f"{args.out}.density.csv", ("angle", "density"), zip(est.density.grid, est.density.values))
    return _emit(report, args.out)


def cmd_weil_example(args) -> int:
    config = {"k": args.k, "a": args.a, "n": args.n, "T": args.T}
    report = Report("weil example", config)
    if args.k < 1 or args.n < 1 or args.T < 1:
        raise InputError("--k, --n and --T must be positive")
    try:
        ex = synthesize_example(args.k, args.a, args.n, args.T)
    except ExactIdentityError as e:
        report.verdict("exact-identity", False, args.T, f"implementation bug: {e}")
        return _emit(report, args.out)
    report.verdict("exact-identity", True, args.T, "N_m matches the closed form for every m")
    report.verdict("integrality", all(ex.zeta.integral), args.T, "every B_m is an integer")
    order = min(args.T, ZETA_MAX_ORDER)
    zc = zeta_consistency(ex.member, order)
    detail = "three expansions agree" if zc.consistent else f"implementation bug: mismatch at t^{zc.mismatch}"
    report.verdict("zeta-consistency", zc.consistent, order, detail)
    # asymptotic measure of the family: atoms at +-sqrt(k), angles 0 and pi
    d = [(1 + (-1) ** j) / 2 for j in range(order + 1)]
    psd = toeplitz_psd_test(CircleMoments(math.sqrt(args.k), tuple(d)), order + 1)
    report.verdict("psd", psd.passed, order, "limit moments " + psd.describe())
    report.tables["N"] = list(ex.zeta.N)
    report.tables["B"] = list(ex.zeta.B)
    report.tables["P_coefficients"] = list(zc.from_roots)
    report.tables["nu"] = [exact_string(Fraction(2 * args.k ** (m // 2) if m % 2 == 0 else 0))
                           for m in range(1, args.T + 1)]
    report.notes.extend(ex.member.validate())
    return _emit(report, args.out)


def _weil_members(fam: dict):
    if fam["kind"] != "weil":
        raise InputError(f"{fam['path']}: weil analyze needs kind 'weil', file has {fam['kind']!r}")
    q = fam["metadata"].get("q", fam["metadata"].get("a"))
    if not isinstance(q, int) or isinstance(q, bool):
        raise InputError(f"{fam['path']}: metadata needs an integer 'q' (or 'a')")
    try:
        return q, [WeilMember(q, tuple(vals), n) for n, vals in fam["members"]]
    except ValueError as e:
        raise InputError(f"{fam['path']}: {e}") from None


def cmd_weil_analyze(args) -> int:
    q, members = _weil_members(read_family_file(args.file))
    config = {"file": Path(args.file).name, "T": args.T, "window": args.window, "ctol": args.ctol, "q": q}
    report = Report("weil analyze", config)
    rows = []
    ok = True
    for mem in members:
        try:
            N = compute_N(mem, args.T)
            z = compute_B(N)
        except ExactIdentityError as e:
            report.verdict("exact-identity", False, args.T, f"implementation bug at genus {mem.genus}: {e}")
            return _emit(report, args.out)
        row = {"genus": mem.genus, "N": list(z.N), "B": list(z.B), "B_integral": all(z.integral)}
        if mem.exact:
            zc = zeta_consistency(mem, min(args.T, ZETA_MAX_ORDER))
            row["zeta_consistent"] = zc.consistent
            ok = ok and zc.consistent
        row["warnings"] = mem.validate()
        rows.append(row)
    report.verdict("exact-identity", True, args.T, "Moebius round trip exact for every member")
    if any(m.exact for m in members):
        report.verdict("zeta-consistency", ok, min(args.T, ZETA_MAX_ORDER),
                       "three expansions agree" if ok else "implementation bug: expansions disagree")
    report.tables["members"] = rows
    if len(members) >= args.window + 1:
        try:
            lim = family_limits(members, args.T, args.window, args.ctol)
        except TypeError as e:
            report.notes.append(f"family limits skipped: {e}")
        else:
            conv = all(lim.converged)
            report.verdict("convergence", conv, args.T,
                           "beta and nu settled within ctol" if conv else "beta/nu not settled at some m",
                           advisory=True)
            report.verdict("family-identity", all(lim.identity_holds), args.T,
                           "-nu_m = sum d beta_d within residual + (q^m+1)/n")
            report.tables["family"] = {
                "sizes": lim.sizes, "beta": lim.beta, "nu": lim.nu,
                "beta_residual": lim.beta_residual, "nu_residual": lim.nu_residual,
                "identity_gap": lim.identity_gap, "identity_allowance": lim.identity_allowance,
            }
            if q >= 2:
                b = bound_check(lim.beta, q)
                report.verdict("bound", None if b.verdict == "suppressed" else b.verdict == "within",
                               args.T, f"{b.verdict}: minus-sum {b.sum_minus!r}, plus-sum {b.sum_plus!r}",
                               advisory=True)
                report.tables["bound"] = {"sum_plus": b.sum_plus, "sum_minus": b.sum_minus, "verdict": b.verdict}
    else:
        report.notes.append(f"family limits need at least {args.window + 1} members")
    return _emit(report, args.out)


def cmd_weil_bound(args) -> int:
    try:
        beta = [Fraction(b) for b in args.beta]
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse --beta values {args.beta!r}") from None
    config = {"q": args.q, "beta": [exact_string(b) for b in beta], "T": args.T}
    report = Report("weil bound", config)
    try:
        b = bound_check(beta, args.q, args.T)
    except ValueError as e:
        raise InputError(str(e)) from None
    passed = None if b.verdict == "suppressed" else b.verdict == "within"
    report.verdict("bound", passed, len(b.rows), b.verdict)
    report.tables["sum_plus"] = b.sum_plus
    report.tables["sum_minus"] = b.sum_minus
    report.tables["sum_plus_exact"] = b.exact_plus
    report.tables["sum_minus_exact"] = b.exact_minus
    report.tables["terms"] = [
        {"m": m, "beta": bm, "plus_term": tp, "minus_term": tm} for m, bm, tp, tm in b.rows
    ]
    if b.verdict == "suppressed":
        report.notes.append("negative beta present: verdict suppressed")
    return _emit(report, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="msk", description="Moment-problem tests for spectral symbols and Weil-system arithmetic.")
    p.add_argument("--version", action="version", version=f"msk {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mc = sub.add_parser("moments-check", help="complete-monotonicity test of a moment-list file")
    mc.add_argument("file")
    mc.add_argument("--order", type=int, default=None)
    mc.add_argument("--tol", type=float, default=None)
    mc.add_argument("--out")
    mc.set_defaults(func=cmd_moments_check)

    sy = sub.add_parser("symbol", help="monotone symbol of a hermitian-real family")
    sy.add_argument("file")
    sy.add_argument("--order", type=int, default=16)
    sy.add_argument("--grid", type=int, default=200)
    sy.add_argument("--ctol", type=float, default=None)
    sy.add_argument("--window", type=int, default=3)
    sy.add_argument("--out")
    sy.set_defaults(func=cmd_symbol)

    ci = sub.add_parser("circle", help="circle moments, PSD test and Fejer density")
    ci.add_argument("file")
    ci.add_argument("--order", type=int, default=16)
    ci.add_argument("--grid", type=int, default=1024)
    ci.add_argument("--ctol", type=float, default=None)
    ci.add_argument("--window", type=int, default=3)
    ci.add_argument("--out")
    ci.set_defaults(func=cmd_circle)

    we = sub.add_parser("weil", help="zeta-function arithmetic")
    wsub = we.add_subparsers(dest="weil_command", required=True, parser_class=_Parser)
    ex = wsub.add_parser("example", help="roots sqrt(k)(-1)^i with base a and genus n")
    ex.add_argument("--k", type=int, required=True)
    ex.add_argument("--a", type=int, required=True)
    ex.add_argument("--n", type=int, required=True)
    ex.add_argument("--T", type=int, default=24)
    ex.add_argument("--out")
    ex.set_defaults(func=cmd_weil_example)
    an = wsub.add_parser("analyze", help="N_m, B_m and family limits of a weil family file")
    an.add_argument("file")
    an.add_argument("--T", type=int, default=12)
    an.add_argument("--window", type=int, default=3)
    an.add_argument("--ctol", type=float, default=None)
    an.add_argument("--out")
    an.set_defaults(func=cmd_weil_analyze)
    bo = wsub.add_parser("bound", help="check sum m beta_m / (q^(m/2) -+ 1) <= 1")
    bo.add_argument("--q", type=int, required=True)
    bo.add_argument("--beta", nargs="+", required=True)
    bo.add_argument("--T", type=int, default=None)
    bo.add_argument("--out")
    bo.set_defaults(func=cmd_weil_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"msk: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"msk: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
