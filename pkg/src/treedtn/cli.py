"""Command-line front end.

    treedtn <command> [--m M] [--beta B] [--datum G] [--branch PI] [--depths K..L]
                      [--eta E] [--tol T] [--seed S] [--out PATH] [--format csv|json]
                      [--config FILE]

Values from ``--config`` (a JSON object with the same keys, dashes or
underscores) are overridden by flags given on the command line.

Exit status: 0 success, 1 bad input, 2 an invariant failed, 3 a numerical
tolerance was not met.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import dirichlet, dtn, levels, walk
from .data import BoundaryDatum, Polynomial, datum_to_spec, parse_datum
from .errors import (DomainError, InvariantError, ToleranceNotMetError, TreeDtnError,
                     UnsupportedOperationError)
from .tree import Branch, Vertex, as_rational, vertices

EXIT_OK, EXIT_PRECONDITION, EXIT_INVARIANT, EXIT_TOLERANCE = 0, 1, 2, 3

COMMANDS = ("solve", "trace", "lambda", "gamma", "kernel", "compare",
            "counterexample", "growth", "walk", "check")

DEFAULTS = {
    "m": 2, "beta": "1/3", "datum": "linear", "lower_datum": "const(0)", "branch": "1/3",
    "depths": None, "eta": None, "tol": 1e-12, "seed": 0, "out": None, "format": "csv",
    "samples": 100000, "vertex": "", "grid": 33, "a1": "1", "threshold": "1000000",
}

DEFAULT_DEPTHS = {
    "solve": "0..4", "trace": "1..20", "lambda": "2..14", "gamma": "2..16", "kernel": "16",
    "compare": "6", "counterexample": "1", "growth": "1..12", "walk": "30", "check": "6",
}


@dataclass
class ExperimentConfig:
    command: str
    m: int
    beta: Fraction
    datum: BoundaryDatum
    lower_datum: BoundaryDatum
    branch: Branch
    depths: list
    eta: dtn.NormalVector | None
    tol: float
    seed: int
    out: str | None
    format: str
    samples: int
    vertex: Vertex
    grid: int
    a1: Fraction
    threshold: Fraction
    echo: dict = field(default_factory=dict)


def parse_depths(text) -> list[int]:
    """``"2..14"``, ``"2:14"``, ``"2,4,8"`` or a single integer."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(v) for v in text]
    text = str(text).strip()
    match = re.fullmatch(r"(\d+)\s*(?:\.\.|:)\s*(\d+)", text)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if lo > hi:
            raise DomainError(f"empty depth range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise DomainError(f"cannot parse depths {text!r}") from None


def parse_beta(value) -> Fraction:
    if isinstance(value, float):
        print(f"warning: beta {value!r} given as a binary float; using its decimal form "
              f"{Fraction(repr(value))}", file=sys.stderr)
    try:
        return as_rational(value)
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"cannot parse beta {value!r}") from None


def parse_branch(text, m: int) -> Branch:
    """A point ``t`` (``"1/3"``, ``"0.25"``), digits with a repeating block
    (``"1.0(0.1)"``) or a real expression (``"real:sqrt(2)/2"``)."""
    text = str(text).strip()
    if text.startswith("real:"):
        return Branch.from_real(text[5:], m)
    match = re.fullmatch(r"([\d.]*)\(([\d.]+)\)", text)
    if match:
        head = [int(d) for d in match.group(1).split(".") if d]
        period = [int(d) for d in match.group(2).split(".") if d]
        return Branch.from_digits(head, period, m)
    try:
        return Branch.from_point(as_rational(text), m)
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"cannot parse branch {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treedtn", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with default values for the flags")
    parser.add_argument("--m", type=int)
    parser.add_argument("--beta", help="exact fraction a/b or decimal")
    parser.add_argument("--datum", help="linear, square, const(c), poly(c0,c1,..), chi(n,j), indicator(a,b)")
    parser.add_argument("--lower-datum", dest="lower_datum", help="smaller datum for compare")
    parser.add_argument("--branch", help="boundary point t, digits like 0.1(0.1), or real:<expr>")
    parser.add_argument("--depths", help="K..L, K:L, comma list or single depth")
    parser.add_argument("--eta", help="comma-separated normal vector")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int, help="walks per estimate")
    parser.add_argument("--vertex", help="vertex digits, e.g. 1.0 (empty for the root)")
    parser.add_argument("--grid", type=int, help="t-grid size for kernel profiles")
    parser.add_argument("--a1", help="seed discrepancy for growth")
    parser.add_argument("--threshold", help="growth target value")
    parser.add_argument("--out", help="output path (stdout if omitted)")
    parser.add_argument("--format", choices=("csv", "json"))
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    values = dict(DEFAULTS)
    values["depths"] = DEFAULT_DEPTHS[args.command]
    if args.config:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from None
        named = file_values.pop("command", args.command)
        if named != args.command:
            raise DomainError(f"config is for {named!r}, not {args.command!r}")
        for key, value in file_values.items():
            key = key.replace("-", "_")
            if key not in values:
                raise DomainError(f"unknown config key {key!r}")
            values[key] = value
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    m = int(values["m"])
    if m < 2:
        raise DomainError("m must be at least 2")
    beta = parse_beta(values["beta"])
    datum = parse_datum(values["datum"], m)
    lower = parse_datum(values["lower_datum"], m)
    branch = parse_branch(values["branch"], m)
    depths = parse_depths(values["depths"])
    if any(d < 0 for d in depths):
        raise DomainError("depths must be non-negative")
    eta = values["eta"]
    if eta is None:
        eta = ",".join(["-1", "1"] + ["0"] * (m - 2))
    eta = dtn.NormalVector.parse(eta) if isinstance(eta, str) else dtn.NormalVector.of(eta)
    if eta.m != m:
        raise DomainError(f"eta has {eta.m} components but m = {m}")
    vertex = Vertex.parse(str(values["vertex"]), m)
    echo = {k: (str(v) if isinstance(v, (Fraction,)) else v) for k, v in values.items()}
    echo["command"] = args.command
    return ExperimentConfig(args.command, m, beta, datum, lower, branch, depths, eta,
                            float(values["tol"]), int(values["seed"]), values["out"],
                            values["format"], int(values["samples"]), vertex, int(values["grid"]),
                            as_rational(values["a1"]), as_rational(values["threshold"]), echo)


# output

def _cell(value):
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, "item"):
        return value.item()
    return value


@dataclass
class Result:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    status: int = EXIT_OK


def render(cfg: ExperimentConfig, result: Result) -> str:
    if cfg.format == "json":
        payload = {"config": cfg.echo, "columns": result.columns,
                   "rows": [dict(zip(result.columns, row)) for row in result.rows],
                   "summary": result.summary}
        return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_jsonable(cfg.echo), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_cell(v) for v in row])
    for key in sorted(result.summary):
        buf.write(f"# {key}: {json.dumps(_jsonable(result.summary[key]), sort_keys=True)}\n")
    return buf.getvalue()


# commands

def _float(value):
    return None if value is None else float(value)


def cmd_solve(cfg):
    s = dirichlet.Solution(cfg.datum, cfg.beta, cfg.m)
    rows = []
    worst = 0
    for x in vertices(cfg.m, max(cfg.depths)):
        r = dirichlet.harmonic_residual(s, x)
        worst = max(worst, abs(r))
        rows.append([str(x), x.level, s(x), float(s(x)), r])
    status = EXIT_OK
    if (cfg.datum.exact and worst != 0) or (not cfg.datum.exact and worst > 1e-10):
        status = EXIT_INVARIANT
    return Result(["vertex", "level", "value", "value_float", "residual"], rows,
                  {"max_abs_residual": worst, "note": s.note}, status)


def cmd_trace(cfg):
    rows = [[r.k, r.value, float(r.value), _float(r.target), float(r.gap)]
            for r in dirichlet.boundary_trace(cfg.datum, cfg.beta, cfg.branch, cfg.depths)]
    return Result(["k", "value", "value_float", "target", "gap"], rows,
                  {"branch": cfg.branch.label})


def cmd_lambda(cfg):
    sweep = dtn.lambda_sweep(cfg.datum, cfg.beta, cfg.eta, cfg.branch, cfg.depths)
    rows = [[e.k, _float(e.value), _float(e.target), _float(e.gap),
             _float(e.diagnostics.get("midpoint_gap"))] for e in sweep.estimates]
    summary = {"fitted_slope": sweep.slope, "expected_slope": sweep.info["expected_slope"],
               "note": sweep.final.diagnostics.get("note")}
    return Result(["k", "estimate", "target", "gap", "midpoint_gap"], rows, summary)


def cmd_gamma(cfg):
    sweep = dtn.gamma_sweep(cfg.datum, cfg.beta, cfg.branch, cfg.depths)
    quad = sweep.info.get("quadrature")
    tail = quad.tail_bound if quad else None
    rows = [[e.k, float(e.value), _float(e.target), _float(e.gap), float(e.diagnostics["bulk"]),
             float(e.diagnostics["J1"]), float(e.diagnostics["J2"]), tail] for e in sweep.estimates]
    summary = {"convergent": sweep.info["convergent"]}
    if quad:
        summary.update(quadrature=float(quad.value), tail_bound=quad.tail_bound,
                       nominal_tail=quad.nominal_tail, truncation_depth=quad.truncation_depth)
    else:
        summary["note"] = "p*m <= 1: J2 need not vanish, no limit reported"
    return Result(["k", "estimate", "target", "gap", "bulk", "J1", "J2", "tail"], rows, summary)


def cmd_kernel(cfg):
    lo, hi = Fraction(0), Fraction(1)
    ts = [lo + (hi - lo) * Fraction(2 * i + 1, 2 * cfg.grid) for i in range(cfg.grid)]
    ts = [t for t in ts if t != cfg.branch.point]
    profile = dtn.kernel_profile(cfg.branch, cfg.beta, ts)
    rows = [[t, float(t), n, float(v)] for t, n, v in zip(profile.ts, profile.depths, profile.values)]
    return Result(["t", "t_float", "N", "K"], rows, {"branch": cfg.branch.label})


def cmd_compare(cfg):
    depth = max(cfg.depths)
    report = dirichlet.comparison_check(cfg.lower_datum, cfg.datum, cfg.beta, cfg.m, depth, cfg.tol)
    rows = [[str(x), x.level] for x in report.violations]
    summary = {"vertices_checked": report.vertices_checked, "violations": len(report.violations),
               "max_excess": report.max_excess}
    return Result(["vertex", "level"], rows, summary,
                  EXIT_OK if report.ok else EXIT_INVARIANT)


def cmd_counterexample(cfg):
    ce = dirichlet.counterexample_beta0()
    rows = [[f"u(∅,{x})" if x else "u(∅)", x, v] for x, v in ce.values.items() if len(x) <= 1]
    ok = ce.u_touch == 0 and ce.u_witness == 1
    print(f"u(∅,0)={ce.u_touch}, u(∅,2)={ce.u_witness}", file=sys.stderr)
    return Result(["label", "vertex", "value"], rows,
                  {"datum": datum_to_spec(ce.datum), "m": 3, "beta": "0"},
                  EXIT_OK if ok else EXIT_INVARIANT)


def cmd_growth(cfg):
    w = dirichlet.GrowthWitness(cfg.beta, cfg.a1, cfg.m)
    steps = max(cfg.depths)
    base = w.a(2) - w.a(1)
    rows, ok = [], True
    for n in range(1, steps + 1):
        inc = w.a(n + 1) - w.a(n)
        expected = w.p ** (n - 1) * base
        ok &= inc == expected
        rows.append([n, "0" * (n + 1), 1 + w.a(n), float(1 + w.a(n)), inc, expected])
    n_hit, value = w.first_exceeding(cfg.threshold)
    summary = {"first_n_exceeding": n_hit, "value_there": float(value),
               "threshold": str(cfg.threshold)}
    return Result(["n", "path_vertex", "value", "value_float", "increment", "expected_increment"],
                  rows, summary, EXIT_OK if ok else EXIT_INVARIANT)


def cmd_walk(cfg):
    D = max(cfg.depths)
    wc = walk.WalkConfig(cfg.beta, cfg.m, D, cfg.samples, cfg.seed)
    est = walk.estimate_u(cfg.datum, wc, cfg.vertex)
    exact = dirichlet.solve(cfg.datum, cfg.beta, cfg.vertex)
    ok = est.consistent_with(exact)
    row = [str(cfg.vertex), est.mean, est.stderr, est.bias_bound, est.N, est.D, est.seed,
           exact, float(exact), ok]
    return Result(["vertex", "mean", "stderr", "bias_bound", "N", "D", "seed", "exact",
                   "exact_float", "consistent"], [row], {}, EXIT_OK if ok else EXIT_INVARIANT)


def run_checks(depth: int = 6) -> list[tuple]:
    """A quick pass over the main invariants; returns ``(name, passed, detail)``."""
    results = []
    square = Polynomial([0, 0, 1])
    for m in (2, 3):
        for beta in (Fraction(0), Fraction(1, 3)):
            cert = levels.certify_harmonic(square, beta, m, depth)
            results.append((f"harmonic m={m} beta={beta}", cert.all_zero,
                            f"{cert.vertices_checked} vertices"))
    for m in range(2, 7):
        eta = [Fraction(i * i - 3, 7) for i in range(m)]
        eta[-1] -= sum(eta)
        eta = dtn.NormalVector(eta)
        same = m * eta.dot(dtn.omega(m)) == eta.dot(dtn.varpi(m))
        results.append((f"m <eta, omega> = <eta, varpi> m={m}", same, ""))
    beta = Fraction(2, 5)
    p = beta / (1 - beta)
    s = dirichlet.Solution(square, beta, 3)
    bad_mass = bad_diff = 0
    for x in vertices(3, min(depth, 4)):
        if x.is_root:
            continue
        for j in range(3):
            bad_mass += dtn.kernel_integral(x, j, beta) != 0
            bad_diff += s(x.child(j)) - s(x) != -(1 - p) * dtn.kernel_integral(x, j, beta, square)
    results.append(("kernel zero mass", bad_mass == 0, f"{bad_mass} failures"))
    results.append(("kernel represents differences", bad_diff == 0, f"{bad_diff} failures"))
    ce = dirichlet.counterexample_beta0()
    results.append(("beta=0 counterexample", ce.u_touch == 0 and ce.u_witness == 1, ""))
    trace = dirichlet.solve_characteristic(1, 0, Fraction(1, 3), 3, 2)
    sol = dirichlet.Solution(parse_datum("chi(1,0)", 2), Fraction(1, 3), 2)
    ok = trace.sequence[:2] == [Fraction(3, 2), Fraction(7, 4)] and trace.b == 2 and \
        all(trace.u(x) == sol(x) for x in vertices(2, depth))
    results.append(("characteristic recursion", ok, f"b = {trace.b}"))
    report = dirichlet.comparison_check(square, Polynomial([0, 1]), Fraction(1, 4), 2, depth)
    results.append(("comparison t^2 <= t", report.ok, f"{len(report.violations)} violations"))
    w = dirichlet.GrowthWitness(Fraction(1, 2))
    results.append(("growth witness linear", [w.a(n) for n in range(6)] == list(range(6)), ""))
    return results


def cmd_check(cfg):
    results = run_checks(max(cfg.depths))
    rows = [[name, ok, detail] for name, ok, detail in results]
    ok = all(r[1] for r in results)
    return Result(["check", "passed", "detail"], rows, {"all_passed": ok},
                  EXIT_OK if ok else EXIT_INVARIANT)


HANDLERS = {
    "solve": cmd_solve, "trace": cmd_trace, "lambda": cmd_lambda, "gamma": cmd_gamma,
    "kernel": cmd_kernel, "compare": cmd_compare, "counterexample": cmd_counterexample,
    "growth": cmd_growth, "walk": cmd_walk, "check": cmd_check,
}


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--eta -1,1`` as ``--eta=-1,1`` so argparse does not read the
    value as an option."""
    out = []
    for token in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and re.fullmatch(r"-\d.*", token)):
            out[-1] = f"{out[-1]}={token}"
        else:
            out.append(token)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_attach_negative_values(argv))
    try:
        cfg = load_config(args)
        result = HANDLERS[cfg.command](cfg)
    except ToleranceNotMetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DomainError, UnsupportedOperationError, TreeDtnError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    text = render(cfg, result)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
