"""Command line: verify, eval, bound, alpha, mu, sweep, check, curve.

Exit codes are stable contracts:

* 0 success
* 1 search shortfall (a requested target value was not reached)
* 2 infeasible point / failed identity or constraint check
* 3 symbolic budget exceeded
* 4 I/O or parse error

Every failure path prints a machine-parseable line ``REASON: <code> <detail>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .forms import BudgetExceededError, recognize_matmul, verify_power_identity
from .params import (
    CERTIFICATE_TOLERANCES,
    check_all,
    paramset_loads,
)
from .value import (
    InfeasibleParamError,
    check_certificate,
    check_certificate_highprec,
    evaluate_bound,
    shape_table,
)

#: Monomial budget for the symbolic verification subcommand (kept small so
#: runaway q values fail fast with a clean budget error).
VERIFY_BUDGET = 10**5


def _reason(code: int, detail: str) -> int:
    print(f"REASON: {code} {detail}")
    return code


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    from .forms import component
    from .indexsets import SBAR4

    q, power = args.q, args.power
    level = 2 * power
    try:
        ok, diff = verify_power_identity(level, q, budget=args.budget)
    except BudgetExceededError as exc:
        return _reason(3, f"budget: {exc}")
    report: dict = {"q": q, "power": power, "identity": ok}
    if not ok:
        report["diff"] = str(diff)
        _emit(report, args.format)
        return _reason(2, f"decomposition identity failed: {diff}")

    table = shape_table(q)
    expected: dict = dict(table.level4 if level == 4 else table.level8)
    if level == 4:
        expected.update({t: None for t in SBAR4})  # must be "not a matmul"
    recognized = {}
    mismatches = []
    for triple, shape in sorted(expected.items()):
        got = recognize_matmul(component(level, triple, q))
        recognized[",".join(map(str, triple))] = list(got) if got else None
        if got != shape:
            mismatches.append((triple, shape, got))
    report["components_checked"] = len(recognized)
    report["shapes"] = recognized
    report["shape_table_ok"] = not mismatches
    _emit(report, args.format)
    if mismatches:
        t, want, got = mismatches[0]
        return _reason(2, f"shape table mismatch at {t}: expected {want}, got {got}")
    if args.format != "json":
        print(f"identity ok; {len(recognized)} components recognized")
    return 0


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# eval / check
# ---------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        text = Path(args.params).read_text()
        pset = paramset_loads(text)
    except (OSError, ValueError) as exc:
        return _reason(4, f"parse: {exc}")
    report = check_all(pset, CERTIFICATE_TOLERANCES)
    print(report)
    try:
        result = evaluate_bound(pset)
        print(f"q={result.q}  Q={result.Q:.9f}  R={result.R:.9f}  M={result.M:.9f}")
        print(f"lnQ={result.lnQ:.12f}  lnR={result.lnR:.12f}  lnM={result.lnM:.12f}")
        print(f"k={result.k:.12f}  nu={result.nu:.12f}")
    except InfeasibleParamError as exc:
        return _reason(2, f"infeasible: {exc}")
    if not report.passed:
        failed = ", ".join(e.cid for e in report.failures())
        return _reason(2, f"constraints failed: {failed}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.certificate).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return _reason(4, f"parse: {exc}")
    verdict = (check_certificate_highprec(doc, digits=args.digits)
               if args.digits else check_certificate(doc))
    print(verdict)
    if not verdict.passed:
        return _reason(2, "certificate check failed: " + "; ".join(verdict.issues))
    return 0


# ---------------------------------------------------------------------------
# bound / alpha / mu / sweep / curve
# ---------------------------------------------------------------------------


def _search_config(args: argparse.Namespace):
    from .optimize import SearchConfig, searchconfig_from_json_dict

    if getattr(args, "config", ""):
        cfg = searchconfig_from_json_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = SearchConfig()
    from dataclasses import replace

    overrides = {}
    if args.qs:
        overrides["qs"] = tuple(int(x) for x in args.qs.split(","))
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    return replace(cfg, **overrides)


def cmd_bound(args: argparse.Namespace) -> int:
    from .optimize import SearchFailure, optimize_omega

    try:
        cfg = _search_config(args)
    except (OSError, ValueError) as exc:
        return _reason(4, f"parse: {exc}")
    try:
        cert = optimize_omega(args.k, cfg)
    except SearchFailure as exc:
        return _reason(2, f"infeasible: {exc}")
    r = cert.result
    print(f"omega({r.k:.6f}) <= {r.nu:.6f}   (q={r.q})")
    if args.out:
        Path(args.out).write_text(cert.dumps())
        print(f"certificate written to {args.out}")
    if args.target_nu is not None and r.nu > args.target_nu:
        return _reason(1, f"search shortfall: nu={r.nu:.6f} > target {args.target_nu}")
    return 0


def cmd_alpha(args: argparse.Namespace) -> int:
    from .optimize import SearchFailure, optimize_alpha

    try:
        cfg = _search_config(args)
    except (OSError, ValueError) as exc:
        return _reason(4, f"parse: {exc}")
    try:
        cert = optimize_alpha(cfg)
    except SearchFailure as exc:
        return _reason(1, f"search shortfall: {exc}")
    r = cert.result
    print(f"alpha >= {r.k:.6f}   (nu={r.nu:.6f}, q={r.q})")
    if args.out:
        Path(args.out).write_text(cert.dumps())
        print(f"certificate written to {args.out}")
    return 0


def cmd_mu(args: argparse.Namespace) -> int:
    from .optimize import SearchFailure, solve_mu

    try:
        cfg = _search_config(args)
    except (OSError, ValueError) as exc:
        return _reason(4, f"parse: {exc}")
    try:
        mu, cert = solve_mu(cfg)
    except SearchFailure as exc:
        return _reason(1, f"search shortfall: {exc}")
    print(f"mu <= {mu:.6f}   (omega({cert.result.k:.6f}) <= {cert.result.nu:.6f}, "
          f"q={cert.result.q})")
    if args.out:
        Path(args.out).write_text(cert.dumps())
        print(f"certificate written to {args.out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    from .optimize import sweep_table

    try:
        ks = [float(x) for x in args.ks.split(",") if x.strip()]
    except ValueError as exc:
        return _reason(4, f"parse: bad --ks list: {exc}")
    if not ks:
        return _reason(4, "parse: empty --ks list")
    try:
        cfg = _search_config(args)
    except (OSError, ValueError) as exc:
        return _reason(4, f"parse: {exc}")
    out_csv = Path(args.out)
    cert_dir = out_csv.with_suffix("")
    cert_dir.mkdir(parents=True, exist_ok=True)
    rows = sweep_table(ks, cfg)
    failures = 0
    with out_csv.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "nu", "q", "certificate"])
        for k, cert, err in rows:
            if cert is None:
                failures += 1
                writer.writerow([f"{k:.6f}", "", "", f"FAILED: {err}"])
                continue
            path = cert_dir / f"cert_k{k:.6f}.json"
            path.write_text(cert.dumps())
            writer.writerow([f"{k:.6f}", f"{cert.result.nu:.9f}",
                             str(cert.result.q), str(path)])
    print(f"wrote {out_csv} ({len(rows) - failures}/{len(rows)} rows ok)")
    if failures:
        return _reason(1, f"search shortfall: {failures} row(s) failed")
    return 0


def _curve_points(args: argparse.Namespace) -> list[tuple[float, float]]:
    if args.from_csv:
        points = []
        with open(args.from_csv, newline="") as fh:
            for row in csv.DictReader(fh):
                if row.get("nu"):
                    points.append((float(row["k"]), float(row["nu"])))
        return sorted(points)
    from .optimize import sweep_table

    ks = ([float(x) for x in args.ks.split(",") if x.strip()] if args.ks
          else [0.35, 0.5, 0.75, 1.0])
    rows = sweep_table(ks, _search_config(args))
    return sorted((k, cert.result.nu) for k, cert, _ in rows if cert is not None)


#: Axis ticks highlighted on the curve (the headline values of the analysis).
CURVE_TICKS_X = (0.31389,)
CURVE_TICKS_Y = (2.0, 2.372927)


def render_curve_svg(points: Sequence[tuple[float, float]], path: str | os.PathLike) -> None:
    """Minimal unstyled SVG polyline of the (k, nu) upper-bound curve."""
    if not points:
        raise ValueError("no points to render")
    w, h, mleft, mbot = 640, 420, 60, 40
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1 = min(xs + list(CURVE_TICKS_X)), max(xs)
    y0, y1 = min(ys + list(CURVE_TICKS_Y)), max(ys)
    spanx = (x1 - x0) or 1.0
    spany = (y1 - y0) or 1.0

    def sx(x: float) -> float:
        return mleft + (x - x0) / spanx * (w - mleft - 20)

    def sy(y: float) -> float:
        return h - mbot - (y - y0) / spany * (h - mbot - 20)

    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>',
    ]
    for tx in CURVE_TICKS_X:
        if x0 <= tx <= x1:
            parts.append(f'<line x1="{sx(tx):.2f}" y1="{h - mbot}" x2="{sx(tx):.2f}" '
                         f'y2="20" stroke="gray" stroke-dasharray="4 3"/>')
            parts.append(f'<text x="{sx(tx):.2f}" y="{h - mbot + 16}" font-size="11" '
                         f'text-anchor="middle">{tx}</text>')
    for ty in CURVE_TICKS_Y:
        if y0 <= ty <= y1:
            parts.append(f'<line x1="{mleft}" y1="{sy(ty):.2f}" x2="{w - 20}" '
                         f'y2="{sy(ty):.2f}" stroke="gray" stroke-dasharray="4 3"/>')
            parts.append(f'<text x="{mleft - 6}" y="{sy(ty):.2f}" font-size="11" '
                         f'text-anchor="end" dominant-baseline="middle">{ty}</text>')
    parts.append(f'<text x="{(w + mleft) / 2}" y="{h - 6}" font-size="12" '
                 f'text-anchor="middle">k</text>')
    parts.append(f'<text x="14" y="{(h - mbot) / 2}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 14 {(h - mbot) / 2})">'
                 f'omega(k) upper bound</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def render_curve_png(points: Sequence[tuple[float, float]], path: str | os.PathLike) -> None:
    """Matplotlib rendering of the same curve, written next to the CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xs, ys = zip(*points)
    ax.plot(xs, ys, "-", color="black", lw=1.5)
    for tx in CURVE_TICKS_X:
        ax.axvline(tx, color="gray", ls="--", lw=0.8)
    for ty in CURVE_TICKS_Y:
        ax.axhline(ty, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("omega(k) upper bound")
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_curve(args: argparse.Namespace) -> int:
    try:
        points = _curve_points(args)
    except (OSError, ValueError) as exc:
        return _reason(4, f"I/O: {exc}")
    if not points:
        return _reason(1, "search shortfall: no curve points")
    base = Path(args.out)
    csv_path = base.with_suffix(".csv")
    svg_path = base.with_suffix(".svg")
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "nu"])
        for k, nu in points:
            writer.writerow([f"{k:.6f}", f"{nu:.9f}"])
    render_curve_svg(points, svg_path)
    written = [str(csv_path), str(svg_path)]
    if args.png:
        png_path = base.with_suffix(".png")
        render_curve_png(points, png_path)
        written.append(str(png_path))
    print("wrote " + ", ".join(written))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default="", help="SearchConfig JSON file (flags override)")
    p.add_argument("--qs", default="", help="comma-separated q values (default 2..10)")
    p.add_argument("--restarts", type=int, default=None,
                   help="restarts per (k, q) (default 32)")
    p.add_argument("--seed", type=int, default=None,
                   help="64-bit seed for all randomness (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: CWLASER_THREADS or logical cores)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cwlaser",
        description="Laser-method analysis of the fourth CW-tensor power: "
                    "verify decompositions, evaluate and optimize exponent bounds.")
    ap.add_argument("--version", action="version", version=f"cwlaser {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the symbolic decomposition identities")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--power", type=int, choices=(2, 4), required=True)
    p.add_argument("--budget", type=int, default=VERIFY_BUDGET)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", help="evaluate constraints and bound of a parameter file")
    p.add_argument("--params", required=True, help="ParamSet JSON file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bound", help="optimize nu at a target k")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--out", default="", help="write the certificate JSON here")
    p.add_argument("--target-nu", type=float, default=None,
                   help="exit 1 if the optimized nu exceeds this value")
    _add_search_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("alpha", help="maximize k with omega(k) = 2 (dual exponent)")
    p.add_argument("--out", default="")
    _add_search_flags(p)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("mu", help="solve omega(mu) = 1 + 2*mu")
    p.add_argument("--out", default="")
    _add_search_flags(p)
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("sweep", help="optimize a list of k targets, emit CSV + certificates")
    p.add_argument("--ks", required=True, help="comma-separated k values")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_search_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="re-verify a bound certificate")
    p.add_argument("certificate")
    p.add_argument("--digits", type=int, default=0,
                   help="also recheck at this many decimal digits (e.g. 50)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("curve", help="emit the omega(k) upper-bound curve (CSV + SVG)")
    p.add_argument("--out", required=True, help="output basename (suffixes added)")
    p.add_argument("--ks", default="", help="k grid to optimize (ignored with --from-csv)")
    p.add_argument("--from-csv", default="",
                   help="render from an existing sweep CSV instead of optimizing")
    p.add_argument("--png", action="store_true", help="also render a PNG via matplotlib")
    _add_search_flags(p)
    p.set_defaults(func=cmd_curve)

    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
