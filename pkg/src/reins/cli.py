"""``reins`` command-line interface.

Exit codes: 0 success, 1 configuration error, 2 validation failure,
3 solver failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .equilibrium import premium_scan, retention_policy, solve_retention, solve_stackelberg
from .errors import BlowUpError, ConfigError, ReinsError
from .model import ModelBundle, bundle_to_dict, load_config, validate, with_value
from .riccati import existence_bound, solve_riccati
from .strategies import build_profile, distortions_insurer, distortions_reinsurer, investment, pi_tilde

EXIT_OK, EXIT_CONFIG, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3
TARGETS = ("a0_star", "eta_star", "pi_I", "pi_R", "retention_feedback")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _load(path: str | None) -> ModelBundle:
    if path is None:
        return ModelBundle()
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
        return
    buf = io.StringIO()
    yield buf
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _bound_report(bundle: ModelBundle, agent: str = "insurer") -> list[str]:
    eb = existence_bound(bundle, agent)
    lines = [
        f"d = {fmt(eb.d)}",
        f"k = {fmt(eb.k)}",
        f"q = {fmt(eb.q)}",
        f"Delta = {fmt(eb.Delta)} ({eb.case_tag})",
        f"zeta1 = {eb.zeta1}",
        f"zeta2 = {eb.zeta2}",
        f"t_max = {fmt(eb.t_max)}",
        f"T < t_max: {'yes' if eb.holds else 'no (sufficient condition not met)'}",
    ]
    if eb.note:
        lines.append(f"note: {eb.note}")
    return lines


def parse_values(text: str) -> list[float]:
    """``"a,b,c"`` or ``"lo:hi:n"`` (inclusive linspace), returned in ascending order."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            count = int(n)
            if count < 2:
                raise ConfigError("linspace needs n >= 2", "--values")
            vals = np.linspace(float(lo), float(hi), count).tolist()
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse values {text!r}", "--values") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError("values must be finite and non-empty", "--values")
    return sorted(vals)


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    bundle = _load(args.config)
    report = validate(bundle)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    try:
        profile = build_profile(bundle, args.t)
    except ReinsError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if isinstance(exc, BlowUpError):
            print("\n".join(_bound_report(bundle)), file=sys.stderr)
        return EXIT_SOLVER
    eq = profile.equilibrium
    m = bundle.market
    s = bundle.solver
    cap = retention_policy(eq.a0_star, args.t, math.inf, m, s.retention_discount_sign)
    lines = [
        f"t_eval = {fmt(args.t)}",
        f"eta_star = {fmt(eq.eta_star)}",
        f"a0_star = {fmt(eq.a0_star)}",
        f"retention_at_t = {fmt(cap)}",
        f"da0_deta = {fmt(eq.da0_deta)}",
        f"pi_I = {fmt(investment('insurer', args.t, bundle, profile.riccati_insurer))}",
        f"pi_R = {fmt(investment('reinsurer', args.t, bundle, profile.riccati_reinsurer))}",
        f"pi_tilde = {fmt(pi_tilde(args.t, profile))}",
        f"retention_residual = {fmt(eq.retention_residual)} (tol {fmt(s.root_abs_tol)})",
        f"premium_residual = {fmt(eq.premium_residual)} (tol {fmt(s.root_abs_tol)}, scaled)",
        f"riccati_fd_residual_insurer = {fmt(profile.riccati_insurer.max_fd_residual)}",
        f"riccati_fd_residual_reinsurer = {fmt(profile.riccati_reinsurer.max_fd_residual)}",
    ]
    lines += [f"warning: {w}" for w in eq.warnings]
    lines.append("existence bound (insurer):")
    lines += ["  " + line for line in _bound_report(bundle)]
    with _output(args.out) as out:
        out.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cell(bundle: ModelBundle, target: str, t: float, eta: float | None):
    """Evaluate one sweep cell; returns (value, error message or None)."""
    try:
        if target == "eta_star":
            return solve_stackelberg(bundle, t).eta_star, None
        if target == "a0_star":
            return solve_stackelberg(bundle, t).a0_star, None
        if target == "retention_feedback":
            if eta is None:
                raise ConfigError("retention_feedback needs --eta or --param eta")
            return solve_retention(eta, bundle.insurer, bundle.solver), None
        agent = "insurer" if target == "pi_I" else "reinsurer"
        return investment(agent, t, bundle, solve_riccati(agent, bundle)), None
    except ReinsError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def _apply(bundle: ModelBundle, key: str, value: float, eta: float | None):
    if key == "eta":
        return bundle, value
    return with_value(bundle, key, value), eta


def _task(payload):
    bundle, target, t, eta = payload
    return _cell(bundle, target, t, eta)


def cmd_sweep(args) -> int:
    bundle = _load(args.config)
    if args.param is None or args.values is None:
        raise ConfigError("sweep needs --param and --values")
    if args.target not in TARGETS:
        raise ConfigError(f"unknown target {args.target!r}; choose from {', '.join(TARGETS)}", "--target")
    axes = [(args.param, parse_values(args.values))]
    if args.param2 is not None:
        if args.values2 is None:
            raise ConfigError("--param2 needs --values2")
        axes.append((args.param2, parse_values(args.values2)))

    cells, labels = [], []
    for v1 in axes[0][1]:
        for v2 in (axes[1][1] if len(axes) > 1 else [None]):
            b, eta = _apply(bundle, axes[0][0], v1, args.eta)
            if v2 is not None:
                b, eta = _apply(b, axes[1][0], v2, eta)
            report = validate(b)
            labels.append((v1, v2, None if report.ok else "; ".join(report.violations)))
            cells.append((b, args.target, args.t, eta))

    todo = [c for c, lab in zip(cells, labels) if lab[2] is None]
    if args.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_task, todo))
    else:
        done = [_task(c) for c in todo]
    results = iter(done)

    header = [name for name, _ in axes] + [args.target]
    rows, failures = [], 0
    for v1, v2, invalid in labels:
        value, err = (math.nan, f"invalid configuration: {invalid}") if invalid else next(results)
        key = f"{axes[0][0]}={fmt(v1)}" + (f", {axes[1][0]}={fmt(v2)}" if v2 is not None else "")
        if err is not None:
            failures += 1
            print(f"cell {key}: {err}", file=sys.stderr)
        rows.append([v1] + ([v2] if v2 is not None else []) + [value])
    with _output(args.out) as out:
        out.write(f"# t_eval={fmt(args.t)}\n")
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join("NaN" if math.isnan(x) else fmt(x) for x in row) + "\n")
    return EXIT_SOLVER if failures == len(rows) else EXIT_OK


def cmd_riccati(args) -> int:
    bundle = _load(args.config)
    report = validate(bundle)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    try:
        sol = solve_riccati(args.agent, bundle)
    except BlowUpError as exc:
        print(f"blow-up at t={fmt(exc.time)}", file=sys.stderr)
        print("\n".join(_bound_report(bundle, args.agent)), file=sys.stderr)
        return EXIT_SOLVER
    with _output(args.out) as out:
        out.write("t,A,H_lo,H_hi\n")
        for row in sol.rows():
            out.write(",".join(fmt(x) for x in row) + "\n")
        out.write(f"# max_fd_residual={fmt(sol.max_fd_residual)}\n")
    return EXIT_OK


def cmd_strategies(args) -> int:
    bundle = _load(args.config)
    report = validate(bundle)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    try:
        ins = solve_riccati("insurer", bundle)
        rei = solve_riccati("reinsurer", bundle)
    except ReinsError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    m = bundle.market
    ts = np.linspace(0.0, m.T, args.points)
    c = bundle.insurer.gamma + (2.0 * bundle.insurer.alpha - 1.0) * bundle.insurer.beta0
    cols = (
        ts,
        investment("insurer", ts, bundle, ins),
        investment("reinsurer", ts, bundle, rei),
        m.xi * np.exp(-m.r * (m.T - ts)) / c,
    )
    with _output(args.out) as out:
        out.write("t,pi_I,pi_R,pi_tilde\n")
        for row in zip(*(col.tolist() for col in cols)):
            out.write(",".join(fmt(x) for x in row) + "\n")
    return EXIT_OK


def cmd_distortions(args) -> int:
    bundle = _load(args.config)
    report = validate(bundle)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    zs = parse_values(args.values or "0:3:31")
    try:
        profile = build_profile(bundle, args.t)
    except ReinsError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    fn = distortions_insurer if args.agent == "insurer" else distortions_reinsurer
    with _output(args.out) as out:
        out.write(f"# agent={args.agent} y={fmt(bundle.market.delta if args.y is None else args.y)}\n")
        out.write("t,z,phi0_lo,phiY_lo,phiZ_lo,phi0_hi,phiY_hi,phiZ_hi\n")
        for z in zs:
            d = fn(args.t, z, profile, args.y)
            out.write(",".join(fmt(x) for x in (args.t, z, *d)) + "\n")
    return EXIT_OK


def cmd_check(args) -> int:
    bundle = _load(args.config)
    report = validate(bundle)
    lines = ["configuration:"]
    lines += ["  " + line for line in json.dumps(bundle_to_dict(bundle), sort_keys=True, indent=2).splitlines()]
    lines.append("validation: " + ("ok" if report.ok else "FAILED"))
    lines += [f"  - {v}" for v in report.violations]
    status = EXIT_OK
    if report.ok:
        for agent in ("insurer", "reinsurer"):
            lines.append(f"existence bound ({agent}):")
            lines += ["  " + line for line in _bound_report(bundle, agent)]
        try:
            etas, values = premium_scan(bundle, args.t)
        except ReinsError as exc:
            lines.append(f"premium scan failed: {exc}")
        else:
            signs = "".join("+" if v > 0 else ("-" if v < 0 else "0") for v in values)
            changes = int(np.count_nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0))
            lines.append(f"premium scan at t={fmt(args.t)} over eta in [{fmt(etas[0])}, {fmt(etas[-1])}]:")
            lines.append(f"  signs: {signs}")
            lines.append(f"  sign changes: {changes}")
    else:
        status = EXIT_INVALID
    with _output(args.out) as out:
        out.write("\n".join(lines) + "\n")
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reins", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, agent=False):
        p.add_argument("--config", help="JSON configuration (defaults when omitted)")
        p.add_argument("--t", type=float, default=5.0, help="evaluation time (default 5)")
        p.add_argument("--out", help="write output to this file instead of stdout")
        if agent:
            p.add_argument("--agent", choices=("insurer", "reinsurer"), default="insurer")

    p = sub.add_parser("solve", help="equilibrium summary")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="parameter sweep as CSV")
    common(p)
    p.add_argument("--param", help="dotted config key, or 'eta' for the loading")
    p.add_argument("--values", help="comma list or lo:hi:n")
    p.add_argument("--param2")
    p.add_argument("--values2")
    p.add_argument("--target", default="a0_star", help="one of " + ", ".join(TARGETS))
    p.add_argument("--eta", type=float, help="fixed loading for retention_feedback")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("riccati", help="Riccati grid dump as CSV")
    common(p, agent=True)
    p.set_defaults(func=cmd_riccati)

    p = sub.add_parser("check", help="validation, existence bound and premium scan")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("strategies", help="investment strategy curves as CSV")
    common(p)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_strategies)

    p = sub.add_parser("distortions", help="distortion functions over claim sizes as CSV")
    common(p, agent=True)
    p.add_argument("--values", help="claim sizes: comma list or lo:hi:n")
    p.add_argument("--y", type=float, help="current variance (default: long-run level)")
    p.set_defaults(func=cmd_distortions)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
