"""Command-line entry point: ``vcausality <command> [options]``.

Exit codes: 0 when every check in the report passes, 1 when a check fails,
2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import behavior as bh
from . import inequality, quantum, spacetime, vcausal
from .certifier import lp as lpio
from .certifier import polytope
from .fileio import ParseError, dump_behavior, load_behavior, load_config, load_model, load_state

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE = 0, 1, 2


def fmt(value: Any) -> str:
    """Fractions as p/q, floats with 12 significant digits."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


@dataclass
class Quantity:
    name: str
    value: Any
    module: str


@dataclass
class RunReport:
    command: str
    inputs_digest: str
    seed: int | None = None
    quantities: list[Quantity] = field(default_factory=list)
    checks: list[tuple[str, bool]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, name: str, value: Any, module: str) -> None:
        self.quantities.append(Quantity(name, value, module))

    def check(self, name: str, passed: bool) -> bool:
        self.checks.append((name, bool(passed)))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def render(self) -> str:
        lines = [f"command: {self.command}", f"inputs sha256: {self.inputs_digest}"]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        width = max((len(q.name) for q in self.quantities), default=0)
        for q in self.quantities:
            lines.append(f"  [{q.module}] {q.name.ljust(width)}  {fmt(q.value)}")
        lines += [f"  {n}" for n in self.notes]
        for name, ok in self.checks:
            lines.append(f"{'PASS' if ok else 'FAIL'}  {name}")
        lines.append(f"wall time: {self.wall_time:.3f} s")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "command": self.command, "inputs_sha256": self.inputs_digest, "seed": self.seed,
            "quantities": [{"name": q.name, "value": fmt(q.value), "module": q.module} for q in self.quantities],
            "checks": [{"name": n, "passed": ok} for n, ok in self.checks],
            "notes": self.notes, "wall_time": self.wall_time,
        }


def inputs_digest(args: argparse.Namespace, files: Sequence[str | None] = ()) -> str:
    h = hashlib.sha256()
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "report")}
    h.update(json.dumps(opts, sort_keys=True, default=str).encode())
    for f in files:
        if f:
            h.update(Path(f).read_bytes())
    return h.hexdigest()


# --- commands ----------------------------------------------------------------

def cmd_quantum_s(args, report: RunReport) -> None:
    model = quantum.build_paper_model()
    if args.state_file:
        model = quantum.QuantumModel(load_state(args.state_file), model.observables)
    beh = quantum.behavior_of(model)
    for term, op_value, beh_value in inequality.correlator_table(model):
        coeff = term.coefficient
        report.add(f"{fmt(coeff):>3} x {term.label()}", op_value, "quantum")
        if abs(op_value - beh_value) > 1e-10:
            report.notes.append(f"{term.label()}: behavior path gives {fmt(beh_value)}")
    s_op = inequality.evaluate_s_quantum(model)
    s_beh = inequality.evaluate_s(beh, tol=args.tol)
    report.add("S (operator contraction)", s_op, "inequality")
    report.add("S (behavior sum)", s_beh, "inequality")
    report.add("S rounded", round(s_op, 1), "inequality")
    report.check("S > 7", s_op > 7)
    report.check("evaluation paths agree within 1e-10", abs(s_op - s_beh) <= 1e-10)
    if args.dump_behavior:
        dump_behavior(beh, args.dump_behavior)
        report.notes.append(f"behavior written to {args.dump_behavior}")


def _add_certificate(report: RunReport, lp, cert) -> None:
    report.add("program", lp.name, "certifier")
    report.add("variables / equalities / inequalities", "/".join(map(str, lp.shape)), "certifier")
    report.add("status", cert.kind, "certifier")
    report.add("pivots", cert.pivots, "certifier")
    if cert.kind == "optimal":
        report.add("optimum", cert.objective, "certifier")
        support = sum(1 for y in cert.dual_ub if y)
        report.add("active inequality multipliers", support, "certifier")
    else:
        report.add("Farkas value b.y", cert.farkas_value(lp), "certifier")


def cmd_certify_bound(args, report: RunReport) -> None:
    if args.marginals_from_quantum:
        beh = quantum.behavior_of(quantum.build_paper_model())
        radius = Fraction(args.radius)
        lp, cert = polytope.marginal_feasibility(bh.reduced(beh, (0, 1, 3)), bh.reduced(beh, (0, 2, 3)),
                                                 radius=radius, tol=args.tol)
        _add_certificate(report, lp, cert)
        report.add("marginal box radius", radius, "certifier")
        report.check("certificate verified independently", True)
        report.check("no NS, BC-local joint has these marginals", cert.kind == "infeasible")
        if cert.kind == "infeasible" and radius > 0:
            margin = polytope.robustness_margin(lp, cert, 0)
            report.add("Farkas slack at the box edge", margin, "certifier")
            report.check("infeasibility holds throughout the box", margin > 0)
    else:
        lp = polytope.build_bound_lp(ns_only=args.ns_only)
        cert = polytope.maximize(lp)
        _add_certificate(report, lp, cert)
        report.check("certificate verified independently", True)
        if args.ns_only:
            report.check("optimum >= 36/5", cert.objective >= Fraction(36, 5))
        else:
            report.check("optimum equals 7 exactly", cert.objective == 7)
    if args.export:
        lpio.dump_certificate(lp, cert, args.export)
        report.notes.append(f"program and certificate written to {args.export}")


def _pair_verdicts(b: bh.Behavior, tol: float):
    """Locality verdicts of every two-party conditional with 2 settings and 2 outcomes each."""
    results = []
    n = b.parties
    for pair in itertools.combinations(range(n), 2):
        if any(b.settings[p] != 2 or b.outcomes[p] != 2 for p in pair):
            continue
        rest = [j for j in range(n) if j not in pair]
        cond_space = itertools.product(*(itertools.product(range(b.settings[j]), range(b.outcomes[j])) for j in rest))
        for cond in cond_space:
            fixed = dict(zip(rest, cond))
            name = "".join(bh.PARTY_NAMES[p] for p in pair)
            if fixed:
                name += "|" + ",".join(f"{bh.PARTY_NAMES[j]}{s}:{o}" for j, (s, o) in fixed.items())
            try:
                b2 = bh.condition(b, fixed, tol=tol) if fixed else b
            except bh.ZeroProbabilityCondition:
                results.append((name, "zero-probability condition"))
                continue
            try:
                verdict = bh.is_local_2222(b2, tol)
                results.append((name, "local" if verdict else f"nonlocal (CH facet {verdict.facet} = {fmt(verdict.witness[1])})"))
            except bh.SignallingInput:
                results.append((name, "signalling"))
    return results


def cmd_check_behavior(args, report: RunReport) -> None:
    if args.model:
        b = vcausal.behavior_of_model(load_model(args.model))
    else:
        b = load_behavior(args.path, exact=True if args.rational else None)
    tol = 0 if b.exact else args.tol
    report.add("parties", b.parties, "behavior")
    report.add("arithmetic", "exact" if b.exact else "float", "behavior")
    report.check("normalized and nonnegative", True)
    ns = bh.no_signalling_check(b, tol)
    for e in ns.entries:
        report.notes.append("signalling: " + e.describe())
    if b.parties == 4 and b.settings == (2,) * 4 and b.outcomes == (2,) * 4:
        report.add("S", inequality.evaluate_s(b, absent_settings=[0] * 4), "inequality")
    verdicts = _pair_verdicts(b, tol)
    counts: dict[str, int] = {}
    for name, v in verdicts:
        kind = v.split(" ")[0]
        counts[kind] = counts.get(kind, 0) + 1
        if kind != "local":
            report.notes.append(f"pair {name}: {v}")
    for kind, k in sorted(counts.items()):
        report.add(f"pair conditionals {kind}", k, "behavior")
    report.check("no-signalling", ns.no_signalling)


def cmd_ghz_protocol(args, report: RunReport) -> None:
    messages = ("yes", "no") if args.message == "both" else (args.message,)
    report.add("rounds per message", args.rounds, "vcausal")
    report.add("analytic success (equal priors)", vcausal.analytic_success(args.rounds), "vcausal")
    for msg in messages:
        res = vcausal.ghz_protocol(args.rounds, msg, seed=args.seed, trials=args.trials)
        report.add(f"P(error|{msg}) analytic", res.analytic_error_rate, "vcausal")
        report.add(f"P(error|{msg}) empirical", res.empirical_error_rate, "vcausal")
        report.add(f"errors / trials ({msg})", f"{res.errors}/{res.trials}", "vcausal")
        report.check(f"'{msg}' error rate within 5 sigma of analytic", res.within(5.0))


def cmd_speed_bound(args, report: RunReport) -> None:
    if args.config:
        cfg, _ = load_config(args.config)
        e1, e2 = cfg.event(args.e1), cfg.event(args.e2)
    elif args.d is not None:
        e1, e2 = spacetime.Event(0.0, (0.0,), "1"), spacetime.Event(0.0, (args.d,), "2")
    else:
        raise ParseError("give --d or --config", field="--d")
    report.add("separation (m)", spacetime.distance(e1, e2), "spacetime")
    report.add("sync uncertainty (s)", args.dt, "spacetime")
    try:
        v = spacetime.speed_bound(e1, e2, args.dt)
        report.add("v_min lab frame (m/s)", v, "spacetime")
        report.add("v_min/c lab frame", v / spacetime.C, "spacetime")
    except spacetime.DegenerateTiming:
        report.add("v_min lab frame", "unbounded", "spacetime")
    if args.scan:
        points = spacetime.scan_frames(e1, e2, args.dt, args.beta_max, args.n_speeds, args.n_theta, args.n_phi)
        worst = spacetime.weakest_frame(points)
        for p in points:
            mark = "  <- minimum" if p is worst else ""
            report.notes.append(f"beta={p.beta:.6g} theta={p.theta:.4f} phi={p.phi:.4f}  v_min/c={fmt(p.v_min / spacetime.C)}{mark}")
        report.add("frames scanned", len(points), "spacetime")
        report.add("minimum v_min/c over frames", worst.v_min / spacetime.C, "spacetime")
        report.check("bound finite in every scanned frame", all(np.isfinite(p.v_min) for p in points))


def cmd_validate_config(args, report: RunReport) -> None:
    cfg, choices = load_config(args.config)
    report.add("v/c", cfg.v / spacetime.C, "spacetime")
    report.add("events", len(cfg.events), "spacetime")
    ok, violations = spacetime.validate_config(cfg)
    for v in violations:
        report.notes.append(v.describe())
    report.check("required connectivity holds", ok)
    if choices:
        ok, problems = spacetime.ordering_protocol_check(cfg, choices)
        report.notes += problems
        report.check("choice schedule respects light cones", ok)
    if "A" in {e.label for e in cfg.events} and args.speed:
        try:
            report.add("message speed / c", vcausal.signalling_speed(cfg) / spacetime.C, "vcausal")
        except spacetime.InvalidConfig as exc:
            report.notes.append(f"no signalling speed: {exc}")


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vcausality", description=__doc__.splitlines()[0])
    parser.add_argument("--tol", type=float, default=bh.DEFAULT_TOL, help="float comparison tolerance")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--rational", action="store_true", help="read behavior files in exact arithmetic")
    parser.add_argument("--report", metavar="PATH", help="also write the report as JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantum-s", help="S for the four-qubit model")
    p.add_argument("--state-file", help="JSON file with basis amplitudes replacing the default state")
    p.add_argument("--dump-behavior", metavar="PATH", help="write the quantum behavior")
    p.set_defaults(func=cmd_quantum_s)

    p = sub.add_parser("certify-bound", help="exact LP bound on S with a verified certificate")
    p.add_argument("--ns-only", action="store_true", help="drop the B-C locality constraints")
    p.add_argument("--marginals-from-quantum", action="store_true",
                   help="feasibility with ABD and ACD marginals fixed to the quantum ones")
    p.add_argument("--radius", default="1/1000000000", help="marginal box radius (exact fraction)")
    p.add_argument("--export", metavar="PATH", help="write program and certificate as JSON")
    p.set_defaults(func=cmd_certify_bound)

    p = sub.add_parser("check-behavior", help="normalization, no-signalling, S and pair locality")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("path", nargs="?", help="behavior JSON file")
    src.add_argument("--model", help="v-causal model JSON file instead of a behavior")
    p.set_defaults(func=cmd_check_behavior)

    p = sub.add_parser("ghz-protocol", help="simulate the triangle signalling protocol")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--message", choices=("yes", "no", "both"), default="both")
    p.set_defaults(func=cmd_ghz_protocol)

    p = sub.add_parser("speed-bound", help="lower bound on the influence speed")
    p.add_argument("--d", type=float, help="separation in meters (events simultaneous in the lab)")
    p.add_argument("--dt", type=float, required=True, help="synchronization uncertainty in seconds")
    p.add_argument("--config", help="config JSON; use with --e1/--e2")
    p.add_argument("--e1", default="B")
    p.add_argument("--e2", default="C")
    p.add_argument("--scan", action="store_true", help="scan candidate privileged frames")
    p.add_argument("--beta-max", type=float, default=369e3 / spacetime.C)
    p.add_argument("--n-speeds", type=int, default=1)
    p.add_argument("--n-theta", type=int, default=7)
    p.add_argument("--n-phi", type=int, default=12)
    p.set_defaults(func=cmd_speed_bound)

    p = sub.add_parser("validate-config", help="check an event configuration")
    p.add_argument("config")
    p.add_argument("--speed", action="store_true", help="also report the end-to-end message speed")
    p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    files = [getattr(args, k, None) for k in ("path", "model", "config", "state_file")]
    start = time.perf_counter()
    try:
        report = RunReport(args.command, inputs_digest(args, files), args.seed)
        args.func(args, report)
    except (ParseError, OSError, bh.InvalidBehavior, spacetime.UnknownLabel, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except polytope.CertificateError as exc:
        print(f"certificate rejected: {exc}", file=sys.stderr)
        return EXIT_FALSIFIED
    report.wall_time = time.perf_counter() - start
    print(report.render())
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    return EXIT_OK if report.passed else EXIT_FALSIFIED


if __name__ == "__main__":
    sys.exit(main())
