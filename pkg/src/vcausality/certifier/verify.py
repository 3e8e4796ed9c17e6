"""Solver-independent certificate checks, in exact arithmetic.

Nothing here imports the simplex code; a certificate exported to JSON can
be re-checked with this module alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .lp import Certificate, LinearProgram


@dataclass
class VerificationResult:
    ok: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _dual_columns(lp: LinearProgram, y_eq, y_ub) -> list[Fraction]:
    """A_eq' y_eq + A_ub' y_ub, one entry per primal variable."""
    out = [Fraction(0)] * lp.n_vars
    for cs, ys in ((lp.equalities, y_eq), (lp.inequalities, y_ub)):
        for row, y in zip(cs.rows, ys):
            if y:
                for j, v in row.items():
                    out[j] += v * y
    return out


def _dual_objective(lp: LinearProgram, y_eq, y_ub) -> Fraction:
    return (sum((b * y for b, y in zip(lp.equalities.rhs, y_eq)), Fraction(0))
            + sum((b * y for b, y in zip(lp.inequalities.rhs, y_ub)), Fraction(0)))


def check_primal(lp: LinearProgram, x) -> list[str]:
    failures = []
    if len(x) != lp.n_vars:
        return [f"primal has {len(x)} entries, expected {lp.n_vars}"]
    neg = [j for j, v in enumerate(x) if v < 0]
    if neg:
        failures.append(f"x[{neg[0]}] < 0")
    for k, r in enumerate(lp.equalities.residuals(x)):
        if r != 0:
            failures.append(f"equality {lp.equalities.labels[k] or k} violated by {r}")
            break
    for k, r in enumerate(lp.inequalities.residuals(x)):
        if r > 0:
            failures.append(f"inequality {lp.inequalities.labels[k] or k} violated by {r}")
            break
    return failures


def verify_certificate(lp: LinearProgram, cert: Certificate) -> VerificationResult:
    failures: list[str] = []
    if len(cert.dual_eq) != len(lp.equalities) or len(cert.dual_ub) != len(lp.inequalities):
        return VerificationResult(False, ["dual vector lengths do not match the program"])
    if any(y < 0 for y in cert.dual_ub):
        failures.append("negative multiplier on an inequality")
    cols = _dual_columns(lp, cert.dual_eq, cert.dual_ub)
    if cert.kind == "optimal":
        if cert.primal is None or cert.objective is None:
            return VerificationResult(False, ["optimal certificate without primal point"])
        failures += check_primal(lp, cert.primal)
        short = [j for j in range(lp.n_vars) if cols[j] < lp.objective.get(j, 0)]
        if short:
            failures.append(f"dual constraint for column {short[0]} violated")
        primal_obj = lp.objective_value(cert.primal)
        dual_obj = _dual_objective(lp, cert.dual_eq, cert.dual_ub)
        if primal_obj != cert.objective:
            failures.append(f"stated objective {cert.objective} != c.x = {primal_obj}")
        if dual_obj != primal_obj:
            failures.append(f"duality gap: primal {primal_obj}, dual {dual_obj}")
    elif cert.kind == "infeasible":
        neg = [j for j in range(lp.n_vars) if cols[j] < 0]
        if neg:
            failures.append(f"Farkas combination negative on column {neg[0]}")
        if _dual_objective(lp, cert.dual_eq, cert.dual_ub) >= 0:
            failures.append("Farkas right-hand side is not negative")
    else:
        failures.append(f"unknown certificate kind {cert.kind!r}")
    return VerificationResult(not failures, failures)


def farkas_margin(lp: LinearProgram, cert: Certificate, rows: list[int], radius: Fraction) -> Fraction:
    """How far b.y stays below zero if the rhs of inequality ``rows`` may grow by ``radius``.

    A positive return value means the same Farkas vector still proves
    infeasibility after any such perturbation.
    """
    worst = _dual_objective(lp, cert.dual_eq, cert.dual_ub)
    worst += radius * sum((abs(cert.dual_ub[i]) for i in rows), Fraction(0))
    return -worst
