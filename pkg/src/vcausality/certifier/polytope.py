"""Constraint generators for n-party binary behaviors and the certifying LPs.

LP variables are the joint probabilities p(outcomes | settings), flattened
in the same C order as :attr:`Behavior.table` (settings axes first).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..behavior import (CH_FACETS, as_fraction_table, DEFAULT_TOL, PARTY_NAMES, Behavior, SignallingInput,
                        WrongShape, marginal, no_signalling_check)
from ..inequality import S_FUNCTIONAL, Inequality, functional
from .lp import Certificate, ConstraintSet, LinearProgram
from .simplex import solve
from .verify import farkas_margin, verify_certificate

A, B, C, D = range(4)


class CertificateError(RuntimeError):
    """The solver returned a certificate the independent verifier rejects."""


class InconsistentMarginals(ValueError):
    pass


def _shape(n: int) -> tuple[int, ...]:
    return (2,) * (2 * n)


def var_index(settings: Sequence[int], outcomes: Sequence[int]) -> int:
    n = len(settings)
    return int(np.ravel_multi_index(tuple(settings) + tuple(outcomes), _shape(n)))


def var_label(index: int, n: int) -> str:
    idx = np.unravel_index(index, _shape(n))
    s, o = idx[:n], idx[n:]
    return f"p({''.join(str(v) for v in o)}|{''.join(str(v) for v in s)})"


def _sum_row(n: int, settings: Sequence[int], fixed_outcomes: dict[int, int], coef=1) -> dict[int, int]:
    """Row picking sum over free outcomes of p(o | settings) with ``fixed_outcomes`` pinned."""
    row: dict[int, int] = {}
    free = [j for j in range(n) if j not in fixed_outcomes]
    for vals in itertools.product((0, 1), repeat=len(free)):
        o = [0] * n
        for j, v in fixed_outcomes.items():
            o[j] = v
        for j, v in zip(free, vals):
            o[j] = v
        k = var_index(settings, o)
        row[k] = row.get(k, 0) + coef
    return row


def _add_rows(*rows: dict) -> dict:
    out: dict = {}
    for r in rows:
        for k, v in r.items():
            out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def build_normalization(n: int) -> ConstraintSet:
    cs = ConstraintSet()
    for s in itertools.product((0, 1), repeat=n):
        cs.add(_sum_row(n, s, {}), 1, f"norm{''.join(map(str, s))}")
    return cs


def build_ns_polytope_constraints(n: int = 4) -> ConstraintSet:
    """(n-1)-party marginals independent of the excluded party's setting.

    One equality per excluded party j, setting tuple and outcome tuple of the
    others; these generate every lower-order no-signalling condition.
    """
    cs = ConstraintSet()
    for j in range(n):
        others = [k for k in range(n) if k != j]
        for s_rest in itertools.product((0, 1), repeat=n - 1):
            for o_rest in itertools.product((0, 1), repeat=n - 1):
                fixed = dict(zip(others, o_rest))
                s0 = [0] * n
                for k, v in zip(others, s_rest):
                    s0[k] = v
                s1 = list(s0)
                s1[j] = 1
                row = _add_rows(_sum_row(n, s0, fixed), _sum_row(n, s1, fixed, -1))
                cs.add(row, 0, f"ns[{PARTY_NAMES[j]}]s{''.join(map(str, s_rest))}o{''.join(map(str, o_rest))}")
    return cs


def _cg_rows(n: int, pair: tuple[int, int], cond_settings: dict[int, int], cond_outcomes: dict[int, int]):
    """Joint-probability rows for the CG coordinates of the pair, times p(conditioning event)."""
    b, c = pair

    def settings(y, z):
        s = [0] * n
        for k, v in cond_settings.items():
            s[k] = v
        s[b], s[c] = y, z
        return s

    def fixed(**extra):
        f = dict(cond_outcomes)
        f.update({b: extra["ob"]} if "ob" in extra else {})
        f.update({c: extra["oc"]} if "oc" in extra else {})
        return f

    rows = [_sum_row(n, settings(0, 0), fixed())]
    rows += [_sum_row(n, settings(y, 0), fixed(ob=0)) for y in (0, 1)]
    rows += [_sum_row(n, settings(0, z), fixed(oc=0)) for z in (0, 1)]
    rows += [_sum_row(n, settings(y, z), fixed(ob=0, oc=0)) for y in (0, 1) for z in (0, 1)]
    return rows


def build_pair_local_constraints(n: int = 4, pair: tuple[int, int] = (B, C)) -> ConstraintSet:
    """CH facets of the pair's conditional behavior, multiplied through by p(condition).

    One row per outcome/setting assignment of the other parties and per facet:
    ``p(a,d|x,w) * CH(p(b,c|y,z,a,x,d,w)) <= 0``, linear in the joint.
    """
    others = [k for k in range(n) if k not in pair]
    cs = ConstraintSet()
    for s_cond in itertools.product((0, 1), repeat=len(others)):
        for o_cond in itertools.product((0, 1), repeat=len(others)):
            cg = _cg_rows(n, pair, dict(zip(others, s_cond)), dict(zip(others, o_cond)))
            for k, facet in enumerate(CH_FACETS):
                row = _add_rows(*({j: h * v for j, v in r.items()} for h, r in zip(facet, cg) if h))
                tag = ",".join(f"{PARTY_NAMES[p]}{s}/{o}" for p, s, o in zip(others, s_cond, o_cond))
                cs.add(row, 0, f"ch{k}[{tag}]")
    return cs


def build_bc_local_constraints() -> ConstraintSet:
    return build_pair_local_constraints(4, (B, C))


def objective_row(ineq: Inequality = S_FUNCTIONAL) -> dict[int, Fraction]:
    f = functional(ineq)
    return {k: v for k, v in enumerate(f.flat) if v != 0}


def build_bound_lp(ns_only: bool = False, ineq: Inequality = S_FUNCTIONAL) -> LinearProgram:
    n = ineq.parties
    eq = build_normalization(n).extend(build_ns_polytope_constraints(n))
    ub = ConstraintSet() if ns_only else build_bc_local_constraints()
    name = "max S over NS" + ("" if ns_only else " and BC-local")
    return LinearProgram(2 ** (2 * n), objective_row(ineq), eq, ub, name)


def maximize(lp: LinearProgram, verify: bool = True) -> Certificate:
    """Exact simplex solve; the certificate is re-checked by the independent verifier."""
    cert = solve(lp)
    if verify:
        result = verify_certificate(lp, cert)
        if not result:
            raise CertificateError("; ".join(result.failures))
    return cert


def behavior_from_primal(x: Sequence[Fraction], n: int) -> Behavior:
    table = np.empty(_shape(n), dtype=object)
    table.flat[:] = list(x)
    return Behavior(table, n)


def _exact_table(b: Behavior) -> np.ndarray:
    # bit-exact image of the float data; not renormalized
    return b.table if b.exact else as_fraction_table(b.table)


def marginal_feasibility(
    abd: Behavior,
    acd: Behavior,
    radius: Fraction | float = 0,
    tol: float = DEFAULT_TOL,
) -> tuple[LinearProgram, Certificate]:
    """Is there an NS, BC-local 4-party joint with the given A-B-D and A-C-D marginals?

    Float marginals are converted to exact binary fractions.  With
    ``radius > 0`` each marginal entry may move by up to ``radius``, so an
    infeasible answer is robust to that much noise in the data.
    Returns the LP solved and its verified certificate.
    """
    for name, m3 in (("abd", abd), ("acd", acd)):
        if m3.parties != 3 or m3.table.shape != _shape(3):
            raise WrongShape(f"{name} must be a 3-party binary behavior")
    ad_from_abd = marginal(abd, (0, 2))[:, 0, :, :, :]
    ad_from_acd = marginal(acd, (0, 2))[:, 0, :, :, :]
    if abd.exact and acd.exact and radius == 0:
        consistent = all(p == q for p, q in zip(ad_from_abd.flat, ad_from_acd.flat))
    else:
        consistent = all(abs(float(p) - float(q)) <= tol for p, q in zip(ad_from_abd.flat, ad_from_acd.flat))
    if not consistent:
        raise InconsistentMarginals("A-D marginals of abd and acd differ")

    radius = Fraction(radius)
    lp = build_bound_lp()
    lp.objective = {}
    lp.name = "NS + BC-local joint with given ABD/ACD marginals"
    for (kept, missing), m3 in (((B, C), _exact_table(abd)), ((C, B), _exact_table(acd))):
        parties = [A, kept, D]
        for s3 in itertools.product((0, 1), repeat=3):
            for o3 in itertools.product((0, 1), repeat=3):
                s = [0] * 4
                for p, v in zip(parties, s3):
                    s[p] = v
                row = _sum_row(4, s, dict(zip(parties, o3)))
                target = m3[s3 + o3]
                label = f"marg{''.join(PARTY_NAMES[p] for p in parties)}s{''.join(map(str, s3))}o{''.join(map(str, o3))}"
                if radius == 0:
                    lp.equalities.add(row, target, label)
                else:
                    lp.inequalities.add(row, target + radius, label + "<=")
                    lp.inequalities.add({k: -v for k, v in row.items()}, -(target - radius), label + ">=")
    cert = maximize(lp)
    return lp, cert


def marginal_rows(lp: LinearProgram) -> list[int]:
    return [i for i, lab in enumerate(lp.inequalities.labels) if lab.startswith("marg")]


def robustness_margin(lp: LinearProgram, cert: Certificate, extra: Fraction) -> Fraction:
    """Slack left in a Farkas certificate if the marginal boxes grow by ``extra``."""
    return farkas_margin(lp, cert, marginal_rows(lp), extra)


# --- 2x2x2x2 local decomposition -------------------------------------------

DETERMINISTIC_2222 = tuple(itertools.product((0, 1), repeat=4))  # (b0, b1, c0, c1)


def local_decomposition_2222(b2: Behavior) -> tuple[LinearProgram, Certificate]:
    """LP over weights on the 16 deterministic points reproducing ``b2``.

    A feasible certificate's primal vector is an explicit local model:
    weight ``x[k]`` on strategy ``DETERMINISTIC_2222[k]``.
    """
    if b2.parties != 2 or b2.table.shape != (2, 2, 2, 2):
        raise WrongShape("expected a 2x2x2x2 behavior")
    if no_signalling_check(b2):
        raise SignallingInput("local decomposition needs a no-signalling behavior")
    t = _exact_table(b2)
    lp = LinearProgram(16, {}, name="local decomposition 2222")
    for y, z, ob, oc in itertools.product((0, 1), repeat=4):
        row = {k: 1 for k, (b0, b1, c0, c1) in enumerate(DETERMINISTIC_2222)
               if (b0, b1)[y] == ob and (c0, c1)[z] == oc}
        lp.equalities.add(row, t[y, z, ob, oc], f"p({ob}{oc}|{y}{z})")
    return lp, maximize(lp)
