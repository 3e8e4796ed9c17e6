"""The 23-term four-party correlator inequality S <= 7 and its evaluation.

Parties are A=0, B=1, C=2, D=3.  No term involves both B and C, so S can be
estimated from the A-B-D and A-C-D marginals alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .behavior import DEFAULT_TOL, Behavior, marginal
from .quantum import QuantumModel, behavior_of, expectation

A, B, C, D = range(4)


class SignallingAmbiguity(ValueError):
    """A correlator depends on the settings of parties it does not involve."""


@dataclass(frozen=True)
class CorrelatorTerm:
    factors: tuple[tuple[int, int], ...]
    coefficient: Fraction

    def __post_init__(self):
        parties = [p for p, _ in self.factors]
        if len(set(parties)) != len(parties):
            raise ValueError(f"repeated party in {self.factors}")
        if self.coefficient == 0:
            raise ValueError("zero coefficient")
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))

    @property
    def parties(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def label(self) -> str:
        return "<" + "".join(f"{'ABCD'[p]}{s}" for p, s in self.factors) + ">"


@dataclass(frozen=True)
class Inequality:
    terms: tuple[CorrelatorTerm, ...]
    bound: Fraction
    parties: int = 4

    def __str__(self):
        parts = []
        for t in self.terms:
            c = t.coefficient
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else str(abs(c))
            parts.append(f"{sign} {mag}{t.label()}")
        return "S = " + " ".join(parts).lstrip("+ ") + f" <= {self.bound}"


def _t(coefficient, *factors):
    return CorrelatorTerm(tuple(factors), Fraction(coefficient))


S_FUNCTIONAL = Inequality(
    terms=(
        _t(-3, (A, 0)), _t(-1, (B, 0)), _t(-1, (B, 1)), _t(-1, (C, 0)), _t(-3, (D, 0)),
        _t(-1, (A, 1), (B, 0)), _t(-1, (A, 1), (B, 1)), _t(1, (A, 0), (C, 0)),
        _t(2, (A, 1), (C, 0)), _t(1, (A, 0), (D, 0)), _t(1, (B, 0), (D, 1)),
        _t(-1, (B, 1), (D, 1)), _t(-1, (C, 0), (D, 0)), _t(-2, (C, 1), (D, 1)),
        _t(1, (A, 0), (B, 0), (D, 0)), _t(1, (A, 0), (B, 0), (D, 1)),
        _t(1, (A, 0), (B, 1), (D, 0)), _t(-1, (A, 0), (B, 1), (D, 1)),
        _t(-1, (A, 1), (B, 0), (D, 0)), _t(-1, (A, 1), (B, 1), (D, 0)),
        _t(1, (A, 0), (C, 0), (D, 0)), _t(2, (A, 1), (C, 0), (D, 0)),
        _t(-2, (A, 0), (C, 1), (D, 1)),
    ),
    bound=Fraction(7),
)


def _sign_tensor(k: int, exact: bool) -> np.ndarray:
    """Product of +/-1 outcome values over ``k`` parties, indexed by outcome indices."""
    signs = np.empty((2,) * k, dtype=object if exact else float)
    for o in itertools.product((0, 1), repeat=k):
        signs[o] = (-1) ** sum(o)
    return signs


def correlator(
    b: Behavior,
    factors: Sequence[tuple[int, int]] | CorrelatorTerm,
    tol: float | None = None,
    absent_settings: Sequence[int] | None = None,
):
    """Average product of the +/-1 outcomes of the listed (party, setting) pairs.

    Parties not in the term are read at setting 0 after checking that the
    answer does not depend on their settings.  Pass ``absent_settings`` (one
    entry per party, entries for present parties ignored) to skip that check
    and fix the convention explicitly.
    """
    if isinstance(factors, CorrelatorTerm):
        factors = factors.factors
    factors = tuple(sorted(factors))
    parties = [p for p, _ in factors]
    if len(set(parties)) != len(parties):
        raise ValueError(f"repeated party in {factors}")
    if not factors:
        return Fraction(1) if b.exact else 1.0
    if any(p >= b.parties for p in parties):
        raise ValueError(f"term {factors} references missing parties")
    if tol is None:
        tol = 0 if b.exact else DEFAULT_TOL
    m = marginal(b, parties)
    signs = _sign_tensor(len(parties), b.exact)
    term_settings = dict(factors)
    absent = [j for j in range(b.parties) if j not in term_settings]

    def at(absent_vals):
        idx = [0] * b.parties
        for j, s in term_settings.items():
            idx[j] = s
        for j, s in zip(absent, absent_vals):
            idx[j] = s
        return (m[tuple(idx)] * signs).sum()

    if absent_settings is not None:
        return at([absent_settings[j] for j in absent])
    ref = at([0] * len(absent))
    for vals in itertools.product(*(range(b.settings[j]) for j in absent)):
        if abs(at(vals) - ref) > tol:
            raise SignallingAmbiguity(
                f"correlator {factors} changes with absent settings {dict(zip(absent, vals))}"
            )
    return ref


def evaluate_s(
    b: Behavior,
    ineq: Inequality = S_FUNCTIONAL,
    tol: float | None = None,
    absent_settings: Sequence[int] | None = None,
):
    if b.parties != ineq.parties or b.settings != (2,) * b.parties or b.outcomes != (2,) * b.parties:
        raise ValueError("S needs a 4-party behavior with binary settings and outcomes")
    return sum(
        t.coefficient * correlator(b, t.factors, tol, absent_settings) if b.exact
        else float(t.coefficient) * correlator(b, t.factors, tol, absent_settings)
        for t in ineq.terms
    )


def evaluate_s_quantum(m: QuantumModel, ineq: Inequality = S_FUNCTIONAL) -> float:
    if m.parties != ineq.parties:
        raise ValueError(f"model has {m.parties} parties, inequality needs {ineq.parties}")
    return sum(float(t.coefficient) * expectation(m, t.factors) for t in ineq.terms)


def correlator_table(m: QuantumModel, ineq: Inequality = S_FUNCTIONAL) -> list[tuple[CorrelatorTerm, float, float]]:
    """(term, operator expectation, behavior-sum expectation) for every term."""
    beh = behavior_of(m)
    return [(t, expectation(m, t.factors), correlator(beh, t.factors)) for t in ineq.terms]


def functional(ineq: Inequality = S_FUNCTIONAL, absent_setting: int = 0) -> np.ndarray:
    """Coefficients F with S(b) = sum(F * b.table), as an exact object array.

    Absent parties are read at ``absent_setting``; on no-signalling tables the
    choice does not matter.
    """
    n = ineq.parties
    f = np.empty((2,) * (2 * n), dtype=object)
    f.fill(Fraction(0))
    for t in ineq.terms:
        settings = [absent_setting] * n
        for p, s in t.factors:
            settings[p] = s
        for o in itertools.product((0, 1), repeat=n):
            sign = (-1) ** sum(o[p] for p in t.parties)
            f[tuple(settings) + o] += t.coefficient * sign
    return f


def deterministic_value(strategy: Sequence[Sequence[int]], ineq: Inequality = S_FUNCTIONAL) -> Fraction:
    """S for the local deterministic strategy ``strategy[party][setting] -> outcome index``."""
    total = Fraction(0)
    for t in ineq.terms:
        prod = 1
        for p, s in t.factors:
            prod *= 1 - 2 * strategy[p][s]
        total += t.coefficient * prod
    return total


def max_deterministic(ineq: Inequality = S_FUNCTIONAL) -> tuple[Fraction, list]:
    """Brute-force maximum over all 4^n deterministic strategies and its maximizers."""
    local = list(itertools.product((0, 1), repeat=2))
    best, argmax = None, []
    for strategy in itertools.product(local, repeat=ineq.parties):
        v = deterministic_value(strategy, ineq)
        if best is None or v > best:
            best, argmax = v, [strategy]
        elif v == best:
            argmax.append(strategy)
    return best, argmax
