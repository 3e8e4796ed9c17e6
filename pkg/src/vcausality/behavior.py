"""Conditional probability tables p(outcomes | settings) for n parties.

A :class:`Behavior` stores its table as a numpy array of shape
``settings + outcomes``: the first ``n`` axes index the parties' settings,
the last ``n`` axes their outcomes.  Party 0 is A, party 1 is B and so on.
Outcome index 0 stands for the eigenvalue +1 and index 1 for -1.

Tables are either float64 or ``object`` arrays of :class:`fractions.Fraction`
("rational mode"); every operation here preserves the mode of its input.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
PARTY_NAMES = "ABCDEFGH"


class InvalidBehavior(ValueError):
    pass


class EmptySubset(ValueError):
    pass


class ZeroProbabilityCondition(ValueError):
    """The conditioning event has probability zero for some setting block."""


class WrongShape(ValueError):
    pass


class SignallingInput(ValueError):
    pass


def _is_exact(table: np.ndarray) -> bool:
    return table.dtype == object


def as_fraction_table(table: np.ndarray) -> np.ndarray:
    """Exact copy of ``table``; floats are converted bit-for-bit."""
    out = np.empty(table.shape, dtype=object)
    for idx, value in np.ndenumerate(table):
        out[idx] = Fraction(value) if not isinstance(value, Fraction) else value
    return out


@dataclass(frozen=True)
class Behavior:
    table: np.ndarray
    parties: int
    atol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        table = self.table
        if table.dtype != object:
            table = np.asarray(table, dtype=float)
        if table.ndim != 2 * self.parties:
            raise InvalidBehavior(
                f"table has {table.ndim} axes, expected {2 * self.parties} for {self.parties} parties"
            )
        table = table.copy()
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        if any(v < 0 for v in table.flat):
            raise InvalidBehavior("negative probability in table")
        sums = self.block_sums()
        if self.exact:
            bad = [s for s in sums.flat if s != 1]
        else:
            bad = [s for s in sums.flat if abs(s - 1) > self.atol]
        if bad:
            raise InvalidBehavior(f"setting block sums to {bad[0]}, not 1")

    @property
    def exact(self) -> bool:
        return _is_exact(self.table)

    @property
    def settings(self) -> tuple[int, ...]:
        return self.table.shape[: self.parties]

    @property
    def outcomes(self) -> tuple[int, ...]:
        return self.table.shape[self.parties:]

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        return (self.parties == other.parties and self.table.shape == other.table.shape
                and bool(np.all(self.table == other.table)))

    __hash__ = None

    def block_sums(self) -> np.ndarray:
        axes = tuple(range(self.parties, 2 * self.parties))
        return self.table.sum(axis=axes)

    def setting_tuples(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(s) for s in self.settings))

    def outcome_tuples(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(o) for o in self.outcomes))

    def prob(self, outcomes: Sequence[int], settings: Sequence[int]):
        return self.table[tuple(settings) + tuple(outcomes)]

    def to_exact(self) -> "Behavior":
        if self.exact:
            return self
        return Behavior(as_fraction_table(self.table), self.parties)

    def to_float(self) -> "Behavior":
        if not self.exact:
            return self
        return Behavior(self.table.astype(float), self.parties)

    @classmethod
    def from_function(cls, func, parties: int, settings: int = 2, outcomes: int = 2, exact: bool = False):
        """Tabulate ``func(outcomes, settings) -> probability``."""
        shape = (settings,) * parties + (outcomes,) * parties
        table = np.empty(shape, dtype=object if exact else float)
        for s in itertools.product(range(settings), repeat=parties):
            for o in itertools.product(range(outcomes), repeat=parties):
                table[s + o] = func(o, s)
        return cls(table, parties)


def uniform(parties: int, exact: bool = True) -> Behavior:
    p = Fraction(1, 2**parties) if exact else 0.5**parties
    return Behavior.from_function(lambda o, s: p, parties, exact=exact)


def deterministic(strategy: Sequence[Sequence[int]], exact: bool = True) -> Behavior:
    """Local deterministic point; ``strategy[i][x]`` is party i's outcome index on setting x."""
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    n = len(strategy)

    def f(o, s):
        return one if all(strategy[i][s[i]] == o[i] for i in range(n)) else zero

    return Behavior.from_function(f, n, exact=exact)


def product(local_tables: Sequence[np.ndarray]) -> Behavior:
    """Product behavior from per-party arrays ``local[x, a] = p_i(a|x)``."""
    n = len(local_tables)
    exact = any(np.asarray(t).dtype == object for t in local_tables)

    def f(o, s):
        value = Fraction(1) if exact else 1.0
        for i in range(n):
            value = value * local_tables[i][s[i]][o[i]]
        return value

    return Behavior.from_function(f, n, exact=exact)


def pr_box(exact: bool = True) -> Behavior:
    """Popescu-Rohrlich box: outcome indices satisfy b xor c = y*z, uniform marginals."""
    half, zero = (Fraction(1, 2), Fraction(0)) if exact else (0.5, 0.0)
    return Behavior.from_function(
        lambda o, s: half if (o[0] ^ o[1]) == (s[0] & s[1]) else zero, 2, exact=exact
    )


def mixture(weights: Sequence, behaviors: Sequence[Behavior]) -> Behavior:
    if len(weights) != len(behaviors) or not behaviors:
        raise ValueError("need one weight per behavior")
    table = sum(w * b.table for w, b in zip(weights, behaviors))
    return Behavior(np.asarray(table), behaviors[0].parties)


def _normalize_subset(b: Behavior, subset: Iterable[int]) -> tuple[int, ...]:
    subset = tuple(sorted(set(subset)))
    if not subset:
        raise EmptySubset("subset must contain at least one party")
    if subset[0] < 0 or subset[-1] >= b.parties:
        raise ValueError(f"parties {subset} out of range for {b.parties}-party behavior")
    return subset


def marginal(b: Behavior, subset: Iterable[int]) -> np.ndarray:
    """Marginal distribution of ``subset``, still indexed by *all* parties' settings.

    Returned array has shape ``b.settings + outcomes(subset)``; keeping every
    setting axis is what makes signalling visible.
    """
    subset = _normalize_subset(b, subset)
    summed = tuple(b.parties + j for j in range(b.parties) if j not in subset)
    return b.table.sum(axis=summed) if summed else b.table.copy()


def reduced(b: Behavior, subset: Iterable[int], absent_setting: int = 0) -> Behavior:
    """Behavior of ``subset`` alone, with absent parties fixed at ``absent_setting``."""
    subset = _normalize_subset(b, subset)
    m = marginal(b, subset)
    index = tuple(slice(None) if j in subset else absent_setting for j in range(b.parties))
    return Behavior(m[index], len(subset))


@dataclass(frozen=True)
class SignallingEntry:
    receivers: tuple[int, ...]
    influencer: int
    variation: float | Fraction

    def describe(self) -> str:
        names = "".join(PARTY_NAMES[i] for i in self.receivers)
        return f"{names} marginal depends on input of {PARTY_NAMES[self.influencer]} (TV {float(self.variation):.3g})"


@dataclass(frozen=True)
class SignallingReport:
    entries: tuple[SignallingEntry, ...]

    @property
    def no_signalling(self) -> bool:
        return not self.entries

    def __bool__(self):
        return bool(self.entries)

    def find(self, receivers: Iterable[int], influencer: int) -> SignallingEntry | None:
        receivers = tuple(sorted(receivers))
        for e in self.entries:
            if e.receivers == receivers and e.influencer == influencer:
                return e
        return None


def _max_variation(m: np.ndarray, axis: int, nout: int):
    """Max total-variation distance of the outcome distribution as setting ``axis`` varies."""
    best = 0
    nset = m.shape[axis]
    out_axes = tuple(range(m.ndim - nout, m.ndim))
    for s0, s1 in itertools.combinations(range(nset), 2):
        diff = np.take(m, s0, axis=axis) - np.take(m, s1, axis=axis)
        shifted = tuple(a - 1 for a in out_axes)
        tv = np.abs(diff).sum(axis=shifted) / 2
        best = max(best, max(tv.flat))
    return best


def no_signalling_check(b: Behavior, tol: float | None = None) -> SignallingReport:
    """Every proper subset S and party j outside it: does S's marginal move with j's input?

    ``tol`` defaults to 0 for exact tables and ``DEFAULT_TOL`` otherwise.
    """
    if tol is None:
        tol = 0 if b.exact else DEFAULT_TOL
    if tol < 0:
        raise ValueError("tol must be non-negative")
    entries = []
    for size in range(1, b.parties):
        for subset in itertools.combinations(range(b.parties), size):
            m = marginal(b, subset)
            for j in range(b.parties):
                if j in subset:
                    continue
                var = _max_variation(m, j, len(subset))
                if var > tol:
                    entries.append(SignallingEntry(subset, j, var))
    return SignallingReport(tuple(entries))


def condition(
    b: Behavior, fixed: Mapping[int, tuple[int, int]], tol: float = 0.0
) -> Behavior:
    """Bayes-condition on ``fixed = {party: (setting, outcome)}``.

    Returns the behavior of the remaining parties (original order kept).
    Raises :class:`ZeroProbabilityCondition` if the conditioning event has
    probability <= ``tol`` for any setting block of the remaining parties.
    """
    rest = [j for j in range(b.parties) if j not in fixed]
    if not rest:
        raise EmptySubset("cannot condition on every party")
    nrest = len(rest)
    shape = tuple(b.settings[j] for j in rest) + tuple(b.outcomes[j] for j in rest)
    out = np.empty(shape, dtype=b.table.dtype)
    for s_rest in itertools.product(*(range(b.settings[j]) for j in rest)):
        settings = [0] * b.parties
        outcome_index: list = [slice(None)] * b.parties
        for j, (s, o) in fixed.items():
            settings[j] = s
            outcome_index[j] = o
        for j, s in zip(rest, s_rest):
            settings[j] = s
        block = b.table[tuple(settings) + tuple(outcome_index)]
        denom = block.sum()
        if denom <= tol:
            raise ZeroProbabilityCondition(
                f"p({dict(fixed)}) = {denom} at remaining settings {s_rest}"
            )
        out[s_rest] = block / denom
    return Behavior(out, nrest)


# --- two-party 2x2x2x2 locality -------------------------------------------
#
# Facets are written in Collins-Gisin coordinates of the B-C pair:
#   g = (1, pB(0|0), pB(0|1), pC(0|0), pC(0|1), p00(00), p00(01), p00(10), p00(11))
# where pB(0|y) is read at C's setting 0 and pC(0|z) at B's setting 0.

CG_LABELS = ("1", "pB(0|0)", "pB(0|1)", "pC(0|0)", "pC(0|1)",
             "p00(00)", "p00(01)", "p00(10)", "p00(11)")
CANONICAL_CH = (0, -1, 0, -1, 0, 1, 1, 1, -1)


def _ch_raw(t: np.ndarray):
    """Canonical CH read directly off a (not necessarily normalized) table."""
    return (t[0, 0, 0, 0] + t[0, 1, 0, 0] + t[1, 0, 0, 0] - t[1, 1, 0, 0]
            - t[0, 0, 0, :].sum() - t[0, 0, :, 0].sum())


def _table_from_cg(g: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`cg_coordinates` on the no-signalling subspace (linear in g)."""
    t = np.zeros((2, 2, 2, 2), dtype=int)
    for y in (0, 1):
        for z in (0, 1):
            q = g[5 + 2 * y + z]
            pb, pc = g[1 + y], g[3 + z]
            t[y, z, 0, 0] = q
            t[y, z, 0, 1] = pb - q
            t[y, z, 1, 0] = pc - q
            t[y, z, 1, 1] = g[0] - pb - pc + q
    return t


def _relabel(t: np.ndarray, swap_b_in, swap_c_in, flip_b, flip_c, swap_parties) -> np.ndarray:
    for axis, on in enumerate((swap_b_in, swap_c_in, flip_b, flip_c)):
        if on:
            t = np.flip(t, axis=axis)
    if swap_parties:
        t = t.transpose(1, 0, 3, 2)
    return t


def _generate_ch_facets() -> tuple[tuple[int, ...], ...]:
    basis = [_table_from_cg([int(i == k) for i in range(9)]) for k in range(9)]
    seen: list[tuple[int, ...]] = []
    for flags in itertools.product((False, True), repeat=5):
        facet = tuple(int(_ch_raw(_relabel(t, *flags))) for t in basis)
        if facet not in seen:
            seen.append(facet)
    return tuple(seen)


CH_FACETS = _generate_ch_facets()


def cg_coordinates(b2: Behavior) -> list:
    _check_2222(b2)
    t = b2.table
    coords = [Fraction(1) if b2.exact else 1.0]
    coords += [t[y, 0, 0, :].sum() for y in (0, 1)]
    coords += [t[0, z, :, 0].sum() for z in (0, 1)]
    coords += [t[y, z, 0, 0] for y in (0, 1) for z in (0, 1)]
    return coords


def _check_2222(b2: Behavior):
    if b2.parties != 2 or b2.table.shape != (2, 2, 2, 2):
        raise WrongShape(f"expected a 2-party 2x2x2x2 behavior, got shape {b2.table.shape}")


def ch_value(b2: Behavior, facet: int = 0):
    """Value of CH facet ``facet`` (0 is the canonical form); local points give <= 0."""
    g = cg_coordinates(b2)
    return sum(h * x for h, x in zip(CH_FACETS[facet], g) if h)


@dataclass(frozen=True)
class LocalityVerdict:
    local: bool
    values: tuple
    facet: int | None = None

    @property
    def witness(self):
        return None if self.facet is None else (self.facet, self.values[self.facet])

    def __bool__(self):
        return self.local


def is_local_2222(b2: Behavior, tol: float | None = None) -> LocalityVerdict:
    """CH-facet membership test for the 2x2x2x2 local polytope.

    The input must be no-signalling at ``tol``; the witness is the most
    violated facet.
    """
    _check_2222(b2)
    if tol is None:
        tol = 0 if b2.exact else DEFAULT_TOL
    if no_signalling_check(b2, tol):
        raise SignallingInput("locality is only defined for no-signalling behaviors")
    values = tuple(ch_value(b2, k) for k in range(len(CH_FACETS)))
    worst = max(range(len(values)), key=lambda k: values[k])
    if values[worst] > tol:
        return LocalityVerdict(False, values, worst)
    return LocalityVerdict(True, values)
