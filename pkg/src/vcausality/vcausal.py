"""Behaviors generated by common causes plus finite-speed direct causes.

A model fixes a finite distribution over hidden variables and, for every
party, a response ``p(outcome | own setting, lambda, history)`` where the
history holds the (setting, outcome) of each party whose influence reaches
it.  The joint is the product of responses in a topological order of the
influence graph, averaged over lambda.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .behavior import Behavior
from .quantum import QuantumModel, apply_local, projectors
from .spacetime import C, Event, InvalidConfig, VConeConfig, distance, v_connected

History = Mapping[int, tuple[int, int]]
Response = Callable[[int, int, Hashable, History], object]


class CyclicConnectivity(ValueError):
    pass


class UnnormalizedResponse(ValueError):
    pass


def _is_exact_value(v) -> bool:
    return isinstance(v, (Fraction, int)) and not isinstance(v, bool)


@dataclass
class VCausalModel:
    """``responses[i](outcome, setting, lam, history) -> probability``.

    ``edges`` holds pairs ``(i, j)``: party i's setting and outcome reach j.
    """

    parties: int
    lambdas: Sequence[tuple[object, Hashable]]
    edges: frozenset[tuple[int, int]]
    responses: Sequence[Response]
    settings: tuple[int, ...] | None = None
    outcomes: tuple[int, ...] | None = None

    def __post_init__(self):
        n = self.parties
        self.settings = tuple(self.settings or (2,) * n)
        self.outcomes = tuple(self.outcomes or (2,) * n)
        self.edges = frozenset((int(i), int(j)) for i, j in self.edges)
        if len(self.responses) != n or len(self.settings) != n or len(self.outcomes) != n:
            raise ValueError("one response, setting count and outcome count per party")
        if any(w < 0 for w, _ in self.lambdas):
            raise ValueError("negative hidden-variable weight")
        total = sum(w for w, _ in self.lambdas)
        if (Fraction(total) != 1) if self.exact_weights else abs(total - 1) > 1e-12:
            raise ValueError(f"hidden-variable weights sum to {total}")
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"bad influence edge {(i, j)}")
        self.order = topological_order(n, self.edges)

    @property
    def exact_weights(self) -> bool:
        return all(_is_exact_value(w) for w, _ in self.lambdas)

    def predecessors(self, j: int) -> list[int]:
        return sorted(i for i, k in self.edges if k == j)


def topological_order(n: int, edges: frozenset[tuple[int, int]]) -> list[int]:
    """Kahn's algorithm, smallest index first among ready parties."""
    indeg = [0] * n
    for _, j in edges:
        indeg[j] += 1
    ready = sorted(i for i in range(n) if indeg[i] == 0)
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for a, j in sorted(edges):
            if a == i:
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
        ready.sort()
    if len(order) != n:
        raise CyclicConnectivity("influence graph has a cycle")
    return order


def edges_from_config(cfg: VConeConfig, labels: Sequence[str]) -> frozenset[tuple[int, int]]:
    """Influence edges between the measurement events named ``labels`` (party order)."""
    events = [cfg.event(lab) for lab in labels]
    return frozenset(
        (i, j) for i, j in itertools.permutations(range(len(events)), 2)
        if v_connected(events[i], events[j], cfg.v)
    )


def behavior_of_model(m: VCausalModel, tol: float = 1e-12) -> Behavior:
    """Tabulate p(outcomes | settings) for the model.

    Exact when all weights and response values are rationals.
    """
    n = m.parties
    exact = m.exact_weights
    shape = m.settings + m.outcomes
    table = np.zeros(shape, dtype=object)
    preds = [m.predecessors(j) for j in range(n)]

    def response_row(j, s, lam, hist):
        row = [m.responses[j](o, s[j], lam, hist) for o in range(m.outcomes[j])]
        total = sum(row)
        bad = total != 1 if all(_is_exact_value(v) for v in row) else abs(total - 1) > tol
        if bad or any(v < 0 for v in row):
            raise UnnormalizedResponse(f"party {j}, setting {s[j]}, lambda {lam!r}, history {hist}: {row}")
        return row

    for s in itertools.product(*(range(k) for k in m.settings)):
        for w, lam in m.lambdas:
            # depth-first over outcomes in topological order
            stack = [(0, {}, w)]
            while stack:
                depth, outs, p = stack.pop()
                if depth == n:
                    idx = s + tuple(outs[j] for j in range(n))
                    table[idx] += p
                    continue
                j = m.order[depth]
                hist = {i: (s[i], outs[i]) for i in preds[j]}
                for o, q in enumerate(response_row(j, s, lam, hist)):
                    if q:
                        stack.append((depth + 1, {**outs, j: o}, p * q))
    exact = exact and all(_is_exact_value(v) for v in table.flat)
    if exact:
        table = np.vectorize(Fraction, otypes=[object])(table)
    else:
        table = table.astype(float)
    return Behavior(table, n)


# --- three-party triangle with a GHZ state ---------------------------------
#
# A's setting 1 means "measures early enough to reach B and C", setting 0
# "measures too late".  B and C have one setting each and never reach each
# other.

HALF = Fraction(1, 2)


def ghz_triangle_model(shared_bit: bool = False) -> VCausalModel:
    """Pure direct-cause explanation of sigma_z GHZ correlations on the triangle.

    With ``shared_bit`` every party that receives no influence outputs a
    common random bit instead of a fresh coin, which removes the signalling.
    """
    lambdas = [(HALF, 0), (HALF, 1)] if shared_bit else [(Fraction(1), None)]

    def alice(o, x, lam, hist):
        if shared_bit:
            return Fraction(o == lam)
        return HALF

    def receiver(o, s, lam, hist):
        x, a = hist[0]
        if x == 1:
            return Fraction(o == a)
        return Fraction(o == lam) if shared_bit else HALF

    return VCausalModel(3, lambdas, frozenset({(0, 1), (0, 2)}), [alice, receiver, receiver],
                        settings=(2, 1, 1))


# --- four-party direct-cause model built from quantum conditionals ---------

ZERO_BRANCH = 1e-14


def _project(state: np.ndarray, party: int, proj: np.ndarray) -> tuple[float, np.ndarray]:
    phi = apply_local(state, {party: proj})
    p = float(np.vdot(phi, phi).real)
    return p, phi


def dc_behavior_fig3(q: QuantumModel) -> Behavior:
    """p(a|x) p(d|w,x,a) p(b|y,x,a,w,d) p(c|z,x,a,w,d) with quantum conditionals.

    Each conditional comes from projecting and renormalizing the state after
    the earlier results.  B and C see the same (x,a,w,d) history but not each
    other.  Branches of probability below ``ZERO_BRANCH`` get uniform
    responses.
    """
    if q.parties != 4:
        raise ValueError("needs a four-party model")
    A, B, Cp, D = range(4)
    projs = [[projectors(o) for o in party] for party in q.observables]
    table = np.zeros(q.settings + (2,) * 4)

    def conditional(state, party, setting):
        """[(p(o), post-state)] for both outcomes; uniform if the branch is empty."""
        out = []
        for o in (0, 1):
            out.append(_project(state, party, projs[party][setting][o]))
        total = out[0][0] + out[1][0]
        if total < ZERO_BRANCH:
            return [(0.5, state), (0.5, state)]
        return [(p / total, phi / math.sqrt(p) if p > ZERO_BRANCH else phi) for p, phi in out]

    psi = q.state / np.linalg.norm(q.state)
    for x in range(q.settings[A]):
        for a, (pa, psi_a) in enumerate(conditional(psi, A, x)):
            for w in range(q.settings[D]):
                for d, (pd, psi_ad) in enumerate(conditional(psi_a, D, w)):
                    for y in range(q.settings[B]):
                        pb = [p for p, _ in conditional(psi_ad, B, y)]
                        for z in range(q.settings[Cp]):
                            pc = [p for p, _ in conditional(psi_ad, Cp, z)]
                            for b, c in itertools.product((0, 1), repeat=2):
                                table[x, y, z, w, a, b, c, d] = pa * pd * pb[b] * pc[c]
    return Behavior(table, 4, atol=1e-12)


# --- GHZ signalling protocol -----------------------------------------------

@dataclass(frozen=True)
class ProtocolResult:
    rounds: int
    message: str
    trials: int
    errors: int
    empirical_error_rate: float
    analytic_error_rate: Fraction
    analytic_error_rates: Mapping[str, Fraction] = field(default_factory=dict)
    analytic_success: Fraction = Fraction(0)
    seed: int | None = None
    speed: float | None = None

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of the empirical error rate."""
        p = float(self.analytic_error_rate)
        return math.sqrt(p * (1 - p) / self.trials)

    def within(self, n_sigma: float = 5.0) -> bool:
        dev = abs(self.empirical_error_rate - float(self.analytic_error_rate))
        if self.sigma == 0:
            return dev == 0
        return dev <= n_sigma * self.sigma


def analytic_error_rates(rounds: int) -> dict[str, Fraction]:
    """Receiver says "yes" iff b == c in every round."""
    return {"yes": Fraction(0), "no": Fraction(1, 2**rounds)}


def analytic_success(rounds: int) -> Fraction:
    """Success probability with equally likely messages."""
    err = analytic_error_rates(rounds)
    return 1 - (err["yes"] + err["no"]) / 2


def ghz_protocol(
    rounds: int,
    message: str,
    seed: int | None = 0,
    trials: int = 100_000,
    cfg: VConeConfig | None = None,
) -> ProtocolResult:
    """Monte Carlo run of the triangle protocol under the pure direct-cause model.

    ``rounds`` GHZ triples encode one message; ``trials`` independent
    messages are simulated to estimate the error rate.
    """
    if rounds < 1 or trials < 1:
        raise ValueError("rounds and trials must be positive")
    if message not in ("yes", "no"):
        raise ValueError("message must be 'yes' or 'no'")
    rng = np.random.default_rng(seed)
    errors = 0
    chunk = max(1, 2_000_000 // rounds)
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        a = rng.integers(0, 2, size=(k, rounds), dtype=np.int8)
        if message == "yes":
            b, c = a, a
        else:
            b = rng.integers(0, 2, size=(k, rounds), dtype=np.int8)
            c = rng.integers(0, 2, size=(k, rounds), dtype=np.int8)
        says_yes = (b == c).all(axis=1)
        errors += int((~says_yes).sum() if message == "yes" else says_yes.sum())
        done += k
    rates = analytic_error_rates(rounds)
    return ProtocolResult(
        rounds=rounds, message=message, trials=trials, errors=errors,
        empirical_error_rate=errors / trials, analytic_error_rate=rates[message],
        analytic_error_rates=rates, analytic_success=analytic_success(rounds),
        seed=seed, speed=None if cfg is None else signalling_speed(cfg),
    )


def signalling_speed(cfg: VConeConfig, report_speed: float = C) -> float:
    """End-to-end speed of a message from A's measurement to the decoding event.

    Three-party layout (events A, B, C): B and C must both be reached by A's
    influence and not reach each other; C reports to B at ``report_speed``
    and B decodes.  With a fourth event D the receivers B, C report to D,
    which decodes.
    """
    labels = {e.label for e in cfg.events}
    for need in ("A", "B", "C"):
        if need not in labels:
            raise InvalidConfig(f"missing event {need}")
    a = cfg.event("A")
    receivers = ["B", "C"] + (["D"] if "D" in labels else [])
    for r in receivers:
        if not cfg.connected("A", r):
            raise InvalidConfig(f"A's influence does not reach {r}")
    if cfg.connected("B", "C") or cfg.connected("C", "B"):
        raise InvalidConfig("B and C must not be v-connected")
    decoder = cfg.event("D" if "D" in labels else "B")
    t_decode = max(cfg.event(r).t + distance(cfg.event(r), decoder) / report_speed for r in receivers)
    elapsed = t_decode - a.t
    if elapsed <= 0:
        raise InvalidConfig("decoding does not happen after A's measurement")
    return distance(a, decoder) / elapsed


def triangle_config(length: float, separation: float, v: float) -> VConeConfig:
    """A at the origin; B and C at distance ``length`` along x, ``separation`` apart, measuring together.

    B and C measure exactly when A's influence arrives.
    """
    half = separation / 2
    reach = math.hypot(length, half)
    events = [Event(0.0, (0.0, 0.0), "A"),
              Event(reach / v, (length, half), "B"),
              Event(reach / v, (length, -half), "C")]
    return VConeConfig(v, events, [("A", "B", True), ("A", "C", True), ("B", "C", False)])
