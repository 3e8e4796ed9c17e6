"""Event geometry in a hypothetical privileged frame.

Times are in seconds and positions in meters.  Positions may have one, two
or three components; missing components are zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

C = 299_792_458.0  # m/s, exact by definition


class UnknownLabel(KeyError):
    pass


class SuperluminalFrame(ValueError):
    pass


class DegenerateTiming(ArithmeticError):
    """The time window is zero, so no finite speed bound exists."""


class CoLocatedEvents(ValueError):
    pass


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    t: float
    r: tuple[float, float, float] = (0.0, 0.0, 0.0)
    label: str = ""

    def __post_init__(self):
        r = tuple(float(v) for v in np.atleast_1d(self.r))
        if len(r) > 3:
            raise ValueError(f"position has {len(r)} components, at most 3 allowed")
        r = r + (0.0,) * (3 - len(r))
        t = float(self.t)
        if not (math.isfinite(t) and all(math.isfinite(v) for v in r)):
            raise ValueError(f"non-finite coordinates in event {self.label!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)

    @property
    def position(self) -> np.ndarray:
        return np.array(self.r)


def distance(e1: Event, e2: Event) -> float:
    return float(np.linalg.norm(e2.position - e1.position))


def v_connected(e1: Event, e2: Event, v: float) -> bool:
    """True iff an influence leaving ``e1`` at speed ``v`` reaches ``e2`` (cone boundary included)."""
    if v <= 0:
        raise ValueError("speed must be positive")
    dt = e2.t - e1.t
    if dt <= 0:
        return False
    return distance(e1, e2) <= v * dt


@dataclass(frozen=True)
class Requirement:
    earlier: str
    later: str
    connected: bool


@dataclass
class VConeConfig:
    v: float
    events: list[Event]
    required: list[Requirement] = field(default_factory=list)

    def __post_init__(self):
        if not self.v > C:
            raise InvalidConfig(f"influence speed {self.v} m/s must exceed c")
        labels = [e.label for e in self.events]
        if len(set(labels)) != len(labels):
            raise InvalidConfig("duplicate event labels")
        self.required = [r if isinstance(r, Requirement) else Requirement(*r) for r in self.required]

    def event(self, label: str) -> Event:
        for e in self.events:
            if e.label == label:
                return e
        raise UnknownLabel(label)

    def connected(self, earlier: str, later: str, speed: float | None = None) -> bool:
        return v_connected(self.event(earlier), self.event(later), self.v if speed is None else speed)


@dataclass(frozen=True)
class Violation:
    earlier: str
    later: str
    expected: bool
    slack: float  # v*dt - |dr| in meters; positive means inside the cone

    def describe(self) -> str:
        want = "connected" if self.expected else "not connected"
        return f"{self.earlier}->{self.later} should be {want} (cone slack {self.slack:.6g} m)"


def _slack(e1: Event, e2: Event, v: float) -> float:
    return v * (e2.t - e1.t) - distance(e1, e2)


def validate_config(cfg: VConeConfig) -> tuple[bool, list[Violation]]:
    """Check every required (earlier, later, connected) entry; all failures are returned."""
    violations = []
    for req in cfg.required:
        e1, e2 = cfg.event(req.earlier), cfg.event(req.later)
        if v_connected(e1, e2, cfg.v) != req.connected:
            violations.append(Violation(req.earlier, req.later, req.connected, _slack(e1, e2, cfg.v)))
    return not violations, violations


# --- Lorentz boosts --------------------------------------------------------

@dataclass(frozen=True)
class FrameBoost:
    """Frame moving with velocity ``u`` (m/s) relative to the lab frame."""

    u: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        u = tuple(float(x) for x in np.atleast_1d(self.u))
        u = u + (0.0,) * (3 - len(u))
        if not np.linalg.norm(u) < C:
            raise SuperluminalFrame(f"|u| = {np.linalg.norm(u)} m/s is not below c")
        object.__setattr__(self, "u", u)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.u))

    @property
    def gamma(self) -> float:
        beta = self.speed / C
        return 1.0 / math.sqrt(1.0 - beta * beta)

    def inverse(self) -> "FrameBoost":
        return FrameBoost(tuple(-x for x in self.u))

    @classmethod
    def from_beta(cls, beta: float, direction: Sequence[float] = (1.0, 0.0, 0.0)) -> "FrameBoost":
        n = np.asarray(direction, dtype=float)
        n = np.concatenate([n, np.zeros(3 - n.size)])
        return cls(tuple(beta * C * n / np.linalg.norm(n)))


LAB = FrameBoost()


def boost(e: Event, f: FrameBoost) -> Event:
    """Coordinates of ``e`` in the frame moving at ``f.u``."""
    u = np.array(f.u)
    speed = np.linalg.norm(u)
    if speed == 0:
        return e
    n = u / speed
    g = f.gamma
    r = e.position
    rn = r @ n
    t2 = g * (e.t - (u @ r) / C**2)
    r2 = r + (g - 1.0) * rn * n - g * u * e.t
    return Event(t2, tuple(r2), e.label)


def interval(e1: Event, e2: Event) -> float:
    """c^2 dt^2 - |dr|^2."""
    dt = e2.t - e1.t
    dr = e2.position - e1.position
    return C**2 * dt * dt - float(dr @ dr)


def interval_scale(e1: Event, e2: Event) -> float:
    """Magnitude the interval is compared against when checking relative agreement."""
    dt = e2.t - e1.t
    dr = e2.position - e1.position
    return max(C**2 * dt * dt, float(dr @ dr))


def speed_bound(e1: Event, e2: Event, sync_uncertainty: float, frame: FrameBoost = LAB) -> float:
    """Smallest influence speed that could link the events in ``frame``.

    Either event may be the cause, so the time separation enters as
    ``|dt'|``, widened by the synchronization uncertainty.
    """
    if sync_uncertainty < 0:
        raise ValueError("sync_uncertainty must be non-negative")
    if distance(e1, e2) == 0:
        raise CoLocatedEvents("events at the same place give no speed bound")
    b1, b2 = boost(e1, frame), boost(e2, frame)
    window = abs(b2.t - b1.t) + sync_uncertainty
    if window <= 0:
        raise DegenerateTiming("simultaneous events with perfect synchronization: bound is unbounded")
    return distance(b1, b2) / window


@dataclass(frozen=True)
class ScanPoint:
    beta: float
    theta: float
    phi: float
    v_min: float


def direction(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def scan_frames(
    e1: Event,
    e2: Event,
    sync_uncertainty: float,
    beta_max: float,
    n_speeds: int = 1,
    n_theta: int = 7,
    n_phi: int = 12,
) -> list[ScanPoint]:
    """speed_bound over a grid of candidate frames.

    Boost speeds are ``beta_max * k / n_speeds`` for k = 1..n_speeds;
    directions are a polar/azimuth grid (theta includes both poles).
    """
    if not 0 < beta_max < 1:
        raise SuperluminalFrame("beta_max must lie in (0, 1)")
    if n_speeds < 1 or n_theta < 1 or n_phi < 1:
        raise ValueError("grid sizes must be positive")
    thetas = np.linspace(0, math.pi, n_theta) if n_theta > 1 else np.array([math.pi / 2])
    phis = np.arange(n_phi) * 2 * math.pi / n_phi
    points = []
    for k in range(1, n_speeds + 1):
        beta = beta_max * k / n_speeds
        for theta, phi in itertools.product(thetas, phis):
            if (theta == 0 or theta == math.pi) and phi != phis[0]:
                continue  # poles: azimuth is irrelevant
            f = FrameBoost.from_beta(beta, direction(theta, phi))
            points.append(ScanPoint(beta, float(theta), float(phi), speed_bound(e1, e2, sync_uncertainty, f)))
    return points


def weakest_frame(points: Iterable[ScanPoint]) -> ScanPoint:
    """The scanned frame with the smallest bound, i.e. the one an experiment excludes least."""
    return min(points, key=lambda p: p.v_min)


# --- measurement scheduling for the four-party test -------------------------

CHOICE_LABELS = ("x", "w", "selector", "setting")


def ordering_protocol_check(
    cfg: VConeConfig, choices: Sequence[Event], measurement_labels: tuple[str, str] = ("A", "D")
) -> tuple[bool, list[str]]:
    """Check the random-choice schedule against light cones of the measurements.

    ``choices`` must contain events labelled ``x``, ``w``, ``selector`` (which
    of B or C is measured) and ``setting`` (that party's setting).  Light-cone
    connections suffice because every v > c cone contains the light cone.
    """
    by_label = {e.label: e for e in choices}
    for name in CHOICE_LABELS:
        if name not in by_label:
            raise UnknownLabel(name)
    a_meas, d_meas = (cfg.event(lab) for lab in measurement_labels)
    problems = []
    x = by_label["x"]
    for e in choices:
        if e is not x and not x.t < e.t:
            problems.append(f"x must be strictly earliest, but {e.label} is at t={e.t} <= {x.t}")
    if not v_connected(a_meas, by_label["w"], C):
        problems.append("w is outside the future light cone of A's measurement")
    for name in ("selector", "setting"):
        if not v_connected(d_meas, by_label[name], C):
            problems.append(f"{name} is outside the future light cone of D's measurement")
    return not problems, problems
