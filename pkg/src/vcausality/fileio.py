"""JSON readers and writers for behaviors, event configurations, quantum states and models.

Probabilities are JSON numbers (float mode) or strings holding a decimal or
an exact fraction ``"p/q"`` (rational mode).  Floats round-trip bit-exactly
because :mod:`json` writes ``repr``.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .behavior import PARTY_NAMES, Behavior, InvalidBehavior
from .spacetime import C, Event, Requirement, VConeConfig
from .vcausal import CyclicConnectivity, VCausalModel


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _load_json(path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


def _require(d: dict, key: str, context: str = ""):
    if not isinstance(d, dict) or key not in d:
        raise ParseError("missing", field=f"{context}{key}")
    return d[key]


def _number(v, field: str):
    """JSON number -> float; string -> exact Fraction."""
    if isinstance(v, bool):
        raise ParseError(f"expected a probability, got {v!r}", field=field)
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"cannot parse {v!r} as a number", field=field) from None
    raise ParseError(f"expected a probability, got {type(v).__name__}", field=field)


def _int_tuple(v, n: int, field: str) -> tuple[int, ...]:
    if isinstance(v, int):
        v = [v] * n
    if not (isinstance(v, list) and len(v) == n and all(isinstance(k, int) and k >= 1 for k in v)):
        raise ParseError(f"expected {n} positive integers", field=field)
    return tuple(v)


# --- behaviors -------------------------------------------------------------

def behavior_to_dict(b: Behavior) -> dict:
    table = {}
    for s in b.setting_tuples():
        block = b.table[s].flatten()
        if b.exact:
            table[",".join(map(str, s))] = [f"{q.numerator}/{q.denominator}" for q in block]
        else:
            table[",".join(map(str, s))] = [float(v) for v in block]
    return {"parties": b.parties, "settings": list(b.settings), "outcomes": list(b.outcomes), "table": table}


def behavior_from_dict(d: dict, exact: bool | None = None) -> Behavior:
    """Build a Behavior; ``exact=None`` picks rational mode iff every entry is a string."""
    n = _require(d, "parties")
    if not isinstance(n, int) or n < 1:
        raise ParseError("expected a positive integer", field="parties")
    settings = _int_tuple(_require(d, "settings"), n, "settings")
    outcomes = _int_tuple(_require(d, "outcomes"), n, "outcomes")
    table_in = _require(d, "table")
    if not isinstance(table_in, dict):
        raise ParseError("expected an object keyed by setting tuples", field="table")
    block_size = int(np.prod(outcomes))
    values: dict[tuple[int, ...], list] = {}
    for key, block in table_in.items():
        field = f"table.{key}"
        try:
            s = tuple(int(k) for k in key.split(","))
        except ValueError:
            raise ParseError("setting key must be comma-separated integers", field=field) from None
        if len(s) != n or any(not 0 <= k < m for k, m in zip(s, settings)):
            raise ParseError(f"setting tuple out of range for settings {settings}", field=field)
        if not isinstance(block, list) or len(block) != block_size:
            raise ParseError(f"expected a list of {block_size} probabilities", field=field)
        values[s] = [_number(v, f"{field}[{i}]") for i, v in enumerate(block)]
    missing = [s for s in itertools.product(*(range(k) for k in settings)) if s not in values]
    if missing:
        raise ParseError(f"no entry for setting tuple {','.join(map(str, missing[0]))}", field="table")
    if exact is None:
        exact = all(isinstance(v, Fraction) for block in values.values() for v in block)
    table = np.empty(settings + outcomes, dtype=object if exact else float)
    for s, block in values.items():
        if exact:
            block = [Fraction(v) for v in block]
        else:
            block = [float(v) for v in block]
        arr = np.empty(block_size, dtype=table.dtype)
        arr[:] = block
        table[s] = arr.reshape(outcomes)
    try:
        return Behavior(table, n)
    except InvalidBehavior as exc:
        raise ParseError(str(exc), field="table") from None


def dump_behavior(b: Behavior, path) -> None:
    Path(path).write_text(json.dumps(behavior_to_dict(b), indent=1) + "\n")


def load_behavior(path, exact: bool | None = None) -> Behavior:
    return behavior_from_dict(_load_json(path), exact)


# --- event configurations --------------------------------------------------

def _event(d: dict, field: str) -> Event:
    try:
        return Event(float(_require(d, "t", field + ".")), tuple(d.get("r", [0.0])), str(_require(d, "label", field + ".")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), field=field) from None


def config_from_dict(d: dict) -> tuple[VConeConfig, list[Event]]:
    """Returns the configuration and the (possibly empty) list of choice events.

    The influence speed is given as ``v`` in m/s or ``v_over_c``.
    """
    if "v" in d:
        v = d["v"]
    elif "v_over_c" in d:
        v = d["v_over_c"] * C if isinstance(d["v_over_c"], (int, float)) else None
    else:
        raise ParseError("missing 'v' or 'v_over_c'", field="v")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ParseError("influence speed must be a number", field="v")
    events = [_event(e, f"events[{i}]") for i, e in enumerate(_require(d, "events"))]
    required = []
    for i, r in enumerate(d.get("required", [])):
        field = f"required[{i}]"
        if isinstance(r, dict):
            r = [_require(r, "earlier", field + "."), _require(r, "later", field + "."), r.get("connected", True)]
        if not (isinstance(r, list) and len(r) == 3 and isinstance(r[2], bool)):
            raise ParseError("expected [earlier, later, connected]", field=field)
        required.append(Requirement(str(r[0]), str(r[1]), r[2]))
    choices = [_event(e, f"choices[{i}]") for i, e in enumerate(d.get("choices", []))]
    try:
        cfg = VConeConfig(float(v), events, required)
    except ValueError as exc:
        raise ParseError(str(exc), field="v") from None
    return cfg, choices


def config_to_dict(cfg: VConeConfig, choices: list[Event] = ()) -> dict:
    def ev(e):
        return {"label": e.label, "t": e.t, "r": list(e.r)}

    d = {"v": cfg.v, "events": [ev(e) for e in cfg.events],
         "required": [[r.earlier, r.later, r.connected] for r in cfg.required]}
    if choices:
        d["choices"] = [ev(e) for e in choices]
    return d


def load_config(path) -> tuple[VConeConfig, list[Event]]:
    return config_from_dict(_load_json(path))


# --- quantum states ---------------------------------------------------------

def state_from_dict(d: dict) -> np.ndarray:
    """``{"amplitudes": {"0101": amp, ...}}``; amp is a number or ``[re, im]``."""
    amps = _require(d, "amplitudes")
    if not isinstance(amps, dict) or not amps:
        raise ParseError("expected a non-empty object", field="amplitudes")
    n = len(next(iter(amps)))
    psi = np.zeros(2**n, dtype=complex)
    for label, a in amps.items():
        field = f"amplitudes.{label}"
        if len(label) != n or set(label) - {"0", "1"}:
            raise ParseError(f"basis label must be {n} bits", field=field)
        if isinstance(a, list) and len(a) == 2:
            a = complex(float(a[0]), float(a[1]))
        elif isinstance(a, (int, float)) and not isinstance(a, bool):
            a = complex(a)
        else:
            raise ParseError("amplitude must be a number or [re, im]", field=field)
        psi[int(label, 2)] = a
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > 1e-9:
        raise ParseError(f"state has norm {norm}, expected 1", field="amplitudes")
    return psi


def load_state(path) -> np.ndarray:
    return state_from_dict(_load_json(path))


# --- v-causal models --------------------------------------------------------

def _party(name, n: int, field: str) -> int:
    if isinstance(name, int) and 0 <= name < n:
        return name
    if isinstance(name, str) and name in PARTY_NAMES[:n]:
        return PARTY_NAMES.index(name)
    raise ParseError(f"unknown party {name!r}", field=field)


def _matches(pattern, value) -> bool:
    return pattern == "*" or pattern == value


def model_from_dict(d: dict) -> VCausalModel:
    """Table-driven model.

    ``responses`` maps each party to a list of rules ``{"lambda", "setting",
    "given": {party: [setting, outcome]}, "p": [...]}``; the first rule whose
    fields match wins, and omitted fields (or ``"*"``) match anything.
    """
    n = _require(d, "parties")
    if not isinstance(n, int) or n < 1:
        raise ParseError("expected a positive integer", field="parties")
    settings = _int_tuple(d.get("settings", 2), n, "settings")
    outcomes = _int_tuple(d.get("outcomes", 2), n, "outcomes")
    lambdas = []
    for i, item in enumerate(d.get("lambda", [{"id": 0, "weight": "1"}])):
        lambdas.append((_number(_require(item, "weight", f"lambda[{i}]."), f"lambda[{i}].weight"), item.get("id", i)))
    edges = set()
    for i, e in enumerate(d.get("edges", [])):
        if not (isinstance(e, list) and len(e) == 2):
            raise ParseError("expected [from, to]", field=f"edges[{i}]")
        edges.add((_party(e[0], n, f"edges[{i}]"), _party(e[1], n, f"edges[{i}]")))
    rules_in = _require(d, "responses")
    rules: list[list[tuple]] = [[] for _ in range(n)]
    for name, items in rules_in.items():
        j = _party(name, n, f"responses.{name}")
        for k, rule in enumerate(items):
            field = f"responses.{name}[{k}]"
            probs = [_number(v, f"{field}.p") for v in _require(rule, "p", field + ".")]
            if len(probs) != outcomes[j]:
                raise ParseError(f"expected {outcomes[j]} probabilities", field=field + ".p")
            given = {_party(p, n, field + ".given"): tuple(so) for p, so in rule.get("given", {}).items()}
            rules[j].append((rule.get("lambda", "*"), rule.get("setting", "*"), given, probs))

    def make_response(j):
        def response(o, s, lam, hist):
            for lam_pat, s_pat, given, probs in rules[j]:
                if _matches(lam_pat, lam) and _matches(s_pat, s) and all(
                    p in hist and all(_matches(a, b) for a, b in zip(so, hist[p])) for p, so in given.items()
                ):
                    return probs[o]
            raise ParseError(f"no rule for setting {s}, lambda {lam!r}, history {dict(hist)}",
                             field=f"responses.{PARTY_NAMES[j]}")
        return response

    try:
        return VCausalModel(n, lambdas, frozenset(edges), [make_response(j) for j in range(n)], settings, outcomes)
    except (ParseError, CyclicConnectivity):
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load_model(path) -> VCausalModel:
    return model_from_dict(_load_json(path))
