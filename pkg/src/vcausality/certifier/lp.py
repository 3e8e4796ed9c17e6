"""Exact-rational linear programs and their certificates.

Every program has the form::

    maximize    c . x
    subject to  A_eq x  = b_eq
                A_ub x <= b_ub
                x >= 0

Rows are stored sparsely as ``{column: Fraction}`` dicts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Row = dict[int, Fraction]


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass
class ConstraintSet:
    rows: list[Row] = field(default_factory=list)
    rhs: list[Fraction] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    def add(self, row: Mapping[int, object], rhs=0, label: str = "") -> None:
        clean = {int(j): _frac(v) for j, v in row.items() if v != 0}
        self.rows.append(clean)
        self.rhs.append(_frac(rhs))
        self.labels.append(label)

    def extend(self, other: "ConstraintSet") -> "ConstraintSet":
        self.rows.extend(other.rows)
        self.rhs.extend(other.rhs)
        self.labels.extend(other.labels)
        return self

    def __len__(self):
        return len(self.rows)

    def residuals(self, x: Sequence[Fraction]) -> list[Fraction]:
        """row . x - rhs for every row."""
        return [sum((v * x[j] for j, v in row.items()), Fraction(0)) - b
                for row, b in zip(self.rows, self.rhs)]


@dataclass
class LinearProgram:
    n_vars: int
    objective: Row = field(default_factory=dict)
    equalities: ConstraintSet = field(default_factory=ConstraintSet)
    inequalities: ConstraintSet = field(default_factory=ConstraintSet)
    name: str = ""

    def objective_value(self, x: Sequence[Fraction]) -> Fraction:
        return sum((v * x[j] for j, v in self.objective.items()), Fraction(0))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n_vars, len(self.equalities), len(self.inequalities)


@dataclass(frozen=True)
class Certificate:
    """Optimality or infeasibility proof.

    ``kind == "optimal"``: ``primal`` is an optimal point and ``(dual_eq,
    dual_ub)`` a dual solution with the same objective.

    ``kind == "infeasible"``: ``(dual_eq, dual_ub)`` is a Farkas vector with
    ``dual_ub >= 0``, ``A_eq' dual_eq + A_ub' dual_ub >= 0`` and
    ``b_eq . dual_eq + b_ub . dual_ub < 0``.
    """

    kind: str
    dual_eq: tuple[Fraction, ...]
    dual_ub: tuple[Fraction, ...]
    primal: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.kind == "optimal"

    def farkas_value(self, lp: LinearProgram) -> Fraction:
        return (sum((y * b for y, b in zip(self.dual_eq, lp.equalities.rhs)), Fraction(0))
                + sum((y * b for y, b in zip(self.dual_ub, lp.inequalities.rhs)), Fraction(0)))


class Unbounded(RuntimeError):
    pass


# --- structured-text export ------------------------------------------------

def fraction_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(s: str) -> Fraction:
    return Fraction(s)


def _rows_to_json(cs: ConstraintSet) -> list:
    return [
        {"label": lab, "rhs": fraction_str(b),
         "coefficients": {str(j): fraction_str(v) for j, v in sorted(row.items())}}
        for row, b, lab in zip(cs.rows, cs.rhs, cs.labels)
    ]


def _rows_from_json(items: Iterable[dict]) -> ConstraintSet:
    cs = ConstraintSet()
    for item in items:
        cs.add({int(j): parse_fraction(v) for j, v in item["coefficients"].items()},
               parse_fraction(item["rhs"]), item.get("label", ""))
    return cs


def lp_to_dict(lp: LinearProgram) -> dict:
    return {
        "name": lp.name,
        "sense": "maximize",
        "n_vars": lp.n_vars,
        "objective": {str(j): fraction_str(v) for j, v in sorted(lp.objective.items())},
        "equalities": _rows_to_json(lp.equalities),
        "inequalities": _rows_to_json(lp.inequalities),
    }


def lp_from_dict(d: dict) -> LinearProgram:
    return LinearProgram(
        n_vars=int(d["n_vars"]),
        objective={int(j): parse_fraction(v) for j, v in d["objective"].items()},
        equalities=_rows_from_json(d["equalities"]),
        inequalities=_rows_from_json(d["inequalities"]),
        name=d.get("name", ""),
    )


def certificate_to_dict(cert: Certificate) -> dict:
    def vec(v):
        return None if v is None else [fraction_str(q) for q in v]

    return {
        "kind": cert.kind,
        "objective": None if cert.objective is None else fraction_str(cert.objective),
        "primal": vec(cert.primal),
        "dual_eq": vec(cert.dual_eq),
        "dual_ub": vec(cert.dual_ub),
        "pivots": cert.pivots,
    }


def certificate_from_dict(d: dict) -> Certificate:
    def vec(v):
        return None if v is None else tuple(parse_fraction(q) for q in v)

    return Certificate(
        kind=d["kind"],
        objective=None if d.get("objective") is None else parse_fraction(d["objective"]),
        primal=vec(d.get("primal")),
        dual_eq=vec(d["dual_eq"]),
        dual_ub=vec(d["dual_ub"]),
        pivots=int(d.get("pivots", 0)),
    )


def dump_certificate(lp: LinearProgram, cert: Certificate, path) -> None:
    with open(path, "w") as fh:
        json.dump({"lp": lp_to_dict(lp), "certificate": certificate_to_dict(cert)}, fh, indent=1)


def load_certificate(path) -> tuple[LinearProgram, Certificate]:
    with open(path) as fh:
        d = json.load(fh)
    return lp_from_dict(d["lp"]), certificate_from_dict(d["certificate"])
