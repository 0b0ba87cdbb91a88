"""Assignment decisions, the total-weight objective and the constraint checks."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .instance import (
    Instance,
    Number,
    Pair,
    ValidationError,
    WeightMatrix,
    format_number,
    grid_width,
    origins_for,
)


class ShapeError(ValidationError):
    pass


@dataclass(frozen=True, eq=False)
class AssignmentMatrix:
    """Per-destination 0/1 grids, shaped like the matching :class:`WeightMatrix`."""

    grids: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        grids = tuple(np.asarray(g, dtype=np.uint8) for g in self.grids)
        for g in grids:
            if g.ndim != 2:
                raise ShapeError("assignment grids must be two-dimensional")
            if g.size and g.max() > 1:
                raise ValidationError("assignment entries must be 0 or 1")
            g.setflags(write=False)
        object.__setattr__(self, "grids", grids)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.grids[k - 1]

    @property
    def ns(self) -> int:
        return len(self.grids)

    @classmethod
    def zeros(cls, instance: Instance) -> "AssignmentMatrix":
        ns = instance.ns
        return cls(tuple(np.zeros((ns - 1, grid_width(instance, k)), dtype=np.uint8)
                         for k in range(1, ns + 1)))

    @classmethod
    def from_prefixes(cls, instance: Instance, prefixes: Mapping[Pair, int]) -> "AssignmentMatrix":
        grids = [g.copy() for g in cls.zeros(instance).grids]
        for (j, k), n in prefixes.items():
            if not 0 <= n <= instance.cardinality(j, k):
                raise ValidationError(f"prefix length {n} out of range for pair {(j, k)}")
            r = origins_for(instance.ns, k).index(j)
            grids[k - 1][r, :n] = 1
        return cls(tuple(grids))

    def row(self, j: int, k: int) -> np.ndarray:
        return self[k][origins_for(self.ns, k).index(j)]

    def selected_counts(self) -> dict[Pair, int]:
        return {(j, k): int(self.row(j, k).sum())
                for k in range(1, self.ns + 1) for j in origins_for(self.ns, k)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AssignmentMatrix):
            return NotImplemented
        return len(self.grids) == len(other.grids) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.grids, other.grids)
        )

    def __repr__(self) -> str:
        return f"AssignmentMatrix({[g.tolist() for g in self.grids]})"


def _check_k(ns: int, k: int) -> None:
    if not 1 <= k <= ns:
        raise ValidationError(f"site index {k} out of range 1..{ns}")


def _check_shapes(beta: WeightMatrix, x: AssignmentMatrix) -> None:
    if beta.ns != x.ns or any(b.shape != g.shape for b, g in zip(beta.grids, x.grids)):
        raise ShapeError("assignment and weight grids differ in shape")


def count_assigned(x: AssignmentMatrix, k: int) -> int:
    _check_k(x.ns, k)
    return int(x[k].sum())


def destination_weight(beta: WeightMatrix, x: AssignmentMatrix, k: int) -> Number:
    """Weight moved into site ``k``: the elementwise inner product of the two grids."""
    _check_shapes(beta, x)
    _check_k(x.ns, k)
    total = 0.0
    b, g = beta[k], x[k]
    for r in range(b.shape[0]):
        for i in range(b.shape[1]):
            if g[r, i]:
                total += b[r, i]
    return total


def total_objective(beta: WeightMatrix, x: AssignmentMatrix) -> Number:
    _check_shapes(beta, x)
    return sum((destination_weight(beta, x, k) for k in range(1, x.ns + 1)), 0.0)


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # "capacity" | "prefix" | "uniqueness"
    location: tuple
    detail: str


@dataclass(frozen=True)
class FeasibilityReport:
    capacity_ok: dict[int, bool]
    prefix_ok: dict[Pair, bool]
    uniqueness_ok: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return all(self.capacity_ok.values()) and all(self.prefix_ok.values()) and self.uniqueness_ok

    def describe(self) -> str:
        return "\n".join(f"{v.kind} violation at {v.location}: {v.detail}" for v in self.violations)


def _check_instance_shape(instance: Instance, x: AssignmentMatrix) -> None:
    if x.ns != instance.ns:
        raise ShapeError(f"assignment has {x.ns} destinations, instance has {instance.ns}")
    for k in range(1, instance.ns + 1):
        expected = (instance.ns - 1, grid_width(instance, k))
        if x[k].shape != expected:
            raise ShapeError(f"grid for destination {k} has shape {x[k].shape}, expected {expected}")
        for r, j in enumerate(origins_for(instance.ns, k)):
            if x[k][r, instance.cardinality(j, k):].any():
                raise ShapeError(f"padding position selected in row ({j}, {k})")


def check_feasibility(instance: Instance, x: AssignmentMatrix) -> FeasibilityReport:
    """Check capacity, prefix and uniqueness constraints; every violation is reported."""
    if not instance.is_canonical():
        raise ValidationError("prefix constraint needs a canonicalized instance")
    _check_instance_shape(instance, x)
    violations: list[Violation] = []

    capacity_ok = {}
    for k in range(1, instance.ns + 1):
        n = count_assigned(x, k)
        capacity_ok[k] = n <= instance.capacities[k - 1]
        if not capacity_ok[k]:
            violations.append(Violation("capacity", (k,), f"{n} assigned, capacity {instance.capacities[k - 1]}"))

    prefix_ok = {}
    for k in range(1, instance.ns + 1):
        for j in origins_for(instance.ns, k):
            row = x.row(j, k)
            ok = True
            # position l (1-based) may be selected only if 1..l all are
            running = 0
            for l, bit in enumerate(row, start=1):
                running += int(bit)
                if bit and running != l:
                    ok = False
                    violations.append(Violation(
                        "prefix", (j, k, l), f"position {l} selected but only {running} of the first {l} are"))
            prefix_ok[(j, k)] = ok

    counts: Counter[str] = Counter()
    for k in range(1, instance.ns + 1):
        for j in origins_for(instance.ns, k):
            for i in np.flatnonzero(x.row(j, k)):
                counts[instance.candidates(j, k)[i].id] += 1
    dupes = sorted(cid for cid, n in counts.items() if n > 1)
    for cid in dupes:
        violations.append(Violation("uniqueness", (cid,), f"candidate selected {counts[cid]} times"))

    return FeasibilityReport(capacity_ok, prefix_ok, not dupes, tuple(violations))


# ---------------------------------------------------------------------------
# Solution files
# ---------------------------------------------------------------------------

def format_solution(instance: Instance, x: AssignmentMatrix, objective: Number,
                    prefixes: Mapping[Pair, int] | None = None) -> str:
    """Text layout: ``solution <value>``, then an ``X<k> <site>`` block of bit rows per
    destination (``-`` marks an empty row). Oracle output adds ``prefixes`` lines."""
    lines = [f"solution {format_number(objective)}"]
    for k in range(1, instance.ns + 1):
        lines.append(f"X{k} {instance.site_names[k - 1]}")
        for row in x[k]:
            lines.append(" ".join(str(int(b)) for b in row) if row.size else "-")
        if prefixes is not None:
            counts = " ".join(str(prefixes[(j, k)]) for j in origins_for(instance.ns, k))
            lines.append(f"prefixes {instance.site_names[k - 1]} {counts}")
    return "\n".join(lines) + "\n"


def parse_solution(instance: Instance, text: str) -> tuple[AssignmentMatrix, Number | None]:
    """Inverse of :func:`format_solution`; ``prefixes`` lines are ignored.

    Returns the matrix and the objective value claimed by the header.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("prefixes")]
    if not lines or lines[0].split()[0] != "solution":
        raise ValidationError("solution file must start with 'solution <value>'")
    head = lines[0].split()
    claimed = None
    if len(head) == 2:
        try:
            claimed = float(head[1])
        except ValueError:
            raise ValidationError(f"bad objective value {head[1]!r}") from None
    pos = 1
    grids = []
    for k in range(1, instance.ns + 1):
        if pos >= len(lines) or lines[pos].split()[0] != f"X{k}":
            raise ValidationError(f"expected block X{k}")
        pos += 1
        width = grid_width(instance, k)
        rows = []
        for _ in range(instance.ns - 1):
            if pos >= len(lines):
                raise ValidationError(f"block X{k} is truncated")
            tokens = [] if lines[pos] == "-" else lines[pos].split()
            if len(tokens) != width or any(t not in ("0", "1") for t in tokens):
                raise ShapeError(f"block X{k}: expected {width} bits per row, got {lines[pos]!r}")
            rows.append([int(t) for t in tokens])
            pos += 1
        grids.append(np.array(rows, dtype=np.uint8).reshape(instance.ns - 1, width))
    if pos != len(lines):
        raise ValidationError(f"unexpected trailing content: {lines[pos]!r}")
    x = AssignmentMatrix(tuple(grids))
    _check_instance_shape(instance, x)
    return x, claimed
