"""Exact solvers used as ground truth for the genetic algorithm.

Destinations never share a candidate, so the problem splits into one
independent subproblem per destination. ``solve_greedy`` takes the ``C_k``
heaviest candidates bound for each destination; ``solve_exhaustive`` checks
every prefix tuple. ``cross_validate`` holds the first to the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .instance import Instance, Number, Pair, ValidationError, origins_for
from .model import AssignmentMatrix, check_feasibility

MAX_TUPLES = 10**7


class SearchSpaceTooLarge(ValidationError):
    def __init__(self, k: int, bound: int, limit: int = MAX_TUPLES):
        self.k = k
        self.bound = bound
        self.limit = limit
        super().__init__(f"destination {k}: {bound} prefix tuples exceed the limit of {limit}")


@dataclass(frozen=True)
class DestinationOptimum:
    k: int
    value: Number
    prefixes: tuple[int, ...]  # one per origin, ascending origin order


@dataclass(frozen=True)
class OracleResult:
    best: AssignmentMatrix
    best_value: Number
    per_destination: tuple[DestinationOptimum, ...]

    @property
    def prefixes(self) -> dict[Pair, int]:
        ns = len(self.per_destination)
        return {(j, d.k): n for d in self.per_destination
                for j, n in zip(origins_for(ns, d.k), d.prefixes)}


def _require_canonical(instance: Instance) -> None:
    if not instance.is_canonical():
        raise ValidationError("oracle needs a canonicalized instance")


def _assemble(instance: Instance, parts: list[DestinationOptimum]) -> OracleResult:
    prefixes = {(j, d.k): n for d in parts
                for j, n in zip(origins_for(instance.ns, d.k), d.prefixes)}
    best = AssignmentMatrix.from_prefixes(instance, prefixes)
    value = 0.0
    for d in parts:
        value += d.value
    return OracleResult(best, value, tuple(parts))


def solve_greedy(instance: Instance) -> OracleResult:
    """Top-``C_k`` selection per destination.

    Ties: lower origin index first, then lower position. With every list
    sorted non-increasing the chosen set is a prefix of each row.
    """
    _require_canonical(instance)
    parts = []
    for k in range(1, instance.ns + 1):
        origins = origins_for(instance.ns, k)
        pool = [(c.weight, j, i) for j in origins for i, c in enumerate(instance.candidates(j, k))]
        pool.sort(key=lambda t: (-t[0], t[1], t[2]))
        chosen = pool[: instance.capacities[k - 1]]
        counts = {j: 0 for j in origins}
        value = 0.0
        for w, j, _ in chosen:
            counts[j] += 1
            value += w
        parts.append(DestinationOptimum(k, value, tuple(counts[j] for j in origins)))
    return _assemble(instance, parts)


def search_space(instance: Instance, k: int) -> int:
    return math.prod(instance.cardinality(j, k) + 1 for j in origins_for(instance.ns, k))


def solve_exhaustive(instance: Instance, limit: int = MAX_TUPLES, backend: str | None = None) -> OracleResult:
    """Enumerate every prefix tuple within capacity, per destination.

    Among equal-valued tuples the lexicographically largest wins, which
    matches the greedy tie rule, so both oracles return the same matrix.
    Refuses with :class:`SearchSpaceTooLarge` past ``limit`` tuples.
    """
    _require_canonical(instance)
    for k in range(1, instance.ns + 1):
        bound = search_space(instance, k)
        if bound > limit:
            raise SearchSpaceTooLarge(k, bound, limit)
    parts = []
    for k in range(1, instance.ns + 1):
        origins = origins_for(instance.ns, k)
        card = np.array([instance.cardinality(j, k) for j in origins], dtype=np.int64)
        width = int(card.max(initial=0))
        prefix = np.zeros((len(origins), width + 1))
        for r, j in enumerate(origins):
            for i, c in enumerate(instance.candidates(j, k)):
                prefix[r, i + 1] = prefix[r, i] + c.weight
            prefix[r, card[r] + 1:] = prefix[r, card[r]]
        value, digits = _kernels.best_prefix_tuple(prefix, card, instance.capacities[k - 1], backend)
        parts.append(DestinationOptimum(k, value, tuple(int(d) for d in digits)))
    return _assemble(instance, parts)


def cross_validate(instance: Instance) -> bool:
    """Both oracles agree on the optimum and both answers are feasible."""
    greedy = solve_greedy(instance)
    exhaustive = solve_exhaustive(instance)
    return (
        greedy.best_value == exhaustive.best_value
        and check_feasibility(instance, greedy.best).feasible
        and check_feasibility(instance, exhaustive.best).feasible
    )
