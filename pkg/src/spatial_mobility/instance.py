"""Problem instances: sites, capacities and per-(origin, destination) candidate lists.

Sites are addressed by 1-based indices everywhere in the public API. A list
key ``(j, k)`` holds the candidates moving from site ``j`` to site ``k``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

logger = logging.getLogger(__name__)

Number = int | float
Pair = tuple[int, int]


class ValidationError(ValueError):
    """Raised when input data breaks an instance or solution invariant."""


class InstanceFormatError(ValidationError):
    def __init__(self, kind: str, message: str, line: int | None = None):
        self.kind = kind
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


# ---------------------------------------------------------------------------
# Criteria aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriteriaProfile:
    coefficients: Mapping[str, Number]
    values: Mapping[str, Number]

    def __post_init__(self) -> None:
        for name, alpha in self.coefficients.items():
            if alpha < 0:
                raise ValidationError(f"negative coefficient for criterion {name!r}")
        if self.coefficients and not any(a > 0 for a in self.coefficients.values()):
            raise ValidationError("at least one coefficient must be positive")
        for name, w in self.values.items():
            if w < 0:
                raise ValidationError(f"negative value for criterion {name!r}")


def aggregate_weight(profile: CriteriaProfile) -> Number:
    """Weighted sum of criterion values, ``sum(alpha_i * w_i)``."""
    total: Number = 0
    for name, w in profile.values.items():
        if name not in profile.coefficients:
            raise InstanceFormatError("missing_coefficient", f"no coefficient for criterion {name!r}")
        total += profile.coefficients[name] * w
    return total


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    id: str
    origin: int
    destination: int
    weight: Number

    def __post_init__(self) -> None:
        if self.origin == self.destination:
            raise ValidationError(f"candidate {self.id}: origin equals destination")
        if self.weight < 0:
            raise ValidationError(f"candidate {self.id}: negative weight {self.weight}")


@dataclass(frozen=True)
class CandidateList:
    origin: int
    destination: int
    candidates: tuple[Candidate, ...] = ()

    @property
    def cardinality(self) -> int:
        return len(self.candidates)

    @property
    def weights(self) -> tuple[Number, ...]:
        return tuple(c.weight for c in self.candidates)

    def is_sorted(self) -> bool:
        w = self.weights
        return all(w[i] >= w[i + 1] for i in range(len(w) - 1))


def origins_for(ns: int, k: int) -> list[int]:
    """Origin sites feeding destination ``k``, ascending (the row order of a grid)."""
    return [j for j in range(1, ns + 1) if j != k]


def all_pairs(ns: int) -> list[Pair]:
    """Every (origin, destination) pair, grouped by destination then origin."""
    return [(j, k) for k in range(1, ns + 1) for j in origins_for(ns, k)]


@dataclass(frozen=True)
class Instance:
    site_names: tuple[str, ...]
    capacities: tuple[int, ...]
    lists: Mapping[Pair, CandidateList] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ns = len(self.site_names)
        if ns < 2:
            raise ValidationError("an instance needs at least two sites")
        if len(set(self.site_names)) != ns:
            raise ValidationError("site names must be unique")
        if len(self.capacities) != ns:
            raise ValidationError(f"expected {ns} capacities, got {len(self.capacities)}")
        if any(c < 0 for c in self.capacities):
            raise ValidationError("capacities must be non-negative")
        seen: set[str] = set()
        full = {}
        for (j, k) in all_pairs(ns):
            full[(j, k)] = CandidateList(j, k)
        for key, lst in self.lists.items():
            j, k = key
            if j == k:
                raise ValidationError(f"list {key}: origin equals destination")
            if not (1 <= j <= ns and 1 <= k <= ns):
                raise ValidationError(f"list {key}: site index out of range")
            if (lst.origin, lst.destination) != key:
                raise ValidationError(f"list {key} is stored under the wrong key")
            for c in lst.candidates:
                if (c.origin, c.destination) != key:
                    raise ValidationError(f"candidate {c.id} filed under list {key}")
                if c.id in seen:
                    raise ValidationError(f"duplicate candidate id {c.id}")
                seen.add(c.id)
            full[key] = lst
        object.__setattr__(self, "lists", full)

    @property
    def ns(self) -> int:
        return len(self.site_names)

    def pairs(self) -> list[Pair]:
        return all_pairs(self.ns)

    def candidates(self, j: int, k: int) -> tuple[Candidate, ...]:
        return self.lists[(j, k)].candidates

    def cardinality(self, j: int, k: int) -> int:
        return self.lists[(j, k)].cardinality

    @property
    def total_candidates(self) -> int:
        return sum(lst.cardinality for lst in self.lists.values())

    def is_canonical(self) -> bool:
        return all(lst.is_sorted() for lst in self.lists.values())

    def site_index(self, name: str) -> int:
        return self.site_names.index(name) + 1

    def __iter__(self) -> Iterator[Candidate]:
        for key in self.pairs():
            yield from self.lists[key].candidates

    @cached_property
    def layout(self) -> "PairLayout":
        return PairLayout.from_instance(self)


@dataclass(frozen=True, eq=False)
class PairLayout:
    """Flat per-pair arrays used by the numeric kernels.

    Pair ``p`` follows :func:`all_pairs` order. ``weights[p, i]`` is the weight
    at position ``i + 1`` (zero padded) and ``prefix[p, n]`` the sum of the
    first ``n`` weights.
    """

    pairs: tuple[Pair, ...]
    dest: np.ndarray  # 0-based destination per pair
    cardinality: np.ndarray
    weights: np.ndarray
    prefix: np.ndarray
    capacities: np.ndarray

    @classmethod
    def from_instance(cls, instance: Instance) -> "PairLayout":
        pairs = tuple(instance.pairs())
        width = max((instance.cardinality(*p) for p in pairs), default=0)
        weights = np.zeros((len(pairs), width), dtype=np.float64)
        card = np.zeros(len(pairs), dtype=np.int64)
        for p, key in enumerate(pairs):
            w = instance.lists[key].weights
            card[p] = len(w)
            weights[p, : len(w)] = w
        prefix = np.zeros((len(pairs), width + 1), dtype=np.float64)
        # sequential cumsum keeps float rounding identical to the loop kernels
        for i in range(width):
            prefix[:, i + 1] = prefix[:, i] + weights[:, i]
        return cls(
            pairs=pairs,
            dest=np.array([k - 1 for _, k in pairs], dtype=np.int64),
            cardinality=card,
            weights=weights,
            prefix=prefix,
            capacities=np.asarray(instance.capacities, dtype=np.int64),
        )


# ---------------------------------------------------------------------------
# Weight matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Per-destination weight grids; ``beta[k][r, i]`` is the weight of the
    (i+1)-th candidate of the r-th origin row of destination ``k``."""

    grids: tuple[np.ndarray, ...]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.grids[k - 1]

    @property
    def ns(self) -> int:
        return len(self.grids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return len(self.grids) == len(other.grids) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.grids, other.grids)
        )


def grid_width(instance: Instance, k: int) -> int:
    return max((instance.cardinality(j, k) for j in origins_for(instance.ns, k)), default=0)


def build_weight_matrices(instance: Instance) -> WeightMatrix:
    grids = []
    for k in range(1, instance.ns + 1):
        origins = origins_for(instance.ns, k)
        grid = np.zeros((len(origins), grid_width(instance, k)), dtype=np.float64)
        for r, j in enumerate(origins):
            w = instance.lists[(j, k)].weights
            grid[r, : len(w)] = w
        grids.append(grid)
    return WeightMatrix(tuple(grids))


def canonicalize(instance: Instance) -> Instance:
    """Sort every list by non-increasing weight; equal weights keep file order."""
    lists = {
        key: CandidateList(lst.origin, lst.destination,
                           tuple(sorted(lst.candidates, key=lambda c: -c.weight)))
        for key, lst in instance.lists.items()
    }
    return Instance(instance.site_names, instance.capacities, lists)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"^[^\s=,#]+$")


def _parse_number(text: str, line: int, what: str) -> Number:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise InstanceFormatError("malformed", f"{what} is not a number: {text!r}", line) from None
    if not np.isfinite(value):
        raise InstanceFormatError("malformed", f"{what} must be finite: {text!r}", line)
    return value


def _parse_assignments(text: str, line: int) -> dict[str, Number]:
    out: dict[str, Number] = {}
    for item in text.split(","):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise InstanceFormatError("malformed", f"expected name=value, got {item!r}", line)
        if name in out:
            raise InstanceFormatError("malformed", f"criterion {name!r} given twice", line)
        out[name] = _parse_number(value.strip(), line, f"criterion {name!r}")
    return out


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format. Lists keep file order."""
    names: list[str] | None = None
    capacities: list[int] | None = None
    capacity_line = None
    alpha: dict[str, Number] | None = None
    alpha_line = None
    # (id, origin name, dest name, weight or None, criteria or None, line)
    raw: list[tuple[str, str, str, Number | None, dict[str, Number] | None, int]] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "sites":
            if names is not None:
                raise InstanceFormatError("malformed", "duplicate sites line", lineno)
            if not rest:
                raise InstanceFormatError("malformed", "sites line needs a count", lineno)
            try:
                ns = int(rest[0])
            except ValueError:
                raise InstanceFormatError("malformed", f"site count {rest[0]!r} is not an integer", lineno) from None
            if ns < 2:
                raise InstanceFormatError("malformed", "at least two sites are required", lineno)
            if len(rest) - 1 != ns:
                raise InstanceFormatError("malformed", f"declared {ns} sites but named {len(rest) - 1}", lineno)
            if len(set(rest[1:])) != ns:
                raise InstanceFormatError("malformed", "site names must be unique", lineno)
            names = rest[1:]
        elif head == "capacity":
            if capacities is not None:
                raise InstanceFormatError("malformed", "duplicate capacity line", lineno)
            caps = []
            for tok in rest:
                try:
                    c = int(tok)
                except ValueError:
                    raise InstanceFormatError("malformed", f"capacity {tok!r} is not an integer", lineno) from None
                if c < 0:
                    raise InstanceFormatError("negative_capacity", f"negative capacity {c}", lineno)
                caps.append(c)
            capacities, capacity_line = caps, lineno
        elif head == "alpha":
            if alpha is not None:
                raise InstanceFormatError("malformed", "duplicate alpha line", lineno)
            if len(rest) != 1:
                raise InstanceFormatError("malformed", "alpha line takes one name=value list", lineno)
            alpha, alpha_line = _parse_assignments(rest[0], lineno), lineno
        elif head == "cand":
            if len(rest) < 4:
                raise InstanceFormatError("malformed", "cand line needs id, origin, destination and weight", lineno)
            cid, origin, dest, *tail = rest
            if not _TOKEN.match(cid):
                raise InstanceFormatError("malformed", f"bad candidate id {cid!r}", lineno)
            weight = None
            criteria = None
            if tail[0] != "criteria":
                weight = _parse_number(tail[0], lineno, "weight")
                tail = tail[1:]
            if tail:
                if tail[0] != "criteria" or len(tail) != 2:
                    raise InstanceFormatError("malformed", f"unexpected trailing tokens {tail!r}", lineno)
                criteria = _parse_assignments(tail[1], lineno)
            raw.append((cid, origin, dest, weight, criteria, lineno))
        else:
            raise InstanceFormatError("malformed", f"unknown directive {head!r}", lineno)

    if names is None:
        raise InstanceFormatError("malformed", "missing sites line")
    if capacities is None:
        raise InstanceFormatError("malformed", "missing capacity line")
    if len(capacities) != len(names):
        raise InstanceFormatError(
            "capacity_count", f"expected {len(names)} capacities, got {len(capacities)}", capacity_line)

    profile_coeffs = alpha or {}
    if alpha is not None:
        if any(a < 0 for a in alpha.values()):
            raise InstanceFormatError("malformed", "alpha coefficients must be non-negative", alpha_line)
        if not any(a > 0 for a in alpha.values()):
            raise InstanceFormatError("malformed", "at least one alpha coefficient must be positive", alpha_line)

    index = {name: i + 1 for i, name in enumerate(names)}
    seen: set[str] = set()
    buckets: dict[Pair, list[Candidate]] = {}
    for cid, origin, dest, weight, criteria, lineno in raw:
        for site in (origin, dest):
            if site not in index:
                raise InstanceFormatError("unknown_site", f"unknown site {site!r}", lineno)
        j, k = index[origin], index[dest]
        if j == k:
            raise InstanceFormatError("same_site", f"origin equals destination ({origin})", lineno)
        if cid in seen:
            raise InstanceFormatError("duplicate_id", f"duplicate candidate id {cid!r}", lineno)
        seen.add(cid)
        if criteria is not None:
            for name, value in criteria.items():
                if value < 0:
                    raise InstanceFormatError("negative_weight", f"negative criterion value {name}={value}", lineno)
        if weight is None:
            if alpha is None:
                raise InstanceFormatError("missing_coefficient", "criteria given but no alpha line", lineno)
            try:
                weight = aggregate_weight(CriteriaProfile(profile_coeffs, criteria))
            except InstanceFormatError as exc:
                raise InstanceFormatError(exc.kind, str(exc), lineno) from None
        elif criteria is not None:
            logger.warning("line %d: candidate %s has both a weight and criteria; using the weight", lineno, cid)
        if weight < 0:
            raise InstanceFormatError("negative_weight", f"negative weight {weight}", lineno)
        buckets.setdefault((j, k), []).append(Candidate(cid, j, k, weight))

    lists = {key: CandidateList(key[0], key[1], tuple(cands)) for key, cands in buckets.items()}
    return Instance(tuple(names), tuple(capacities), lists)


def format_number(value: Number) -> str:
    """Integral values print without a decimal point; others round-trip via repr."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def serialize_instance(instance: Instance) -> str:
    lines = [
        f"sites {instance.ns} " + " ".join(instance.site_names),
        "capacity " + " ".join(str(c) for c in instance.capacities),
    ]
    name = instance.site_names
    for c in instance:
        lines.append(f"cand {c.id} {name[c.origin - 1]} {name[c.destination - 1]} {format_number(c.weight)}")
    return "\n".join(lines) + "\n"


def load_instance(path: str | Path) -> Instance:
    """Read an instance file. The name ``paper_instance`` falls back to the bundled copy."""
    path = Path(path)
    if not path.exists() and path.name == "paper_instance":
        return paper_instance()
    return parse_instance(path.read_text(encoding="utf-8"))


def paper_instance_text() -> str:
    return resources.files("spatial_mobility").joinpath("data/paper_instance").read_text(encoding="utf-8")


def paper_instance() -> Instance:
    """The bundled three-site, 29-candidate test instance (canonical order)."""
    return canonicalize(parse_instance(paper_instance_text()))


def random_instance(
    rng: np.random.Generator,
    sites: tuple[int, int] = (2, 5),
    list_size: tuple[int, int] = (0, 8),
    weight: tuple[int, int] = (0, 100),
    capacity: tuple[int, int] = (0, 10),
) -> Instance:
    """Random canonical instance with integer weights; bounds are inclusive."""
    ns = int(rng.integers(sites[0], sites[1] + 1))
    names = tuple(f"S{i}" for i in range(1, ns + 1))
    caps = tuple(int(c) for c in rng.integers(capacity[0], capacity[1] + 1, size=ns))
    lists = {}
    n = 0
    for j, k in all_pairs(ns):
        size = int(rng.integers(list_size[0], list_size[1] + 1))
        ws = rng.integers(weight[0], weight[1] + 1, size=size)
        cands = []
        for w in ws:
            n += 1
            cands.append(Candidate(f"c{n}", j, k, int(w)))
        lists[(j, k)] = CandidateList(j, k, tuple(cands))
    return canonicalize(Instance(names, caps, lists))


def restrict_to_destination(instance: Instance, k: int) -> Instance:
    """Copy of ``instance`` keeping only the candidates bound for ``k``."""
    lists = {key: lst for key, lst in instance.lists.items() if key[1] == k}
    return Instance(instance.site_names, instance.capacities, lists)


def without_candidate(instance: Instance, cid: str) -> Instance:
    lists = {
        key: CandidateList(lst.origin, lst.destination, tuple(c for c in lst.candidates if c.id != cid))
        for key, lst in instance.lists.items()
    }
    return Instance(instance.site_names, instance.capacities, lists)


def with_capacities(instance: Instance, capacities: Iterable[int]) -> Instance:
    return Instance(instance.site_names, tuple(capacities), instance.lists)
