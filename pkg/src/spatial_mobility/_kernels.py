"""Hot loops: population repair/evaluation and prefix-tuple enumeration.

Each kernel has a loop form compiled with numba and a vectorized numpy form.
Both accumulate floating sums in the same order, so they return identical
results. Set ``SPATIAL_MOBILITY_DISABLE_NUMBA=1`` (or uninstall numba) to
force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("SPATIAL_MOBILITY_DISABLE_NUMBA", "0") not in ("1", "true", "yes")
BACKEND = "numba" if USE_NUMBA else "numpy"

_CHUNK = 1 << 18


# ---------------------------------------------------------------------------
# loop forms (numba targets)
# ---------------------------------------------------------------------------

def _repair_loops(genes, dest, weights, capacities):
    n_ind, n_pairs = genes.shape
    for n in range(n_ind):
        for k in range(capacities.shape[0]):
            total = 0
            for p in range(n_pairs):
                if dest[p] == k:
                    total += genes[n, p]
            while total > capacities[k]:
                best_p = -1
                best_w = np.inf
                for p in range(n_pairs):
                    if dest[p] == k and genes[n, p] > 0:
                        w = weights[p, genes[n, p] - 1]
                        # <= : on equal tails the higher origin index loses first
                        if w <= best_w:
                            best_w = w
                            best_p = p
                genes[n, best_p] -= 1
                total -= 1
    return genes


def _evaluate_loops(genes, prefix):
    n_ind, n_pairs = genes.shape
    out = np.zeros(n_ind)
    for n in range(n_ind):
        s = 0.0
        for p in range(n_pairs):
            s += prefix[p, genes[n, p]]
        out[n] = s
    return out


def _enumerate_loops(prefix, card, cap):
    m = card.shape[0]
    digits = np.zeros(m, dtype=np.int64)
    best_digits = np.zeros(m, dtype=np.int64)
    best = -np.inf
    while True:
        count = 0
        for r in range(m):
            count += digits[r]
        if count <= cap:
            v = 0.0
            for r in range(m):
                v += prefix[r, digits[r]]
            # >= keeps the lexicographically largest of equal-valued tuples
            if v >= best:
                best = v
                best_digits[:] = digits
        r = m - 1
        while r >= 0:
            digits[r] += 1
            if digits[r] <= card[r]:
                break
            digits[r] = 0
            r -= 1
        if r < 0:
            break
    return best, best_digits


# ---------------------------------------------------------------------------
# numpy forms
# ---------------------------------------------------------------------------

def _repair_numpy(genes, dest, weights, capacities):
    for k in range(capacities.shape[0]):
        cols = np.flatnonzero(dest == k)
        if cols.size == 0:
            continue
        sub = genes[:, cols]
        w = weights[cols]
        lanes = np.arange(cols.size)[None, :]
        while True:
            rows = np.flatnonzero(sub.sum(axis=1) > capacities[k])
            if rows.size == 0:
                break
            g = sub[rows]
            tail = np.where(g > 0, w[lanes, np.maximum(g - 1, 0)], np.inf)
            choice = cols.size - 1 - np.argmin(tail[:, ::-1], axis=1)
            sub[rows, choice] -= 1
        genes[:, cols] = sub
    return genes


def _evaluate_numpy(genes, prefix):
    out = np.zeros(genes.shape[0])
    for p in range(genes.shape[1]):
        out += prefix[p, genes[:, p]]
    return out


def _enumerate_numpy(prefix, card, cap):
    m = card.shape[0]
    radix = card + 1
    total = int(np.prod(radix))
    stride = np.ones(m, dtype=np.int64)
    for r in range(m - 2, -1, -1):
        stride[r] = stride[r + 1] * radix[r + 1]
    best = -np.inf
    best_digits = np.zeros(m, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // stride[None, :]) % radix[None, :]
        values = np.zeros(idx.size)
        for r in range(m):
            values += prefix[r, digits[:, r]]
        values[digits.sum(axis=1) > cap] = -np.inf
        pos = idx.size - 1 - int(np.argmax(values[::-1]))
        if values[pos] >= best:
            best = values[pos]
            best_digits = digits[pos].copy()
    return best, best_digits


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _repair_numba = _jit(_repair_loops)
    _evaluate_numba = _jit(_evaluate_loops)
    _enumerate_numba = _jit(_enumerate_loops)
else:  # pragma: no cover
    _repair_numba = _evaluate_numba = _enumerate_numba = None

IMPLEMENTATIONS = {
    "numpy": (_repair_numpy, _evaluate_numpy, _enumerate_numpy),
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = (_repair_numba, _evaluate_numba, _enumerate_numba)


def repair_population(genes, dest, weights, capacities, backend=None):
    """Truncate cheapest prefix tails in place until every destination fits.

    ``genes`` is an (individuals, pairs) int64 array of prefix lengths.
    """
    return IMPLEMENTATIONS[backend or BACKEND][0](genes, dest, weights, capacities)


def evaluate_population(genes, prefix, backend=None):
    """Objective value of each row of ``genes`` (sum of selected prefix sums)."""
    return IMPLEMENTATIONS[backend or BACKEND][1](genes, prefix)


def best_prefix_tuple(prefix, card, cap, backend=None):
    """Best capacity-feasible prefix tuple for one destination by full enumeration.

    Ties go to the lexicographically largest tuple. Returns ``(value, digits)``.
    """
    value, digits = IMPLEMENTATIONS[backend or BACKEND][2](
        np.ascontiguousarray(prefix, dtype=np.float64), np.asarray(card, dtype=np.int64), int(cap))
    return float(value), digits


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs."""
    genes = np.zeros((1, 1), dtype=np.int64)
    dest = np.zeros(1, dtype=np.int64)
    w = np.ones((1, 1))
    repair_population(genes, dest, w, np.zeros(1, dtype=np.int64))
    evaluate_population(genes, np.zeros((1, 2)))
    best_prefix_tuple(np.zeros((1, 2)), np.ones(1, dtype=np.int64), 1)
