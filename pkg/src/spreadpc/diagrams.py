"""
First lace-expansion coefficient of self-avoiding walk at p = 1.

``pi^(1) = sum over closed walks w with |w| >= 1 and no self-intersection
except w(0) = w(|w|)`` of the walk weight ``prod D(step)``.  Summed over all
closed walks instead, the same expression is ``sum_{n>=2} r_n``; the
difference is bounded by ``(sum n r_n)(sum_{n>=2} r_n)``.

Two exact counting modes:

* depth-first enumeration with an occupancy set (any kernel, small budgets);
* for the uniform box, Moebius inversion over set partitions of the loop
  times.  A self-avoiding n-loop is an injective map of the cycle ``C_n``
  into Z^d with box steps, so
  ``#loops = sum_sigma mu(sigma) hom(C_n / sigma)``, and ``hom`` of a graph
  into the full box factorizes over axes as ``h_1^d``.  Steps are automatically
  nonzero for injective maps, so the puncture needs no correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import returns as R
from .kernels import KernelSpec
from .sums import FlaggedValue, _even, _tail

ENUM_BUDGET = 10**9


class EnumerationSizeError(MemoryError):
    """Exhaustive enumeration would exceed its branching budget."""


@dataclass
class LoopEnumeration:
    d: int
    L: int
    nmax: int
    all_loops: list[Fraction | float] = field(default_factory=list)
    saw_loops: list[Fraction | float] = field(default_factory=list)
    method: str = ""

    @property
    def pi1_truncated(self) -> float:
        return float(sum(self.saw_loops[2:]))

    @property
    def defect(self) -> float:
        """``sum_{n=2}^{nmax} r_n - pi1_truncated`` (walks with a repeat)."""
        return float(sum(self.all_loops[2:]) - sum(self.saw_loops[2:]))

    def rows(self):
        for n in range(self.nmax + 1):
            yield n, float(self.all_loops[n]), float(self.saw_loops[n])


# ---------------------------------------------------------------------------
# set partitions

def set_partitions(n: int):
    """Restricted growth strings of length n (block label per element)."""
    a = [0] * n
    if n == 0:
        yield ()
        return

    def rec(i, m):
        if i == n:
            yield tuple(a)
            return
        for b in range(m + 2):
            a[i] = b
            yield from rec(i + 1, max(m, b))

    a[0] = 0
    yield from rec(1, 0)


def _mobius(labels) -> int:
    out = 1
    for s in np.bincount(labels).tolist():
        out *= (-1) ** (s - 1) * math.factorial(s - 1)
    return out


@lru_cache(maxsize=None)
def box_homomorphisms(k: int, edges: tuple[tuple[int, int], ...], L: int) -> int:
    """Maps ``{0..k-1} -> Z`` with vertex 0 at the origin and
    ``|f(u) - f(v)| <= L`` on every edge.  The graph must be connected."""
    adj = [set() for _ in range(k)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    order, parent = [0], {0: None}
    for u in order:
        for v in sorted(adj[u]):
            if v not in parent:
                parent[v] = u
                order.append(v)
    if len(order) != k:
        raise ValueError("quotient graph is not connected")
    pos = {v: i for i, v in enumerate(order)}
    labels = np.zeros((1, 1), dtype=np.int32)
    steps = np.arange(-L, L + 1, dtype=np.int32)
    for i in range(1, k):
        v = order[i]
        base = labels[:, pos[parent[v]]]
        new = (base[:, None] + steps[None, :]).reshape(-1)
        labels = np.repeat(labels, len(steps), axis=0)
        keep = np.ones(len(new), dtype=bool)
        for w in adj[v]:
            j = pos[w]
            if j < i and w != parent[v]:
                keep &= np.abs(new - labels[:, j]) <= L
        labels = np.column_stack([labels[keep], new[keep]])
    return len(labels)


def self_avoiding_loop_count(n: int, d: int, L: int) -> int:
    """Oriented self-avoiding n-step loops at o in the punctured box kernel."""
    if n < 2:
        return 0
    total = 0
    for labels in set_partitions(n):
        k = max(labels) + 1
        edges = set()
        for i in range(n):
            a, b = labels[i], labels[(i + 1) % n]
            if a != b:
                edges.add((min(a, b), max(a, b)))
        h = box_homomorphisms(k, tuple(sorted(edges)), L)
        total += _mobius(np.array(labels)) * h**d
    return total


# ---------------------------------------------------------------------------
# depth-first enumeration

def _dfs_loops(offsets: np.ndarray, masses: np.ndarray, L: int, nmax: int):
    """Weights of closed walks and of self-avoiding loops, per length."""
    steps = [tuple(int(v) for v in x) for x in offsets]
    weights = [float(m) for m in masses]
    d = offsets.shape[1]
    origin = (0,) * d
    all_w = [0.0] * (nmax + 1)
    saw_w = [0.0] * (nmax + 1)
    all_w[0] = saw_w[0] = 1.0

    def walk(pos, depth, w, visited, avoiding):
        remaining = nmax - depth
        if remaining == 0:
            return
        for s, ws in zip(steps, weights):
            nxt = tuple(p + q for p, q in zip(pos, s))
            if max(abs(c) for c in nxt) > L * (remaining - 1):
                continue
            nw = w * ws
            if nxt == origin:
                all_w[depth + 1] += nw
                if avoiding:
                    saw_w[depth + 1] += nw
                walk(nxt, depth + 1, nw, visited, False)
                continue
            still = avoiding and nxt not in visited
            if still:
                visited.add(nxt)
            walk(nxt, depth + 1, nw, visited, still)
            if still:
                visited.discard(nxt)

    walk(origin, 0, 1.0, {origin}, True)
    return all_w, saw_w


def saw_loop_sum(kernel: KernelSpec, nmax: int, *, method: str = "auto",
                 budget: int = ENUM_BUDGET) -> LoopEnumeration:
    """Self-avoiding loop weights at o up to length ``nmax``.

    ``method`` is ``"partition"`` (uniform kernels, exact rationals),
    ``"dfs"`` (any kernel, floats) or ``"auto"``.

    Raises
    ------
    EnumerationSizeError
        If depth-first enumeration would exceed ``budget`` leaves.
    """
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    if method == "auto":
        method = "partition" if kernel.is_uniform else "dfs"
    out = LoopEnumeration(kernel.d, kernel.L, nmax, method=method)
    if method == "partition":
        if not kernel.is_uniform:
            raise ValueError("partition counting needs a uniform box kernel")
        q = kernel.M - 1
        W = R.return_counts_integer(kernel.d, kernel.L, nmax)
        out.all_loops = [Fraction(w, q**n) for n, w in enumerate(W)]
        out.saw_loops = [Fraction(1)] + [
            Fraction(self_avoiding_loop_count(n, kernel.d, kernel.L), q**n)
            for n in range(1, nmax + 1)]
        return out
    if method != "dfs":
        raise ValueError(f"unknown method {method!r}")
    size = kernel.support_size
    if nmax > 1 and size ** (nmax - 1) > budget:
        raise EnumerationSizeError(
            f"{size}^{nmax - 1} walks exceed the budget {budget}; "
            f"use a smaller nmax or L, or the partition method")
    offsets, masses = kernel.support()
    out.all_loops, out.saw_loops = _dfs_loops(offsets, masses, kernel.L, nmax)
    return out


def saw_correction_bound(series: R.ReturnSeries) -> FlaggedValue:
    """``(sum_{n>=1} n r_n) * (sum_{n>=2} r_n)`` with tail estimates."""
    series = _even(series)
    r = series.values
    n = np.arange(series.N + 1)
    t_n, t_1 = _tail(series, "n"), _tail(series, "unit")
    first = math.fsum(n[1:] * r[1:]) + t_n.value
    second = math.fsum(r[2:]) + t_1.value
    return FlaggedValue(first * second, t_n.valid and t_1.valid and series.d > 4)
