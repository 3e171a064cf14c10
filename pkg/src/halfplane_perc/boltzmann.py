"""Partition function, peeling probabilities and Boltzmann samplers for
type-2 triangulations of the m-gon at the critical inner-vertex weight 2/27.

``Z_m`` is the partition function of triangulations with simple boundary of
perimeter m, weight ``t = 2/27`` per inner vertex.  It satisfies the loop
(Tutte) equation obtained by peeling the root edge:

    Z_2 = 1 + t*Z_3                       (trivial single-edge map, or a face)
    Z_m = t*Z_{m+1} + sum_{k=1}^{m-2} Z_{k+1} * Z_{m-k}     (m >= 3)

with seed ``Z_2 = 9/8`` (the unique seed making ``sum_k Z_{k+1} 9^{-k} = 1/6``
converge; equivalently Z_m ~ const * m^{-5/2} 9^m).  The peeling probabilities
are ``q_{-1} = 2/3``, ``q_0 = 0`` and ``q_k = Z_{k+1} 9^{-k}``.

All table entries are exact ``Fraction`` values.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

from .core_map import Dart, MapBuilder, MapError, RootedMap

__all__ = [
    "T_WEIGHT",
    "PartitionTable",
    "partition_Z",
    "q_of",
    "compute_counts",
    "enumerate_boltzmann",
    "sample_boltzmann",
    "percolate",
]

T_WEIGHT = Fraction(2, 27)

_KMAX_DEFAULT = 1 << 12


class PartitionTable:
    """Lazily grown exact table of Z_m and q_k."""

    def __init__(self):
        self._Z = [None, None, Fraction(9, 8)]  # index m, valid from m=2

    def Z(self, m: int) -> Fraction:
        if m < 2:
            raise ValueError("Z_m defined for m >= 2")
        while len(self._Z) <= m:
            mm = len(self._Z) - 1  # largest computed index; derive Z_{mm+1}
            if mm == 2:
                z_next = (self._Z[2] - 1) / T_WEIGHT
            else:
                s = sum(self._Z[k + 1] * self._Z[mm - k] for k in range(1, mm - 1))
                z_next = (self._Z[mm] - s) / T_WEIGHT
            self._Z.append(z_next)
        return self._Z[m]

    def q(self, k: int) -> Fraction:
        if k == -1:
            return Fraction(2, 3)
        if k == 0:
            return Fraction(0)
        if k < -1:
            raise ValueError("q_k defined for k >= -1")
        return self.Z(k + 1) / Fraction(9) ** k

    def q_table(self, k_max: int = _KMAX_DEFAULT) -> dict[int, Fraction]:
        return {k: self.q(k) for k in range(1, k_max + 1)}


_TABLE = PartitionTable()


def partition_Z(m: int) -> Fraction:
    return _TABLE.Z(m)


def q_of(k: int) -> Fraction:
    return _TABLE.q(k)


# ---------------------------------------------------------------------------
# the peeling engine shared by the sampler and the exhaustive enumerator
# ---------------------------------------------------------------------------

def _build_from_decisions(m: int, decide: Callable[[int], object]) -> RootedMap:
    """Peel the m-gon, resolving each step with ``decide(perimeter)`` which
    returns ``"triv"`` (perimeter 2 only), ``"inner"`` or ``("split", k)``
    with ``1 <= k <= perimeter-2``.  Regions are processed LIFO; a split
    pushes the right sub-region then the left one."""
    b = MapBuilder()
    verts = [b.new_vertex() for _ in range(m)]
    if m == 2:
        e0 = b.new_edge(verts[0], verts[1])
        e1 = b.new_edge(verts[1], verts[0])
        b.add_face([Dart(e0, 1), Dart(e1, 1)])
        region = [(verts[0], Dart(e0, 0)), (verts[1], Dart(e1, 0))]
        root = Dart(e0, 0)
    else:
        eids = [b.new_edge(verts[i], verts[(i + 1) % m]) for i in range(m)]
        b.add_face([Dart(eids[i], 1) for i in reversed(range(m))])
        region = [(verts[i], Dart(eids[i], 0)) for i in range(m)]
        root = Dart(eids[0], 0)
    stack = [region]
    while stack:
        reg = stack.pop()
        p = len(reg)
        choice = decide(p)
        (v0, d0), (v1, d1) = reg[0], reg[1]
        if choice == "triv":
            if p != 2:
                raise MapError("trivial fill only on perimeter 2")
            x = b._partner[d0]
            y = b._partner[d1]
            b.fill_bigon(d0, d1)
            if root == d0:
                root = y
            elif root == d1:
                root = x
        elif choice == "inner":
            w = b.new_vertex()
            e1 = b.new_edge(v1, w)
            e2 = b.new_edge(w, v0)
            b.add_face([d0, Dart(e1, 0), Dart(e2, 0)])
            stack.append([(v0, Dart(e2, 1)), (w, Dart(e1, 1))] + reg[1:])
        else:
            _, k = choice
            if not (1 <= k <= p - 2):
                raise MapError("split index out of range")
            c, dc = reg[1 + k]
            ea = b.new_edge(v1, c)
            eb = b.new_edge(c, v0)
            b.add_face([d0, Dart(ea, 0), Dart(eb, 0)])
            right = [(c, dc)] + reg[2 + k:] + [(v0, Dart(eb, 1))]
            left = reg[1:1 + k] + [(c, Dart(ea, 1))]
            stack.append(right)
            stack.append(left)
    return b.build(root)


def sample_boltzmann(m: int, rng, table: Optional[PartitionTable] = None,
                     budget: int = 10 ** 9) -> RootedMap:
    """A triangulation of the m-gon with law W_m (critical Boltzmann)."""
    if m < 2:
        raise ValueError("perimeter must be at least 2")
    tab = table or _TABLE
    steps = 0

    def decide(p: int):
        nonlocal steps
        steps += 1
        if steps > budget:
            raise RuntimeError("sampler budget exceeded")
        zp = tab.Z(p)
        u = rng.random()
        if p == 2:
            return "triv" if u < float(1 / zp) else "inner"
        acc = float(T_WEIGHT * tab.Z(p + 1) / zp)
        if u < acc:
            return "inner"
        for k in range(1, p - 1):
            acc += float(tab.Z(k + 1) * tab.Z(p - k) / zp)
            if u < acc:
                return ("split", k)
        return ("split", p - 2)

    return _build_from_decisions(m, decide)


# ---------------------------------------------------------------------------
# exhaustive enumeration (oracle-grade, small sizes)
# ---------------------------------------------------------------------------

def enumerate_boltzmann(m: int, n_max: int) -> Iterator[tuple[RootedMap, int]]:
    """All triangulations of the m-gon with at most n_max inner vertices,
    each exactly once, as ``(map, n_inner)`` pairs.

    The peeling with a fixed edge-choice rule is a bijection between maps and
    decision sequences, so enumerating decision sequences enumerates maps."""
    if m < 2 or n_max < 0:
        raise ValueError("need m >= 2, n_max >= 0")
    if n_max > 8 or m > 10:
        raise ValueError("enumeration bounds too large")

    def rec(stack: tuple[int, ...], budget: int, prefix: list):
        if not stack:
            yield list(prefix), n_max - budget
            return
        p = stack[-1]
        rest = stack[:-1]
        if p == 2:
            prefix.append("triv")
            yield from rec(rest, budget, prefix)
            prefix.pop()
        if budget > 0:
            prefix.append("inner")
            yield from rec(rest + (p + 1,), budget - 1, prefix)
            prefix.pop()
        if p >= 3:
            for k in range(1, p - 1):
                prefix.append(("split", k))
                # right pushed first, left on top (matches _build_from_decisions)
                yield from rec(rest + (p - k, k + 1), budget, prefix)
                prefix.pop()

    for decisions, n in rec((m,), n_max, []):
        it = iter(decisions)
        yield _build_from_decisions(m, lambda p: next(it)), n


def compute_counts(n_max: int, m_max: int) -> dict[tuple[int, int], int]:
    """Exact counts of rooted type-2 triangulations of the m-gon with n inner
    vertices, for n <= n_max, 2 <= m <= m_max, by exhaustive generation with
    isomorphism-class deduplication."""
    if n_max > 6 or m_max > 8:
        raise ValueError("counting bounds too large")
    counts: dict[tuple[int, int], int] = {}
    for m in range(2, m_max + 1):
        seen: dict[int, set] = {n: set() for n in range(n_max + 1)}
        for mp, n in enumerate_boltzmann(m, n_max):
            seen[n].add(mp.code())
        for n in range(n_max + 1):
            counts[(n, m)] = len(seen[n])
    return counts


# ---------------------------------------------------------------------------
# percolation coloring
# ---------------------------------------------------------------------------

def percolate(m: RootedMap, p: float, boundary_condition, rng) -> RootedMap:
    """Color inner vertices i.i.d. open ('O') with probability p, closed ('C')
    otherwise; boundary vertices get ``boundary_condition``: a single color
    character, or a sequence of colors along the root-face contour starting at
    the root origin (contour direction), or None to leave them unchanged."""
    colors = list(m.colors)
    if m.root < 0:
        bverts = [0]
    else:
        contour = m.root_face()
        # contour starts at twin[root]; origin(root) is the second vertex
        bverts = []
        seen = set()
        start = m.origin[m.root]
        ordered = [m.origin[d] for d in contour]
        i0 = ordered.index(start)
        for v in ordered[i0:] + ordered[:i0]:
            if v not in seen:
                seen.add(v)
                bverts.append(v)
    boundary = set(bverts)
    if boundary_condition is not None:
        if isinstance(boundary_condition, str) and len(boundary_condition) == 1:
            for v in bverts:
                colors[v] = boundary_condition
        else:
            bc = list(boundary_condition)
            if len(bc) != len(bverts):
                raise MapError("boundary condition length mismatch")
            for v, c in zip(bverts, bc):
                colors[v] = c
    for v in range(m.nvertices):
        if v not in boundary:
            colors[v] = "O" if rng.random() < p else "C"
    return RootedMap(m.twin, m.nxt, m.origin, m.root, colors)
