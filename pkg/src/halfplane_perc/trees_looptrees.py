"""Plane trees, the Loop/Tree bijection, and contour-function codecs.

Conventions
-----------
* Plane trees are nested-tuple structures (Neveu words implicit); vertices at
  even height are white, at odd height black.
* ``loop_of`` turns each black vertex of degree d into a loop (inner face) of
  length d through its white neighbours; the root edge joins the origin to the
  last child of its first offspring, with that loop on its left.
* The finite excursion codec quotients {0..n} by ``i ~ j iff
  C_i = C_j = min(C on [i,j])``; each down-jump of size l closes a loop of
  length l+1.  The root edge joins (the class of) n to n-1.
* The one-sided codec extends C by C_k = k for k <= 0; the resulting infinite
  looptree is materialized down to a requested spine depth.  Its faces are
  mirror-oriented relative to the finite codec so that the root edge (0,1)
  keeps the infinite face as root face.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .core_map import (Dart, MapBuilder, MapError, RootedMap, vertex_map)

__all__ = [
    "PlaneTree",
    "loop_of",
    "tree_of",
    "looptree_from_excursion",
    "looptree_from_walk",
    "forest_from_stopped_walk",
    "two_sided_looptree",
    "quotient_classes",
    "LazyLooptree",
    "fill_looptree",
]


class PlaneTree:
    """A finite plane tree as nested children tuples."""

    __slots__ = ("children",)

    def __init__(self, children: Sequence["PlaneTree"] = ()):
        self.children = tuple(children)

    @property
    def k(self) -> int:
        return len(self.children)

    def words(self, prefix=()) -> Iterator[tuple]:
        yield prefix
        for i, c in enumerate(self.children, start=1):
            yield from c.words(prefix + (i,))

    def subtree(self, word: tuple) -> "PlaneTree":
        t = self
        for i in word:
            t = t.children[i - 1]
        return t

    @property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=-1)

    def _key(self):
        return tuple(c._key() for c in self.children)

    def __eq__(self, other):
        return isinstance(other, PlaneTree) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"PlaneTree{self._key()!r}"

    @classmethod
    def from_key(cls, key) -> "PlaneTree":
        return cls([cls.from_key(k) for k in key])


# ---------------------------------------------------------------------------
# Loop / Tree
# ---------------------------------------------------------------------------

def loop_of(t: PlaneTree) -> RootedMap:
    """The looptree of a plane tree (single vertex for the one-point tree)."""
    if t.k == 0:
        return vertex_map()
    b = MapBuilder()

    outer: list[Dart] = []

    def do_white(w_vid: int, node: PlaneTree):
        # node is white; its children are black
        for blk in node.children:
            if blk.k == 0:
                raise MapError("black leaf would create a self-loop")
            kids = blk.children
            vids = [b.new_vertex() for _ in kids]
            # cycle edges w -> c1 -> ... -> ck -> w
            e_in = b.new_edge(w_vid, vids[0])
            mids = [b.new_edge(vids[i], vids[i + 1]) for i in range(len(kids) - 1)]
            e_out = b.new_edge(vids[-1], w_vid)
            # loop face: parent then children in reverse order
            face = [Dart(e_out, 1)] + [Dart(mids[i], 1) for i in range(len(mids) - 1, -1, -1)] + [Dart(e_in, 1)]
            b.add_face(face)
            # outer contour: enter, descend into each child subtree
            outer.append(Dart(e_in, 0))
            do_white(vids[0], kids[0])
            for i, m in enumerate(mids):
                outer.append(Dart(m, 0))
                do_white(vids[i + 1], kids[i + 1])
            outer.append(Dart(e_out, 0))

    origin = b.new_vertex()
    do_white(origin, t)
    b.add_face(outer)
    # root: origin -> last child of first offspring = the e_out edge of the
    # first black child, oriented origin -> last child (its loop-face dart)
    first_eout = None
    # e_out of the first black child is created before any recursion into
    # grandchildren at index len(first black's kids)+... : recompute directly
    blk0 = t.children[0]
    # edges created for blk0 before recursion: e_in (id 0), mids, e_out
    first_eout = len(blk0.children)  # e_in=0, mids=1..k-1? e_out index
    # e_in -> id 0; mids -> ids 1..k-1; e_out -> id k... but only when k>=1
    root = Dart(first_eout, 1)
    return b.build(root)


def _is_looptree(l: RootedMap) -> bool:
    rf = frozenset(l.root_face())
    return all(d in rf or l.twin[d] in rf for d in range(l.ndarts))


def tree_of(l: RootedMap, return_face_words: bool = False):
    """The tree of components of a looptree.

    With ``return_face_words`` also returns a dict mapping the index of each
    inner face (in ``l.faces()``) to the Neveu word of its black vertex.
    """
    if l.root < 0:
        t = PlaneTree()
        return (t, {}) if return_face_words else t
    if not _is_looptree(l):
        raise MapError("not edge-outerplanar")
    faces = l.faces()
    face_id = {}
    for fi, f in enumerate(faces):
        for d in f:
            face_id[d] = fi
    rf_id = face_id[l.root_face()[0]]
    words: dict[int, tuple] = {}

    def loop_children(entry: int, fi: int) -> list[int]:
        """White-vertex entry darts of the loop ``fi`` entered at ``entry``
        (the face dart whose origin is the parent white), in tree order."""
        orbit = []
        d = entry
        while True:
            orbit.append(d)
            d = l.nxt[d]
            if d == entry:
                break
        return list(reversed(orbit[1:]))  # darts whose origins are c_1..c_k? see below

    def blacks_at(w_darts_start: int, skip_face: Optional[int]) -> list[int]:
        """Face darts of the child loops at a white vertex, in tree order,
        iterating the rotation from ``w_darts_start``."""
        out = []
        d = w_darts_start
        first = True
        while first or d != w_darts_start:
            first = False
            fi = face_id[d]
            if fi != rf_id and fi != skip_face and all(face_id[x] != fi for x in out):
                out.append(d)
            d = l.nxt[l.twin[d]]  # sigma
        return out

    def parse_black(entry: int, word: tuple) -> PlaneTree:
        fi = face_id[entry]
        words[fi] = word
        kid_darts = loop_children(entry, fi)
        kids = []
        for i, kd in enumerate(kid_darts, start=1):
            # kd is the loop-face dart *arriving* style: its origin is the
            # white child (orbit darts after entry have origins c_k..c_1)
            kids.append(parse_white(kd, fi, word + (i,)))
        return PlaneTree(kids)

    def parse_white(loop_dart: int, parent_face: int, word: tuple) -> PlaneTree:
        # loop_dart: the parent-loop face dart whose origin is this white
        kids = []
        i = 0
        for d in blacks_at(loop_dart, parent_face):
            i += 1
            kids.append(parse_black(d, word + (i,)))
        return PlaneTree(kids)

    # root white: iterate rotation starting at the root dart itself
    root_blacks = blacks_at(l.root, None)
    kids = [parse_black(d, (i,)) for i, d in enumerate(root_blacks, start=1)]
    t = PlaneTree(kids)
    if return_face_words:
        return t, words
    return t


# ---------------------------------------------------------------------------
# codecs
# ---------------------------------------------------------------------------

def _validate_steps(C: Sequence[int]):
    for a, b2 in zip(C, C[1:]):
        if b2 - a > 1 or b2 == a:
            raise ValueError("steps must be nonzero and at most +1")


@dataclass
class _Codec:
    """Monotone-stack engine turning a path into looptree faces in a builder.

    ``mirror=False``: loop face = [jump dart base->top, popped up-edges
    reversed] (finite-excursion convention).  ``mirror=True``: loop face =
    [popped up-edges forward, jump dart top->base] (one-sided convention).
    """
    b: MapBuilder
    mirror: bool
    origin: int
    stack: list = field(default_factory=list)   # (level, vertex, entry_eid)
    chrono: list = field(default_factory=list)  # forward darts in time order
    spine_edges: dict = field(default_factory=dict)   # level l<=0 -> eid of edge class(l-1)--class(l)
    spine_vertices: dict = field(default_factory=dict)  # level l<=0 -> vertex
    time_vertex: list = field(default_factory=list)   # vertex of the walk at each time
    bottom: int = 0

    def __post_init__(self):
        self.stack.append((0, self.origin, None))
        self.spine_vertices[0] = self.origin
        self.time_vertex.append(self.origin)

    def _materialize_down_to(self, w: int):
        while self.bottom > w:
            lvl = self.bottom - 1
            v = self.b.new_vertex()
            upper_v = self.spine_vertices[self.bottom]
            eid = self.b.new_edge(v, upper_v)  # class(l) -> class(l+1)
            self.spine_vertices[lvl] = v
            self.spine_edges[self.bottom] = eid  # entry edge of level bottom
            self.stack.insert(0, (lvl, v, None))
            # fix entry eid of the frame above
            for idx, (l2, v2, e2) in enumerate(self.stack):
                if l2 == self.bottom and e2 is None:
                    self.stack[idx] = (l2, v2, eid)
            self.bottom = lvl

    def step(self, u: int, w: int):
        if w == u + 1:
            lvl, v, _ = self.stack[-1]
            assert lvl == u
            nv = self.b.new_vertex()
            eid = self.b.new_edge(v, nv)
            self.stack.append((w, nv, eid))
            self.chrono.append(Dart(eid, 0))
        elif w < u:
            if w < self.bottom:
                self._materialize_down_to(w)
            popped = []
            while self.stack[-1][0] > w:
                popped.append(self.stack.pop())
            base_lvl, base_v, _ = self.stack[-1]
            assert base_lvl == w
            top_v = popped[0][1]
            ejump = self.b.new_edge(base_v, top_v)
            if self.mirror:
                face = [Dart(e, 0) for _, _, e in reversed(popped)] + [Dart(ejump, 1)]
            else:
                face = [Dart(ejump, 0)] + [Dart(e, 1) for _, _, e in popped]
            self.b.add_face(face)
            self.chrono.append(Dart(ejump, 1))
        else:
            raise ValueError("invalid step")
        self.time_vertex.append(self.stack[-1][1])

    def run(self, C: Sequence[int]):
        for a, b2 in zip(C, C[1:]):
            self.step(a, b2)


def looptree_from_excursion(C: Sequence[int]):
    """Finite codec: returns (looptree RootedMap, tree of components)."""
    C = list(C)
    if C[0] != 0 or C[-1] != 0 or any(v < 0 for v in C[:-1]):
        raise ValueError("not a nonnegative excursion")
    _validate_steps(C)
    if len(C) == 1:
        t = PlaneTree()
        return vertex_map(), t
    b = MapBuilder()
    origin = b.new_vertex()
    cod = _Codec(b, mirror=False, origin=origin)
    cod.run(C)
    b.add_face(list(cod.chrono))  # outer face: forward darts in time order
    root = Dart(cod.chrono[-1].eid, 0)  # loop-side dart of the last jump edge
    lt = b.build(root)
    return lt, tree_of(lt)


@dataclass
class LazyLooptree:
    """Materialized portion of an infinite looptree."""
    map: RootedMap
    depth: int
    spine_vertices: list[int]          # map vertex ids of classes 0, -1, ...
    tau: list[int]                     # tau_0..tau_depth within the prefix
    index_vertex: Optional[dict[int, int]] = None  # walk index -> map vertex


def _one_sided_codec(C: Sequence[int], depth: int):
    """Run the mirrored codec on a prefix of C up to tau_depth.

    Returns (builder, codec, used_prefix_length, tau list)."""
    C = list(C)
    if C[0] != 0:
        raise ValueError("C_0 must be 0")
    _validate_steps(C)
    tau = [0]
    runmin = 0
    for i, v in enumerate(C):
        if v < runmin:
            runmin = v
            tau.append(i)
            if len(tau) > depth:
                break
    if len(tau) <= depth:
        raise ValueError("insufficient prefix depth")
    N = tau[depth] if depth > 0 else 0
    b = MapBuilder()
    origin = b.new_vertex()
    cod = _Codec(b, mirror=True, origin=origin)
    cod.run(C[: N + 1])
    return b, cod, N, tau[: depth + 1]


def _close_one_sided(b: MapBuilder, cod: _Codec, spliced: Optional[dict] = None):
    """Add the outer face of the revealed one-sided map and return the root.

    ``spliced`` optionally maps spine level (0, -1, ...) to an open contour
    walk (list of darts starting and ending at that spine vertex) to insert at
    the corresponding boundary corner (used by the two-sided gluing)."""
    asc = [Dart(e, 0) for (_, _, e) in cod.stack if e is not None]
    desc = []
    for lvl in range(0, cod.bottom, -1):
        if spliced and lvl in spliced:
            desc.extend(spliced[lvl])
        desc.append(Dart(cod.spine_edges[lvl], 1))
    if spliced and cod.bottom in spliced:
        desc.extend(spliced[cod.bottom])
    rev_chrono = [Dart(d.eid, 1 - d.rev) for d in reversed(cod.chrono)]
    b.add_face(asc + rev_chrono + desc)
    return Dart(cod.chrono[0].eid, cod.chrono[0].rev)


def looptree_from_walk(C: Sequence[int], depth: int) -> LazyLooptree:
    """One-sided codec: the portion of L_C revealed by time tau_depth."""
    b, cod, N, tau = _one_sided_codec(C, depth)
    if N == 0:
        return LazyLooptree(vertex_map(), 0, [0], tau, {0: 0})
    root = _close_one_sided(b, cod)
    m = b.build(root)
    # builder vertex ids survive build() only up to dense renumbering
    spine = _builder_vertices_in_map(b, m, [cod.spine_vertices[l]
                                            for l in range(0, cod.bottom - 1, -1)])
    idx = _builder_vertices_in_map(b, m, cod.time_vertex)
    return LazyLooptree(m, depth, spine, tau, {i: v for i, v in enumerate(idx)})


def _builder_vertices_in_map(b: MapBuilder, m: RootedMap, builder_vids: list[int]):
    # build() renumbers used vertices in increasing builder order
    used = sorted({b.dart_origin(d) for f in b.faces for d in f})
    remap = {v: i for i, v in enumerate(used)}
    return [remap[v] for v in builder_vids]


def forest_from_stopped_walk(values: Sequence[int]):
    """Forest of x+1 looptrees from a path started at x >= 0, skip-free
    descending (down-steps of -1 only) and stopped at its first entrance to -1.

    Piece k (k = 0..x) is the segment between the k-th and (k+1)-th strict
    running-minimum times, reversed and recentered: a finite excursion.
    Returns the list of (looptree, tree) pairs."""
    vals = list(values)
    if any(v < 0 for v in vals[:-1]) or vals[-1] != -1:
        raise ValueError("path must be stopped at its first entrance to -1")
    for a, b2 in zip(vals, vals[1:]):
        if b2 - a == 0 or b2 - a < -1:
            raise ValueError("path must be skip-free descending")
    # strict running-minimum times (the step into a new minimum is -1, so the
    # value just before each minimum time equals the previous minimum)
    mins = [0]
    cur = vals[0]
    for i, v in enumerate(vals):
        if v < cur:
            cur = v
            mins.append(i)
    out = []
    for a, bnd in zip(mins, mins[1:]):
        exc = [v - vals[a] for v in reversed(vals[a:bnd])]
        out.append(looptree_from_excursion(exc))
    return out


def _forest_pieces(C2: Sequence[int], k_count: int) -> list[list[int]]:
    """Excursion pieces L_0..L_{k_count-1} of a nonnegative path C2 above its
    future infimum: piece k spans [R_k + 1, R_{k+1}] shifted by -k, where
    R_k = sup{i : C2_i = k-1} within the prefix (R_0 = -1)."""
    vals = list(C2)
    if vals[0] != 0 or any(v < 0 for v in vals):
        raise ValueError("C' must be nonnegative with C'_0 = 0")
    _validate_steps(vals)
    R = [-1]
    for k in range(1, k_count + 1):
        idxs = [i for i, v in enumerate(vals) if v == k - 1]
        if not idxs:
            raise ValueError("insufficient C' prefix")
        R.append(max(idxs))
    pieces = []
    for k in range(k_count):
        seg = [vals[i] - k for i in range(R[k] + 1, R[k + 1] + 1)]
        pieces.append(seg if seg else [0])
    return pieces


def two_sided_looptree(C: Sequence[int], C2: Sequence[int],
                       depth: int) -> LazyLooptree:
    """The two-sided looptree: L_C with the forest piece L_k of C' glued at
    spine class -k, materialized to the given spine depth.

    ``index_vertex`` of the result maps walk indices to map vertices: index
    k >= 0 is the position of C at time k, index -i (i > 0) the position of
    C' at time i."""
    b, cod, N, tau = _one_sided_codec(C, depth)
    if N == 0:
        raise ValueError("depth must be at least 1")
    n_spine = 1 - cod.bottom  # classes 0..bottom
    pieces = _forest_pieces(C2, n_spine)
    spliced: dict[int, list[Dart]] = {}
    index_builder: dict[int, int] = {}
    t2 = 0  # C' time of the first entry of the current piece (= R_k + 1)
    for k, piece in enumerate(pieces):
        if len(piece) <= 1:
            index_builder[-t2] = cod.spine_vertices[-k]
            t2 += 1
            continue
        sub = _Codec(b, mirror=True, origin=cod.spine_vertices[-k])
        sub.run(piece)
        if len(sub.stack) != 1 or sub.stack[0][0] != 0:
            raise MapError("forest piece did not close")
        for j, v in enumerate(sub.time_vertex):
            index_builder[-(t2 + j)] = v
        t2 += len(piece)
        # open contour of the piece at its origin (its outer walk)
        spliced[-k] = [Dart(d.eid, 1 - d.rev) for d in reversed(sub.chrono)]
    for i, v in enumerate(cod.time_vertex):
        index_builder[i] = v
    root = _close_one_sided(b, cod, spliced)
    m = b.build(root)
    spine = _builder_vertices_in_map(b, m, [cod.spine_vertices[l]
                                            for l in range(0, cod.bottom - 1, -1)])
    keys = sorted(index_builder)
    mapped = _builder_vertices_in_map(b, m, [index_builder[k] for k in keys])
    return LazyLooptree(m, depth, spine, tau, dict(zip(keys, mapped)))


def quotient_classes(C: Sequence[int], C2: Sequence[int],
                     lo: int, hi: int) -> list[frozenset]:
    """Partition of the index window {lo..hi} for the two-sided quotient.

    C*_k = -C_k for k >= 0 and C'_{-k} for k <= 0.  Indices i, j are glued iff
    C*_i = C*_j = v and either max(i,j) <= 0 with C* >= v between them, or
    max(i,j) > 0 with sup C* over [min(i,j) v 0, max(i,j)] at most v and, when
    the pair crosses zero, inf C* over k <= min(i,j) at least v (the future
    infimum of C'; vacuous for pairs of positive indices).  The relation is
    closed transitively.  All of C2 is used for the left infimum, so provide a
    prefix extending well beyond -lo."""
    def star(k):
        return -C[k] if k >= 0 else C2[-k]

    full_lo = -(len(C2) - 1)
    # suffix minima of C* over k <= a for every a in the window
    pref_min = {}
    cur = None
    for k in range(full_lo, hi + 1):
        cur = star(k) if cur is None else min(cur, star(k))
        pref_min[k] = cur

    parent = {i: i for i in range(lo, hi + 1)}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    idx = list(range(lo, hi + 1))
    vals = {i: star(i) for i in idx}
    for ii, i in enumerate(idx):
        for j in idx[ii + 1:]:
            if vals[i] != vals[j]:
                continue
            v = vals[i]
            if j <= 0:
                if min(vals[k] for k in range(i, j + 1)) >= v:
                    union(i, j)
            else:
                mid_sup = max(star(k) for k in range(max(i, 0), j + 1))
                if (i > 0 or pref_min[i] >= v) and v >= mid_sup:
                    union(i, j)
    classes: dict[int, set] = {}
    for i in idx:
        classes.setdefault(find(i), set()).add(i)
    return [frozenset(c) for c in classes.values()]


# ---------------------------------------------------------------------------
# filling loops with triangulations (Phi^{-1})
# ---------------------------------------------------------------------------

def fill_looptree(tree: PlaneTree, components: dict[tuple, RootedMap]) -> RootedMap:
    """Build Loop(tree) and glue the component triangulation with simple
    boundary into each loop, identifying root edges per the loop rooting
    (origin closest to the looptree origin, external face on the right)."""
    from .core_map import _distances

    lt = loop_of(tree)
    if lt.root < 0:
        return lt
    _, words = tree_of(lt, return_face_words=True)
    faces = lt.faces()
    rf = frozenset(lt.root_face())
    dist = _distances(lt, lt.origin[lt.root])
    b = MapBuilder()
    vmap = [b.new_vertex(c) for c in lt.colors]
    emap: dict[int, int] = {}
    dart_of: dict[int, Dart] = {}
    for d in range(lt.ndarts):
        if lt.twin[d] < d:
            continue
        eid = b.new_edge(vmap[lt.origin[d]], vmap[lt.target(d)])
        dart_of[d] = Dart(eid, 0)
        dart_of[lt.twin[d]] = Dart(eid, 1)
    # outer face of lt carries over
    b.add_face([dart_of[d] for d in lt.root_face()])
    contour_pos = {d: i for i, d in enumerate(lt.root_face())}
    final_root = dart_of[lt.root]
    for fi, f in enumerate(faces):
        if f[0] in rf:
            continue
        word = words[fi]
        comp = components.get(word)
        if comp is None:
            raise MapError(f"missing component for loop {word}")
        # loop root dart: origin closest to looptree origin (ties: first in
        # the root-face contour order to keep decompose/glue consistent)
        orbit = list(f)
        r_l = min(orbit, key=lambda d: (dist[lt.origin[d]],
                                        contour_pos.get(lt.twin[d], 10 ** 9)))
        # orbit rotated to start at r_l
        i0 = orbit.index(r_l)
        orbit = orbit[i0:] + orbit[:i0]
        p = len(orbit)
        if comp.nedges == 1 and p == 2:
            # single-edge component in a bigon: identify the two loop edges
            a = dart_of[orbit[0]]
            bdart = dart_of[orbit[1]]
            b.fill_bigon(a, bdart)
            # the removed darts' oriented edges survive on the other edge
            if lt.root == orbit[0]:
                final_root = Dart(bdart.eid, 1 - bdart.rev)
            elif lt.root == orbit[1]:
                final_root = Dart(a.eid, 1 - a.rev)
            continue
        cont = list(comp.root_face())
        if len(cont) != p:
            raise MapError("component perimeter mismatch")
        # component boundary edge of contour dart c_i <-> loop edge of orbit
        # dart o_{(p-i) mod p}; orientation: twin[c_i] dart <-> that loop dart
        cmap_dart: dict[int, Dart] = {}
        cvmap: dict[int, int] = {}
        for i, c in enumerate(cont):
            o = orbit[(p - i) % p]
            od = dart_of[o]
            cmap_dart[comp.twin[c]] = od
            cmap_dart[c] = Dart(od.eid, 1 - od.rev)
            cvmap[comp.origin[comp.twin[c]]] = b.dart_origin(od)
        # interior vertices of the component
        for v in range(comp.nvertices):
            if v not in cvmap:
                cvmap[v] = b.new_vertex(comp.colors[v])
        for d in range(comp.ndarts):
            if d in cmap_dart or comp.twin[d] in cmap_dart:
                continue
            if comp.twin[d] < d:
                continue
            eid = b.new_edge(cvmap[comp.origin[d]], cvmap[comp.target(d)])
            cmap_dart[d] = Dart(eid, 0)
            cmap_dart[comp.twin[d]] = Dart(eid, 1)
        crf = frozenset(comp.root_face())
        for cf in comp.faces():
            if cf[0] in crf:
                continue
            b.add_face([cmap_dart[d] for d in cf])
    # root of the filled map = image of the looptree root
    return b.build(final_root)
