"""Rooted combinatorial maps.

Darts (half-edges) are integers ``0..D-1``.  A map stores three arrays:

* ``twin``  -- a fixed-point-free involution pairing the two sides of each edge;
* ``nxt``   -- the permutation whose orbits are the faces; ``nxt[d]`` is the
  dart following ``d`` along the face lying on the *left* of ``d``;
* ``origin``-- the vertex each dart leaves from.

The rotation around a vertex is the derived permutation
``sigma(d) = nxt[twin[d]]``.  Maps are rooted at an oriented dart; the *root
face* (outer/boundary face) is the face of ``twin[root]``, i.e. the face lying
on the right of the root dart.

Vertices may carry colors ``'O'`` (open), ``'C'`` (closed) or ``'U'``
(uncolored).  Self-loops are forbidden throughout (type-2 convention: multiple
edges allowed, no self-loops).  A map consisting of a single vertex and no edge
is represented with ``root = -1``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

__all__ = [
    "MapError",
    "RootedMap",
    "MapBuilder",
    "Dart",
    "Necklace",
    "vertex_map",
    "rebuild_into_builder",
    "build_map",
    "ball",
    "canonical_code",
    "local_distance",
    "scoop",
    "decompose_phi",
    "glue_phi_inverse",
    "glue_necklace",
    "serialize_map",
    "parse_map",
]

COLORS = ("U", "O", "C")


class MapError(ValueError):
    """Invalid map construction or operation."""


class RootedMap:
    """Immutable rooted combinatorial map (value semantics)."""

    __slots__ = ("twin", "nxt", "origin", "root", "colors", "_faces", "_code")

    def __init__(self, twin, nxt, origin, root, colors, _validate=True):
        self.twin = tuple(twin)
        self.nxt = tuple(nxt)
        self.origin = tuple(origin)
        self.root = root
        self.colors = tuple(colors)
        self._faces = None
        self._code = None
        if _validate:
            self._validate()

    # -- structure ---------------------------------------------------------

    @property
    def ndarts(self) -> int:
        return len(self.twin)

    @property
    def nedges(self) -> int:
        return len(self.twin) // 2

    @property
    def nvertices(self) -> int:
        return len(self.colors)

    def target(self, d: int) -> int:
        return self.origin[self.twin[d]]

    def sigma(self, d: int) -> int:
        """Next dart counter-rotating around ``origin[d]``."""
        return self.nxt[self.twin[d]]

    def faces(self) -> list[tuple[int, ...]]:
        if self._faces is None:
            seen = [False] * self.ndarts
            out = []
            for d0 in range(self.ndarts):
                if seen[d0]:
                    continue
                cyc = []
                d = d0
                while not seen[d]:
                    seen[d] = True
                    cyc.append(d)
                    d = self.nxt[d]
                out.append(tuple(cyc))
            self._faces = out
        return self._faces

    def face_of(self, d: int) -> tuple[int, ...]:
        for f in self.faces():
            if d in f:
                return f
        raise MapError(f"dart {d} not in map")

    def root_face(self) -> tuple[int, ...]:
        """The root (outer) face: the face on the right of the root dart,
        returned as the ``nxt`` orbit starting at ``twin[root]``."""
        if self.root < 0:
            return ()
        cyc = []
        d = self.twin[self.root]
        while True:
            cyc.append(d)
            d = self.nxt[d]
            if d == cyc[0]:
                return tuple(cyc)

    def degree(self, v: int) -> int:
        return sum(1 for d in range(self.ndarts) if self.origin[d] == v)

    def darts_of_vertex(self, v: int) -> list[int]:
        return [d for d in range(self.ndarts) if self.origin[d] == v]

    def is_triangulation_with_boundary(self) -> bool:
        rf = frozenset(self.root_face())
        return all(len(f) == 3 for f in self.faces() if not rf or f[0] not in rf)

    # -- validation --------------------------------------------------------

    def _validate(self):
        D = self.ndarts
        if D == 0:
            if self.root != -1 or len(self.colors) != 1:
                raise MapError("vertex-only map must have root=-1 and one vertex")
            return
        if not (0 <= self.root < D):
            raise MapError("root dart out of range")
        for d in range(D):
            if not (0 <= self.twin[d] < D) or self.twin[self.twin[d]] != d or self.twin[d] == d:
                raise MapError("twin is not a fixed-point-free involution")
        if sorted(self.nxt) != list(range(D)):
            raise MapError("nxt is not a permutation")
        V = len(self.colors)
        for d in range(D):
            if not (0 <= self.origin[d] < V):
                raise MapError("origin out of range")
            if self.origin[d] == self.origin[self.twin[d]]:
                raise MapError("self-loop present")
        for c in self.colors:
            if c not in COLORS:
                raise MapError(f"bad color {c!r}")
        # origin must be constant on sigma orbits and every vertex must occur
        for d in range(D):
            if self.origin[self.sigma(d)] != self.origin[d]:
                raise MapError("origin inconsistent with rotation")
        if len({self.origin[d] for d in range(D)}) != V:
            raise MapError("isolated vertex or vertex-count mismatch")
        # connectivity over {twin, nxt}
        seen = {0}
        stack = [0]
        while stack:
            d = stack.pop()
            for e in (self.twin[d], self.nxt[d]):
                if e not in seen:
                    seen.add(e)
                    stack.append(e)
        if len(seen) != D:
            raise MapError("map is disconnected")
        # planarity via Euler characteristic
        if V - self.nedges + len(self.faces()) != 2:
            raise MapError("Euler characteristic is not 2 (non-planar gluing)")

    # -- equality / hashing ------------------------------------------------

    def code(self) -> bytes:
        if self._code is None:
            self._code = canonical_code(self)
        return self._code

    def __eq__(self, other):
        return isinstance(other, RootedMap) and self.code() == other.code()

    def __hash__(self):
        return hash(self.code())

    def __repr__(self):
        return f"<RootedMap D={self.ndarts} V={self.nvertices} root={self.root}>"


def vertex_map(color: str = "U") -> RootedMap:
    """The map consisting of a single (origin) vertex and no edge."""
    return RootedMap((), (), (), -1, (color,))


# ---------------------------------------------------------------------------
# canonical code
# ---------------------------------------------------------------------------

def canonical_code(m: RootedMap) -> bytes:
    """Canonical byte code of a rooted colored map.

    Darts are renumbered by a deterministic breadth-first traversal from the
    root along ``nxt`` and ``twin``; the relabeled ``twin``/``nxt`` arrays are
    emitted, followed by vertex colors in order of first appearance as a dart
    origin.  Two maps have equal codes iff there is a root-preserving,
    color-preserving isomorphism between them.
    """
    if m.root < 0:
        return b"V" + m.colors[0].encode()
    idx: dict[int, int] = {}
    order: list[int] = []
    q = deque([m.root])
    while q:
        d = q.popleft()
        if d in idx:
            continue
        idx[d] = len(order)
        order.append(d)
        q.append(m.nxt[d])
        q.append(m.twin[d])
    parts = []
    for d in order:
        parts.append(idx[m.twin[d]])
        parts.append(idx[m.nxt[d]])
    vcols = []
    seen_v = set()
    for d in order:
        v = m.origin[d]
        if v not in seen_v:
            seen_v.add(v)
            vcols.append(m.colors[v])
    body = ",".join(map(str, parts)) + ";" + "".join(vcols)
    return body.encode()


# ---------------------------------------------------------------------------
# builder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dart:
    """A side of an edge inside a MapBuilder: edge id + direction flag."""
    eid: int
    rev: int  # 0: u->v, 1: v->u

    def flip(self) -> "Dart":
        return Dart(self.eid, 1 - self.rev)


class MapBuilder:
    """Accumulates vertices, edges and *all* faces (outer included) and then
    assembles a RootedMap.

    Faces are given as cyclic dart lists traversed with their interior on the
    left.  Because multiple edges and pinched outer faces are common here,
    every face must be given explicitly; no rotation completion is attempted.

    ``fill_bigon`` implements the trivial perimeter-2 Boltzmann fill: the
    2-gon region bounded by two darts is closed by identifying the two edges
    (the two inner sides disappear and their partners become twins).
    """

    def __init__(self):
        self.edge_ends: list[tuple[int, int]] = []
        self.faces: list[list[Dart]] = []
        self.colors: list[str] = []
        self._partner: dict[Dart, Dart] = {}
        self._dead: set[Dart] = set()

    # vertices / edges

    def new_vertex(self, color: str = "U") -> int:
        self.colors.append(color)
        return len(self.colors) - 1

    def set_color(self, v: int, color: str):
        self.colors[v] = color

    def new_edge(self, u: int, v: int) -> int:
        if u == v:
            raise MapError("self-loop requested")
        self.edge_ends.append((u, v))
        eid = len(self.edge_ends) - 1
        a, b = Dart(eid, 0), Dart(eid, 1)
        self._partner[a] = b
        self._partner[b] = a
        return eid

    def dart_origin(self, d: Dart) -> int:
        u, v = self.edge_ends[d.eid]
        return u if d.rev == 0 else v

    def dart_target(self, d: Dart) -> int:
        u, v = self.edge_ends[d.eid]
        return v if d.rev == 0 else u

    # faces

    def add_face(self, darts: Sequence[Dart]):
        darts = list(darts)
        for i, d in enumerate(darts):
            if d in self._dead:
                raise MapError("face uses a dart removed by a bigon fill")
            if self.dart_target(d) != self.dart_origin(darts[(i + 1) % len(darts)]):
                raise MapError("face cycle is not a closed walk")
        self.faces.append(darts)

    def fill_bigon(self, a: Dart, b: Dart):
        """Close the 2-gon region bounded by darts ``a`` and ``b`` (a walk
        a: u->v then b: v->u) with the trivial single-edge map: remove both
        darts and twin their partners."""
        if self.dart_origin(a) != self.dart_target(b) or self.dart_target(a) != self.dart_origin(b):
            raise MapError("darts do not bound a 2-gon")
        x = self._partner.pop(a)
        y = self._partner.pop(b)
        if x is b:  # already each other's partners: would leave an edgeless sphere
            raise MapError("cannot collapse the last 2-gon of a map")
        self._partner[x] = y
        self._partner[y] = x
        self._dead.add(a)
        self._dead.add(b)

    def resolve(self, d: Dart) -> Dart:
        """The live dart currently standing for ``d`` (identity unless removed)."""
        if d in self._dead:
            raise MapError("dart was removed by a bigon fill")
        return d

    # assembly

    def build(self, root: Dart) -> RootedMap:
        live = [d for f in self.faces for d in f]
        index = {}
        for d in live:
            if d in index:
                raise MapError(f"dart {d} appears in two faces")
            index[d] = len(index)
        if len(index) != len(self._partner):
            missing = set(self._partner) - set(index)
            raise MapError(f"darts missing from the face list: {sorted(missing, key=lambda d: (d.eid, d.rev))[:4]}...")
        D = len(index)
        twin = [0] * D
        nxt = [0] * D
        origin = [0] * D
        for d, i in index.items():
            twin[i] = index[self._partner[d]]
            origin[i] = self.dart_origin(d)
        for f in self.faces:
            for i, d in enumerate(f):
                nxt[index[d]] = index[f[(i + 1) % len(f)]]
        # drop unused vertices, renumber densely
        used = sorted({origin[i] for i in range(D)})
        remap = {v: i for i, v in enumerate(used)}
        origin = [remap[v] for v in origin]
        colors = [self.colors[v] for v in used]
        if root in self._dead:
            raise MapError("root dart was removed by a bigon fill")
        return RootedMap(twin, nxt, origin, index[root], colors)


# ---------------------------------------------------------------------------
# build_map from vertex cycles (public plumbing)
# ---------------------------------------------------------------------------

def build_map(face_cycles: Sequence[Sequence[int]], root: tuple[int, int],
              colors: Optional[dict[int, str]] = None) -> RootedMap:
    """Build a map from internal faces given as vertex-id cycles plus the root
    oriented edge; the outer face is completed automatically.

    Directed darts ``(u, v)`` are paired greedily with opposite darts
    ``(v, u)``; unmatched darts lie on the outer face.  The outer face is
    completed only when every vertex misses at most one corner (no outer pinch
    point); otherwise the input is ambiguous and an error is raised.
    """
    darts = []  # (u, v, face_index, pos)
    for fi, cyc in enumerate(face_cycles):
        if len(cyc) < 2:
            raise MapError("face cycle too short")
        for i, u in enumerate(cyc):
            v = cyc[(i + 1) % len(cyc)]
            if u == v:
                raise MapError("self-loop present")
            darts.append((u, v, fi, i))
    # greedy twin pairing
    by_pair: dict[tuple[int, int], list[int]] = {}
    for i, (u, v, _, _) in enumerate(darts):
        by_pair.setdefault((u, v), []).append(i)
    twin_of: dict[int, int] = {}
    for (u, v), ids in by_pair.items():
        if u < v and (v, u) in by_pair:
            other = by_pair[(v, u)]
            for a, b in zip(ids, other):
                twin_of[a] = b
                twin_of[b] = a
    n_inner = len(darts)
    outer_twin: dict[int, int] = {}
    for i in range(n_inner):
        if i not in twin_of:
            j = len(darts)
            u, v, _, _ = darts[i]
            darts.append((v, u, -1, -1))
            twin_of[i] = j
            twin_of[j] = i
            outer_twin[j] = i
    D = len(darts)
    nxt = [-1] * D
    for fi, cyc in enumerate(face_cycles):
        base = sum(len(c) for c in face_cycles[:fi])
        L = len(cyc)
        for i in range(L):
            nxt[base + i] = base + (i + 1) % L
    # complete rotations: sigma(d) = nxt[twin[d]]; known where twin[d] is inner
    verts = sorted({d[0] for d in darts})
    out_darts: dict[int, list[int]] = {v: [] for v in verts}
    for i, (u, _, _, _) in enumerate(darts):
        out_darts[u].append(i)
    sigma: dict[int, int] = {}
    for i in range(D):
        t = twin_of[i]
        if t < n_inner:
            sigma[i] = nxt[t]
    for v, ods in out_darts.items():
        unknown = [d for d in ods if d not in sigma]
        if not unknown:
            continue
        if len(unknown) > 1:
            raise MapError(f"ambiguous rotation at pinched vertex {v}")
        targets = set(ods) - {sigma[d] for d in ods if d in sigma}
        if len(targets) != 1:
            raise MapError(f"rotation at vertex {v} does not close")
        sigma[unknown[0]] = targets.pop()
    for j in outer_twin:
        nxt[j] = sigma[twin_of[j]]
    origin = [d[0] for d in darts]
    # dense vertex ids
    remap = {v: i for i, v in enumerate(verts)}
    origin = [remap[v] for v in origin]
    cols = ["U"] * len(verts)
    if colors:
        for v, c in colors.items():
            cols[remap[v]] = c
    twin = [twin_of[i] for i in range(D)]
    ru, rv = root
    root_dart = None
    for i, (u, v, fi, _) in enumerate(darts):
        if (u, v) == (ru, rv) and fi >= 0:
            root_dart = i
            break
    if root_dart is None:
        for i, (u, v, _, _) in enumerate(darts):
            if (u, v) == (ru, rv):
                root_dart = i
                break
    if root_dart is None:
        raise MapError("root edge not found")
    return RootedMap(twin, nxt, origin, root_dart, cols)


# ---------------------------------------------------------------------------
# balls and local distance
# ---------------------------------------------------------------------------

def _distances(m: RootedMap, source: int) -> list[int]:
    INF = -1
    dist = [INF] * m.nvertices
    dist[source] = 0
    q = deque([source])
    adj: dict[int, list[int]] = {}
    for d in range(m.ndarts):
        adj.setdefault(m.origin[d], []).append(m.target(d))
    while q:
        v = q.popleft()
        for w in adj.get(v, ()):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def ball(m: RootedMap, R: int) -> RootedMap:
    """The ball of radius R around the origin vertex of the root.

    ``R = 0`` gives the origin vertex alone; for ``R >= 1`` the ball contains
    all vertices at graph distance at most R and every edge whose two endpoints
    lie in that set, rooted at the original root dart.
    """
    if R < 0:
        raise MapError("negative radius")
    if m.root < 0:
        return m
    src = m.origin[m.root]
    if R == 0:
        return vertex_map(m.colors[src])
    dist = _distances(m, src)
    keep_v = {v for v in range(m.nvertices) if 0 <= dist[v] <= R}
    keep_d = [d for d in range(m.ndarts)
              if m.origin[d] in keep_v and m.target(d) in keep_v]
    keep_set = set(keep_d)
    # restrict rotations, then nxt' = sigma' o twin
    sigma_r: dict[int, int] = {}
    for d in keep_d:
        e = m.sigma(d)
        while e not in keep_set:
            e = m.sigma(e)
        sigma_r[d] = e
    index = {d: i for i, d in enumerate(keep_d)}
    twin = [index[m.twin[d]] for d in keep_d]
    nxt = [index[sigma_r[m.twin[d]]] for d in keep_d]
    origin_old = [m.origin[d] for d in keep_d]
    verts = sorted(set(origin_old))
    remap = {v: i for i, v in enumerate(verts)}
    origin = [remap[v] for v in origin_old]
    colors = [m.colors[v] for v in verts]
    return RootedMap(twin, nxt, origin, index[m.root], colors)


def local_distance(m: RootedMap, m2: RootedMap) -> Fraction:
    """1/(1 + R*) where R* is the first radius at which the balls differ;
    0 for isomorphic finite maps (balls agree at every radius)."""
    R = 0
    while True:
        ba, bb = ball(m, R), ball(m2, R)
        if canonical_code(ba) != canonical_code(bb):
            return Fraction(1, 1 + R)
        if ba.ndarts == m.ndarts and bb.ndarts == m2.ndarts:
            return Fraction(0)
        R += 1


# ---------------------------------------------------------------------------
# serialization:  T <ndarts> <root> | twin:... | next:... | colors:...
# ---------------------------------------------------------------------------

def serialize_map(m: RootedMap) -> str:
    if m.root < 0:
        return f"T 0 -1 | twin: | next: | colors: {m.colors[0]}"
    # canonical vertex order: first appearance as a dart origin (dart id order)
    order = []
    seen = set()
    for d in range(m.ndarts):
        v = m.origin[d]
        if v not in seen:
            seen.add(v)
            order.append(v)
    cols = " ".join(m.colors[v] for v in order)
    tw = " ".join(map(str, m.twin))
    nx = " ".join(map(str, m.nxt))
    return f"T {m.ndarts} {m.root} | twin: {tw} | next: {nx} | colors: {cols}"


def parse_map(line: str) -> RootedMap:
    head, tw, nx, co = [part.strip() for part in line.strip().split("|")]
    tag, nd, root = head.split()
    if tag != "T":
        raise MapError("bad map line")
    D, root = int(nd), int(root)
    if D == 0:
        c = co.split(":")[1].strip() or "U"
        return vertex_map(c)
    twin = list(map(int, tw.split(":")[1].split()))
    nxt = list(map(int, nx.split(":")[1].split()))
    cols = co.split(":")[1].split()
    # vertices = orbits of sigma(d) = nxt[twin[d]], numbered by first dart
    origin = [-1] * D
    nv = 0
    for d0 in range(D):
        if origin[d0] >= 0:
            continue
        v = nv
        nv += 1
        d = d0
        while origin[d] < 0:
            origin[d] = v
            d = nxt[twin[d]]
    if len(cols) != nv:
        raise MapError("color count mismatch")
    return RootedMap(twin, nxt, origin, root, cols)


# ---------------------------------------------------------------------------
# scooping and the Phi decomposition
# ---------------------------------------------------------------------------

def _contour(m: RootedMap) -> list[int]:
    """Darts of the root face, starting at twin[root]."""
    return list(m.root_face())


def _components_of_boundary(m: RootedMap):
    """Group the root-face positions into loops.

    Returns (contour, loops) where ``loops`` is a list of position lists; the
    positions of one loop bound a common irreducible component (or form the
    doubled-edge bigon of a doubly-exposed edge).  Loop positions are listed in
    contour order.
    """
    contour = _contour(m)
    on_rf = set(contour)
    pos_of = {d: i for i, d in enumerate(contour)}
    # face id for every dart
    face_id = {}
    faces = m.faces()
    for fi, f in enumerate(faces):
        for d in f:
            face_id[d] = fi
    rf_id = face_id[contour[0]] if contour else -1
    # face adjacency flood fill, never crossing exposed edges
    comp = [-1] * len(faces)
    def flood(start_face: int, label: int):
        stack = [start_face]
        comp[start_face] = label
        while stack:
            fi = stack.pop()
            for d in faces[fi]:
                t = m.twin[d]
                if d in on_rf or t in on_rf:
                    continue  # exposed edge: do not cross
                fj = face_id[t]
                if fj != rf_id and comp[fj] < 0:
                    comp[fj] = label
                    stack.append(fj)
    labels = 0
    groups: dict[object, list[int]] = {}
    for i, d in enumerate(contour):
        t = m.twin[d]
        if t in on_rf:
            # doubly-exposed edge -> its own bigon loop
            key = ("e", min(i, pos_of[t]))
        else:
            fi = face_id[t]
            if comp[fi] < 0:
                flood(fi, labels)
                labels += 1
            key = ("c", comp[fi])
        groups.setdefault(key, []).append(i)
    loops = sorted(groups.values(), key=lambda ps: ps[0])
    return contour, loops


def scoop(m: RootedMap):
    """The scooped-out boundary of a triangulation with boundary, as a looptree
    RootedMap (outer cycle = root-face contour; inner faces = loops).

    Returns ``(looptree, contour, loops)``; ``contour`` and ``loops`` describe
    the correspondence between looptree edges and the boundary darts of ``m``
    (position i of the contour <-> looptree edge i).
    """
    if m.root < 0 or m.ndarts == 0:
        raise MapError("cannot scoop a vertex map")
    contour, loops = _components_of_boundary(m)
    L = len(contour)
    b = MapBuilder()
    vid = {}
    for d in contour:
        v = m.origin[d]
        if v not in vid:
            vid[v] = b.new_vertex(m.colors[v])
    eids = []
    for i, d in enumerate(contour):
        u = vid[m.origin[d]]
        w = vid[m.origin[contour[(i + 1) % L]]]
        eids.append(b.new_edge(u, w))
    # outer face: the contour itself (root face of m on the left of each dart)
    b.add_face([Dart(eids[i], 0) for i in range(L)])
    # loops: inner faces traversed opposite to the contour
    for ps in loops:
        b.add_face([Dart(eids[i], 1) for i in reversed(ps)])
    lt = b.build(Dart(eids[0], 1))
    return lt, contour, loops


@dataclass
class TreeOfComponentsPair:
    tree: "object"                      # PlaneTree (trees_looptrees)
    components: dict[tuple[int, ...], RootedMap]  # keyed by black-vertex word


def decompose_phi(m: RootedMap) -> TreeOfComponentsPair:
    """Phi: a triangulation with boundary -> (tree of components, components)."""
    from . import trees_looptrees as tl

    lt, contour, loops = scoop(m)
    tree, black_of_face = tl.tree_of(lt, return_face_words=True)
    # looptree edge i <-> contour position i; loop faces of lt vs loops list
    faces = lt.faces()
    rf = frozenset(lt.root_face())
    components: dict[tuple[int, ...], RootedMap] = {}
    # map each inner face of lt to its loop position list: inner faces were
    # added in the order of `loops`, but recover robustly via edge ids: the
    # looptree was built with edge i between contour positions; face darts of
    # an inner face are reversed darts of its loop positions.
    # Identify by matching dart sets.
    # Build a lookup from the sorted position tuple to the component map.
    for ps in loops:
        comp_map = _extract_component(m, contour, ps, lt)
        # find the lt face whose darts are exactly the reversed-position darts
        word = _loop_word(lt, ps, black_of_face, faces, rf)
        components[word] = comp_map
    return TreeOfComponentsPair(tree=tree, components=components)


def _loop_word(lt, ps, black_of_face, faces, rf):
    # the inner faces of lt are exactly the non-root faces; match by edge ids:
    # edge i of lt corresponds to contour position i, and the inner face of the
    # loop with positions ps contains the reverse dart of edge ps[0].
    # lt darts were assembled by MapBuilder; recover edge ids from dart count:
    # dart numbering is private, so match via face membership of the reverse of
    # the outer dart at position ps[0].
    outer = lt.root_face()
    # outer face starts at twin[root]; lt.root is the reverse dart of edge 0
    # so outer[k] is the forward dart of edge k
    d_rev = lt.twin[outer[ps[0]]]
    for fi, f in enumerate(faces):
        if f[0] in rf:
            continue
        if d_rev in f:
            return black_of_face[fi]
    raise MapError("loop face not found")


def _extract_component(m: RootedMap, contour, ps, lt) -> RootedMap:
    """The irreducible component of m bounded by the loop at positions ps,
    rooted per Remark 2.1 (edge leaving the loop vertex closest to the origin
    of the looptree, external face of the component on its right =>
    component interior on the left of the root dart; the component root face
    is the m-side of the loop)."""
    # choose root position: the inward dart (root face of m on its right) at
    # position i has origin = the vertex at position i+1; pick the position
    # whose inward-dart origin is closest to the looptree origin
    dist = _distances(lt, lt.origin[lt.root])
    outer = lt.root_face()
    L = len(outer)
    def pos_origin_dist(i):
        return dist[lt.origin[outer[(i + 1) % L]]]
    root_pos = min(ps, key=pos_origin_dist)
    inner = [m.twin[contour[i]] for i in ps]  # inward-facing darts
    if all(d in set(contour) for d in inner):
        # doubly-exposed edge: component is the single-edge map
        u = m.origin[contour[ps[0]]]
        vtx = m.origin[contour[(ps[0] + 1) % len(contour)]]
        b = MapBuilder()
        a_id = b.new_vertex(m.colors[u])
        c_id = b.new_vertex(m.colors[vtx])
        e = b.new_edge(a_id, c_id)
        b.add_face([Dart(e, 0), Dart(e, 1)])
        return b.build(Dart(e, 1) if root_pos != ps[0] else Dart(e, 0))
    # general component: faces reachable from inner darts without crossing
    # exposed edges
    faces = m.faces()
    face_id = {}
    for fi, f in enumerate(faces):
        for d in f:
            face_id[d] = fi
    on_rf = set(contour)
    keep_faces = set()
    stack = []
    for d in inner:
        fi = face_id[d]
        if fi not in keep_faces:
            keep_faces.add(fi)
            stack.append(fi)
    while stack:
        fi = stack.pop()
        for d in faces[fi]:
            t = m.twin[d]
            if d in on_rf or t in on_rf:
                continue
            fj = face_id[t]
            if fj not in keep_faces:
                keep_faces.add(fj)
                stack.append(fj)
    keep_darts = [d for fi in keep_faces for d in faces[fi]]
    keep_set = set(keep_darts)
    index = {d: i for i, d in enumerate(keep_darts)}
    D = len(keep_darts)
    K = len(inner)
    twin = [0] * (D + K)
    nxt = [0] * (D + K)
    for d in keep_darts:
        t = m.twin[d]
        nxt[index[d]] = index[m.nxt[d]]  # kept faces are whole, so nxt stays
        if t in keep_set:
            twin[index[d]] = index[t]
    # new root face: one fresh dart per exposed edge, reverse of inner[j].
    # It runs parallel to the contour darts of the loop, which chain target to
    # origin (any contour detour between two loop positions returns to the same
    # pinch vertex), so the cycle is base+0, base+1, ..., base+K-1.
    base = D
    for j, d in enumerate(inner):
        twin[index[d]] = base + j
        twin[base + j] = index[d]
        nxt[base + j] = base + (j + 1) % K
    origin_old = [m.origin[d] for d in keep_darts] + [m.target(d) for d in inner]
    verts = sorted(set(origin_old))
    remap = {v: i for i, v in enumerate(verts)}
    origin = [remap[v] for v in origin_old]
    colors = [m.colors[v] for v in verts]
    # root: position root_pos within ps
    j0 = ps.index(root_pos)
    root_dart = index[inner[j0]]
    return RootedMap(twin, nxt, origin, root_dart, colors)


def glue_phi_inverse(pair: TreeOfComponentsPair) -> RootedMap:
    """Phi^{-1}: fill the loops of Loop(tree) with the given components."""
    from . import trees_looptrees as tl
    return tl.fill_looptree(pair.tree, pair.components)


# ---------------------------------------------------------------------------
# necklaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Necklace:
    """A triangulation of a strip with no inner vertex, encoded by its bit
    sequence: bit 1 consumes a corner on the negative (m) side, bit 0 on the
    positive (m') side."""
    bits: tuple[int, ...]

    @property
    def size(self) -> tuple[int, int]:
        x = sum(self.bits)
        return (x, len(self.bits) - x)

    def edges(self) -> list[tuple[int, int]]:
        """Edge set {(-S_k, k+1-S_k)} on the boundary Z, k = 0..len(bits)."""
        out = []
        s = 0
        out.append((0, 1))
        for k, z in enumerate(self.bits, start=1):
            s += z
            out.append((-s, k + 1 - s))
        return out


def glue_necklace_darts(builder: MapBuilder,
                        side_m: Sequence[tuple[int, int]],
                        side_m2: Sequence[tuple[int, int]],
                        root_edge: int,
                        bits: Sequence[int]) -> list[int]:
    """Glue two boundary corner sequences along a necklace, adding one triangle
    per bit to ``builder``.

    ``side_m``  -- corners (vertex, edge-to-next) on the m side, starting at the
                   origin corner; corner i leads to corner i+1 via edge e_{i+1}.
    ``side_m2`` -- same on the m' side.
    ``root_edge`` -- edge id of the root edge joining side_m[0] to side_m2[0].
    Returns the list of necklace edge ids (edge k joins -S_k to k+1-S_k), with
    the root edge first.

    Triangle k (k = 1..len(bits)) is bounded by necklace edges k-1 and k plus
    one boundary edge of the consumed side.
    """
    neck = [root_edge]
    i = 0  # corners consumed on m side
    j = 0  # corners consumed on m' side
    for k, z in enumerate(bits, start=1):
        if z == 1:
            i += 1
            if i >= len(side_m):
                raise MapError("m-side boundary exhausted")
            u = side_m[i][0]
            w = side_m2[j][0]
            e_new = builder.new_edge(u, w)
            e_b = side_m[i - 1][1]
            # triangle: boundary edge from -S_k up to -S_{k-1}, prev necklace
            # edge (from -S_{k-1} to k-S_{k-1}), new edge back; the boundary
            # dart used is the one freed by the consumed side's root face
            builder.add_face([
                _oriented(builder, e_b, u, side_m[i - 1][0]),
                _oriented(builder, neck[-1], side_m[i - 1][0], w),
                _oriented(builder, e_new, w, u),
            ])
            neck.append(e_new)
        else:
            j += 1
            if j >= len(side_m2):
                raise MapError("m'-side boundary exhausted")
            u = side_m[i][0]
            w = side_m2[j][0]
            e_new = builder.new_edge(u, w)
            e_b = side_m2[j - 1][1]
            builder.add_face([
                _oriented(builder, e_b, side_m2[j - 1][0], w),
                _oriented(builder, e_new, w, u),
                _oriented(builder, neck[-1], u, side_m2[j - 1][0]),
            ])
            neck.append(e_new)
    return neck


def _oriented(builder: MapBuilder, eid: int, u: int, v: int) -> Dart:
    a, b = builder.edge_ends[eid]
    if (a, b) == (u, v):
        return Dart(eid, 0)
    if (b, a) == (u, v):
        return Dart(eid, 1)
    raise MapError("edge endpoints do not match requested orientation")


def rebuild_into_builder(b: MapBuilder, m: RootedMap, walk: str):
    """Copy ``m`` (fresh vertices/edges, all inner faces) into builder ``b``.

    Returns ``(corners, root_dart)`` where ``corners`` is the boundary corner
    sequence ``[(vertex, edge_to_next_corner), ...]`` along the root face and
    ``root_dart`` is the builder Dart standing for ``m.root``.

    Both walks start at the root-origin corner.  ``walk='right'`` lists corners
    in root-face orbit order; corner ``i``'s stored edge joins corners ``i`` and
    ``i+1`` and its free (root-face) dart points from corner ``i`` to corner
    ``i+1``.  ``walk='left'`` lists corners against the orbit; corner ``i``'s
    stored edge again joins corners ``i`` and ``i+1`` but its free dart points
    from corner ``i+1`` to corner ``i``.
    """
    if m.root < 0:
        v = b.new_vertex(m.colors[0])
        return [(v, None)], None
    vmap = [b.new_vertex(c) for c in m.colors]
    emap: dict[int, int] = {}
    dart_of: dict[int, Dart] = {}
    for d in range(m.ndarts):
        if m.twin[d] < d:
            continue
        eid = b.new_edge(vmap[m.origin[d]], vmap[m.target(d)])
        emap[d] = eid
        dart_of[d] = Dart(eid, 0)
        dart_of[m.twin[d]] = Dart(eid, 1)
    rf = frozenset(m.root_face())
    for f in m.faces():
        if f[0] in rf:
            continue
        b.add_face([dart_of[d] for d in f])
    c = _contour(m)
    p = len(c)
    corners = []
    if walk == "right":
        for i in range(p):
            d = c[(i + 1) % p]
            corners.append((vmap[m.origin[d]], dart_of[d].eid))
    elif walk == "left":
        for j in range(p):
            d_v = c[(1 - j) % p]
            d_e = c[(-j) % p]
            corners.append((vmap[m.origin[d_v]], dart_of[d_e].eid))
    else:
        raise MapError("walk must be 'right' or 'left'")
    return corners, dart_of[m.root]


def glue_necklace(m: RootedMap, m2: RootedMap, n: Necklace) -> RootedMap:
    """Gluing Psi_n(m, m2) of two finite boundary-rooted maps along a necklace.

    The corners of the root face of ``m`` starting at its root origin and
    walking against its root-face orbit are matched to the non-positive side of
    the necklace (positions 0, -1, -2, ...); the corners of ``m2`` starting at
    its root origin and walking in orbit order are the positive side (positions
    1, 2, ...).  The root of the result is the root edge of the necklace,
    oriented from position 0 to position 1, with the outer face as root face.
    """
    b = MapBuilder()
    side_m, _ = rebuild_into_builder(b, m, walk="left")
    side_m2, _ = rebuild_into_builder(b, m2, walk="right")
    root_edge = b.new_edge(side_m[0][0], side_m2[0][0])
    neck = glue_necklace_darts(b, side_m, side_m2, root_edge, n.bits)
    # The outer face is fully determined (and may pass twice through a
    # junction vertex when the necklace never advances on one side, so the
    # free-corner chaining of _close_outer cannot be used): root edge from
    # position 1 back to 0, the unconsumed m arc walked backwards, the last
    # necklace edge, then the unconsumed m2 arc forwards.
    x, y = n.size
    outer = [Dart(root_edge, 1)]
    for i in range(len(side_m) - 1, x - 1, -1):
        outer.append(_oriented(b, side_m[i][1],
                               side_m[(i + 1) % len(side_m)][0], side_m[i][0]))
    outer.append(_oriented(b, neck[-1], side_m[x][0], side_m2[y][0]))
    for j in range(y, len(side_m2)):
        outer.append(_oriented(b, side_m2[j][1],
                               side_m2[j][0], side_m2[(j + 1) % len(side_m2)][0]))
    b.add_face(outer)
    return b.build(Dart(root_edge, 0))


def _close_outer(b: MapBuilder):
    """Add the unique outer face completing the builder: all live darts not yet
    in a face, chained by the free-corner rule.  Valid only when every vertex
    has at most one free corner.  Internal helper for small glue results."""
    used = {d for f in b.faces for d in f}
    free = [d for d in b._partner if d not in used and d not in b._dead]
    if not free:
        return
    # successor of dart d around the outer face: the free dart leaving
    # target(d); error if ambiguous
    by_origin: dict[int, list[Dart]] = {}
    for d in free:
        by_origin.setdefault(b.dart_origin(d), []).append(d)
    for v, ds in by_origin.items():
        if len(ds) > 1:
            raise MapError(f"pinched outer face at vertex {v}; give it explicitly")
    cyc = [free[0]]
    while True:
        nxt_d = by_origin[b.dart_target(cyc[-1])][0]
        if nxt_d == cyc[0]:
            break
        cyc.append(nxt_d)
    if len(cyc) != len(free):
        raise MapError("outer face is disconnected")
    b.add_face(cyc)
