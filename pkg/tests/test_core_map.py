import random
from fractions import Fraction

import pytest

from halfplane_perc.core_map import (Dart, MapBuilder, MapError, Necklace,
                                     RootedMap, TreeOfComponentsPair, ball,
                                     build_map, canonical_code, decompose_phi,
                                     glue_necklace, glue_phi_inverse,
                                     local_distance, parse_map, scoop,
                                     serialize_map, vertex_map)
from halfplane_perc.boltzmann import sample_boltzmann
from halfplane_perc.trees_looptrees import PlaneTree

P = PlaneTree.from_key


def triangle():
    return build_map([[0, 1, 2]], root=(0, 1))


def test_triangle_shape():
    m = triangle()
    assert m.nvertices == 3 and m.nedges == 3 and len(m.faces()) == 2
    assert m.is_triangulation_with_boundary()


def test_vertex_map():
    v = vertex_map("O")
    assert v.nvertices == 1 and v.ndarts == 0
    assert v == vertex_map("O")
    assert v != vertex_map("C")


def test_rooted_equality_and_codes():
    m1 = build_map([[0, 1, 2]], root=(0, 1))
    m2 = build_map([[0, 1, 2]], root=(1, 2))
    # a triangle is vertex-transitive: rerooting gives the same rooted map
    assert canonical_code(m1) == canonical_code(m2)
    # breaking the symmetry with colors distinguishes the rootings
    c1 = build_map([[0, 1, 2]], root=(0, 1), colors={0: "O", 1: "C", 2: "C"})
    c2 = build_map([[0, 1, 2]], root=(1, 2), colors={0: "O", 1: "C", 2: "C"})
    assert canonical_code(c1) != canonical_code(c2)


def test_invalid_face_rejected():
    b = MapBuilder()
    u, v, w = b.new_vertex(), b.new_vertex(), b.new_vertex()
    e1 = b.new_edge(u, v)
    e2 = b.new_edge(v, w)
    with pytest.raises(MapError):
        b.add_face([Dart(e1, 0), Dart(e2, 1)])  # not a closed walk


def test_self_loop_rejected():
    b = MapBuilder()
    u = b.new_vertex()
    with pytest.raises(MapError):
        b.new_edge(u, u)


def test_serialize_roundtrip():
    rng = random.Random(3)
    for _ in range(40):
        m = sample_boltzmann(rng.choice([2, 3, 4]), rng)
        m2 = parse_map(serialize_map(m))
        assert m2 == m and m2.colors == m.colors
    v = vertex_map("O")
    assert parse_map(serialize_map(v)) == v


def test_ball_examples():
    m = triangle()
    assert ball(m, 0) == vertex_map()
    # a path of 3 edges rooted at one end: B_2 keeps the first two edges
    p3 = build_map([[0, 1, 2, 3, 2, 1]], root=(0, 1))
    b2 = ball(p3, 2)
    assert b2.nedges == 2 and b2.nvertices == 3


def test_local_distance():
    m = triangle()
    assert local_distance(m, m) == 0
    sq = build_map([[0, 1, 2, 3]], root=(0, 1))
    # radius-0 balls agree (one vertex); radius-1 balls differ
    assert local_distance(m, sq) == Fraction(1, 2)
    star = build_map([[0, 1, 2, 1]], root=(0, 1))
    assert local_distance(m, star) == Fraction(1, 2)


def test_scoop_simple_boundary():
    rng = random.Random(5)
    m = sample_boltzmann(4, rng)
    lt, contour, loops = scoop(m)
    assert len(loops) == 1 and len(contour) == 4
    assert lt.nedges == 4 and len(lt.faces()) == 2


def test_phi_roundtrip_simple():
    rng = random.Random(11)
    for _ in range(60):
        m = sample_boltzmann(rng.choice([2, 2, 3, 4, 5]), rng)
        assert glue_phi_inverse(decompose_phi(m)) == m


def _rand_tree(rng, depth=0):
    kids = []
    nb = rng.choice([0, 1, 1, 2]) if depth < 3 else 0
    if depth == 0 and nb == 0:
        nb = 1
    for _ in range(nb):
        deg = rng.choice([2, 2, 3, 4])
        kids.append(PlaneTree([_rand_tree(rng, depth + 1)
                               for _ in range(deg - 1)]))
    return PlaneTree(kids)


def test_phi_roundtrip_pinched():
    rng = random.Random(23)
    for _ in range(60):
        t = _rand_tree(rng)
        comps = {w: sample_boltzmann(t.subtree(w).k + 1, rng)
                 for w in t.words() if len(w) % 2 == 1}
        m = glue_phi_inverse(TreeOfComponentsPair(tree=t, components=comps))
        pair = decompose_phi(m)
        assert pair.tree == t
        assert pair.components == comps
        assert glue_phi_inverse(pair) == m


def test_necklace_edges():
    n = Necklace((1, 0, 1))
    assert n.size == (2, 1)
    assert n.edges() == [(0, 1), (-1, 1), (-1, 2), (-2, 2)]


def test_glue_necklace_valid():
    rng = random.Random(7)
    for _ in range(20):
        bits = tuple(rng.randint(0, 1) for _ in range(rng.randint(1, 5)))
        x, y = sum(bits), len(bits) - sum(bits)
        m = sample_boltzmann(max(2, x + 1), rng)
        m2 = sample_boltzmann(max(2, y + 1), rng)
        g = glue_necklace(m, m2, Necklace(bits))
        # the strip adds one edge per bit plus the root edge, one triangle per
        # bit, and no vertices
        assert g.nedges == m.nedges + m2.nedges + len(bits) + 1
        assert len(g.faces()) == len(m.faces()) + len(m2.faces()) + len(bits) - 1
        assert g.nvertices == m.nvertices + m2.nvertices
        assert g.nvertices - g.nedges + len(g.faces()) == 2
        pm, pm2 = len(m.root_face()), len(m2.root_face())
        assert len(g.root_face()) == (pm - x) + (pm2 - y) + 2
        assert g.colors[g.origin[g.root]] == m.colors[m.origin[m.root]]


def test_glue_necklace_boundary_exhausted():
    rng = random.Random(9)
    m = sample_boltzmann(2, rng)
    m2 = sample_boltzmann(2, rng)
    with pytest.raises(MapError):
        glue_necklace(m, m2, Necklace((1, 1)))  # x=2 > perimeter-1
