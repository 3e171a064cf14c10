import random

import pytest

from halfplane_perc.core_map import MapError, vertex_map
from halfplane_perc.trees_looptrees import (LazyLooptree, PlaneTree,
                                            forest_from_stopped_walk,
                                            fill_looptree, loop_of,
                                            looptree_from_excursion,
                                            looptree_from_walk,
                                            quotient_classes, tree_of,
                                            two_sided_looptree)

P = PlaneTree.from_key


def all_trees(n):
    """All plane trees with exactly n vertices."""
    if n == 1:
        return [PlaneTree()]
    out = []

    def forests(budget):
        if budget == 0:
            yield []
            return
        for first in range(1, budget + 1):
            for t in all_trees(first):
                for rest in forests(budget - first):
                    yield [t] + rest

    for f in forests(n - 1):
        out.append(PlaneTree(f))
    return out


def is_valid_bicolored(t, depth=0):
    # odd-depth (black) vertices must have at least one child: a loop has
    # perimeter >= 2, never a self-loop
    if depth % 2 == 1 and t.k == 0:
        return False
    return all(is_valid_bicolored(c, depth + 1) for c in t.children)


def test_plane_tree_basics():
    t = P((((), ((),)), ()))
    assert t.k == 2
    assert t.size == 5
    assert set(t.words()) == {(), (0,), (0, 0), (0, 1), (1,)}
    assert t.subtree((0,)) == P(((), ((),)))
    assert t.height() == 2
    assert PlaneTree.from_key(t._key) == t


def test_loop_tree_roundtrip_exhaustive():
    n_valid = 0
    for n in range(1, 8):
        for t in all_trees(n):
            if not is_valid_bicolored(t):
                with pytest.raises(MapError):
                    loop_of(t)
                continue
            n_valid += 1
            lt = loop_of(t)
            if t.size == 1:
                assert lt == vertex_map()
                continue
            assert tree_of(lt) == t
    assert n_valid == 27


def rand_excursion(rng, maxlen=80):
    vals = [0]
    z = 0
    while True:
        if len(vals) >= maxlen and z > 0:
            vals.append(0)  # close with one final negative jump
            return vals
        if z == 0:
            if len(vals) > 1 and rng.random() < 0.35:
                return vals
            z += 1
        elif rng.random() < 0.45:
            z -= rng.randint(1, z)
        else:
            z += 1
        vals.append(z)


def test_excursion_codec_matches_loop_of():
    rng = random.Random(77)
    for _ in range(120):
        C = rand_excursion(rng)
        lt, t = looptree_from_excursion(C)
        assert lt == loop_of(t)
        if t.size > 1:
            assert tree_of(lt) == t


def test_excursion_codec_trivial_and_errors():
    lt, t = looptree_from_excursion([0])
    assert lt == vertex_map() and t == PlaneTree()
    with pytest.raises(ValueError):
        looptree_from_excursion([0, 1, 0, 0])  # zero step
    with pytest.raises(ValueError):
        looptree_from_excursion([0, 2, 0])  # +2 step
    with pytest.raises(ValueError):
        looptree_from_excursion([0, 1, -1, 0])  # dips below 0


def test_forest_from_stopped_walk():
    rng = random.Random(5)
    # deterministic palindrome: one bigon per level
    forest = forest_from_stopped_walk([1, 2, 3, 4, 3, 2, 1, 0, -1])
    assert len(forest) == 2
    for _ in range(40):
        x = rng.randint(0, 4)
        vals, z = [x], x
        while z > -1:
            if rng.random() < 0.45:
                z += rng.randint(1, 3)
            else:
                z -= 1
            vals.append(z)
        forest = forest_from_stopped_walk(vals)
        assert len(forest) == x + 1
        for lt, t in forest:
            assert lt == loop_of(t)
    with pytest.raises(ValueError):
        forest_from_stopped_walk([1, -1])  # -2 step
    with pytest.raises(ValueError):
        forest_from_stopped_walk([1, 0, 0, -1])  # zero step


def rand_walk(rng, length):
    vals = [0]
    z = 0
    for _ in range(length):
        if rng.random() < 0.5:
            z += 1
        else:
            z -= rng.randint(1, 3)
        vals.append(z)
    return vals


def test_one_sided_codec_structure():
    rng = random.Random(13)
    n_done = 0
    for _ in range(60):
        C = rand_walk(rng, 120)
        depth = min(3, -min(C) - 1)
        if depth < 1:
            continue
        n_done += 1
        lazy = looptree_from_walk(C, depth)
        assert isinstance(lazy, LazyLooptree)
        assert len(lazy.spine_vertices) == depth + 1
        assert lazy.tau[0] == 0
        assert all(a < b for a, b in zip(lazy.tau, lazy.tau[1:]))
        m = lazy.map
        V = m.nvertices
        E = m.nedges
        F = len(m.faces())
        assert V - E + F == 2
        # index 0 is the walk origin = spine class 0
        assert lazy.index_vertex[0] == lazy.spine_vertices[0]
        # spine vertices are the positions of C at the passage times tau_k
        for k in range(1, depth + 1):
            assert lazy.index_vertex[lazy.tau[k]] == lazy.spine_vertices[k]
    assert n_done >= 30


def rand_nonneg_walk(rng, need_level, maxlen=300):
    vals = [0]
    z = 0
    while len(vals) < maxlen:
        if z > 0 and rng.random() < 0.42:
            z -= rng.randint(1, z)
        else:
            z += 1
        vals.append(z)
        if z > need_level + 3 and rng.random() < 0.15:
            break
    return vals


def test_two_sided_matches_quotient_oracle():
    rng = random.Random(2024)
    n_done = 0
    for _ in range(80):
        C = rand_walk(rng, 60)
        depth = min(3, -min(C) - 1)
        if depth < 1:
            continue
        C2 = rand_nonneg_walk(rng, depth)
        if max(C2) < depth:
            continue
        try:
            lazy = two_sided_looptree(C, C2, depth)
        except ValueError:
            continue
        n_done += 1
        lo = min(lazy.index_vertex)
        hi = max(lazy.index_vertex)
        by_vertex = {}
        for i, v in lazy.index_vertex.items():
            by_vertex.setdefault(v, set()).add(i)
        constructed = {frozenset(s) for s in by_vertex.values()}
        oracle = set(quotient_classes(C, C2, lo, hi))
        assert constructed == oracle
    assert n_done >= 40


def test_loop_of_bigon():
    # a single black vertex with one white child: a loop of perimeter 2
    t = P((((),),))
    lt = loop_of(t)
    assert lt.nedges == 2 and lt.nvertices == 2 and len(lt.faces()) == 2
