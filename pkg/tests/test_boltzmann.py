import random
from fractions import Fraction
from functools import lru_cache

import pytest
from scipy import stats

from halfplane_perc.boltzmann import (T_WEIGHT, PartitionTable, compute_counts,
                                      enumerate_boltzmann, partition_Z,
                                      percolate, q_of, sample_boltzmann)


def test_partition_values():
    assert partition_Z(2) == Fraction(9, 8)
    assert partition_Z(3) == Fraction(27, 16)
    assert partition_Z(4) == Fraction(729, 128)


def test_loop_equation():
    # Z_2 = 1 + t Z_3 and, for m >= 3, Z_m = t Z_{m+1} + sum Z_{k+1} Z_{m-k}
    t = T_WEIGHT
    assert partition_Z(2) == 1 + t * partition_Z(3)
    for m in range(3, 30):
        s = sum(partition_Z(k + 1) * partition_Z(m - k) for k in range(1, m - 1))
        assert partition_Z(m) == t * partition_Z(m + 1) + s


def test_q_values():
    assert q_of(-1) == Fraction(2, 3)
    assert q_of(1) == Fraction(1, 8)
    assert q_of(2) == Fraction(1, 48)
    assert q_of(3) == Fraction(1, 128)
    assert q_of(0) == 0


def test_q_ratio_closed_form():
    # q_{k+1}/q_k = (2k-1) / (2(k+2))
    for k in range(1, 60):
        assert q_of(k + 1) * 2 * (k + 2) == q_of(k) * (2 * k - 1)


def test_q_normalization():
    # q_{-1} + 2 sum_{k>=1} q_k = 1 and sum_{k>=1} k q_k = 1/3
    # q_k ~ C k^{-5/2}: the mass tail decays like k^{-3/2}, the first-moment
    # tail only like k^{-1/2}, hence the different tolerances
    s = sum(q_of(k) for k in range(1, 400))
    m1 = sum(k * q_of(k) for k in range(1, 400))
    assert abs(float(s) - 1 / 6) < 1e-4
    assert abs(float(q_of(-1) + 2 * s) - 1.0) < 2e-4
    assert abs(float(m1) - 1 / 3) < 0.02


@lru_cache(maxsize=None)
def _count_rec(n, m):
    """Coefficient of t^n in Z_m, straight from the loop equation."""
    if n < 0:
        return 0
    if m == 2:
        return (1 if n == 0 else 0) + _count_rec(n - 1, 3)
    s = _count_rec(n - 1, m + 1)
    for k in range(1, m - 1):
        for a in range(n + 1):
            s += _count_rec(a, k + 1) * _count_rec(n - a, m - k)
    return s


def test_counts_match_loop_equation():
    cc = compute_counts(3, 5)
    for (n, m), v in cc.items():
        assert v == _count_rec(n, m), (n, m)
    # frozen spot checks
    assert cc[(0, 2)] == 1
    assert cc[(2, 3)] == 24
    assert cc[(3, 4)] == 1040
    assert cc[(3, 5)] == 5600


def test_enumerate_distinct():
    seen = set()
    for mp, n in enumerate_boltzmann(3, 2):
        assert 0 <= n <= 2
        code = mp.code()
        assert code not in seen
        seen.add(code)
    assert len(seen) == 1 + 4 + 24


def test_sampler_frequencies():
    rng = random.Random(20260826)
    m = 2
    atoms = {}
    for mp, n in enumerate_boltzmann(m, 2):
        atoms[mp.code()] = float(T_WEIGHT ** n / partition_Z(m))
    N = 20000
    obs = {c: 0 for c in atoms}
    other = 0
    for _ in range(N):
        c = sample_boltzmann(m, rng).code()
        if c in obs:
            obs[c] += 1
        else:
            other += 1
    keys = sorted(atoms)
    f_obs = [obs[c] for c in keys] + [other]
    f_exp = [N * atoms[c] for c in keys] + [N * (1 - sum(atoms.values()))]
    _, p = stats.chisquare(f_obs, f_exp)
    assert p > 1e-3, p


def test_sampler_rejects_bad_perimeter():
    with pytest.raises(ValueError):
        sample_boltzmann(1, random.Random(0))


def test_percolate_boundary_conditions():
    rng = random.Random(3)
    m = sample_boltzmann(4, rng)
    g = percolate(m, 0.5, "O", rng)
    rf_verts = {g.origin[d] for d in g.root_face()}
    assert all(g.colors[v] == "O" for v in rf_verts)
    inner = [g.colors[v] for v in range(g.nvertices) if v not in rf_verts]
    assert set(inner) <= {"O", "C"}
    # sequence boundary condition, applied along the contour
    g2 = percolate(m, 0.5, ["O", "C", "O", "C"], rng)
    assert {g2.colors[v] for v in rf_verts} == {"O", "C"}


def test_percolate_density():
    rng = random.Random(8)
    n_open = n_tot = 0
    for _ in range(300):
        m = sample_boltzmann(3, rng)
        g = percolate(m, 0.3, None, rng)
        rf = {g.origin[d] for d in g.root_face()}
        for v in range(g.nvertices):
            if v not in rf:
                n_tot += 1
                n_open += g.colors[v] == "O"
    assert n_tot > 200
    assert abs(n_open / n_tot - 0.3) < 0.06
