import random
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from halfplane_perc.walks import (BudgetError, StepDistribution, WalkPath,
                                  finite_step_distribution,
                                  first_passage_overshoots,
                                  htransform_prefix_prob, ladder_height_law,
                                  mu, mu0, overshoot_law,
                                  prefix_law_htransform,
                                  prefix_law_unconditioned, renewal_V,
                                  reversed_excursion_split,
                                  sample_conditioned_stopped,
                                  sample_conditioned_tanaka, sample_path,
                                  tv_distance)

TOY = finite_step_distribution({1: Fraction(2, 3), -2: Fraction(1, 3)})


def _tanaka_retry(d, steps, rng, budget=10 ** 5, tries=50):
    # block lengths are heavy-tailed (index 1/2); retry on a busted budget
    for _ in range(tries):
        try:
            return sample_conditioned_tanaka(d, steps, rng, budget=budget)
        except BudgetError:
            continue
    raise BudgetError("retries exhausted")


def test_mu_critical_is_centered():
    d = mu(Fraction(1, 2), k_max=64)
    assert d.centered
    # truncation renormalizes, so nu(1) is 2/3 only up to the lumped tail
    # (which scales like k_max^{-3/2})
    err64 = abs(float(d.nu(1)) - 2 / 3)
    err512 = abs(float(mu(Fraction(1, 2), k_max=512).nu(1)) - 2 / 3)
    assert err512 < err64 < 1e-3
    assert sum(d.mass.values()) == 1
    d0 = mu0(Fraction(1, 2), k_max=64)
    assert d0.centered
    assert sum(d0.mass.values()) == 1
    # mu0 keeps the lazy atom at 0; mu removes it
    assert d0.nu(0) > 0 and d.nu(0) == 0


def test_mu_subcritical_mean():
    p = Fraction(1, 3)
    d0 = mu0(p, k_max=64)
    assert d0.mean == 2 * p / 3 - Fraction(1, 3)
    g = 2 * p / 3 + Fraction(1, 6)
    assert mu(p, k_max=64).mean == (2 * p / 3 - Fraction(1, 3)) / g


def test_overshoot_law_toy():
    law = overshoot_law(TOY)
    assert law == {(2, 1): Fraction(1, 2), (2, 2): Fraction(1, 2)}
    assert sum(law.values()) == 1


def test_ladder_and_renewal_toy():
    f = ladder_height_law(TOY)
    assert f == {1: Fraction(1, 2), 2: Fraction(1, 2)}
    V = renewal_V(TOY, 4)
    assert V(0) == 1
    assert V(1) == Fraction(3, 2)
    assert V(2) == Fraction(9, 4)


def test_renewal_harmonic():
    # V is harmonic for the walk killed below 0: V(x) = E[V(x+S); x+S >= 0]
    V = renewal_V(TOY, 8)
    for x in range(2, 7):
        assert V(x) == sum(TOY.nu(k) * V(x + k) for k in TOY.support()
                           if x + k >= 0)


def test_prefix_law_htransform_normalized():
    for x in (0, 1, 3):
        law = prefix_law_htransform(TOY, x, 4)
        assert sum(law.values()) == 1
        assert all(min(pref) >= 0 for pref in law)


def test_htransform_prefix_prob_consistency():
    law = prefix_law_htransform(TOY, 1, 3)
    V = renewal_V(TOY, 10)
    for pref, pr in law.items():
        path = WalkPath([1] + list(pref), 1)
        assert htransform_prefix_prob(TOY, path, V) == pr


def test_conditioning_limit():
    # the h-transform prefix law is the limit of conditioning on staying
    # nonnegative for N more steps; check the TV gap shrinks with N
    # length 3 so the surviving prefix set is nondegenerate: (1,2,3), (1,2,0)
    target = prefix_law_htransform(TOY, 0, 3)
    gaps = []
    for N in (4, 10, 16):
        full = prefix_law_unconditioned(TOY, 0, 3 + N)
        cond: dict[tuple, Fraction] = {}
        for pref, pr in full.items():
            if min(pref) >= 0:
                key = pref[:3]
                cond[key] = cond.get(key, Fraction(0)) + pr
        tot = sum(cond.values())
        cond = {k: v / tot for k, v in cond.items()}
        gaps.append(tv_distance(cond, target))
    assert gaps[0] > gaps[1] > gaps[2]
    assert float(gaps[2]) < 0.02


def test_sample_path_stop_rules():
    rng = random.Random(4)
    p = sample_path(TOY, 0, ("T",), rng)
    assert p.values[-1] < 0 and all(v >= 0 for v in p.values[:-1])
    p = sample_path(TOY, 0, ("N", 50), rng)
    assert len(p.values) == 51
    p = sample_path(TOY, 0, ("Tn", 5), rng, budget=10 ** 5)
    assert not p.truncated and p.values[-1] >= 5
    p = sample_path(TOY, 0, ("T-m", 3), rng)
    assert p.values[-1] <= -3


def test_first_passage_overshoots_match_exact_law():
    g = np.random.default_rng(12)
    gaps, depths, disc = first_passage_overshoots(TOY, 8000, g, budget=10 ** 5)
    n = len(gaps)
    assert n + disc == 8000 and disc < 200
    law = overshoot_law(TOY)
    obs = {}
    for a, b in zip(gaps, depths):
        obs[(int(a), int(b))] = obs.get((int(a), int(b)), 0) + 1
    assert set(obs) <= set(law)
    f_obs = [obs.get(k, 0) for k in sorted(law)]
    f_exp = [n * float(law[k]) for k in sorted(law)]
    _, p = stats.chisquare(f_obs, f_exp)
    assert p > 1e-3


def test_tanaka_matches_htransform():
    rng = random.Random(99)
    L = 4
    target = prefix_law_htransform(TOY, 0, L)
    N = 6000
    obs: dict[tuple, int] = {}
    for _ in range(N):
        w = _tanaka_retry(TOY, L + 1, rng)
        assert w.values[0] == 0 and min(w.values) >= 0
        key = tuple(w.values[1:L + 1])
        obs[key] = obs.get(key, 0) + 1
    # the conditioned support is small and fully enumerated by the exact law
    assert set(obs) <= set(target)
    keys = sorted(target)
    f_obs = [obs.get(k, 0) for k in keys]
    f_exp = [N * float(target[k]) for k in keys]
    _, p = stats.chisquare(f_obs, f_exp)
    assert p > 1e-3, p


def test_conditioned_stopped():
    rng = random.Random(17)
    for _ in range(40):
        w = sample_conditioned_stopped(TOY, 4, rng)
        assert w.values[0] == 0
        assert w.values[-1] >= 4
        assert all(v >= 0 for v in w.values)
        assert all(v < 4 for v in w.values[:-1])


def test_reversed_excursion_split_contract():
    rng = random.Random(31)
    for _ in range(30):
        w = _tanaka_retry(TOY, 60, rng)
        vals = w.values
        sp = reversed_excursion_split(w)
        n = len(vals) - 1
        # R_k = last index with value <= k-1
        def R(k):
            return max(i for i, v in enumerate(vals) if v <= k - 1)
        assert sp.head == [vals[R(1) - i] for i in range(R(1) + 1)]
        prev = R(1)
        for k, piece in enumerate(sp.excursions, start=1):
            rk1 = R(k + 1)
            assert piece == [vals[rk1 - j] - k for j in range(rk1 - prev + 1)]
            assert piece[0] == 0 and piece[-1] == -1
            assert min(piece[:-1]) >= 0
            prev = rk1
        assert sp.tail == [vals[n - j] for j in range(n - prev + 1)]
        assert sp.truncated == (len(sp.tail) > 1)


def test_tanaka_rejects_uncentered():
    bad = finite_step_distribution({1: Fraction(1, 2), -1: Fraction(1, 4),
                                    0: Fraction(1, 4)})
    with pytest.raises(ValueError):
        sample_conditioned_tanaka(bad, 5, random.Random(0))
