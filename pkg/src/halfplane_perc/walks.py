"""Skip-free-upward integer random walks.

Step distributions have support in {..., -2, -1, 0, 1} with exact rational
masses.  The percolation step laws are

    mu0(p):  1 -> 2p/3,  0 -> 2(1-p)/3 + 1/6,  -k -> q_k (k >= 1)
    mu(p) :  mu0(p) conditioned on being nonzero

with q_k from the partition-function table; mu(1/2) is exactly centered.

The infinite negative tail is truncated at a configurable k_max: the residual
tail mass is lumped at -k_max with the lump adjusted (and the table
renormalized) so the mean of the truncated law equals the exact mean of the
full law.  A plain lump would leave an O(k_max^{-1/2}) mean drift that breaks
the first-passage identities the rest of the library relies on; the
adjustment perturbs individual masses by less than the lump itself
(~1e-6 at the default k_max = 4096).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .boltzmann import PartitionTable, q_of

__all__ = [
    "BudgetError",
    "StepDistribution",
    "WalkPath",
    "RenewalTable",
    "finite_step_distribution",
    "mu0",
    "mu",
    "sample_path",
    "first_passage_overshoots",
    "overshoot_law",
    "ladder_height_law",
    "renewal_V",
    "htransform_prefix_prob",
    "prefix_law_htransform",
    "prefix_law_unconditioned",
    "tv_distance",
    "sample_conditioned_tanaka",
    "sample_conditioned_stopped",
    "reversed_excursion_split",
    "ExcursionSplit",
]

KMAX_DEFAULT = 1 << 12


class BudgetError(RuntimeError):
    """A sampler exhausted its step budget."""


@dataclass(frozen=True)
class StepDistribution:
    """Finite-support step law on {-k_max, ..., 0, 1} with exact masses."""

    mass: dict[int, Fraction]
    k_max: Optional[int] = None          # truncation level, None if naturally finite
    lumped_tail: Fraction = Fraction(0)  # true tail mass replaced by the lump

    def __post_init__(self):
        if any(k > 1 for k in self.mass):
            raise ValueError("support must lie in {...,-1,0,1}")
        if sum(self.mass.values()) != 1:
            raise ValueError("masses do not sum to 1")
        if any(m < 0 for m in self.mass.values()):
            raise ValueError("negative mass")

    def nu(self, k: int) -> Fraction:
        return self.mass.get(k, Fraction(0))

    @property
    def mean(self) -> Fraction:
        return sum(k * m for k, m in self.mass.items())

    @property
    def centered(self) -> bool:
        return self.mean == 0

    def tail(self, l: int) -> Fraction:
        """nu({-l, -l-1, ...}) = sum_{k >= l} nu(-k)."""
        return sum(m for k, m in self.mass.items() if -k >= l)

    def support(self) -> list[int]:
        return sorted(k for k, m in self.mass.items() if m > 0)

    # sampling machinery (floats only here)
    def _tables(self):
        ks = self.support()
        cum = np.cumsum([float(self.mass[k]) for k in ks])
        cum[-1] = 1.0
        return np.array(ks), cum

    def sample(self, rng) -> int:
        ks, cum = self._cached_tables()
        return int(ks[bisect.bisect_right(cum, rng.random())])

    def _cached_tables(self):
        t = getattr(self, "_tab", None)
        if t is None:
            t = self._tables()
            object.__setattr__(self, "_tab", t)
        return t

    def serialize(self) -> str:
        return " ".join(f"{k}:{m.numerator}/{m.denominator}"
                        for k, m in sorted(self.mass.items()))


def finite_step_distribution(atoms: dict[int, Fraction]) -> StepDistribution:
    return StepDistribution({k: Fraction(v) for k, v in atoms.items() if v != 0})


def _truncate(atoms: dict[int, Fraction], k_max: int,
              target_mean: Fraction, true_tail: Fraction) -> StepDistribution:
    """Lump all mass below -k_max at -k_max, adjusting the lump so the mean is
    exactly ``target_mean`` after renormalization."""
    kept = {k: v for k, v in atoms.items() if k > -k_max}
    s = sum(kept.values())
    m = sum(k * v for k, v in kept.items())
    x = (m - target_mean * s) / (k_max + target_mean)
    if x < 0:
        raise ValueError("truncation level too small for target mean")
    kept[-k_max] = kept.get(-k_max, Fraction(0)) + x
    total = s + x
    mass = {k: v / total for k, v in kept.items() if v != 0}
    return StepDistribution(mass, k_max=k_max, lumped_tail=true_tail)


def mu0(p, k_max: int = KMAX_DEFAULT,
        table: Optional[PartitionTable] = None) -> StepDistribution:
    """The unreduced percolation step law mu0(p)."""
    p = Fraction(p)
    if not 0 < p < 1:
        raise ValueError("p must be in (0,1)")
    q = (table.q if table else q_of)
    atoms = {1: 2 * p / 3, 0: 2 * (1 - p) / 3 + Fraction(1, 6)}
    for k in range(1, k_max + 1):
        atoms[-k] = q(k)
    kept_tail = sum(q(k) for k in range(1, k_max))
    true_mean = 2 * p / 3 - Fraction(1, 3)
    # the atoms as listed sum to 1 + (sum_{k<=k_max} q_k - 1/6) shy of exact;
    # _truncate re-lumps everything at -k_max with the exact mean restored
    tail_mass = Fraction(1, 6) - kept_tail
    return _truncate(atoms, k_max, true_mean, tail_mass)


def mu(p, k_max: int = KMAX_DEFAULT,
       table: Optional[PartitionTable] = None) -> StepDistribution:
    """mu(p) = mu0(p) conditioned on Z*; centered exactly at p = 1/2."""
    p = Fraction(p)
    if not 0 < p < 1:
        raise ValueError("p must be in (0,1)")
    g = 2 * p / 3 + Fraction(1, 6)
    q = (table.q if table else q_of)
    atoms = {1: (2 * p / 3) / g}
    for k in range(1, k_max + 1):
        atoms[-k] = q(k) / g
    kept_tail = sum(q(k) for k in range(1, k_max)) / g
    true_mean = (2 * p / 3 - Fraction(1, 3)) / g
    tail_mass = Fraction(1, 6) / g - kept_tail
    return _truncate(atoms, k_max, true_mean, tail_mass)


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass
class WalkPath:
    values: list[int]
    start: int = 0
    truncated: bool = False

    @property
    def increments(self) -> list[int]:
        return [b - a for a, b in zip(self.values, self.values[1:])]

    def __len__(self):
        return len(self.values)


def sample_path(d: StepDistribution, start: int, stop, rng,
                budget: int = 10 ** 6) -> WalkPath:
    """Run the walk from ``start`` until the stop rule fires.

    ``stop`` is one of ``("N", n)`` (fixed n steps), ``("T",)`` (first value
    below 0), ``("Tn", n)`` (first value >= n), ``("T-m", m)`` (first value
    <= -m).  Budget exhaustion sets ``truncated`` instead of raising.
    """
    kind = stop[0]
    vals = [start]
    z = start
    for _ in range(budget if kind != "N" else stop[1]):
        if kind == "T" and z < 0:
            return WalkPath(vals, start)
        if kind == "Tn" and z >= stop[1]:
            return WalkPath(vals, start)
        if kind == "T-m" and z <= -stop[1]:
            return WalkPath(vals, start)
        z += d.sample(rng)
        vals.append(z)
    if kind == "N":
        return WalkPath(vals, start)
    if ((kind == "T" and z < 0) or (kind == "Tn" and z >= stop[1])
            or (kind == "T-m" and z <= -stop[1])):
        return WalkPath(vals, start)
    return WalkPath(vals, start, truncated=True)


def first_passage_overshoots(d: StepDistribution, nsamples: int, np_rng,
                             budget: int = 10 ** 6,
                             block: int = 1024):
    """Vectorized sampling of (gap, -Z_T) at the first passage below 0 for
    walks started at 0.  Returns (gaps, depths, n_discarded); walks still
    nonnegative after ``budget`` steps are discarded."""
    ks, cum = d._cached_tables()
    z = np.zeros(nsamples, dtype=np.int64)
    gaps = np.zeros(nsamples, dtype=np.int64)
    depths = np.zeros(nsamples, dtype=np.int64)
    done = np.zeros(nsamples, dtype=bool)
    active = np.arange(nsamples)
    steps = 0
    while active.size and steps < budget:
        nblk = min(block, budget - steps)
        u = np_rng.random((active.size, nblk))
        inc = ks[np.searchsorted(cum, u)]
        traj = z[active, None] + np.cumsum(inc, axis=1)
        neg = traj < 0
        hit = neg.any(axis=1)
        first = np.where(hit, neg.argmax(axis=1), 0)
        hit_idx = active[hit]
        f = first[hit]
        zt = traj[hit, f]
        prev = np.where(f > 0, traj[hit, np.maximum(f - 1, 0)], z[hit_idx])
        gaps[hit_idx] = prev - zt
        depths[hit_idx] = -zt
        done[hit_idx] = True
        keep = ~hit
        z[active[keep]] = traj[keep, -1]
        active = active[keep]
        steps += nblk
    return gaps[done], depths[done], int(active.size)


# ---------------------------------------------------------------------------
# exact laws
# ---------------------------------------------------------------------------

def overshoot_law(d: StepDistribution) -> dict[tuple[int, int], Fraction]:
    """Joint law of (gap, depth) = (Z_{T-1}-Z_T, -Z_T) at first passage below
    0 from 0: P(gap=k, depth=j) = nu(-k)/nu(1) for 1 <= j <= k."""
    if not d.centered:
        raise ValueError("overshoot law requires a centered walk")
    n1 = d.nu(1)
    if n1 == 0:
        raise ValueError("nu(1) = 0")
    out = {}
    for k, m in d.mass.items():
        if k >= 0 or m == 0:
            continue
        for j in range(1, -k + 1):
            out[(-k, j)] = m / n1
    return out


def ladder_height_law(d: StepDistribution) -> dict[int, Fraction]:
    """P(depth = l) = sum_{k >= l} nu(-k)/nu(1), the strict descending ladder
    height law of Z (ascending for -Z)."""
    if not d.centered:
        raise ValueError("ladder law requires a centered walk")
    n1 = d.nu(1)
    if n1 == 0:
        raise ValueError("nu(1) = 0")
    kmax = -min(d.support())
    out = {}
    run = Fraction(0)
    for l in range(kmax, 0, -1):
        run += d.nu(-l)
        out[l] = run / n1
    return {l: v for l, v in sorted(out.items()) if v != 0}


@dataclass(frozen=True)
class RenewalTable:
    V: dict[int, Fraction]

    def __call__(self, x: int) -> Fraction:
        if x < 0:
            raise ValueError("V defined on x >= 0")
        return self.V[x]


def renewal_V(d: StepDistribution, x_max: int) -> RenewalTable:
    """V(x) = sum_k P(H_k <= x) for the ladder height process H, via the
    renewal recursion u(j) = sum_l f(l) u(j-l); V = partial sums of u."""
    f = ladder_height_law(d)
    u = [Fraction(0)] * (x_max + 1)
    u[0] = Fraction(1)
    for j in range(1, x_max + 1):
        u[j] = sum(f.get(l, Fraction(0)) * u[j - l] for l in range(1, j + 1))
    V = {}
    run = Fraction(0)
    for x in range(x_max + 1):
        run += u[x]
        V[x] = run
    return RenewalTable(V)


def htransform_prefix_prob(d: StepDistribution, path: WalkPath,
                           Vtab: Optional[RenewalTable] = None) -> Fraction:
    """Exact probability of the path prefix under the walk conditioned to stay
    nonnegative: V(z_k)/V(x) * prod(nu(increments)), zero if the path dips
    below 0."""
    x = path.values[0]
    if x < 0:
        return Fraction(0)
    if any(v < 0 for v in path.values):
        return Fraction(0)
    if Vtab is None:
        Vtab = renewal_V(d, max(path.values))
    pr = Vtab(path.values[-1]) / Vtab(x)
    for inc in path.increments:
        pr *= d.nu(inc)
    return pr


def prefix_law_htransform(d: StepDistribution, x: int, length: int,
                          support_floor: int = -50) -> dict[tuple, Fraction]:
    """Exact law of (Z_1, ..., Z_length) under the conditioned walk from x,
    by enumeration over the step support (clipped below at support_floor to
    keep enumeration finite; clipped paths are those that die anyway when the
    floor is below -1)."""
    sup = [k for k in d.support() if k >= support_floor]
    Vtab = renewal_V(d, x + length)
    out: dict[tuple, Fraction] = {}

    def rec(prefix, z, pr):
        if len(prefix) == length:
            out[tuple(prefix)] = out.get(tuple(prefix), Fraction(0)) + pr * Vtab(z)
        else:
            for k in sup:
                if z + k >= 0:
                    rec(prefix + [z + k], z + k, pr * d.nu(k))

    rec([], x, Fraction(1) / Vtab(x))
    return out


def prefix_law_unconditioned(d: StepDistribution, x: int,
                             length: int) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = {}

    def rec(prefix, z, pr):
        if len(prefix) == length:
            out[tuple(prefix)] = out.get(tuple(prefix), Fraction(0)) + pr
        else:
            for k in d.support():
                rec(prefix + [z + k], z + k, pr * d.nu(k))

    rec([], x, Fraction(1))
    return out


def tv_distance(a: dict, b: dict) -> Fraction:
    keys = set(a) | set(b)
    return sum(abs(a.get(k, Fraction(0)) - b.get(k, Fraction(0))) for k in keys) / 2


# ---------------------------------------------------------------------------
# conditioned samplers
# ---------------------------------------------------------------------------

def sample_conditioned_tanaka(d: StepDistribution, steps: int, rng,
                              budget: Optional[int] = None) -> WalkPath:
    """The walk conditioned to stay nonnegative, from 0, as the concatenation
    of time-reversed first-passage-upward blocks (with the deterministic
    first step of the raw concatenation removed, so Y_0 = 0)."""
    if not d.centered:
        raise ValueError("Tanaka sampler requires a centered walk")
    if budget is None:
        budget = max(10 ** 6, 200 * steps)
    need = steps + 2  # raw concatenation length before first-step removal
    incs: list[int] = []       # raw Y' increments from completed blocks
    seg: list[int] = []        # increments of the current (unfinished) block
    z = 0
    level = 0
    for _ in range(budget):
        if len(incs) >= need:
            break
        s = d.sample(rng)
        seg.append(s)
        z += s
        if z > level:          # block completed (skip-free: z == level + 1)
            level = z
            incs.extend(reversed(seg))
            seg = []
    if len(incs) < need:
        raise BudgetError("Tanaka block budget exhausted")
    yprime = [0]
    for s in incs[: steps + 1]:
        yprime.append(yprime[-1] + s)
    vals = [v - 1 for v in yprime[1:]]
    return WalkPath(vals, 0)


def sample_conditioned_stopped(d: StepDistribution, n: int, rng,
                               budget: int = 10 ** 6,
                               max_tries: int = 10 ** 5) -> WalkPath:
    """The conditioned walk stopped when it first reaches level n, sampled by
    rejection: run the plain walk, accept iff it reaches n before going
    negative."""
    if n < 1:
        raise ValueError("n >= 1 required")
    for _ in range(max_tries):
        vals = [0]
        z = 0
        for _ in range(budget):
            if z >= n:
                return WalkPath(vals, 0)
            if z < 0:
                break
            z += d.sample(rng)
            vals.append(z)
        else:
            raise BudgetError("stopped-sampler step budget exhausted")
    raise BudgetError("stopped-sampler rejection budget exhausted")


@dataclass
class ExcursionSplit:
    head: list[int]
    excursions: list[list[int]]
    tail: list[int]
    truncated: bool


def reversed_excursion_split(path: WalkPath) -> ExcursionSplit:
    """Split a nonnegative path at R_k = sup{i : Z_i <= k-1} and emit the
    reversed, recentered pieces Z^{(k)}_i = Z_{R_{k+1}-i} - k for k >= 1.

    Each emitted piece starts at 0 and ends at -1 (the law of the reversed
    step walk stopped at its first passage below 0).  ``head`` is the reversed
    segment before R_1 (degenerate: from 0 back to 0).  The segment after the
    last R_{k+1} that falls strictly inside the path is returned reversed in
    ``tail``; the split is flagged truncated when that segment is nontrivial,
    since the path alone cannot certify the final piece is finished.
    """
    vals = path.values
    if vals[0] != 0 or any(v < 0 for v in vals):
        raise ValueError("expected a nonnegative path started at 0")
    n = len(vals) - 1
    maxv = max(vals)
    last_le = [0] * (maxv + 1)  # last index i with vals[i] <= k
    for i, v in enumerate(vals):
        for_k = v  # vals[i] <= k for all k >= v
        if for_k <= maxv:
            last_le[for_k] = i
    for k in range(1, maxv + 1):
        last_le[k] = max(last_le[k], last_le[k - 1])
    r1 = last_le[0]
    head = [vals[r1 - i] for i in range(r1 + 1)]
    excs = []
    prev = r1
    k = 1
    while True:
        rk1 = last_le[min(k, maxv)]
        if rk1 >= n:
            break
        excs.append([vals[rk1 - j] - k for j in range(rk1 - prev + 1)])
        prev = rk1
        k += 1
    tail = [vals[n - j] for j in range(n - prev + 1)]
    return ExcursionSplit(head, excs, tail, truncated=len(tail) > 1)
