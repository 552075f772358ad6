"""Closed-form statistics of the counter/replay attack on one pair of key rounds.

A round-pair consists of an honest key round (Bob's counter even) followed by
a replay key round. Distributions are plain dicts keyed by tuples:

* first round: ``(a1, s1, t1)``;
* second round given the first: ``(a2, s2, t2)``;
* round pair: ``(a2, s2, t2, a1, s1, t1)``.

``a`` is ``0``, ``1`` or ``None`` (discarded), flags are ``True`` when the
party keeps the round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .devices import DISCARDED, KEPT, check_keep_probability

NORMALIZATION_TOL = 1e-9

BRANCH_ZERO = "0"
BRANCH_ONE_OR_DISCARDED = "1-or-discarded"

RoundKey = Tuple[Optional[int], bool, bool]
PairKey = Tuple[Optional[int], bool, bool, Optional[int], bool, bool]

A_ALPHABET = (0, 1, None)
FLAG_ALPHABET = (KEPT, DISCARDED)


@dataclass(frozen=True)
class KeyRoundParams:
    """Alice's key-round bias ``p0`` and the keep probability ``p``."""

    p0: float
    p: float

    def __post_init__(self):
        p0 = float(self.p0)
        if not 0.0 <= p0 <= 1.0:
            raise ValueError(f"p0 must lie in [0, 1], got {self.p0!r}")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p", check_keep_probability(self.p))

    @property
    def p1(self) -> float:
        return 1.0 - self.p0


@dataclass(frozen=True)
class SweepPoint:
    p: float
    entropy_per_round: float


@dataclass(frozen=True)
class IidCurve:
    """Externally computed collective-attack entropy, sampled along p."""

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(p), float(e)) for p, e in self.points)
        if len(pts) < 2:
            raise ValueError("a curve needs at least two points")
        for (p_prev, _), (p_next, _) in zip(pts, pts[1:]):
            if not p_next > p_prev:
                raise ValueError(f"p column must be strictly increasing ({p_prev} then {p_next})")
        for p, e in pts:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p value {p} outside [0, 1]")
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"entropy value {e} outside [0, 1]")
        object.__setattr__(self, "points", pts)

    @property
    def p(self) -> np.ndarray:
        return np.array([p for p, _ in self.points])

    @property
    def ent(self) -> np.ndarray:
        return np.array([e for _, e in self.points])


def all_round_keys() -> List[RoundKey]:
    return [(a, s, t) for a in A_ALPHABET for s in FLAG_ALPHABET for t in FLAG_ALPHABET]


def all_pair_keys() -> List[PairKey]:
    return [k2 + k1 for k1 in all_round_keys() for k2 in all_round_keys()]


def first_round_distribution(params: KeyRoundParams) -> Dict[RoundKey, float]:
    """Non-zero cells of the honest key round after postselection."""
    p0, p1, p = params.p0, params.p1, params.p
    return {
        (0, KEPT, KEPT): p0,
        (1, KEPT, KEPT): p1 * p**2,
        (None, KEPT, DISCARDED): p1 * p * (1 - p),
        (None, DISCARDED, KEPT): p1 * (1 - p) * p,
        (None, DISCARDED, DISCARDED): p1 * (1 - p) ** 2,
    }


def second_round_conditional(params: KeyRoundParams, a1_branch: str) -> Dict[RoundKey, float]:
    """Replay-round distribution given the first-round symbol.

    ``a1_branch`` is :data:`BRANCH_ZERO` when the honest round produced a
    kept 0, and :data:`BRANCH_ONE_OR_DISCARDED` otherwise; in the latter case
    the honest raw outcome was 1, so Bob replays a 1.
    """
    p0, p1, p = params.p0, params.p1, params.p
    if a1_branch == BRANCH_ZERO:
        return {
            (0, KEPT, KEPT): p0,
            (1, KEPT, KEPT): p1 * p,
            (None, DISCARDED, KEPT): p1 * (1 - p),
        }
    if a1_branch == BRANCH_ONE_OR_DISCARDED:
        return {
            (0, KEPT, KEPT): p0 * p,
            (1, KEPT, KEPT): p1 * p**2,
            (None, DISCARDED, KEPT): p1 * (1 - p) * p,
            (None, KEPT, DISCARDED): (p0 + p1 * p) * (1 - p),
            (None, DISCARDED, DISCARDED): p1 * (1 - p) ** 2,
        }
    raise ValueError(f"unknown branch {a1_branch!r}")


def branch_of(a1: Optional[int]) -> str:
    return BRANCH_ZERO if a1 == 0 else BRANCH_ONE_OR_DISCARDED


def pair_distribution(params: KeyRoundParams) -> Dict[PairKey, float]:
    """Joint law of an honest round followed by its replay round.

    The replay round depends on the first round only through ``a1``, since
    neither device sees the keep/discard decisions.
    """
    second = {
        BRANCH_ZERO: second_round_conditional(params, BRANCH_ZERO),
        BRANCH_ONE_OR_DISCARDED: second_round_conditional(params, BRANCH_ONE_OR_DISCARDED),
    }
    dist: Dict[PairKey, float] = {}
    for k1, w1 in first_round_distribution(params).items():
        for k2, w2 in second[branch_of(k1[0])].items():
            dist[k2 + k1] = w2 * w1
    return dist


def marginal_first_round(dist: Mapping[PairKey, float]) -> Dict[RoundKey, float]:
    out: Dict[RoundKey, float] = {}
    for key, w in dist.items():
        out[key[3:]] = out.get(key[3:], 0.0) + w
    return out


def _xlogx_entropy(weights: Iterable[float]) -> float:
    ws = [w for w in weights if w > 0.0]
    total = sum(ws)
    if total <= 0.0:
        return 0.0
    return -sum(w / total * math.log2(w / total) for w in ws)


def conditional_entropy(dist: Mapping[PairKey, float], check_normalized: bool = True) -> float:
    """H(A1 A2 | S1 S2 T1 T2) in bits.

    Announcement cells with zero probability contribute nothing.
    """
    total = math.fsum(dist.values())
    if check_normalized and abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"distribution is not normalized (sum = {total!r})")
    if any(w < 0 for w in dist.values()):
        raise ValueError("distribution has negative entries")
    by_announcement: Dict[Tuple[bool, bool, bool, bool], List[float]] = {}
    for (a2, s2, t2, a1, s1, t1), w in dist.items():
        by_announcement.setdefault((s1, t1, s2, t2), []).append(w)
    h = 0.0
    for ws in by_announcement.values():
        weight = math.fsum(ws)
        if weight > 0.0:
            h += weight / total * _xlogx_entropy(ws)
    return h


def attack_rate(params: KeyRoundParams) -> float:
    """Attacker's conditional entropy per key round, in bits."""
    return conditional_entropy(pair_distribution(params)) / 2


def sweep(p0: float, p_grid: Sequence[float]) -> List[SweepPoint]:
    grid = [check_keep_probability(p) for p in p_grid]
    return [SweepPoint(p, attack_rate(KeyRoundParams(p0, p))) for p in grid]


def uniform_grid(p_min: float, p_max: float, steps: int) -> List[float]:
    if steps < 2:
        raise ValueError(f"steps must be at least 2, got {steps}")
    if not p_min < p_max:
        raise ValueError(f"need p_min < p_max, got {p_min} and {p_max}")
    return [float(v) for v in np.linspace(p_min, p_max, steps)]


def _as_columns(curve) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(curve, IidCurve):
        return curve.p, curve.ent
    pts = list(curve)
    if pts and isinstance(pts[0], SweepPoint):
        p = np.array([pt.p for pt in pts], dtype=float)
        e = np.array([pt.entropy_per_round for pt in pts], dtype=float)
    else:
        arr = np.asarray(pts, dtype=float).reshape(-1, 2)
        p, e = arr[:, 0], arr[:, 1]
    if len(p) < 2:
        raise ValueError("a curve needs at least two points")
    if np.any(np.diff(p) <= 0):
        raise ValueError("p column must be strictly increasing")
    return p, e


def _gap_on_common_grid(attack, iid, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    pa, ea = _as_columns(attack)
    pi, ei = _as_columns(iid)
    lo, hi = max(pa[0], pi[0]), min(pa[-1], pi[-1])
    if not lo < hi:
        raise ValueError(f"curves do not overlap (common range [{lo}, {hi}])")
    # Both curves are linear between their own nodes, so the gap is linear
    # between consecutive points of the merged grid.
    native = np.concatenate([pa, pi])
    grid = np.union1d(np.linspace(lo, hi, resolution), native[(native >= lo) & (native <= hi)])
    gap = np.interp(grid, pi, ei) - np.interp(grid, pa, ea)
    return grid, gap


def _zero_between(g0: float, g1: float, d0: float, d1: float) -> float:
    if d0 == d1:
        return g0
    return g0 + (g1 - g0) * (-d0) / (d1 - d0)


def crossover_region(attack, iid, resolution: int = 201) -> List[Tuple[float, float]]:
    """Maximal p-intervals where the iid entropy strictly exceeds the attack's.

    Both curves are linearly interpolated; the result is clipped to their
    common p-range.
    """
    grid, gap = _gap_on_common_grid(attack, iid, resolution)
    positive = gap > 0
    intervals = []
    i, n = 0, len(grid)
    while i < n:
        if not positive[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and positive[j + 1]:
            j += 1
        left = grid[0] if i == 0 else _zero_between(grid[i - 1], grid[i], gap[i - 1], gap[i])
        right = grid[-1] if j == n - 1 else _zero_between(grid[j], grid[j + 1], gap[j], gap[j + 1])
        intervals.append((float(left), float(right)))
        i = j + 1
    return intervals


def max_gap(attack, iid, resolution: int = 201) -> Tuple[float, float]:
    """Largest value of (iid - attack) on the common range, and where it occurs."""
    grid, gap = _gap_on_common_grid(attack, iid, resolution)
    k = int(np.argmax(gap))
    return float(gap[k]), float(grid[k])
