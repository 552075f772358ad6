"""Seeded Monte Carlo run of the protocol against the replay device.

Every protocol round consumes one row of seven uniforms from a PCG64 stream:

    0  round type (test round iff u < test_round_fraction)
    1  Alice's test input (x = 1 iff u < 0.5)
    2  Bob's test input (y = 1 iff u < 0.5)
    3  Alice's outcome
    4  Bob's outcome
    5  Alice's keep coin
    6  Bob's keep coin

Columns 3-6 follow the draw order of :func:`rpsattack.devices.joint_round`,
so :func:`simulate_reference` (a round-by-round loop over the device state
machines) and the vectorized :func:`run_simulation` agree exactly on the same
stream. The run stops after the ``2 * num_pairs``-th key round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from . import quantum_core as qc
from .devices import KEY_X, KEY_Y, BobDeviceState, RoundRecord, joint_round
from .exact_analysis import (
    KeyRoundParams,
    PairKey,
    all_pair_keys,
    conditional_entropy,
    pair_distribution,
)

ROW_WIDTH = 7
CHUNK_ROWS = 1 << 18

# Declared tolerances, valid at REFERENCE_SAMPLES draws and scaled by
# sqrt(REFERENCE_SAMPLES / n) elsewhere.
REFERENCE_SAMPLES = 1_000_000
MIN_SAMPLES = 10_000
TV_TOL = 0.002
ENTROPY_TOL = 0.005
CHSH_TOL = 0.01
P0_TOL = 0.002

_A_INDEX = {0: 0, 1: 1, None: 2}
_A_SYMBOL = (0, 1, None)


def _round_code(a: Optional[int], s: bool, t: bool) -> int:
    return _A_INDEX[a] * 4 + int(s) * 2 + int(t)


def _decode_round(code: int) -> Tuple[Optional[int], bool, bool]:
    return _A_SYMBOL[code // 4], bool(code // 2 % 2), bool(code % 2)


def pair_code(key: PairKey) -> int:
    return _round_code(*key[:3]) * 12 + _round_code(*key[3:])


def decode_pair(code: int) -> PairKey:
    return _decode_round(code // 12) + _decode_round(code % 12)


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    num_pairs: int
    p: float
    p0_override: Optional[float] = None
    test_round_fraction: float = 0.0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.num_pairs < 1:
            raise ValueError(f"num_pairs must be positive, got {self.num_pairs}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.p0_override is not None and not 0.0 <= self.p0_override <= 1.0:
            raise ValueError(f"p0_override must lie in [0, 1], got {self.p0_override}")
        if not 0.0 <= self.test_round_fraction < 1.0:
            raise ValueError(f"test_round_fraction must lie in [0, 1), got {self.test_round_fraction}")

    @property
    def p0(self) -> float:
        """Alice's key-round probability of outputting 0."""
        if self.p0_override is not None:
            return self.p0_override
        return qc.alice_marginal(qc.make_bell_state(), qc.standard_observables()[(qc.ALICE, KEY_X)])

    @property
    def params(self) -> KeyRoundParams:
        return KeyRoundParams(self.p0, self.p)


@dataclass
class EmpiricalPairDistribution:
    counts: Dict[PairKey, int]
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts do not add up to total")

    @classmethod
    def from_codes(cls, code_counts: np.ndarray) -> "EmpiricalPairDistribution":
        counts = {decode_pair(c): int(n) for c, n in enumerate(code_counts) if n}
        return cls(counts, int(code_counts.sum()))

    def probabilities(self) -> Dict[PairKey, float]:
        return {k: c / self.total for k, c in self.counts.items()}

    def __add__(self, other: "EmpiricalPairDistribution") -> "EmpiricalPairDistribution":
        merged = dict(self.counts)
        for k, c in other.counts.items():
            merged[k] = merged.get(k, 0) + c
        return EmpiricalPairDistribution(merged, self.total + other.total)


@dataclass
class SimulationResult:
    pairs: EmpiricalPairDistribution
    test_counts: Dict[Tuple[int, int, int, int], int]
    honest_rounds: int = 0
    honest_mismatches: int = 0
    key_alice_zeros: int = 0
    key_rounds: int = 0
    rounds_played: int = 0

    @property
    def test_rounds(self) -> int:
        return sum(self.test_counts.values())

    @property
    def alice_p0(self) -> float:
        return self.key_alice_zeros / self.key_rounds if self.key_rounds else math.nan

    def chsh(self) -> float:
        cells = {(x, y) for (_, _, x, y), c in self.test_counts.items() if c}
        if not {(1, 1), (1, 2), (2, 1), (2, 2)} <= cells:
            return math.nan
        return qc.chsh_value(qc.normalize_counts(self.test_counts))


def _conditional_tables() -> Tuple[np.ndarray, np.ndarray]:
    """p(a=0|x) indexed [x], and p(b=0|a,x,y) indexed [x, y, a]."""
    state = qc.make_bell_state()
    obs = qc.standard_observables()
    alice0 = np.zeros(3)
    bob0 = np.zeros((3, 4, 2))
    for x in (1, 2):
        alice0[x] = qc.alice_marginal(state, obs[(qc.ALICE, x)])
        for y in (1, 2, 3):
            dist = qc.outcome_distribution(state, obs[(qc.ALICE, x)], obs[(qc.BOB, y)])
            for a in (0, 1):
                bob0[x, y, a] = dist[(a, 0)] / (dist[(a, 0)] + dist[(a, 1)])
    return alice0, bob0


def _round_codes(a: np.ndarray, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    kept = s & t
    a_idx = np.where(kept, a, 2)
    return a_idx * 4 + s.astype(np.int64) * 2 + t.astype(np.int64)


def _chunks(gen: np.random.Generator) -> Iterator[np.ndarray]:
    while True:
        yield gen.random((CHUNK_ROWS, ROW_WIDTH))


def run_simulation(config: SimulationConfig) -> SimulationResult:
    """Play rounds until ``2 * num_pairs`` key rounds have been completed and
    tally honest/replay key-round pairs plus test-round statistics."""
    alice0, bob0 = _conditional_tables()
    p0_key = config.p0
    p, f = config.p, config.test_round_fraction
    gen = np.random.Generator(np.random.PCG64(config.seed))

    needed = 2 * config.num_pairs
    pair_counts = np.zeros(144, dtype=np.int64)
    test_counts = np.zeros((2, 2, 3, 4), dtype=np.int64)
    honest_mismatches = key_zeros = rounds = 0
    pending = np.empty((0, 4))

    for u in _chunks(gen):
        is_test = u[:, 0] < f
        key_pos = np.flatnonzero(~is_test)
        if len(key_pos) >= needed:
            u = u[: key_pos[needed - 1] + 1]
            is_test = is_test[: len(u)]
        rounds += len(u)

        tu = u[is_test]
        if len(tu):
            x = np.where(tu[:, 1] < 0.5, 1, 2)
            y = np.where(tu[:, 2] < 0.5, 1, 2)
            a = (tu[:, 3] >= alice0[x]).astype(np.int64)
            b = (tu[:, 4] >= bob0[x, y, a]).astype(np.int64)
            np.add.at(test_counts, (a, b, x, y), 1)

        ku = u[~is_test][:, 3:7]
        needed -= len(ku)
        ku = np.concatenate([pending, ku])
        if len(ku) % 2:
            ku, pending = ku[:-1], ku[-1:]
        else:
            pending = np.empty((0, 4))

        h, r = ku[0::2], ku[1::2]
        a1 = (h[:, 0] >= p0_key).astype(np.int64)
        b1 = (h[:, 1] >= bob0[KEY_X, KEY_Y, a1]).astype(np.int64)
        honest_mismatches += int(np.count_nonzero(a1 != b1))
        a2 = (r[:, 0] >= p0_key).astype(np.int64)
        b2 = b1
        key_zeros += int(np.count_nonzero(a1 == 0) + np.count_nonzero(a2 == 0))

        c1 = _round_codes(a1, (a1 == 0) | (h[:, 2] < p), (b1 == 0) | (h[:, 3] < p))
        c2 = _round_codes(a2, (a2 == 0) | (r[:, 2] < p), (b2 == 0) | (r[:, 3] < p))
        pair_counts += np.bincount(c2 * 12 + c1, minlength=144)

        if needed == 0:
            break

    tests = {
        (a, b, x, y): int(test_counts[a, b, x, y])
        for a in (0, 1) for b in (0, 1) for x in (1, 2) for y in (1, 2)
    }
    return SimulationResult(
        pairs=EmpiricalPairDistribution.from_codes(pair_counts),
        test_counts=tests,
        honest_rounds=config.num_pairs,
        honest_mismatches=honest_mismatches,
        key_alice_zeros=key_zeros,
        key_rounds=2 * config.num_pairs,
        rounds_played=rounds,
    )


class _StreamSource:
    """Adapter exposing a numpy generator one uniform at a time."""

    def __init__(self, gen: np.random.Generator):
        self._gen = gen

    def random(self) -> float:
        return float(self._gen.random())


def simulate_reference(config: SimulationConfig) -> Tuple[SimulationResult, List[RoundRecord]]:
    """Round-by-round simulation through the device state machines.

    Slow; meant for cross-checking :func:`run_simulation` on small runs.
    Returns the tallies together with every round record.
    """
    gen = np.random.Generator(np.random.PCG64(config.seed))
    src = _StreamSource(gen)
    f, p = config.test_round_fraction, config.p
    p0_override = config.p0_override
    dev = BobDeviceState()
    records: List[RoundRecord] = []
    key_records: List[RoundRecord] = []
    tests = {(a, b, x, y): 0 for a in (0, 1) for b in (0, 1) for x in (1, 2) for y in (1, 2)}
    pair_counts: Dict[PairKey, int] = {}
    while len(key_records) < 2 * config.num_pairs:
        is_test = src.random() < f
        ux, uy = src.random(), src.random()
        if is_test:
            x, y = (1 if ux < 0.5 else 2), (1 if uy < 0.5 else 2)
        else:
            x, y = KEY_X, KEY_Y
        rec, dev = joint_round(dev, x, y, p, src, p0_override=p0_override)
        records.append(rec)
        if is_test:
            tests[(rec.a_raw, rec.b_raw, x, y)] += 1
            continue
        key_records.append(rec)
        if len(key_records) % 2 == 0:
            first, second = key_records[-2], key_records[-1]
            key = (second.a_final, second.s, second.t, first.a_final, first.s, first.t)
            pair_counts[key] = pair_counts.get(key, 0) + 1
    honest = [r for r in key_records if r.honest]
    result = SimulationResult(
        pairs=EmpiricalPairDistribution(pair_counts, config.num_pairs),
        test_counts=tests,
        honest_rounds=len(honest),
        honest_mismatches=sum(r.a_raw != r.b_raw for r in honest),
        key_alice_zeros=sum(r.a_raw == 0 for r in key_records),
        key_rounds=len(key_records),
        rounds_played=len(records),
    )
    return result, records


def empirical_entropy(emp: EmpiricalPairDistribution) -> float:
    """Plug-in estimate of H(A1 A2 | S1 S2 T1 T2) in bits."""
    if emp.total < 1:
        raise ValueError("empty sample")
    return conditional_entropy(emp.probabilities())


@dataclass
class ComparisonReport:
    tv_distance: float
    max_abs_deviation: float
    z_scores: Dict[PairKey, float]
    off_support: Dict[PairKey, int] = field(default_factory=dict)

    @property
    def support_ok(self) -> bool:
        return not self.off_support


def compare_to_exact(emp: EmpiricalPairDistribution, exact: Dict[PairKey, float]) -> ComparisonReport:
    """Total variation distance, worst cell deviation and per-cell z-scores.

    Cells with positive count but zero exact probability are collected in
    ``off_support`` and get an infinite z-score.
    """
    n = emp.total
    tv = 0.0
    worst = 0.0
    z: Dict[PairKey, float] = {}
    off: Dict[PairKey, int] = {}
    for key in all_pair_keys():
        q = exact.get(key, 0.0)
        c = emp.counts.get(key, 0)
        dev = c / n - q
        tv += abs(dev)
        worst = max(worst, abs(dev))
        if q <= 0.0:
            if c > 0:
                off[key] = c
                z[key] = math.inf
            continue
        var = n * q * (1 - q)
        z[key] = (c - n * q) / math.sqrt(var) if var > 0 else (0.0 if c == n * q else math.inf)
    return ComparisonReport(tv / 2, worst, z, off)


def scaled_tolerance(tol: float, n: int) -> Optional[float]:
    """Tolerance at sample size ``n``, or None when the sample is too small."""
    if n < MIN_SAMPLES:
        return None
    return tol * math.sqrt(REFERENCE_SAMPLES / n)


def _flag(deviation: float, tol: Optional[float]) -> str:
    if tol is None:
        return "insufficient sample"
    return "pass" if deviation <= tol else "fail"


def run_report(config: SimulationConfig, result: SimulationResult) -> List[Tuple[str, str]]:
    """Ordered (key, value) summary of a run, including pass/fail flags."""
    exact = pair_distribution(config.params)
    cmp = compare_to_exact(result.pairs, exact)
    h_emp = empirical_entropy(result.pairs)
    h_exact = conditional_entropy(exact)
    chsh = result.chsh()
    chsh_target = 2 * math.sqrt(2)
    n_pairs = result.pairs.total
    n_tests = result.test_rounds

    tv_tol = scaled_tolerance(TV_TOL, n_pairs)
    h_tol = scaled_tolerance(ENTROPY_TOL, n_pairs)
    chsh_tol = scaled_tolerance(CHSH_TOL, n_tests)
    p0_tol = scaled_tolerance(P0_TOL, result.key_rounds)

    def fmt(v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    rows = [
        ("seed", config.seed),
        ("num_pairs", config.num_pairs),
        ("p0", config.p0),
        ("p0_override", config.p0_override),
        ("p", config.p),
        ("test_round_fraction", config.test_round_fraction),
        ("rounds_played", result.rounds_played),
        ("test_rounds", n_tests),
        ("empirical_entropy", h_emp),
        ("exact_entropy", h_exact),
        ("entropy_abs_error", abs(h_emp - h_exact)),
        ("entropy_tolerance", h_tol),
        ("tv_distance", cmp.tv_distance),
        ("tv_tolerance", tv_tol),
        ("max_cell_deviation", cmp.max_abs_deviation),
        ("off_support_pairs", sum(cmp.off_support.values())),
        ("chsh_estimate", chsh),
        ("chsh_tolerance", chsh_tol),
        ("alice_p0_estimate", result.alice_p0),
        ("alice_p0_tolerance", p0_tol),
        ("honest_key_rounds", result.honest_rounds),
        ("honest_mismatches", result.honest_mismatches),
        ("flag_entropy", _flag(abs(h_emp - h_exact), h_tol)),
        ("flag_tv", _flag(cmp.tv_distance, tv_tol)),
        ("flag_chsh", _flag(abs(chsh - chsh_target), chsh_tol) if not math.isnan(chsh) else "insufficient sample"),
        ("flag_alice_p0", _flag(abs(result.alice_p0 - config.p0), p0_tol)),
        ("flag_support", "pass" if cmp.support_ok else "fail"),
        ("flag_honest_correlation", "pass" if result.honest_mismatches == 0 else "fail"),
    ]
    return [(k, fmt(v)) for k, v in rows]


def format_report(rows: List[Tuple[str, str]]) -> str:
    return "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows)
