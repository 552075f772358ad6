"""Born-rule statistics of the honest two-qubit setup.

Outcome convention for every observable: eigenvalue +1 is reported as bit 0,
eigenvalue -1 as bit 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

TOL = 1e-12

ALICE = "alice"
BOB = "bob"

I2 = np.eye(2, dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)

# (a, b, x, y) -> probability, or -> count for empirical tables
CorrelationTable = Dict[Tuple[int, int, int, int], float]


@dataclass(frozen=True)
class TwoQubitState:
    """Pure two-qubit state in the basis order |00>, |01>, |10>, |11>.

    The first tensor factor is Alice's qubit.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = TOL) -> bool:
        return abs(self.norm_squared - 1.0) <= tol


@dataclass(frozen=True)
class BinaryObservable:
    """Hermitian 2x2 observable with eigenvalues +1 and -1."""

    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"observable must be 2x2, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def is_hermitian(self, tol: float = TOL) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0, atol=tol))

    def is_involution(self, tol: float = TOL) -> bool:
        return bool(np.allclose(self.matrix @ self.matrix, I2, rtol=0, atol=tol))

    def projector(self, outcome: int) -> np.ndarray:
        """Projector onto the eigenspace reported as ``outcome``."""
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        sign = 1.0 if outcome == 0 else -1.0
        return (I2 + sign * self.matrix) / 2


def make_bell_state() -> TwoQubitState:
    """Return (|00> + |11>)/sqrt(2)."""
    r = 1 / np.sqrt(2)
    return TwoQubitState(np.array([r, 0, 0, r], dtype=complex))


def standard_observables() -> Dict[Tuple[str, int], BinaryObservable]:
    """Alice's inputs 1, 2 and Bob's inputs 1, 2, 3 mapped to their observables."""
    r = 1 / np.sqrt(2)
    return {
        (ALICE, 1): BinaryObservable(PAULI_Z, "M1=Z"),
        (ALICE, 2): BinaryObservable(PAULI_X, "M2=X"),
        (BOB, 1): BinaryObservable(r * (PAULI_Z + PAULI_X), "N1=(Z+X)/sqrt2"),
        (BOB, 2): BinaryObservable(r * (PAULI_Z - PAULI_X), "N2=(Z-X)/sqrt2"),
        (BOB, 3): BinaryObservable(PAULI_Z, "N3=Z"),
    }


def _check_inputs(state: TwoQubitState, *observables: BinaryObservable) -> None:
    if not state.is_normalized():
        raise ValueError(f"state is not normalized (|psi|^2 = {state.norm_squared!r})")
    for obs in observables:
        if not obs.is_hermitian():
            raise ValueError(f"observable {obs.name or obs.matrix!r} is not Hermitian")
        if not obs.is_involution():
            raise ValueError(f"observable {obs.name or obs.matrix!r} does not square to identity")


def outcome_distribution(
    state: TwoQubitState, obs_a: BinaryObservable, obs_b: BinaryObservable
) -> Dict[Tuple[int, int], float]:
    """Joint outcome probabilities p(a, b) of measuring ``obs_a`` on Alice's
    qubit and ``obs_b`` on Bob's.

    Raises
    ------
    ValueError
        If the state is not normalized or an observable is not a valid
        +/-1 Hermitian observable.
    """
    _check_inputs(state, obs_a, obs_b)
    psi = state.amplitudes
    dist = {}
    for a in (0, 1):
        for b in (0, 1):
            proj = np.kron(obs_a.projector(a), obs_b.projector(b))
            dist[(a, b)] = float(np.vdot(psi, proj @ psi).real)
    return dist


def alice_marginal(state: TwoQubitState, obs_a: BinaryObservable) -> float:
    """Probability that Alice's measurement of ``obs_a`` reports 0."""
    _check_inputs(state, obs_a)
    psi = state.amplitudes
    proj = np.kron(obs_a.projector(0), I2)
    return float(np.vdot(psi, proj @ psi).real)


def honest_correlation_table(state: TwoQubitState | None = None) -> CorrelationTable:
    """Exact p(ab|xy) for every x in {1, 2} and y in {1, 2, 3}."""
    state = make_bell_state() if state is None else state
    obs = standard_observables()
    table: CorrelationTable = {}
    for x in (1, 2):
        for y in (1, 2, 3):
            for (a, b), prob in outcome_distribution(state, obs[(ALICE, x)], obs[(BOB, y)]).items():
                table[(a, b, x, y)] = prob
    return table


def normalize_counts(counts: Mapping[Tuple[int, int, int, int], float]) -> CorrelationTable:
    """Turn per-(x, y) counts into conditional probabilities p(ab|xy).

    Cells whose (x, y) block has zero total are dropped.
    """
    totals: Dict[Tuple[int, int], float] = {}
    for (a, b, x, y), c in counts.items():
        totals[(x, y)] = totals.get((x, y), 0) + c
    return {
        (a, b, x, y): c / totals[(x, y)]
        for (a, b, x, y), c in counts.items()
        if totals[(x, y)] > 0
    }


def correlator(table: Mapping[Tuple[int, int, int, int], float], x: int, y: int) -> float:
    """E_xy = p(a=b|xy) - p(a!=b|xy)."""
    try:
        cells = [table[(a, b, x, y)] for a in (0, 1) for b in (0, 1)]
    except KeyError:
        raise KeyError(f"correlation table is missing cells for (x={x}, y={y})") from None
    p00, p01, p10, p11 = cells
    return (p00 + p11) - (p01 + p10)


def chsh_value(table: Mapping[Tuple[int, int, int, int], float]) -> float:
    """S = E11 + E12 + E21 - E22."""
    return (
        correlator(table, 1, 1)
        + correlator(table, 1, 2)
        + correlator(table, 2, 1)
        - correlator(table, 2, 2)
    )
