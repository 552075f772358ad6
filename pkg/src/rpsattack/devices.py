"""Round-level behaviour of Alice's device, Bob's malicious device and the
random postselection step.

Symbols used throughout the package:

* announcement flags are booleans, ``True`` for "kept" and ``False`` for
  "discarded";
* a postselected key symbol is ``0``, ``1`` or ``None`` (discarded round).

Every call to :func:`joint_round` consumes exactly four uniforms from the
randomness source, in this order: Alice's outcome, Bob's outcome, Alice's
keep coin, Bob's keep coin. Uniforms that a round does not need (Bob's
outcome in a replay round, keep coins outside key rounds) are still drawn so
that the stream position depends only on the number of rounds played.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Protocol, Tuple

from .quantum_core import (
    ALICE,
    BOB,
    TwoQubitState,
    alice_marginal,
    make_bell_state,
    outcome_distribution,
    standard_observables,
)

KEPT = True
DISCARDED = False

KEY_X = 1
KEY_Y = 3

_OBSERVABLES = standard_observables()


class UniformSource(Protocol):
    def random(self) -> float: ...


def check_keep_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"keep probability must lie in [0, 1], got {p!r}")
    return p


def _check_x(x: int) -> None:
    if x not in (1, 2):
        raise ValueError(f"Alice's input must be 1 or 2, got {x!r}")


def _check_y(y: int) -> None:
    if y not in (1, 2, 3):
        raise ValueError(f"Bob's input must be 1, 2 or 3, got {y!r}")


def _check_bit(name: str, bit: int) -> None:
    if bit not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {bit!r}")


@dataclass(frozen=True)
class BobDeviceState:
    """Counter of key inputs received so far and the stored honest output."""

    counter: int = 0
    memory: Optional[int] = None

    def __post_init__(self):
        if self.counter < 0:
            raise ValueError(f"counter must be non-negative, got {self.counter}")
        if (self.memory is None) != (self.counter == 0):
            raise ValueError(
                f"memory must be present iff counter >= 1 (counter={self.counter}, memory={self.memory})"
            )
        if self.memory is not None:
            _check_bit("memory", self.memory)

    @property
    def replays_next(self) -> bool:
        """Whether the next key input will be answered from memory."""
        return self.counter % 2 == 1


@dataclass(frozen=True)
class AnnouncementPair:
    s: bool
    t: bool


@dataclass(frozen=True)
class RoundRecord:
    x: int
    y: int
    a_raw: int
    b_raw: int
    s: bool
    t: bool
    a_final: Optional[int]
    honest: bool = True

    @property
    def is_key_round(self) -> bool:
        return self.x == KEY_X and self.y == KEY_Y

    def check(self) -> None:
        """Raise ``AssertionError`` if the record violates the round rules."""
        if not self.is_key_round:
            assert self.s and self.t and self.a_final == self.a_raw
        assert self.a_raw == 1 or self.s
        assert self.b_raw == 1 or self.t
        if self.s and self.t:
            assert self.a_final == self.a_raw
        else:
            assert self.a_final is None


def alice_measure(state: TwoQubitState, x: int, rng: UniformSource) -> int:
    """Sample Alice's outcome for input ``x`` from the Born marginal."""
    _check_x(x)
    return 0 if rng.random() < alice_marginal(state, _OBSERVABLES[(ALICE, x)]) else 1


def _bob_honest(state: TwoQubitState, x: int, y: int, alice_raw: int, u: float) -> int:
    dist = outcome_distribution(state, _OBSERVABLES[(ALICE, x)], _OBSERVABLES[(BOB, y)])
    p_a = dist[(alice_raw, 0)] + dist[(alice_raw, 1)]
    if p_a <= 0.0:
        raise ValueError(f"Alice outcome {alice_raw} has zero probability for x={x}")
    return 0 if u < dist[(alice_raw, 0)] / p_a else 1


def bob_device_step(
    devstate: BobDeviceState,
    state: TwoQubitState,
    y: int,
    alice_raw: int,
    rng: UniformSource,
    x: int = KEY_X,
) -> Tuple[int, BobDeviceState]:
    """Advance Bob's device by one round.

    Test inputs (y = 1, 2) are measured honestly, conditioned on Alice's
    outcome ``alice_raw`` for input ``x``, and leave the counter alone. On
    the key input (y = 3) an even counter triggers an honest N3 measurement
    whose result is stored, an odd counter replays the stored result.
    """
    _check_y(y)
    _check_x(x)
    _check_bit("alice_raw", alice_raw)
    u = rng.random()
    if y != KEY_Y:
        return _bob_honest(state, x, y, alice_raw, u), devstate
    if devstate.replays_next:
        if devstate.memory is None:
            raise RuntimeError("replay requested with empty memory")
        return devstate.memory, replace(devstate, counter=devstate.counter + 1)
    b = _bob_honest(state, x, y, alice_raw, u)
    return b, BobDeviceState(counter=devstate.counter + 1, memory=b)


def postselect(
    a_raw: int, b_raw: int, p: float, rng: UniformSource
) -> Tuple[AnnouncementPair, Optional[int]]:
    """Apply the random keep/discard step to a key round.

    A zero is always kept; a one is kept with probability ``p``. Alice's coin
    is drawn before Bob's, and both are always drawn.
    """
    p = check_keep_probability(p)
    _check_bit("a_raw", a_raw)
    _check_bit("b_raw", b_raw)
    u_s, u_t = rng.random(), rng.random()
    s = a_raw == 0 or u_s < p
    t = b_raw == 0 or u_t < p
    return AnnouncementPair(s, t), (a_raw if s and t else None)


def joint_round(
    devstate: BobDeviceState,
    x: int,
    y: int,
    p: float,
    rng: UniformSource,
    p0_override: Optional[float] = None,
) -> Tuple[RoundRecord, BobDeviceState]:
    """Play one protocol round on a fresh Bell pair.

    ``p0_override`` replaces Alice's Born marginal in key rounds by a coin
    with P(0) = p0_override. Bob's honest key output still copies Alice's
    bit since N3 is perfectly correlated with M1 on the Bell pair.
    """
    _check_x(x)
    _check_y(y)
    state = make_bell_state()
    key = x == KEY_X and y == KEY_Y
    if key and p0_override is not None:
        a_raw = 0 if rng.random() < p0_override else 1
    else:
        a_raw = alice_measure(state, x, rng)
    honest = not (y == KEY_Y and devstate.replays_next)
    b_raw, devstate = bob_device_step(devstate, state, y, a_raw, rng, x=x)
    if key:
        ann, a_final = postselect(a_raw, b_raw, p, rng)
    else:
        rng.random()
        rng.random()
        ann, a_final = AnnouncementPair(KEPT, KEPT), a_raw
    return RoundRecord(x, y, a_raw, b_raw, ann.s, ann.t, a_final, honest), devstate
