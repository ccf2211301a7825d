"""Samplers for the probabilistic channel stages, plus queue statistics.

The stochastic noise stage flips each slot independently with probability
epsilon. The stochastic delay stage delays each packet by an independent
geometric number of micro-intervals with per-step departure probability
1/M, the discrete analogue of an exponential delay of mean one unit of
time. Two supports are offered: FROM_ONE (delays in {1, 2, ...}, mean M)
and FROM_ZERO (delays in {0, 1, ...}, mean M - 1). FROM_ONE matches the
departure-probability formula below exactly and is the default
everywhere; every result file records which convention was used.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .channel import Discretization, as_delays
from .rng import as_generator


def as_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, or string like '1/4' or '0.2'.

    Floats are read through their shortest decimal repr, so 0.2 becomes
    exactly 1/5. Pass awkward rationals ('1/3') as strings.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (str, int)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    raise TypeError(f"cannot interpret {value!r} as a rational")


class DelayConvention(Enum):
    FROM_ONE = "from_one"
    FROM_ZERO = "from_zero"


@dataclass(frozen=True)
class NoiseModel:
    """I.i.d. Bernoulli(epsilon) flips."""

    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if not 0 <= self.epsilon <= Fraction(1, 2):
            raise ValueError(f"epsilon must lie in [0, 1/2], got {self.epsilon}")

    @property
    def p(self) -> float:
        return float(self.epsilon)


@dataclass(frozen=True)
class DelayModel:
    """Memoryless geometric delays with departure probability 1/M per step."""

    M: int
    convention: DelayConvention = DelayConvention.FROM_ONE

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        if isinstance(self.convention, str):
            object.__setattr__(self, "convention", DelayConvention(self.convention))

    def survival(self, d: int) -> float:
        """P[delay > d]."""
        q = 1.0 - 1.0 / self.M
        if self.convention is DelayConvention.FROM_ONE:
            return q ** d if d >= 1 else 1.0
        return q ** (d + 1) if d >= 0 else 1.0


def sample_noise(model: NoiseModel, slots: int, seed) -> np.ndarray:
    """I.i.d. Bernoulli(epsilon) flip pattern; deterministic given seed."""
    if slots < 1:
        raise ValueError("slots must be >= 1")
    rng = as_generator(seed)
    return (rng.random(slots) < model.p).astype(np.uint8)


def sample_delay(model: DelayModel, slots: int, seed) -> np.ndarray:
    """I.i.d. geometric delays under the model's convention."""
    if slots < 1:
        raise ValueError("slots must be >= 1")
    rng = as_generator(seed)
    d = rng.geometric(1.0 / model.M, size=slots).astype(np.int64)
    if model.convention is DelayConvention.FROM_ZERO:
        d -= 1
    return d


class DepartureBounds(NamedTuple):
    lower: float
    upper: float
    exact: float


def departure_probability_bounds(M: int, ell1: int, ell2: int) -> DepartureBounds:
    """Probability that a queued packet departs in a window of width ell2
    starting ell1 steps from now, with first-order bounds.

    exact = (1 - 1/M)^ell1 * (1 - (1 - 1/M)^ell2). The sandwich
    lower <= exact <= upper is guaranteed for ell1, ell2 <= M and is
    asserted there; outside that regime only `exact` is meaningful.
    """
    if M < 1:
        raise ValueError("M must be a positive integer")
    if ell1 < 0 or ell2 < 0:
        raise ValueError("window offsets must be non-negative")
    q = 1.0 - 1.0 / M
    exact = q ** ell1 * (1.0 - q ** ell2)
    lower = (1.0 - ell1 / M) * (ell2 / M - ell2 ** 2 / M ** 2)
    upper = (1.0 - ell1 / M + ell1 ** 2 / M ** 2) * (ell2 / M)
    if ell1 <= M and ell2 <= M:
        assert lower <= exact + 1e-15 and exact <= upper + 1e-15, \
            (M, ell1, ell2, lower, exact, upper)
    return DepartureBounds(lower, upper, exact)


@dataclass
class QueueTrace:
    """Queue occupancy per micro-interval and the total waiting time.

    occupancy[t] counts packets that have arrived by slot t and depart
    strictly later; total_wait sums all delays in full, including those
    whose delivery falls past the horizon (occupancy is only reported up
    to the horizon).
    """

    occupancy: np.ndarray
    total_wait: int
    disc: Discretization


def queue_trace(d, disc: Discretization) -> QueueTrace:
    """Arrival/departure bookkeeping for one packet per slot."""
    db = as_delays(d, disc.slots)
    n = disc.slots
    depart = np.arange(n, dtype=np.int64) + db
    inside = depart < n
    departures = np.bincount(depart[inside], minlength=n)
    occupancy = np.arange(1, n + 1, dtype=np.int64) - np.cumsum(departures)
    return QueueTrace(occupancy=occupancy, total_wait=int(db.sum()), disc=disc)


def heavy_interval_fraction(trace: QueueTrace, c: float, block_length: int) -> float:
    """Fraction of block starts at which the queue holds more than c*M packets.

    The occupancy entering a block is taken just before its first arrival.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if block_length < 1:
        raise ValueError("block_length must be >= 1")
    n = trace.occupancy.size
    starts = np.arange(0, n, block_length)
    entering = np.where(starts > 0, trace.occupancy[starts - 1], 0)
    return float(np.mean(entering > c * trace.disc.M))
