"""Discretized channel model: bit signals, noise flips, per-slot delays,
received packet counts, and the composition of the two stages.

Signals are plain numpy arrays. A transmitted bit sequence of length
``M*T`` passes through a noise stage (per-slot bit flips) and a delay
stage (per-slot non-negative delays, in micro-intervals); the receiver
sees only the per-slot sum of the delivered bit values. Packets whose
delivery slot falls past the horizon are never observed. A packet whose
value was flipped to zero still arrives, contributing zero to the count;
the receiver cannot tell it apart from no packet at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .rng import substream, DELAY_STREAM, NOISE_STREAM


class ConfigError(ValueError):
    """Channel composition or experiment configuration is inconsistent."""


@dataclass(frozen=True)
class Discretization:
    """Time grid: M micro-intervals per unit of time, T units."""

    M: int
    T: int

    def __post_init__(self):
        if self.M < 1 or self.T < 1:
            raise ValueError(f"need M >= 1 and T >= 1, got M={self.M}, T={self.T}")

    @property
    def slots(self) -> int:
        return self.M * self.T


def as_bits(x, slots: Optional[int] = None) -> np.ndarray:
    """Validate and normalize a 0/1 sequence to a uint8 array."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError("bit signal must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit signal entries must be 0 or 1")
    if slots is not None and arr.size != slots:
        raise ValueError(f"expected length {slots}, got {arr.size}")
    return arr.astype(np.uint8)


def as_delays(d, slots: Optional[int] = None) -> np.ndarray:
    """Validate and normalize a delay sequence to an int64 array."""
    arr = np.asarray(d, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("delay pattern must be one-dimensional")
    if arr.size and arr.min() < 0:
        raise ValueError("delays must be non-negative")
    if slots is not None and arr.size != slots:
        raise ValueError(f"expected length {slots}, got {arr.size}")
    return arr


def apply_noise(x, xi) -> np.ndarray:
    """Per-slot XOR of the signal with the flip pattern."""
    xb = as_bits(x)
    fb = as_bits(xi)
    if xb.size != fb.size:
        raise ValueError(f"length mismatch: signal {xb.size}, flips {fb.size}")
    return np.bitwise_xor(xb, fb)


def apply_delay(z, d) -> np.ndarray:
    """Deliver each slot's packet after its delay; return per-slot counts.

    counts[i] sums the bit values of all packets j with j + d[j] = i.
    Packets delivered past the horizon are dropped.
    """
    zb = as_bits(z)
    db = as_delays(d)
    if zb.size != db.size:
        raise ValueError(f"length mismatch: signal {zb.size}, delays {db.size}")
    n = zb.size
    arrive = np.arange(n, dtype=np.int64) + db
    ones = (zb == 1) & (arrive < n)
    return np.bincount(arrive[ones], minlength=n).astype(np.int64)


def delivered_total(z, d) -> int:
    """Sum of bit values that arrive within the horizon."""
    zb = as_bits(z)
    db = as_delays(d)
    arrive = np.arange(zb.size, dtype=np.int64) + db
    return int(zb[arrive < zb.size].sum())


class CompositionOrder(Enum):
    """Which stage realizes first; the second stage may observe the first."""

    NOISE_THEN_DELAY = "noise_then_delay"
    DELAY_THEN_NOISE = "delay_then_noise"


@dataclass(frozen=True)
class ChannelKind:
    """One of the eight named channels: order plus stage natures."""

    name: str
    order: CompositionOrder
    noise_adversarial: bool
    delay_adversarial: bool


def _mk(name):
    first, second = name.split("|")
    order = (CompositionOrder.NOISE_THEN_DELAY if first[0] == "N"
             else CompositionOrder.DELAY_THEN_NOISE)
    stages = {s[0]: s[1] == "A" for s in (first, second)}
    return ChannelKind(name, order, stages["N"], stages["D"])


#: The eight channel names. "X|Y" means stage X realizes first and stage Y
#: acts with knowledge of X's realization.
CHANNELS = {name: _mk(name) for name in
            ("NP|DP", "DP|NP", "DA|NP", "NA|DP", "DP|NA", "NP|DA", "NA|DA", "DA|NA")}


def parse_channel(name: str) -> ChannelKind:
    key = name.replace("^", "").replace(" ", "").upper()
    if key not in CHANNELS:
        raise ConfigError(f"unknown channel {name!r}; expected one of {sorted(CHANNELS)}")
    return CHANNELS[key]


@dataclass
class TransmitResult:
    """Channel output plus the realized noise/delay, kept for diagnostics.

    The realized (flips, delays) pair is surfaced for event classification
    only; decoders must consume nothing but ``received``.
    """

    received: np.ndarray
    flips: np.ndarray
    delays: np.ndarray
    order: CompositionOrder
    noise_state: object = None
    delay_state: object = None


def transmit(x, noise_source, delay_source, order: CompositionOrder,
             seed) -> TransmitResult:
    """Run one channel use under the declared information flow.

    Sources are duck-typed. A noise source exposes ``needs_delay`` and
    ``flips(bits, rng, delays=None)``; a delay source exposes
    ``delays(bits, rng)``. In delay-first composition an adaptive noise
    source receives the realized delay pattern; in noise-first composition
    the delay source receives the already-noised bits. A noise source that
    needs the delay realization is rejected in noise-first order.
    """
    xb = as_bits(x)
    if order is CompositionOrder.NOISE_THEN_DELAY and getattr(noise_source, "needs_delay", False):
        raise ConfigError("noise source requires the realized delay pattern; "
                          "it can only act in delay-first composition")

    if isinstance(seed, tuple):
        rng_noise, rng_delay = seed
    else:
        rng_noise = substream(seed, NOISE_STREAM)
        rng_delay = substream(seed, DELAY_STREAM)

    if order is CompositionOrder.NOISE_THEN_DELAY:
        xi, noise_state = noise_source.flips(xb, rng_noise)
        z = apply_noise(xb, xi)
        d, delay_state = delay_source.delays(z, rng_delay)
    else:
        d, delay_state = delay_source.delays(xb, rng_delay)
        if getattr(noise_source, "needs_delay", False):
            xi, noise_state = noise_source.flips(xb, rng_noise, delays=d)
        else:
            xi, noise_state = noise_source.flips(xb, rng_noise)
        z = apply_noise(xb, xi)

    y = apply_delay(z, d)
    return TransmitResult(received=y, flips=xi, delays=as_delays(d), order=order,
                          noise_state=noise_state, delay_state=delay_state)


class FixedDelaySource:
    """Deterministic delay stage: a constant delay or an explicit pattern."""

    def __init__(self, value=0):
        self.value = value

    def delays(self, bits, rng):
        n = len(bits)
        if np.isscalar(self.value):
            return np.full(n, int(self.value), dtype=np.int64), None
        return as_delays(self.value, n), None
