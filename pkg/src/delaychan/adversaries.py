"""Capacity-limiting adversaries and stress adversaries for codec tests.

Two constructions do the heavy lifting:

* ``delay_aware_noise`` is a budgeted noise adversary for the delay-first
  channel. It partitions time into intervals of length L = eps*M/5,
  zeroes every packet that departs within its own arrival interval, and
  flips the minimum number of surviving packets so that each interval
  carries a quantized number of ones. Conditioned on those quantized
  weights (and on the flip budget holding out), the distribution the
  receiver sees no longer depends on where the ones sat inside each
  interval, which is what collapses the channel's capacity.

* ``batch_release_delay`` is a deterministic delay adversary acting on
  the raw input bits. It buffers each half-unit interval's packets and
  releases, at the interval's end, counts (n0, n1) rounded down so the
  expected received sum eps*n0 + (1-eps)*n1 lands within 1/2 of a
  multiple of M/c (c = 4/eps). No packet is delayed more than M
  micro-intervals and no interval releases more than 3M/4 packets.

Both respect exact integral parameter constraints; configurations that
break them are rejected rather than silently rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .channel import ConfigError, as_bits, as_delays
from .stochastic import as_fraction


# ---------------------------------------------------------------------------
# Noise adversary for the delay-first channel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseAdversaryParams:
    epsilon: Fraction
    M: int
    T: int
    interval_len: int      # L = eps*M/5
    quantum: int           # integer rounding step for interval one-counts
    n_intervals: int
    budget: int            # eps*M*T flips in total

    @property
    def epsilon_prime(self) -> Fraction:
        return self.epsilon / 5


def noise_adversary_params(epsilon, M: int, T: int) -> NoiseAdversaryParams:
    """Validate the integral-parameter requirements and derive constants.

    L = eps*M/5 and the total budget eps*M*T must be integers. The
    rounding step eps*L/5 is used as-is when it is an integer larger than
    one; when it is at most one, every integer weight is already a
    multiple, so the step collapses to one (the interval weight count is
    then at most L+1 <= 1/eps' + 1 automatically). A fractional step
    larger than one has no integer-count reading and is rejected.
    """
    eps = as_fraction(epsilon)
    problems = []
    if not 0 < eps <= Fraction(1, 2):
        problems.append(f"epsilon must lie in (0, 1/2], got {eps}")
    L = eps * M / 5
    if L.denominator != 1 or L < 1:
        problems.append(f"interval length eps*M/5 = {L} is not a positive integer")
    budget = eps * M * T
    if budget.denominator != 1:
        problems.append(f"flip budget eps*M*T = {budget} is not an integer")
    if not problems:
        L = int(L)
        if (M * T) % L:
            problems.append(f"horizon M*T = {M*T} is not a multiple of L = {L}")
    if not problems:
        q = eps * L / 5
        if q <= 1:
            quantum = 1
        elif q.denominator == 1:
            quantum = int(q)
        else:
            problems.append(f"rounding step eps'*L = {q} exceeds 1 but is not an integer")
    if problems:
        raise ConfigError("; ".join(problems))
    return NoiseAdversaryParams(epsilon=eps, M=M, T=T, interval_len=L,
                                quantum=quantum, n_intervals=(M * T) // L,
                                budget=int(budget))


@dataclass
class NoiseAdversaryState:
    """Per-interval bookkeeping of the delay-aware noise adversary."""

    params: NoiseAdversaryParams
    n: np.ndarray                 # arrival weight per interval
    n_tilde: np.ndarray           # weight rounded down to a multiple of quantum
    y: np.ndarray                 # same-interval departures per interval
    n_hat: np.ndarray             # min(n_tilde, L - y)
    same_interval: np.ndarray     # mask over slots: departs in arrival interval
    flips_used: int
    budget_exceeded: bool


def delay_aware_noise(x, delays, epsilon, M: int):
    """Noise pattern chosen after observing the realized delays.

    Per interval: every packet departing within its own interval is set
    to zero; among the remaining packets the fewest possible are flipped
    so that exactly min(n_tilde, L - y) of them are ones, ties broken by
    flipping the lowest-index eligible slot first. Flipping stops the
    moment the global budget is spent; that is a flagged state, not an
    error.

    Returns (flip_pattern, NoiseAdversaryState).
    """
    xb = as_bits(x)
    db = as_delays(delays)
    if xb.size != db.size:
        raise ValueError("signal and delay pattern lengths differ")
    if xb.size % M:
        raise ValueError("signal length must be a multiple of M")
    params = noise_adversary_params(epsilon, M, xb.size // M)
    L, quantum = params.interval_len, params.quantum
    n_int = params.n_intervals

    idx = np.arange(xb.size, dtype=np.int64)
    same = ((idx + db) // L) == (idx // L)
    xr = xb.reshape(n_int, L).astype(np.int64)
    sr = same.reshape(n_int, L)

    n = xr.sum(axis=1)
    n_tilde = (n // quantum) * quantum
    y = sr.sum(axis=1)
    ones_leaving = (xr * sr).sum(axis=1)
    n_hat = np.minimum(n_tilde, L - y)

    # Flips that zero same-interval departures cost one per departing 1.
    zero_mask = sr & (xr == 1)

    # Adjust the surviving packets of each interval to exactly n_hat ones.
    surv = ~sr
    ones_now = n - ones_leaving
    need_down = np.maximum(ones_now - n_hat, 0)
    need_up = np.maximum(n_hat - ones_now, 0)
    elig_down = surv & (xr == 1)
    elig_up = surv & (xr == 0)
    pick_down = elig_down & (np.cumsum(elig_down, axis=1) <= need_down[:, None])
    pick_up = elig_up & (np.cumsum(elig_up, axis=1) <= need_up[:, None])
    adjust_mask = pick_down | pick_up

    # Apply flips in channel-action order: interval by interval, the
    # zeroing pass before the adjustment pass, lowest index first within
    # each pass. Stop as soon as the budget is spent.
    zero_idx = np.flatnonzero(zero_mask.reshape(-1))
    adj_idx = np.flatnonzero(adjust_mask.reshape(-1))
    key_zero = (zero_idx // L) * 2 * L + (zero_idx % L)
    key_adj = (adj_idx // L) * 2 * L + L + (adj_idx % L)
    all_idx = np.concatenate([zero_idx, adj_idx])
    all_key = np.concatenate([key_zero, key_adj])
    order = np.argsort(all_key, kind="stable")
    planned = all_idx[order]

    exceeded = planned.size > params.budget
    applied = planned[:params.budget] if exceeded else planned
    xi = np.zeros(xb.size, dtype=np.uint8)
    xi[applied] = 1

    state = NoiseAdversaryState(params=params, n=n, n_tilde=n_tilde, y=y,
                                n_hat=n_hat, same_interval=same,
                                flips_used=int(applied.size),
                                budget_exceeded=bool(exceeded))
    return xi, state


def canonicalize(x, epsilon, M: int) -> np.ndarray:
    """Replace each interval by its quantized weight in canonical position:
    n_tilde ones followed by zeros. The delay-aware adversary makes this
    signal distributionally indistinguishable from the original."""
    xb = as_bits(x)
    if xb.size % M:
        raise ValueError("signal length must be a multiple of M")
    params = noise_adversary_params(epsilon, M, xb.size // M)
    L, quantum = params.interval_len, params.quantum
    n = xb.reshape(-1, L).sum(axis=1).astype(np.int64)
    n_tilde = (n // quantum) * quantum
    cols = np.arange(L)
    return (cols[None, :] < n_tilde[:, None]).astype(np.uint8).reshape(-1)


# ---------------------------------------------------------------------------
# Delay adversary acting before independent noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DelayAdversaryParams:
    epsilon: Fraction
    M: int
    T: int
    c: int                 # 4/eps
    half: int              # interval length M/2
    n_intervals: int       # 2T

    @property
    def spacing(self) -> int:
        return self.M // self.c


def delay_adversary_params(epsilon, M: int, T: int) -> DelayAdversaryParams:
    eps = as_fraction(epsilon)
    problems = []
    if not 0 < eps <= Fraction(1, 2):
        problems.append(f"epsilon must lie in (0, 1/2], got {eps}")
    c = Fraction(4) / eps if eps else None
    if c is not None and c.denominator != 1:
        problems.append(f"c = 4/epsilon = {c} is not an integer")
    elif c is not None:
        c = int(c)
        if M % c:
            problems.append(f"M = {M} is not divisible by c = {c}")
    if M % 4:
        problems.append(f"M = {M} is not divisible by 4")
    if T < 1:
        problems.append("T must be >= 1")
    if problems:
        raise ConfigError("; ".join(problems))
    return DelayAdversaryParams(epsilon=eps, M=M, T=T, c=c, half=M // 2,
                                n_intervals=2 * T)


def _round_release(fixed: Fraction, step: Fraction, pool: int,
                   spacing: int) -> int:
    """Largest n <= pool with |fixed + step*n - k*spacing| < 1/2 for some
    integer k >= 0. Exact rational arithmetic; existence is guaranteed
    whenever the value range sweeps at least one full spacing, which the
    release construction arranges."""
    half = Fraction(1, 2)
    s_max = fixed + step * pool
    k = math.floor((s_max + half) / spacing)
    while k >= 0:
        lo = k * spacing - half
        hi = k * spacing + half
        if lo < s_max < hi:
            return pool
        u = (hi - fixed) / step
        n = math.floor(u)
        if u == n:
            n -= 1
        n = min(n, pool)
        if n >= 0 and fixed + step * n > lo:
            return n
        k -= 1
    raise AssertionError("no feasible release rounding; parameters violate construction")


@dataclass
class DelayAdversaryState:
    """Interval-by-interval record of the batching delay adversary."""

    params: DelayAdversaryParams
    n0: np.ndarray            # 0-packet arrivals per interval
    n1: np.ndarray            # 1-packet arrivals per interval
    pool0: np.ndarray         # arrivals plus carry available at release time
    pool1: np.ndarray
    rel0: np.ndarray          # released counts
    rel1: np.ndarray
    release_sets: List[np.ndarray] = field(default_factory=list)
    signature_values: List[Fraction] = field(default_factory=list)
    final_exempt: bool = True  # last interval releases everything; its
                               # signature is not constrained to a multiple


def batch_release_delay(x, epsilon, M: int, T: int):
    """Deterministic delay pattern realizing the quantized release schedule.

    Every packet leaves at the end of its own interval or of the next
    one (delay <= M). Within each bit-value class, releases are FIFO:
    packets carried from the previous interval go out first.

    Returns (delay_pattern, DelayAdversaryState).
    """
    params = delay_adversary_params(epsilon, M, T)
    xb = as_bits(x, M * T)
    eps, c, half = params.epsilon, params.c, params.half
    spacing = params.spacing
    n_int = params.n_intervals

    xr = xb.reshape(n_int, half)
    n1 = xr.sum(axis=1).astype(np.int64)
    n0 = half - n1

    delays = np.empty(xb.size, dtype=np.int64)
    pend = {0: np.empty(0, dtype=np.int64), 1: np.empty(0, dtype=np.int64)}
    pool0 = np.zeros(n_int, dtype=np.int64)
    pool1 = np.zeros(n_int, dtype=np.int64)
    rel0 = np.zeros(n_int, dtype=np.int64)
    rel1 = np.zeros(n_int, dtype=np.int64)
    release_sets = []
    signatures = []

    for i in range(n_int):
        base = i * half
        slots = np.arange(base, base + half, dtype=np.int64)
        bits = xr[i]
        pend[1] = np.concatenate([pend[1], slots[bits == 1]])
        pend[0] = np.concatenate([pend[0], slots[bits == 0]])
        p0, p1 = pend[0].size, pend[1].size
        pool0[i], pool1[i] = p0, p1

        if i == n_int - 1:
            r0, r1 = p0, p1
        elif n1[i] >= n0[i]:
            r0 = p0
            r1 = _round_release(eps * p0, 1 - eps, p1, spacing)
        else:
            r1 = p1
            r0 = _round_release((1 - eps) * p1, eps, p0, spacing)
        rel0[i], rel1[i] = r0, r1

        held0, held1 = p0 - r0, p1 - r1
        assert held0 <= n0[i] and held1 <= n1[i], "held packets exceed fresh arrivals"
        assert held0 + held1 <= M // 4, "held packets exceed M/4"
        assert r0 + r1 <= 3 * M // 4, "released packets exceed 3M/4"

        end_slot = base + half - 1
        out = np.concatenate([pend[0][:r0], pend[1][:r1]])
        delays[out] = end_slot - out
        release_sets.append(np.sort(out))
        pend[0] = pend[0][r0:]
        pend[1] = pend[1][r1:]
        signatures.append(eps * r0 + (1 - eps) * r1)

    assert pend[0].size == 0 and pend[1].size == 0
    assert delays.min() >= 0 and delays.max() <= M

    state = DelayAdversaryState(params=params, n0=n0, n1=n1, pool0=pool0,
                                pool1=pool1, rel0=rel0, rel1=rel1,
                                release_sets=release_sets,
                                signature_values=signatures)
    return delays, state


def signature_vector(state: DelayAdversaryState) -> np.ndarray:
    """Nearest integer to eps*rel0 + (1-eps)*rel1 per interval: the expected
    received sum of the interval's release batch. A deterministic function
    of the input signal."""
    return np.array([math.floor(s + Fraction(1, 2)) for s in state.signature_values],
                    dtype=np.int64)


# ---------------------------------------------------------------------------
# Stress adversaries for codec testing
# ---------------------------------------------------------------------------

def flip_budget(epsilon, slots: int) -> int:
    """Global adversarial flip budget floor(eps * slots)."""
    return int(as_fraction(epsilon) * slots // 1)


def random_budget_noise(x, epsilon, rng) -> np.ndarray:
    """Oblivious budget adversary: flips exactly the budget, at uniformly
    random distinct slots."""
    xb = as_bits(x)
    budget = flip_budget(epsilon, xb.size)
    xi = np.zeros(xb.size, dtype=np.uint8)
    if budget:
        xi[rng.choice(xb.size, size=budget, replace=False)] = 1
    return xi


def burst_noise(x, epsilon, target_blocks, half_len: int,
                per_block: Optional[int] = None) -> np.ndarray:
    """Budget adversary that concentrates flips on whole codec blocks.

    Block i occupies slots [2*(i-1)*half_len, 2*i*half_len); the flips all
    land in its second half, lowest slot first, spending ``per_block``
    flips per targeted block (default floor(16*eps*half_len)) until the
    global budget floor(eps*slots) runs out. Total weight never exceeds
    the budget.
    """
    xb = as_bits(x)
    eps = as_fraction(epsilon)
    budget = flip_budget(eps, xb.size)
    if per_block is None:
        per_block = int(16 * eps * half_len // 1)
    if per_block < 0:
        raise ValueError("per_block must be non-negative")
    xi = np.zeros(xb.size, dtype=np.uint8)
    remaining = budget
    for b in target_blocks:
        if remaining <= 0 or per_block == 0:
            break
        start = (2 * b + 1) * half_len
        stop = (2 * b + 2) * half_len
        if stop > xb.size:
            raise ValueError(f"target block {b} lies outside the signal")
        spend = min(per_block, remaining, half_len)
        xi[start:start + spend] = 1
        remaining -= spend
    return xi


# ---------------------------------------------------------------------------
# Source adapters for channel.transmit
# ---------------------------------------------------------------------------

class DelayAwareNoiseSource:
    """Noise adversary that must observe the realized delay pattern."""

    needs_delay = True

    def __init__(self, epsilon, M):
        self.epsilon = as_fraction(epsilon)
        self.M = M

    def flips(self, bits, rng, delays=None):
        if delays is None:
            raise ConfigError("delay-aware noise needs the realized delay pattern")
        return delay_aware_noise(bits, delays, self.epsilon, self.M)


class RandomBudgetNoiseSource:
    needs_delay = False

    def __init__(self, epsilon):
        self.epsilon = as_fraction(epsilon)

    def flips(self, bits, rng, delays=None):
        return random_budget_noise(bits, self.epsilon, rng), None


class BurstNoiseSource:
    needs_delay = False

    def __init__(self, epsilon, target_blocks, half_len, per_block=None):
        self.epsilon = as_fraction(epsilon)
        self.target_blocks = list(target_blocks)
        self.half_len = half_len
        self.per_block = per_block

    def flips(self, bits, rng, delays=None):
        xi = burst_noise(bits, self.epsilon, self.target_blocks,
                         self.half_len, self.per_block)
        return xi, None


class BernoulliNoiseSource:
    needs_delay = False

    def __init__(self, model):
        self.model = model

    def flips(self, bits, rng, delays=None):
        from .stochastic import sample_noise
        return sample_noise(self.model, len(bits), rng), None


class GeometricDelaySource:
    def __init__(self, model):
        self.model = model

    def delays(self, bits, rng):
        from .stochastic import sample_delay
        return sample_delay(self.model, len(bits), rng), None


class BatchReleaseDelaySource:
    """Delay adversary source; acts on whatever bit string reaches it."""

    def __init__(self, epsilon, M, T):
        self.epsilon = as_fraction(epsilon)
        self.M = M
        self.T = T

    def delays(self, bits, rng):
        return batch_release_delay(bits, self.epsilon, self.M, self.T)
