"""Block codec for the channel with budgeted adversarial noise followed by
memoryless random delay.

The outer layer is a short error-correcting code decoded by exhaustive
nearest-codeword search. The inner layer modulates each outer bit onto a
block of 2L slots (1 -> L ones then L zeros, 0 -> the reverse) and
demodulates by comparing the received mass of the tail window of each
half-block against an adaptive threshold: the tail sums estimate the
queue's density, and whether the density rose or fell across the block
midpoint reveals the bit. Ground-truth diagnostics classify each block
as heavy (queue too full), corrupted (too many adversarial flips in the
second half-block) or deviant (atypical tail-sum deviation); the decoder
itself never sees any of this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .channel import as_bits, as_delays, apply_delay, apply_noise
from .stochastic import DelayConvention, as_fraction
from .rng import as_generator


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class CodecParams:
    """Derived constants of the block scheme.

    half_len is L (rounded M^{4/5}), tail_len is L' (rounded M^{3/4}),
    threshold_scale is M^{11/20}. The signal spans 2 * half_len * n_blocks
    slots, which must equal M*T for integer T. The proof regime needs
    epsilon < 1/64; exactness of the rounded powers is guaranteed when M
    is a perfect 20th power (e.g. 2**20), which the shipped acceptance
    configs use.
    """

    M: int
    k: int
    n_blocks: int
    epsilon: Fraction
    half_len: int
    tail_len: int
    threshold_scale: float
    deviation_exponent: float = 0.52

    @classmethod
    def derive(cls, M: int, k: int, n_blocks: int, epsilon,
               deviation_exponent: float = 0.52) -> "CodecParams":
        eps = as_fraction(epsilon)
        if not 0 <= eps < Fraction(1, 64):
            raise ValueError(f"epsilon must lie in [0, 1/64), got {eps}")
        if k < 1 or n_blocks < 1:
            raise ValueError("k and n_blocks must be >= 1")
        L = _round_half_up(M ** 0.8)
        Lp = _round_half_up(M ** 0.75)
        if not L > Lp:
            raise ValueError(f"need L > L' but got L={L}, L'={Lp} (M too small)")
        slots = 2 * L * n_blocks
        if slots % M:
            raise ValueError(f"signal length 2*L*N = {slots} is not a multiple of M = {M}")
        return cls(M=M, k=k, n_blocks=n_blocks, epsilon=eps, half_len=L,
                   tail_len=Lp, threshold_scale=M ** 0.55,
                   deviation_exponent=deviation_exponent)

    @property
    def slots(self) -> int:
        return 2 * self.half_len * self.n_blocks

    @property
    def T(self) -> int:
        return self.slots // self.M

    @property
    def flip_budget(self) -> int:
        return int(self.epsilon * self.slots // 1)

    @property
    def corruption_threshold(self) -> float:
        """A block is corrupted when its second half-block absorbs more
        flips than this."""
        return float(16 * self.epsilon * self.half_len)


@dataclass
class OuterCode:
    """Linear code with its full codebook, decoded by nearest codeword."""

    generator: np.ndarray   # k x n over GF(2)
    codebook: np.ndarray    # 2^k x n, row index = message integer
    dmin: int
    tau: Fraction

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def correctable(self) -> int:
        """Flip count with guaranteed unique decoding."""
        return int(self.tau * self.n // 1)


def _all_messages(k: int) -> np.ndarray:
    m = np.arange(2 ** k, dtype=np.int64)
    return ((m[:, None] >> np.arange(k)) & 1).astype(np.uint8)


def build_outer_code(k: int, n: int, tau=Fraction(5, 24), seed=0,
                     max_resample: int = 2_000) -> OuterCode:
    """Random linear code resampled until dmin exceeds 2*tau*n.

    The minimum distance is verified exhaustively over the codebook, so k
    is capped at 16. Deterministic given the seed; raises with a hint to
    enlarge n when resampling fails.
    """
    if k > 16:
        raise ValueError("exhaustive codebook verification supports k <= 16")
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    tau = as_fraction(tau)
    if not 0 < tau < Fraction(1, 4):
        raise ValueError("tau must lie in (0, 1/4)")
    need = math.floor(2 * tau * n) + 1   # smallest integer > 2*tau*n
    rng = as_generator(seed)
    msgs = _all_messages(k)
    for _ in range(max_resample):
        gen = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        codebook = (msgs @ gen) % 2
        weights = codebook[1:].sum(axis=1)
        if weights.size == 0 or weights.min() >= need:
            dmin = int(weights.min()) if weights.size else n
            return OuterCode(generator=gen.astype(np.uint8),
                             codebook=codebook.astype(np.uint8),
                             dmin=dmin, tau=tau)
    raise ValueError(f"no [n={n}, k={k}] code with dmin > {2*tau*n:.2f} found in "
                     f"{max_resample} samples; increase n")


def encode_message(code: OuterCode, message) -> np.ndarray:
    m = as_bits(message, code.k)
    return (m @ code.generator % 2).astype(np.uint8)


def outer_decode(code: OuterCode, s) -> np.ndarray:
    """Nearest-codeword decoding; ties resolve to the lowest message index."""
    sb = as_bits(s, code.n)
    dist = (code.codebook != sb[None, :]).sum(axis=1)
    return _all_messages(code.k)[int(np.argmin(dist))]


def block_encode(message, params: CodecParams, code: OuterCode) -> np.ndarray:
    """Outer-encode then modulate: bit 1 -> 1^L 0^L, bit 0 -> 0^L 1^L."""
    word = encode_message(code, message)
    halves = np.empty(2 * word.size, dtype=np.uint8)
    halves[0::2] = word
    halves[1::2] = 1 - word
    return np.repeat(halves, params.half_len)


def interval_sum(y, start: int, stop: int) -> int:
    """Sum of received counts over slots [start, stop), 0-indexed."""
    arr = np.asarray(y)
    if not 0 <= start <= stop <= arr.size:
        raise ValueError(f"interval [{start}, {stop}) out of range for {arr.size} slots")
    return int(arr[start:stop].sum())


def _tail_sums(y, params: CodecParams) -> np.ndarray:
    """Received mass of the tail window of every half-block."""
    arr = np.asarray(y, dtype=np.int64)
    L, Lp = params.half_len, params.tail_len
    cum = np.concatenate([[0], np.cumsum(arr)])
    ends = np.arange(1, 2 * params.n_blocks + 1, dtype=np.int64) * L
    return cum[ends] - cum[ends - Lp]


def demodulate(y, params: CodecParams) -> np.ndarray:
    """Per-block bit estimates from the received counts alone."""
    arr = np.asarray(y, dtype=np.int64)
    if arr.size != params.slots:
        raise ValueError(f"expected {params.slots} received slots, got {arr.size}")
    tails = _tail_sums(arr, params)
    first, second = tails[0::2], tails[1::2]
    alpha = first / params.tail_len
    threshold = (-alpha + 0.5) * params.threshold_scale
    return (second - first <= threshold).astype(np.uint8)


def block_decode(y, params: CodecParams, code: OuterCode) -> np.ndarray:
    """Full decoder: a pure function of the received counts."""
    return outer_decode(code, demodulate(y, params))


@dataclass
class BlockDiagnostics:
    """Ground-truth bad-event classification, never shown to the decoder."""

    heavy: np.ndarray        # queue of ones above c*M entering the block
    corrupted: np.ndarray    # adversary spent more than 16*eps*L in the
                             # block's second half
    deviant: np.ndarray      # not heavy, but a tail sum strayed more than
                             # M**deviation_exponent from its expectation
    q_ones: np.ndarray       # ones in queue entering each block's first tail window
    alpha: np.ndarray        # decoder's density estimate per block
    expected_tails: np.ndarray
    observed_tails: np.ndarray

    @property
    def n_heavy(self) -> int:
        return int(self.heavy.sum())

    @property
    def n_corrupted(self) -> int:
        return int(self.corrupted.sum())

    @property
    def n_deviant(self) -> int:
        return int(self.deviant.sum())


def classify_blocks(x, xi, delays, params: CodecParams, c_heavy: float = 4.0,
                    convention: DelayConvention = DelayConvention.FROM_ONE,
                    ) -> BlockDiagnostics:
    """Classify every block from the realized channel ground truth.

    Tail-sum expectations come from the realized queue state: each queued
    one departs a window of width w with probability 1 - (1-1/M)^w by
    memorylessness, and a one arriving inside the window gets the
    remaining width. Deviation beyond M**deviation_exponent flags the
    block deviant (unless it is heavy, which dominates).
    """
    xb = as_bits(x, params.slots)
    fb = as_bits(xi, params.slots)
    db = as_delays(delays, params.slots)
    z = np.bitwise_xor(xb, fb).astype(np.int64)
    n, L, Lp, M = params.slots, params.half_len, params.tail_len, params.M

    arrive = np.arange(n, dtype=np.int64) + db
    delivered = np.bincount(arrive[(z == 1) & (arrive < n)], minlength=n)
    ones_in_queue = np.cumsum(z) - np.cumsum(delivered)   # state at end of slot

    q = 1.0 - 1.0 / M
    if convention is DelayConvention.FROM_ONE:
        # arrival at window offset o (0-based) departs in-window w.p. 1 - q^(Lp-1-o)
        arrival_weight = 1.0 - q ** (Lp - 1 - np.arange(Lp))
    else:
        arrival_weight = 1.0 - q ** (Lp - np.arange(Lp))
    queued_weight = 1.0 - q ** Lp

    n_half = 2 * params.n_blocks
    starts = np.arange(1, n_half + 1, dtype=np.int64) * L - Lp
    q_at_start = np.where(starts > 0, ones_in_queue[starts - 1], 0)
    expected = np.empty(n_half)
    for j, s in enumerate(starts):
        expected[j] = q_at_start[j] * queued_weight + float(z[s:s + Lp] @ arrival_weight)

    observed = _tail_sums(np.asarray(apply_delay(z.astype(np.uint8), db)), params)
    q_ones = q_at_start[0::2]

    heavy = q_ones > c_heavy * M
    flips_second_half = fb.reshape(n_half, L).sum(axis=1)[1::2]
    corrupted = flips_second_half > params.corruption_threshold
    dev_limit = M ** params.deviation_exponent
    strayed = np.abs(observed - expected).reshape(-1, 2).max(axis=1) > dev_limit
    deviant = strayed & ~heavy

    alpha = observed[0::2] / Lp
    return BlockDiagnostics(heavy=heavy, corrupted=corrupted, deviant=deviant,
                            q_ones=q_ones, alpha=alpha, expected_tails=expected,
                            observed_tails=observed)
