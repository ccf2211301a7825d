"""Exact signal-via-noise channels and their information capacity.

A signal-via-noise channel takes input pairs (a, b) whose expected
received sum eps*a + (1-eps)*b sits in a fixed half-open unit window
around mu, and outputs the sum of a Bernoulli(eps) and b Bernoulli(1-eps)
variables. All inputs share (roughly) the same output mean; information
travels only through higher moments. Capacity is computed by
Blahut-Arimoto alternating optimization with the standard upper/lower
capacity-gap certificate, and the entropy bounds that make the capacity
M-independent are checked numerically against exact distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats as sps
from scipy.special import xlogy

from .stochastic import as_fraction


class EmptyChannelError(ValueError):
    """The (M, eps, c, mu) constraints admit no input symbol."""


@dataclass(frozen=True)
class SvnChannelSpec:
    M: int
    epsilon: Fraction
    c: int
    mu: int

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if not 0 < self.epsilon <= Fraction(1, 2):
            raise ValueError(f"epsilon must lie in (0, 1/2], got {self.epsilon}")
        if self.c < 1 or self.M < 1:
            raise ValueError("M and c must be positive integers")
        if not self.M / self.c <= self.mu <= self.M:
            raise ValueError(f"mu must lie in [M/c, M] = [{self.M/self.c}, {self.M}]")


def enumerate_inputs(spec: SvnChannelSpec) -> List[Tuple[int, int]]:
    """All (a, b) with mu - 1/2 < eps*a + (1-eps)*b <= mu + 1/2 and
    0 <= a + b <= M, in lexicographic order. Exact rational boundary
    arithmetic, so the strict/non-strict ends are honored precisely."""
    eps = spec.epsilon
    half = Fraction(1, 2)
    out = []
    for a in range(spec.M + 1):
        # window for b at this a: (mu - 1/2 - eps*a)/(1-eps) < b <= ...
        lo = (spec.mu - half - eps * a) / (1 - eps)
        hi = (spec.mu + half - eps * a) / (1 - eps)
        b_lo = math.floor(lo) + 1
        b_hi = math.floor(hi)
        if hi == b_hi and not (eps * a + (1 - eps) * b_hi <= spec.mu + half):
            b_hi -= 1  # defensive; floor(hi) is included since the end is <=
        for b in range(max(b_lo, 0), min(b_hi, spec.M - a) + 1):
            out.append((a, b))
    if not out:
        raise EmptyChannelError(f"no input symbols for {spec}")
    return out


def _binom_pmf(n: int, p: float) -> np.ndarray:
    if n == 0:
        return np.ones(1)
    return sps.binom.pmf(np.arange(n + 1), n, p)


def transition_row(a: int, b: int, epsilon, M: int) -> np.ndarray:
    """Exact output distribution on {0..M} for input (a, b): the sum of a
    independent Bernoulli(eps) and b independent Bernoulli(1-eps).

    Computed by convolving the two binomial laws; the factors are
    convolved in a canonical order so that row(a, b, eps) and
    row(b, a, 1-eps) are bit-for-bit identical.
    """
    if a < 0 or b < 0 or a + b > M:
        raise ValueError("need a, b >= 0 and a + b <= M")
    eps = float(as_fraction(epsilon))
    parts = sorted([(a, eps), (b, 1.0 - eps)], key=lambda t: (t[0], t[1]))
    pmf = _binom_pmf(*parts[0])
    if parts[1][0] > 0 or pmf.size == 0:
        pmf = np.convolve(pmf, _binom_pmf(*parts[1]))
    row = np.zeros(M + 1)
    row[:pmf.size] = pmf
    return row


def transition_matrix(spec: SvnChannelSpec):
    """(inputs, P) where P[i] = transition_row(inputs[i])."""
    inputs = enumerate_inputs(spec)
    P = np.empty((len(inputs), spec.M + 1))
    for i, (a, b) in enumerate(inputs):
        P[i] = transition_row(a, b, spec.epsilon, spec.M)
    return inputs, P


def entropy_bits(p: np.ndarray) -> float:
    """Shannon entropy in bits with the 0*log(1/0) = 0 convention."""
    p = np.asarray(p, dtype=float)
    return float(-xlogy(p, p).sum() / math.log(2))


def mutual_information(input_dist, matrix) -> float:
    """I(X;Y) = H(Y) - H(Y|X) in bits for a row-stochastic matrix."""
    r = np.asarray(input_dist, dtype=float)
    P = np.asarray(matrix, dtype=float)
    if r.shape[0] != P.shape[0]:
        raise ValueError("input distribution does not match matrix rows")
    if abs(r.sum() - 1.0) > 1e-9:
        raise ValueError("input distribution must sum to 1")
    py = r @ P
    h_y = entropy_bits(py)
    h_y_given_x = float(r @ np.array([entropy_bits(row) for row in P]))
    return h_y - h_y_given_x


@dataclass
class CapacityReport:
    """Blahut-Arimoto output: capacity in bits with a convergence
    certificate, plus numeric entropy-bound components when computed for
    a signal-via-noise spec."""

    capacity_bits: float
    input_distribution: np.ndarray
    iterations: int
    gap: float
    converged: bool
    c1_bound: Optional[float] = None   # analytic H(Y|X) defect constant
    c2_observed: Optional[float] = None  # H(Y) - (1/2)log2 M at the optimum


def blahut_arimoto(matrix, tol: float = 1e-6, max_iter: int = 10_000,
                   theta_max: float = 512.0) -> CapacityReport:
    """Capacity of a discrete memoryless channel by alternating
    optimization.

    The iteration keeps the standard sandwich
    I(r) <= C <= max_x D(P_x || r P); it stops when that gap drops to
    ``tol`` bits. Plain alternation converges only linearly, with a rate
    close to one for near-degenerate channels, so the multiplicative
    update is over-relaxed (exponent theta) adaptively: theta grows while
    the certified lower bound keeps improving and the step is rolled back
    and shrunk whenever it would decrease it. The accepted lower bounds
    are therefore non-decreasing, and the final sandwich certifies the
    answer no matter what path the iterates took. ``theta_max=1``
    recovers the classical update. Non-convergence within ``max_iter``
    returns the last iterate with ``converged=False`` and the gap
    recorded.
    """
    P = np.asarray(matrix, dtype=float)
    if P.ndim != 2 or P.shape[0] < 1:
        raise ValueError("matrix must be 2-D with at least one row")
    if (P < 0).any() or np.abs(P.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("matrix must be row-stochastic")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_x = P.shape[0]
    logP = np.where(P > 0, np.log(P, where=P > 0), 0.0)
    row_neg_entropy = (P * logP).sum(axis=1)   # sum_y P log P, in nats

    r = np.full(n_x, 1.0 / n_x)
    ln2 = math.log(2)
    theta = 1.0
    best = None                               # (lower, gap, r, d) of best iterate
    iterations = 0
    for iterations in range(1, max_iter + 1):
        py = r @ P
        log_py = np.where(py > 0, np.log(py, where=py > 0), 0.0)
        d = row_neg_entropy - P @ log_py      # D(P_x || py) in nats
        lower = float(r @ d)
        gap = (float(d.max()) - lower) / ln2
        if best is not None and lower < best[0] - 1e-13:
            theta = max(1.0, theta / 4.0)     # overshoot: retry from the best iterate
            _, _, r, d = best
        else:
            best = (lower, gap, r, d)
            theta = min(theta * 1.25, theta_max)
            if gap <= tol:
                break
        w = r * np.exp(theta * (d - d.max()))
        r = w / w.sum()
    lower, gap, r, _ = best
    return CapacityReport(capacity_bits=max(lower / ln2, 0.0), input_distribution=r,
                          iterations=iterations, gap=gap, converged=gap <= tol)


def c1_constant(c: int, epsilon) -> float:
    """Analytic defect in the conditional-entropy lower bound
    H(Y|X) >= (1/2)log2 M - c1."""
    eps = float(as_fraction(epsilon))
    return 1.5 * math.log2(c / eps) + 3.0


def point_probability_bound(spec: SvnChannelSpec) -> float:
    """Berry-Esseen style ceiling on any single output probability."""
    return 8.0 * (spec.c / float(spec.epsilon)) ** 1.5 * spec.M ** -0.5


def channel_capacity(spec: SvnChannelSpec, tol: float = 1e-6,
                     max_iter: int = 10_000) -> CapacityReport:
    """Capacity of one signal-via-noise channel, with bound components."""
    _, P = transition_matrix(spec)
    report = blahut_arimoto(P, tol=tol, max_iter=max_iter)
    report.c1_bound = c1_constant(spec.c, spec.epsilon)
    py = report.input_distribution @ P
    report.c2_observed = entropy_bits(py) - 0.5 * math.log2(spec.M)
    return report


@dataclass
class EntropyBoundReport:
    spec: SvnChannelSpec
    max_point_probability: float
    point_probability_ceiling: float
    min_conditional_entropy: float
    conditional_entropy_floor: float
    uniform_output_entropy: float
    entropy_excess: float               # H(Y) - (1/2)log2 M under uniform input
    tail_table: Optional[list] = None   # (ell, exact mass, 2^-ell) diagnostics


def entropy_bound_checks(spec: SvnChannelSpec,
                         tail_diagnostic: bool = False) -> EntropyBoundReport:
    """Numeric verification of the entropy bounds behind the capacity
    ceiling. A violation falsifies the implementation, not the theory, so
    it raises instead of reporting."""
    inputs, P = transition_matrix(spec)
    ceiling = point_probability_bound(spec)
    max_point = float(P.max())
    if max_point > ceiling + 1e-12:
        raise AssertionError(
            f"point probability {max_point} exceeds ceiling {ceiling} for {spec}")

    cond = np.array([entropy_bits(row) for row in P])
    floor = 0.5 * math.log2(spec.M) - c1_constant(spec.c, spec.epsilon)
    if cond.min() < floor - 1e-12:
        raise AssertionError(
            f"conditional entropy {cond.min()} below floor {floor} for {spec}")

    uniform = np.full(len(inputs), 1.0 / len(inputs))
    h_y = entropy_bits(uniform @ P)

    tail = None
    if tail_diagnostic:
        sigma = math.sqrt(spec.M * float(spec.epsilon) * (1 - float(spec.epsilon)))
        py = uniform @ P
        j = np.arange(spec.M + 1)
        dist = np.abs(j - spec.mu)
        tail = []
        for ell in range(2, max(3, int(sigma))):
            mass = float(py[dist >= ell * sigma].sum())
            tail.append((ell, mass, 2.0 ** -ell))

    return EntropyBoundReport(
        spec=spec,
        max_point_probability=max_point,
        point_probability_ceiling=ceiling,
        min_conditional_entropy=float(cond.min()),
        conditional_entropy_floor=floor,
        uniform_output_entropy=h_y,
        entropy_excess=h_y - 0.5 * math.log2(spec.M),
        tail_table=tail,
    )


def fano_style_lower_bound(tau: float, size_r: int, size_s: int) -> float:
    """Decoding-error floor when the channel can steer all but a tau
    fraction of transmissions into a set of size_r receiver signals while
    size_s messages are in play: max(0, 1 - (tau + size_r/size_s))."""
    if not 0 <= tau <= 1:
        raise ValueError("tau must lie in [0, 1]")
    if size_r < 1 or size_s < 1:
        raise ValueError("set sizes must be >= 1")
    return max(0.0, 1.0 - (tau + size_r / size_s))
