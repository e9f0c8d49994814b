"""Closed-form write-reliability model for SEC-DED protected blocks.

Per-bit: a cell that must flip succeeds with probability ``p_write``; cells
that need no transition never fail. Per-codeword: a write with k transitions
succeeds when at most one of them fails, i.e. ``pw^k + k*pw^(k-1)*(1-pw)``.
Per-block: the product over the eight codewords. The optimal reference
spreads a block's total K transitions uniformly (K/8 per codeword), which
maximizes the block success probability for fixed K.

``p_write`` can be supplied directly (the primary experiment pathway) or
derived from device physics via :func:`p_write_from_device`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .mapping import CODEWORDS, TransitionVector

EULER_GAMMA = 0.5772156649015329

# preset operating point: per-bit failure probability 1e-3
DEFAULT_P_WRITE = 0.999


class ParameterError(ValueError):
    """Physically meaningless or non-finite model parameters."""


@dataclass(frozen=True)
class DeviceParams:
    """Operating point of one STT-MRAM cell write.

    Units follow the underlying physics (seconds, amperes, J/T, coulombs);
    ``delta`` is the dimensionless thermal stability factor and ``euler`` the
    Euler-Mascheroni constant.
    """

    t_write: float
    i_write: float
    i_c0: float
    polarization: float
    magnetic_moment: float
    mu_b: float = 9.2740100783e-24
    delta: float = 60.0
    e_charge: float = 1.602176634e-19
    euler: float = EULER_GAMMA

    def __post_init__(self) -> None:
        if self.t_write <= 0:
            raise ParameterError(f"t_write must be positive, got {self.t_write}")
        if not 0 < self.polarization < 1:
            raise ParameterError(f"polarization must lie in (0, 1), got {self.polarization}")
        if self.delta <= 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if self.i_write < self.i_c0:
            raise ParameterError(
                f"i_write={self.i_write} below critical current i_c0={self.i_c0}"
            )


def p_write_from_device(params: DeviceParams) -> float:
    """Per-bit transition success probability from the device operating point.

    failure = exp(-t_write * 2*mu_b*p*(i_write - i_c0)
                  / (euler + ln(pi^2 * delta / 4) * (e * m * (1 + p^2))))
    and p_write = 1 - failure, clamped to [0, 1].
    """
    p = params.polarization
    numerator = 2.0 * params.mu_b * p * (params.i_write - params.i_c0)
    denominator = params.euler + math.log(math.pi**2 * params.delta / 4.0) * (
        params.e_charge * params.magnetic_moment * (1.0 + p * p)
    )
    if not math.isfinite(denominator) or denominator <= 0:
        raise ParameterError(f"non-positive or non-finite denominator: {denominator}")
    exponent = -params.t_write * numerator / denominator
    if not math.isfinite(exponent):
        raise ParameterError("non-finite exponent in failure probability")
    failure = math.exp(exponent)
    return min(1.0, max(0.0, 1.0 - failure))


def p_codeword_success(k: float, pw: float) -> float:
    """Probability that a codeword with k transitioning bits is written correctly.

    k may be real-valued (used by the idealized uniform bound, where the
    single-failure multiplicity generalizes from C(k,1) to k).
    """
    if k < 0:
        raise ParameterError(f"transition count must be non-negative, got {k}")
    if not 0.0 <= pw <= 1.0:
        raise ParameterError(f"p_write must lie in [0, 1], got {pw}")
    if k == 0:
        return 1.0
    if pw == 1.0:
        return 1.0
    if pw == 0.0:
        return 1.0 if k <= 1 else 0.0
    value = pw**k + k * pw ** (k - 1.0) * (1.0 - pw)
    return min(1.0, max(0.0, value))


def codeword_success_array(k: np.ndarray, pw: float) -> np.ndarray:
    """Vectorized :func:`p_codeword_success` over an array of (real) flip counts."""
    if not 0.0 <= pw <= 1.0:
        raise ParameterError(f"p_write must lie in [0, 1], got {pw}")
    k = np.asarray(k, dtype=np.float64)
    if np.any(k < 0):
        raise ParameterError("transition counts must be non-negative")
    if pw == 1.0:
        return np.ones_like(k)
    if pw == 0.0:
        return (k <= 1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = pw**k + k * pw ** (k - 1.0) * (1.0 - pw)
    value = np.where(k == 0, 1.0, value)
    return np.clip(value, 0.0, 1.0)


def _counts(tv: TransitionVector | Sequence[int]) -> np.ndarray:
    k = np.asarray(tv.k if isinstance(tv, TransitionVector) else tv, dtype=np.float64)
    if k.shape != (CODEWORDS,):
        raise ParameterError(f"transition vector needs {CODEWORDS} entries, got shape {k.shape}")
    return k


def p_block_success(tv: TransitionVector | Sequence[int], pw: float) -> float:
    """Probability that all eight codewords of a block write succeed."""
    return float(np.prod(codeword_success_array(_counts(tv), pw)))


def p_block_success_optimal(total: float, pw: float) -> float:
    """Idealized bound: the block's total transitions spread uniformly, K/8 each.

    K/8 stays real-valued, so this is an upper bound that is attainable only
    when 8 divides K; see :func:`p_block_success_optimal_int` for the best
    integer split.
    """
    if total < 0:
        raise ParameterError(f"total transition count must be non-negative, got {total}")
    return p_codeword_success(total / CODEWORDS, pw) ** CODEWORDS


def p_block_success_optimal_int(total: int, pw: float) -> float:
    """Best achievable split with integer per-codeword counts: floor/ceil of K/8."""
    if total < 0:
        raise ParameterError(f"total transition count must be non-negative, got {total}")
    base, extra = divmod(int(total), CODEWORDS)
    low = p_codeword_success(base, pw)
    high = p_codeword_success(base + 1, pw)
    return high**extra * low ** (CODEWORDS - extra)


@dataclass(frozen=True)
class TraceErrorRate:
    """Mean per-write block-failure probability over a trace, with its optimal companions."""

    rate: float
    optimal_rate: float
    optimal_rate_int: float
    writes: int


def trace_error_rate(tvs: Iterable[TransitionVector | Sequence[int]], pw: float) -> TraceErrorRate:
    """Aggregate Eq-style block failure over a stream of transition vectors.

    The cache error rate is the mean over writes of (1 - p_block_success);
    alongside it the same mean is computed against the uniform K/8 bound and
    its integer split, using each write's own total K. Writes with K = 0
    contribute zero to all three.
    """
    failure_sum = 0.0
    optimal_sum = 0.0
    optimal_int_sum = 0.0
    writes = 0
    for tv in tvs:
        counts = _counts(tv)
        failure_sum += 1.0 - p_block_success(counts, pw)
        total = float(counts.sum())
        optimal_sum += 1.0 - p_block_success_optimal(total, pw)
        optimal_int_sum += 1.0 - p_block_success_optimal_int(int(total), pw)
        writes += 1
    if writes == 0:
        raise ValueError("empty transition-vector stream")
    return TraceErrorRate(
        rate=failure_sum / writes,
        optimal_rate=optimal_sum / writes,
        optimal_rate_int=optimal_int_sum / writes,
        writes=writes,
    )


def normalized_increase(rate: float, optimal_rate: float) -> float:
    """Percent increase of an error rate over its optimal companion.

    Both zero means the trace never risked a failure: 0%. A zero optimal with
    a positive rate is reported as an infinite increase.
    """
    if rate < 0 or optimal_rate < 0:
        raise ParameterError("rates must be non-negative")
    if optimal_rate == 0.0:
        return 0.0 if rate == 0.0 else math.inf
    return (rate / optimal_rate - 1.0) * 100.0
