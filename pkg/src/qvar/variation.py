"""Sequence-level seminorms: strong q-variation, oscillation, jump counts.

A sequence is a finite 1-d array of complex samples (a_0, ..., a_m).  All
norms here anchor their chains at index 0 and treat the tuple as constantly
extended to the right, so trailing increments vanish and the finite tuple
carries the full value.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, ParameterError

#: Hard cap for the exhaustive chain enumeration (2^(len-1) chains).
BRUTEFORCE_MAX_LEN = 20

#: Hard cap for the dyadic refinement level (grid has ~t_max * 2^N points).
DYADIC_MAX_LEVEL = 20


def as_sequence(samples) -> np.ndarray:
    """Validate and return samples as a 1-d complex array of length >= 1."""
    a = np.asarray(samples, dtype=np.complex128).ravel()
    if a.size < 1:
        raise InputError("sequence must contain at least one sample")
    if not np.all(np.isfinite(a)):
        raise InputError("sequence contains a non-finite sample")
    return a


def _check_exponent(q: float) -> float:
    q = float(q)
    if not np.isfinite(q) or q < 1.0:
        raise ParameterError(f"variation exponent must satisfy q >= 1, got {q}")
    return q


def vq_norm(samples, q: float) -> float:
    """Strong q-variation norm of a finite sequence.

    Value of sup over increasing index chains n_0 = 0 < n_1 < ... of
    (|a_0|^q + sum_k |a_{n_k} - a_{n_{k-1}}|^q)^(1/q), computed exactly by
    dynamic programming in O(m^2): E[0] = 0, E[j] = max_{i<j} E[i] +
    |a_j - a_i|^q, result (|a_0|^q + max(0, max_j E[j]))^(1/q).
    """
    a = as_sequence(samples)
    q = _check_exponent(q)
    m1 = a.size
    anchor = float(np.abs(a[0])) ** q
    if m1 == 1:
        return anchor ** (1.0 / q)
    E = np.zeros(m1)
    for j in range(1, m1):
        E[j] = np.max(E[:j] + np.abs(a[j] - a[:j]) ** q)
    return float((anchor + max(0.0, float(E.max()))) ** (1.0 / q))


@lru_cache(maxsize=32)
def _chain_table(m: int) -> np.ndarray:
    """All 2^m index chains over {0, ..., m} containing 0, as padded rows.

    Row for a subset S of {1..m} is [0, sorted(S)...] padded by repeating the
    last entry, so gathered increments past the chain end are zero.
    """
    n_chains = 1 << m
    masks = np.arange(n_chains, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(m, dtype=np.uint32)) & 1).astype(bool)
    pos = np.cumsum(bits, axis=1)
    chains = np.zeros((n_chains, m + 1), dtype=np.int64)
    rows, cols = np.nonzero(bits)
    chains[rows, pos[rows, cols]] = cols + 1
    # forward-fill the padding; valid because chain entries increase
    return np.maximum.accumulate(chains, axis=1)


def vq_norm_bruteforce(samples, q: float) -> float:
    """Exhaustive maximum of the q-variation over all 2^m chains through 0.

    Independent oracle for :func:`vq_norm`; refuses sequences longer than
    ``BRUTEFORCE_MAX_LEN``.
    """
    a = as_sequence(samples)
    q = _check_exponent(q)
    m = a.size - 1
    if a.size > BRUTEFORCE_MAX_LEN:
        raise ParameterError(
            f"brute-force oracle limited to length {BRUTEFORCE_MAX_LEN}, "
            f"got {a.size}"
        )
    anchor = float(np.abs(a[0])) ** q
    if m == 0:
        return anchor ** (1.0 / q)
    best = 0.0
    chains = _chain_table(m)
    # chunked evaluation keeps peak memory modest near the length cap
    step = 1 << 14
    for lo in range(0, chains.shape[0], step):
        block = a[chains[lo : lo + step]]
        sums = (np.abs(np.diff(block, axis=1)) ** q).sum(axis=1)
        best = max(best, float(sums.max()))
    return float((anchor + best) ** (1.0 / q))


def check_block_partition(boundaries, length: int) -> np.ndarray:
    """Validate block boundaries n_0 = 0 < n_1 < ... <= length - 1."""
    b = np.asarray(boundaries, dtype=np.int64).ravel()
    if b.size < 1 or b[0] != 0:
        raise InputError("block boundaries must start at index 0")
    if np.any(np.diff(b) <= 0):
        raise InputError("block boundaries must be strictly increasing")
    if b[-1] > length - 1:
        raise InputError(
            f"block boundary {int(b[-1])} is out of range for length {length}"
        )
    return b


def oscillation_norm(samples, boundaries) -> float:
    """Oscillation norm relative to a block partition.

    Returns (|a_0|^2 + sum_k max over n, m in [n_k, n_{k+1}] of
    |a_n - a_m|^2)^(1/2), each block maximum taken over all ordered pairs.
    """
    a = as_sequence(samples)
    b = check_block_partition(boundaries, a.size)
    total = float(np.abs(a[0])) ** 2
    for k in range(b.size - 1):
        block = a[b[k] : b[k + 1] + 1]
        d = float(np.abs(block[:, None] - block[None, :]).max())
        total += d * d
    return float(np.sqrt(total))


def jump_count(samples, tau: float) -> int:
    """Maximal number of chained pairs n_1 < m_1 <= n_2 < m_2 <= ... with
    |a_{m_k} - a_{n_k}| > tau.

    Greedy earliest-completion scan; optimal by an exchange argument and
    verified against :func:`jump_count_bruteforce`.  Ties at exactly tau do
    not count (strict inequality).
    """
    tau = float(tau)
    if not np.isfinite(tau) or tau <= 0.0:
        raise ParameterError(f"jump threshold must be positive, got {tau}")
    a = as_sequence(samples)
    n = a.size
    count = 0
    start = 0
    while start < n - 1:
        # earliest m with a jump from some n in [start, m)
        hit = -1
        for m in range(start + 1, n):
            if float(np.abs(a[m] - a[start:m]).max()) > tau:
                hit = m
                break
        if hit < 0:
            break
        count += 1
        start = hit
    return count


def jump_count_bruteforce(samples, tau: float) -> int:
    """Exhaustive chained-pair maximum; oracle for :func:`jump_count`."""
    tau = float(tau)
    if tau <= 0.0:
        raise ParameterError(f"jump threshold must be positive, got {tau}")
    a = as_sequence(samples)
    n = a.size
    from functools import lru_cache as _lc

    @_lc(maxsize=None)
    def best_from(s: int) -> int:
        b = 0
        for i in range(s, n):
            for j in range(i + 1, n):
                if abs(a[j] - a[i]) > tau:
                    b = max(b, 1 + best_from(j))
        return b

    return best_from(0)


def _suffix_chain_sums(a: np.ndarray, q: float) -> np.ndarray:
    """Backward DP: D[i] = max chain increment sum over chains starting at i."""
    n = a.size
    D = np.zeros(n)
    for i in range(n - 2, -1, -1):
        D[i] = max(0.0, float(np.max(np.abs(a[i + 1 :] - a[i]) ** q + D[i + 1 :])))
    return D


def dyadic_vq_profile(
    sampler: Callable[[float], complex],
    t_max: float,
    q: float,
    n_max: int,
) -> np.ndarray:
    """Dyadic approximants to the continuous q-variation of t -> sampler(t).

    For each refinement level N = 1..n_max the value is the supremum over
    start offsets k >= 1 of the q-variation of the sampled tail sequence
    (a_{n 2^-N})_{n >= k} restricted to the grid n 2^-N <= t_max.  The
    returned profile is nondecreasing in N.  Cost grows like 4^N; levels
    above ``DYADIC_MAX_LEVEL`` are refused.
    """
    t_max = float(t_max)
    if not np.isfinite(t_max) or t_max <= 0.0:
        raise ParameterError(f"t_max must be positive, got {t_max}")
    q = _check_exponent(q)
    n_max = int(n_max)
    if n_max < 1 or n_max > DYADIC_MAX_LEVEL:
        raise ParameterError(
            f"refinement level must be in 1..{DYADIC_MAX_LEVEL}, got {n_max}"
        )
    profile = np.zeros(n_max)
    for level in range(1, n_max + 1):
        h = 2.0 ** (-level)
        m = int(np.floor(t_max / h + 1e-12))
        if m < 1:
            profile[level - 1] = 0.0
            continue
        pts = h * np.arange(1, m + 1)
        vals = np.array([sampler(float(t)) for t in pts], dtype=np.complex128)
        if not np.all(np.isfinite(vals)):
            raise InputError("sampler returned a non-finite value")
        D = _suffix_chain_sums(vals, q)
        starts = (np.abs(vals) ** q + D) ** (1.0 / q)
        profile[level - 1] = float(starts.max())
    return profile
