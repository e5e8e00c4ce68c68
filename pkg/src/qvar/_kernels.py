"""Batched chain-sum kernels behind the Bochner norms and the experiment
harness.

Trajectories are laid out as (K, m+1) row-contiguous arrays, one row per
(atom, sample) column of the experiment, so the O(m^2) inner loop streams
each row.  Kernels are compiled with numba when available and fall back to a
vectorized numpy path otherwise; both paths are exercised by the tests.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import config as _numba_config
    from numba import njit, prange

    # workqueue is always available and avoids TBB version warnings
    _numba_config.THREADING_LAYER = "workqueue"

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range


_QCODES = {1.0: 1, 1.5: 15, 2.0: 2, 3.0: 3, 4.0: 4}


def _qcode(q: float) -> int:
    return _QCODES.get(float(q), 0)


def _modulus_power_np(a2: np.ndarray, q: float) -> np.ndarray:
    """|z|^q from |z|^2, avoiding np.power for the common exponents."""
    code = _qcode(q)
    if code == 2:
        return a2
    if code == 1:
        return np.sqrt(a2)
    if code == 3:
        return a2 * np.sqrt(a2)
    if code == 4:
        return a2 * a2
    if code == 15:
        return np.sqrt(a2 * np.sqrt(a2))
    return a2 ** (0.5 * q)


@njit(cache=True, fastmath=True, parallel=True)
def _chain_sums_numba(re, im, q, qcode, truncs, out):  # pragma: no cover
    K, m1 = re.shape
    n_t = truncs.shape[0]
    for k in prange(K):
        E = np.empty(m1)
        E[0] = 0.0
        run = 0.0
        ti = 0
        while ti < n_t and truncs[ti] == 0:
            out[ti, k] = 0.0
            ti += 1
        for j in range(1, m1):
            rj = re[k, j]
            ij = im[k, j]
            e = -1.0e300
            for i in range(j):
                dr = rj - re[k, i]
                di = ij - im[k, i]
                a2 = dr * dr + di * di
                if qcode == 2:
                    w = a2
                elif qcode == 3:
                    w = a2 * np.sqrt(a2)
                elif qcode == 1:
                    w = np.sqrt(a2)
                elif qcode == 4:
                    w = a2 * a2
                elif qcode == 15:
                    w = np.sqrt(a2 * np.sqrt(a2))
                else:
                    w = a2 ** (0.5 * q)
                v = E[i] + w
                if v > e:
                    e = v
            E[j] = e
            if e > run:
                run = e
            while ti < n_t and truncs[ti] == j:
                out[ti, k] = run
                ti += 1


def _chain_sums_numpy(traj: np.ndarray, q: float, truncs: np.ndarray) -> np.ndarray:
    K, m1 = traj.shape
    out = np.zeros((truncs.size, K))
    E = np.zeros((m1, K))
    run = np.zeros(K)
    lookup = {int(t): i for i, t in enumerate(truncs)}
    if 0 in lookup:
        out[lookup[0]] = 0.0
    for j in range(1, m1):
        a2 = np.abs(traj[:, j][None, :] - traj[:, :j].T) ** 2
        cand = E[:j] + _modulus_power_np(a2, q)
        E[j] = cand.max(axis=0)
        np.maximum(run, E[j], out=run)
        if j in lookup:
            out[lookup[j]] = run
    return out


def chain_sum_prefixes(traj: np.ndarray, q: float, truncations) -> np.ndarray:
    """Best chain increment sums max(0, max over chains within [0, m]) for
    each requested prefix length m.

    traj: (K, m+1) complex or real rows; truncations: increasing indices
    <= m.  Returns a (len(truncations), K) float array.  Adding |a_0|^q and
    taking the (1/q)-th power yields the q-variation of each prefix.
    """
    traj = np.ascontiguousarray(traj)
    truncs = np.asarray(truncations, dtype=np.int64).ravel()
    if truncs.size == 0:
        return np.zeros((0, traj.shape[0]))
    if np.any(np.diff(truncs) <= 0):
        raise ValueError("truncation indices must be strictly increasing")
    if truncs[0] < 0 or truncs[-1] > traj.shape[1] - 1:
        raise ValueError("truncation index out of range")
    if not HAVE_NUMBA:
        return _chain_sums_numpy(traj, float(q), truncs)
    re = np.ascontiguousarray(traj.real, dtype=np.float64)
    if np.iscomplexobj(traj):
        im = np.ascontiguousarray(traj.imag, dtype=np.float64)
    else:
        im = np.zeros_like(re)
    out = np.empty((truncs.size, traj.shape[0]))
    _chain_sums_numba(re, im, float(q), _qcode(q), truncs, out)
    return out


@njit(cache=True, fastmath=True, parallel=True)
def _osc_sums_numba(re, im, bounds, truncs, out):  # pragma: no cover
    K, m1 = re.shape
    n_t = truncs.shape[0]
    n_b = bounds.shape[0]
    for k in prange(K):
        for ti in range(n_t):
            m = truncs[ti]
            total = 0.0
            for b in range(n_b - 1):
                lo = bounds[b]
                hi = bounds[b + 1]
                if lo >= m:
                    break
                if hi > m:
                    hi = m
                best = 0.0
                for i in range(lo, hi + 1):
                    ri = re[k, i]
                    ii = im[k, i]
                    for j in range(i + 1, hi + 1):
                        dr = re[k, j] - ri
                        di = im[k, j] - ii
                        a2 = dr * dr + di * di
                        if a2 > best:
                            best = a2
                total += best
            out[ti, k] = total


def _osc_sums_numpy(traj, bounds, truncs):
    K, m1 = traj.shape
    out = np.zeros((truncs.size, K))
    for ti, m in enumerate(truncs):
        total = np.zeros(K)
        for b in range(bounds.size - 1):
            lo = int(bounds[b])
            hi = min(int(bounds[b + 1]), int(m))
            if lo >= m:
                break
            block = traj[:, lo : hi + 1]
            d = np.abs(block[:, :, None] - block[:, None, :]) ** 2
            total += d.reshape(K, -1).max(axis=1)
        out[ti] = total
    return out


def oscillation_prefixes(traj: np.ndarray, boundaries, truncations) -> np.ndarray:
    """Blockwise squared-oscillation sums for each prefix length.

    Blocks past a truncation contribute nothing (constant extension); a
    block straddling the truncation is clipped to it.  Adding |a_0|^2 and a
    square root yields the oscillation norm of each prefix.
    """
    traj = np.ascontiguousarray(traj)
    truncs = np.asarray(truncations, dtype=np.int64).ravel()
    bounds = np.asarray(boundaries, dtype=np.int64).ravel()
    if not HAVE_NUMBA:
        return _osc_sums_numpy(traj, bounds, truncs)
    re = np.ascontiguousarray(traj.real, dtype=np.float64)
    if np.iscomplexobj(traj):
        im = np.ascontiguousarray(traj.imag, dtype=np.float64)
    else:
        im = np.zeros_like(re)
    out = np.empty((truncs.size, traj.shape[0]))
    _osc_sums_numba(re, im, bounds, truncs, out)
    return out


@njit(cache=True, fastmath=True, parallel=True)
def _jump_counts_numba(re, im, tau, out):  # pragma: no cover
    K, m1 = re.shape
    tau2 = tau * tau
    for k in prange(K):
        count = 0
        start = 0
        while start < m1 - 1:
            hit = -1
            for j in range(start + 1, m1):
                rj = re[k, j]
                ij = im[k, j]
                for i in range(start, j):
                    dr = rj - re[k, i]
                    di = ij - im[k, i]
                    if dr * dr + di * di > tau2:
                        hit = j
                        break
                if hit >= 0:
                    break
            if hit < 0:
                break
            count += 1
            start = hit
        out[k] = count


def jump_counts(traj: np.ndarray, tau: float) -> np.ndarray:
    """Greedy chained-pair jump counts, one per trajectory row."""
    traj = np.ascontiguousarray(traj)
    if not HAVE_NUMBA:
        from .variation import jump_count

        return np.array([jump_count(row, tau) for row in traj], dtype=np.int64)
    re = np.ascontiguousarray(traj.real, dtype=np.float64)
    if np.iscomplexobj(traj):
        im = np.ascontiguousarray(traj.imag, dtype=np.float64)
    else:
        im = np.zeros_like(re)
    out = np.empty(traj.shape[0], dtype=np.int64)
    _jump_counts_numba(re, im, float(tau), out)
    return out
