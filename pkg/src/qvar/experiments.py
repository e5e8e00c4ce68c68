"""Operator zoo and the variational-inequality verification harness.

The harness estimates, for an operator family (F_n)_n and random vectors x,
the ratio of the Bochner variation norm of the trajectory (F_n x)_{n<=m} to
||x||_p, per truncation m.  Ratios are lower bounds of the true constants;
verdicts therefore compare growth across truncations instead of asserting
absolute values.  All randomness is seeded and reports are deterministic up
to the runtime field.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import InputError, ParameterError
from .lp_model import (
    MatrixOperator,
    MeasureSpace,
    check_vector,
    difference_operator,
    ergodic_average,
    lp_norm,
    mean_ergodic_projection,
    oblique_null_projection,
    operator_pnorm,
)
from .semigroups import GeneratorModel, continuous_average, derivative_family, evolve
from .variation import check_block_partition

# ---------------------------------------------------------------------------
# operator zoo


def _shift_matrix(n: int) -> np.ndarray:
    s = np.zeros((n, n))
    s[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    return s


def lazy_symmetric_walk(n: int) -> MatrixOperator:
    """(1/2) I + (1/4)(S + S^-1) on uniform Z_n: self-adjoint, doubly
    stochastic, spectrum {(1 + cos(2 pi k / n)) / 2} in [0, 1]."""
    n = int(n)
    if n < 1:
        raise InputError(f"walk size must be positive, got {n}")
    s = _shift_matrix(n)
    return MatrixOperator(0.5 * np.eye(n) + 0.25 * (s + s.T), MeasureSpace.uniform(n))


def rotation_shift(n: int) -> MatrixOperator:
    """Cyclic coordinate shift on uniform Z_n: a measure-preserving isometry
    with unimodular spectrum (not analytic)."""
    n = int(n)
    if n < 1:
        raise InputError(f"shift size must be positive, got {n}")
    return MatrixOperator(_shift_matrix(n), MeasureSpace.uniform(n))


def convolution_operator(n: int, nu) -> MatrixOperator:
    """Circulant operator x -> nu * x from a probability vector on Z_n.

    ``nu`` is either a full length-n vector or a mapping offset -> weight
    (offsets taken mod n).
    """
    n = int(n)
    if n < 1:
        raise InputError(f"group size must be positive, got {n}")
    dense = np.zeros(n)
    if isinstance(nu, dict):
        for off, w in nu.items():
            dense[int(off) % n] += float(np.real_if_close(w))
    else:
        arr = np.asarray(nu, dtype=np.float64).ravel()
        if arr.size != n:
            raise InputError(
                f"kernel length {arr.size} does not match group size {n}"
            )
        dense = arr
    if np.any(dense < -1e-12) or abs(dense.sum() - 1.0) > 1e-12:
        raise InputError("convolution kernel must be a probability vector")
    mat = np.zeros((n, n))
    for j in range(n):
        mat[np.arange(n), (np.arange(n) - j) % n] = dense[j]
    return MatrixOperator(mat, MeasureSpace.uniform(n))


def random_positive_contraction(n: int, seed: int) -> MatrixOperator:
    """Random nonnegative matrix scaled so the p = 1 and p = infinity norms
    are both <= 1 (hence every intermediate p by interpolation)."""
    n = int(n)
    if n < 1:
        raise InputError(f"size must be positive, got {n}")
    rng = np.random.default_rng(int(seed))
    m = rng.uniform(0.0, 1.0, (n, n))
    scale = max(m.sum(axis=1).max(), m.sum(axis=0).max())
    return MatrixOperator(m / scale, MeasureSpace.uniform(n))


def diagonal_normal(spectrum) -> MatrixOperator:
    """Diagonal operator embedding a prescribed spectrum on a uniform space."""
    vals = np.asarray(spectrum, dtype=np.complex128).ravel()
    if vals.size < 1:
        raise InputError("spectrum must be nonempty")
    return MatrixOperator(np.diag(vals), MeasureSpace.uniform(vals.size))


def markov_generator_from(T: MatrixOperator) -> GeneratorModel:
    """Generator A = T - I; a Markov generator when T is row-stochastic."""
    return GeneratorModel(T.matrix - np.eye(T.size), T.space)


_ZOO = {
    "lazy_symmetric_walk": lazy_symmetric_walk,
    "rotation_shift": rotation_shift,
    "convolution": convolution_operator,
    "random_positive_contraction": random_positive_contraction,
    "diagonal_normal": diagonal_normal,
    "markov_generator_from": markov_generator_from,
}


def build_operator(zoo_id: str, **params):
    """Build a zoo member by name; see _ZOO for the catalogue."""
    if zoo_id not in _ZOO:
        raise InputError(
            f"unknown zoo operator {zoo_id!r}; known: {sorted(_ZOO)}"
        )
    try:
        return _ZOO[zoo_id](**params)
    except TypeError as exc:
        raise InputError(f"bad parameters for {zoo_id!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# families and configs

DISCRETE_KINDS = ("powers", "ergodic_averages", "differences")
CONTINUOUS_KINDS = ("continuous_powers", "continuous_averages", "derivative_family")


@dataclass(frozen=True)
class FamilySpec:
    """Operator family to feed the harness.

    Discrete kinds need a MatrixOperator base and index the family by n;
    continuous kinds need a GeneratorModel plus a master time grid and index
    it by the grid position.  ``order`` is the difference/derivative order m.
    """

    kind: str
    base: MatrixOperator | GeneratorModel
    order: int = 0
    time_grid: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in DISCRETE_KINDS + CONTINUOUS_KINDS:
            raise InputError(f"unknown family kind {self.kind!r}")
        if self.kind in DISCRETE_KINDS and not isinstance(self.base, MatrixOperator):
            raise InputError(f"family {self.kind!r} needs a matrix operator base")
        if self.kind in CONTINUOUS_KINDS:
            if not isinstance(self.base, GeneratorModel):
                raise InputError(f"family {self.kind!r} needs a generator base")
            if self.time_grid is None:
                raise InputError(f"family {self.kind!r} needs a time grid")
            grid = np.asarray(self.time_grid, dtype=np.float64).ravel()
            if np.any(~np.isfinite(grid)) or np.any(grid <= 0.0):
                raise InputError("time grid entries must be positive")
            if np.any(np.diff(grid) <= 0.0):
                raise InputError("time grid must be strictly increasing")
            object.__setattr__(self, "time_grid", grid)
        if self.order < 0:
            raise InputError(f"family order must be >= 0, got {self.order}")

    @property
    def space(self) -> MeasureSpace:
        return self.base.space

    def describe(self) -> dict:
        d = {"kind": self.kind, "size": self.base.size, "order": self.order}
        if self.time_grid is not None:
            d["time_grid"] = [float(t) for t in self.time_grid]
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    """Harness configuration; the seed is mandatory and fully determines the
    sample draws.  Verdict thresholds are declared here, not hard-coded."""

    p: float
    q: float
    truncations: tuple
    sample_budget: int
    seed: int
    ascent_steps: int = 0
    mode: str = "vq"
    blocks: tuple | None = None
    stability_threshold: float = 0.05
    growth_threshold: float = 1.0
    ascent_step_size: float = 1e-4
    jump_taus: tuple = (0.25, 1.0)
    chunk_size: int = 256

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 1.0):
            raise ParameterError(f"experiment exponent p must exceed 1, got {self.p}")
        if self.mode not in ("vq", "o2"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mode == "vq" and not self.q > 2.0:
            raise ParameterError(
                f"variation experiments need q > 2, got {self.q} "
                "(q = 2 is available through the o2 mode)"
            )
        truncs = tuple(int(t) for t in self.truncations)
        if len(truncs) == 0:
            raise ParameterError("need at least one truncation")
        if any(t < 2 for t in truncs):
            raise ParameterError("truncations must be >= 2")
        if any(b <= a for a, b in zip(truncs, truncs[1:])):
            raise ParameterError("truncations must be strictly increasing")
        object.__setattr__(self, "truncations", truncs)
        if self.sample_budget < 1:
            raise ParameterError("sample budget must be positive")
        if self.seed is None:
            raise ParameterError("seed is mandatory")
        if self.ascent_steps < 0:
            raise ParameterError("ascent step count must be >= 0")

    def echo(self) -> dict:
        d = {
            "p": float(self.p),
            "q": float(self.q),
            "mode": self.mode,
            "truncations": list(self.truncations),
            "sample_budget": int(self.sample_budget),
            "ascent_steps": int(self.ascent_steps),
            "seed": int(self.seed),
            "stability_threshold": float(self.stability_threshold),
            "growth_threshold": float(self.growth_threshold),
        }
        if self.blocks is not None:
            d["blocks"] = [int(b) for b in self.blocks]
        return d


# ---------------------------------------------------------------------------
# trajectory evaluation


def _family_rows(family: FamilySpec, truncations):
    """Map truncation indices to trajectory row indices.

    powers/averages/continuous kinds place element n at row n; the
    differences family starts at n = 1, so truncation m sits at row m - 1.
    """
    truncs = list(truncations)
    if family.kind == "differences":
        rows = [t - 1 for t in truncs]
        m1 = max(truncs)
    elif family.kind in DISCRETE_KINDS:
        rows = truncs
        m1 = max(truncs) + 1
    else:
        grid = family.time_grid
        if max(truncs) > grid.size - 1:
            raise InputError(
                f"truncation {max(truncs)} exceeds the time grid "
                f"(length {grid.size})"
            )
        rows = truncs
        m1 = max(truncs) + 1
    return rows, m1


def _continuous_matrices(family: FamilySpec, m1: int):
    g = family.base
    mats = []
    for t in family.time_grid[:m1]:
        if family.kind == "continuous_powers":
            mats.append(evolve(g, float(t)).matrix)
        elif family.kind == "continuous_averages":
            mats.append(continuous_average(g, float(t)).matrix)
        else:
            mats.append(derivative_family(g, float(t), family.order).matrix)
    return mats


def _build_trajectory(family: FamilySpec, X: np.ndarray, m1: int, mats=None):
    """Trajectory array (m1, N, B) of the family applied to sample columns."""
    n, b = X.shape
    out = np.empty((m1, n, b), dtype=np.complex128)
    if family.kind == "powers":
        cur = X.astype(np.complex128)
        out[0] = cur
        t = family.base.matrix
        for i in range(1, m1):
            cur = t @ cur
            out[i] = cur
    elif family.kind == "ergodic_averages":
        cur = X.astype(np.complex128)
        acc = cur.copy()
        out[0] = cur
        t = family.base.matrix
        for i in range(1, m1):
            cur = t @ cur
            acc = acc + cur
            out[i] = acc / (i + 1)
    elif family.kind == "differences":
        t = family.base.matrix
        w = X.astype(np.complex128)
        for _ in range(family.order):
            w = t @ w - w
        cur = w
        for i in range(m1):
            cur = t @ cur  # element n = i + 1 is n^order T^n w
            out[i] = ((i + 1) ** family.order) * cur
    else:
        for i in range(m1):
            out[i] = mats[i] @ X
    return out


def _resolve_blocks(cfg: ExperimentConfig, m1: int) -> np.ndarray:
    if cfg.blocks is None:
        return np.arange(m1, dtype=np.int64)  # singleton-gap blocks
    return check_block_partition(np.asarray(cfg.blocks, dtype=np.int64), m1)


def _pointwise_norms(traj, rows, spec_kind, q_or_blocks):
    """Pointwise prefix seminorms of a trajectory chunk.

    traj: (m1, N, B); returns (T, N, B) with the trajectory seminorm of each
    atom/sample pair at every requested prefix row.
    """
    m1, n, b = traj.shape
    flat = np.ascontiguousarray(traj.reshape(m1, n * b).T)
    if spec_kind == "vq":
        q = q_or_blocks
        best = _kernels.chain_sum_prefixes(flat, q, rows)
        anchor = np.abs(traj[0]) ** q
        return (anchor[None, :, :] + best.reshape(-1, n, b)) ** (1.0 / q)
    blocks = q_or_blocks
    sums = _kernels.oscillation_prefixes(flat, blocks, rows)
    anchor = np.abs(traj[0]) ** 2
    return np.sqrt(anchor[None, :, :] + sums.reshape(-1, n, b))


def _bochner_over_atoms(space: MeasureSpace, pointwise, p: float):
    """Weighted p-norm over the atom axis of a (T, N, B) array."""
    if p == np.inf:
        return pointwise.max(axis=1)
    w = space.weights[None, :, None]
    return ((w * pointwise**p).sum(axis=1)) ** (1.0 / p)


@dataclass
class _Best:
    value: float = -np.inf
    witness: np.ndarray | None = None


def _norm_spec(cfg: ExperimentConfig, m1: int):
    if cfg.mode == "vq":
        return ("vq", float(cfg.q))
    return ("o2", _resolve_blocks(cfg, m1))


def _objective_batch(family, cfg, spec, rows, m1, mats, X):
    """Per-sample ratios (T, B) for a batch of sample columns."""
    traj = _build_trajectory(family, X, m1, mats)
    pointwise = _pointwise_norms(traj, rows, spec[0], spec[1])
    boch = _bochner_over_atoms(family.space, pointwise, cfg.p)
    xn = np.array([lp_norm(family.space, X[:, j], cfg.p) for j in range(X.shape[1])])
    return boch / xn[None, :]


def _ascend(family, cfg, spec, row, m1_row, mats, witness, value):
    """Finite-difference projected gradient ascent from the best sample.

    Central differences over the 2N real coordinates, one batched kernel
    call per gradient; step backtracking by halving; stops after
    ``ascent_steps`` rounds or a relative gain below 1e-6.
    """
    n = witness.size
    x = witness.copy()
    val = float(value)
    h = 1e-7
    for _ in range(cfg.ascent_steps):
        cols = [x]
        for i in range(n):
            e = np.zeros(n, dtype=np.complex128)
            e[i] = h
            cols.extend([x + e, x - e, x + 1j * e, x - 1j * e])
        batch = np.stack(cols, axis=1)
        vals = _objective_batch(family, cfg, spec, [row], m1_row, mats, batch)[0]
        grad = np.empty(n, dtype=np.complex128)
        for i in range(n):
            re = (vals[1 + 4 * i] - vals[2 + 4 * i]) / (2 * h)
            im = (vals[3 + 4 * i] - vals[4 + 4 * i]) / (2 * h)
            grad[i] = re + 1j * im
        gn = np.linalg.norm(grad)
        if gn == 0.0:
            break
        direction = grad / gn
        steps = cfg.ascent_step_size * 0.5 ** np.arange(8)
        cand = np.stack([x + s * direction for s in steps], axis=1)
        cvals = _objective_batch(family, cfg, spec, [row], m1_row, mats, cand)[0]
        k = int(np.argmax(cvals))
        if cvals[k] <= val * (1.0 + 1e-6):
            break
        x = cand[:, k]
        val = float(cvals[k])
    return x, val


def _run_experiment(family: FamilySpec, cfg: ExperimentConfig, specs):
    """Shared engine: one pass over seeded samples, any number of norm specs.

    Returns, per spec, a list of per-truncation (constant, witness) pairs.
    The per-sample prefix values are nondecreasing in the truncation, so the
    reported maxima are as well.
    """
    rows, m1 = _family_rows(family, cfg.truncations)
    mats = None
    if family.kind in CONTINUOUS_KINDS:
        mats = _continuous_matrices(family, m1)
    n = family.space.size
    rng = np.random.default_rng(cfg.seed)
    draws = rng.standard_normal((n, cfg.sample_budget)) + 1j * rng.standard_normal(
        (n, cfg.sample_budget)
    )
    best = {s: [_Best() for _ in rows] for s in range(len(specs))}
    for lo in range(0, cfg.sample_budget, cfg.chunk_size):
        X = draws[:, lo : lo + cfg.chunk_size]
        traj = _build_trajectory(family, X, m1, mats)
        xn = np.array([lp_norm(family.space, X[:, j], cfg.p) for j in range(X.shape[1])])
        for si, spec in enumerate(specs):
            pointwise = _pointwise_norms(traj, rows, spec[0], spec[1])
            ratios = _bochner_over_atoms(family.space, pointwise, cfg.p) / xn[None, :]
            for ti in range(len(rows)):
                j = int(np.argmax(ratios[ti]))
                if ratios[ti, j] > best[si][ti].value:
                    best[si][ti] = _Best(float(ratios[ti, j]), X[:, j].copy())
    results = []
    for si, spec in enumerate(specs):
        per_trunc = []
        for ti, row in enumerate(rows):
            b = best[si][ti]
            wit, val = b.witness, b.value
            if cfg.ascent_steps > 0:
                wit, val = _ascend(
                    family, cfg, spec, row, row + 1, mats, wit, val
                )
            wit = wit / lp_norm(family.space, wit, cfg.p)
            per_trunc.append((val, wit))
        results.append(per_trunc)
    return results


def _verdict(constants, cfg: ExperimentConfig) -> str:
    first, last = constants[0], constants[-1]
    if first <= 0.0:
        return "inconclusive"
    growth = last / first - 1.0
    if growth < cfg.stability_threshold:
        return "stable"
    if growth > cfg.growth_threshold:
        return "growing"
    return "inconclusive"


def _jump_check(family, cfg: ExperimentConfig, witness: np.ndarray, constant: float):
    """Jump-count corollary on the reported witness trajectory.

    Checks tau^q N <= (pointwise q-variation)^q atomwise and the resulting
    L^p bound ||N^(1/q)||_p <= constant ||x||_p / tau, for each configured
    tau, at the largest truncation.
    """
    q = cfg.q if cfg.mode == "vq" else 2.0
    rows, m1 = _family_rows(family, cfg.truncations)
    mats = _continuous_matrices(family, m1) if family.kind in CONTINUOUS_KINDS else None
    traj = _build_trajectory(family, witness[:, None], m1, mats)[:, :, 0]
    row = rows[-1]
    prefix = np.ascontiguousarray(traj[: row + 1].T)
    best = _kernels.chain_sum_prefixes(prefix, q, [row])[0]
    vq_pointwise = (np.abs(traj[0]) ** q + best) ** (1.0 / q)
    xnorm = lp_norm(family.space, witness, cfg.p)
    out = []
    for tau in cfg.jump_taus:
        counts = _kernels.jump_counts(prefix, float(tau)).astype(np.float64)
        pointwise_ok = bool(np.all(tau**q * counts <= vq_pointwise**q + 1e-9))
        lhs = lp_norm(family.space, counts ** (1.0 / q), cfg.p)
        rhs = constant * xnorm / tau
        out.append(
            {
                "tau": float(tau),
                "pointwise_ok": pointwise_ok,
                "lp_bound": float(lhs),
                "lp_limit": float(rhs),
                "lp_ok": bool(lhs <= rhs + 1e-9),
            }
        )
    return out


@dataclass
class Report:
    """Structured record of one harness run."""

    config: dict
    family: dict
    constants: list
    witness: dict
    verdict: str
    jump_check: list
    runtime_seconds: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "family": self.family,
            "constants": self.constants,
            "witness": self.witness,
            "verdict": self.verdict,
            "jump_check": self.jump_check,
            "runtime_seconds": self.runtime_seconds,
        }


def _encode_vector(x: np.ndarray):
    return [[float(v.real), float(v.imag)] for v in x]


def empirical_constant(family: FamilySpec, cfg: ExperimentConfig) -> Report:
    """Estimate the per-truncation Bochner-norm constants of a family.

    For each truncation m the constant is the sampled (plus optional ascent)
    maximum of ||(F_n x)_{n<=m}||_{L^p(v^q_m)} / ||x||_p; the verdict
    compares the largest truncation against the smallest with the declared
    thresholds.
    """
    start = time.monotonic()
    rows_check, m1 = _family_rows(family, cfg.truncations)
    del rows_check
    spec = _norm_spec(cfg, m1)
    (per_trunc,) = _run_experiment(family, cfg, [spec])
    constants = [
        {"truncation": int(t), "constant": float(v)}
        for t, (v, _) in zip(cfg.truncations, per_trunc)
    ]
    values = [c["constant"] for c in constants]
    verdict = _verdict(values, cfg)
    best_val, best_wit = per_trunc[-1]
    witness = {
        "truncation": int(cfg.truncations[-1]),
        "ratio": float(best_val),
        "vector": _encode_vector(best_wit),
    }
    jumps = _jump_check(family, cfg, best_wit, best_val)
    runtime = time.monotonic() - start
    return Report(
        cfg.echo(), family.describe(), constants, witness, verdict, jumps, runtime
    )


@dataclass
class SweepReport:
    config: dict
    family: dict
    truncation: int
    rows: list
    runtime_seconds: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "family": self.family,
            "truncation": self.truncation,
            "rows": self.rows,
            "runtime_seconds": self.runtime_seconds,
        }


def q_sweep(
    family: FamilySpec,
    cfg: ExperimentConfig,
    q_list,
    o2_point: bool = False,
) -> SweepReport:
    """Per-q empirical constants at the largest configured truncation.

    ``q_list`` must decrease strictly toward 2 and stay above it; the
    constants are nondecreasing as q decreases because every sample's
    q-variation is.  With ``o2_point`` an oscillation-norm run (blocks from
    the config, exponent 2) is appended as the q = 2 reference row.
    """
    start = time.monotonic()
    qs = [float(q) for q in q_list]
    if any(q <= 2.0 for q in qs):
        raise ParameterError(
            "sweep exponents must stay above 2; the q = 2 endpoint is only "
            "available as the o2-mode reference point"
        )
    if any(b >= a for a, b in zip(qs, qs[1:])):
        raise ParameterError("sweep exponents must be strictly decreasing")
    trunc = cfg.truncations[-1]
    run_cfg = replace(cfg, truncations=(trunc,), mode="vq", q=qs[0])
    _, m1 = _family_rows(family, (trunc,))
    specs = [("vq", q) for q in qs]
    if o2_point:
        specs.append(("o2", _resolve_blocks(cfg, m1)))
    results = _run_experiment(family, run_cfg, specs)
    rows = []
    for i, q in enumerate(qs):
        rows.append({"q": float(q), "constant": float(results[i][0][0])})
    if o2_point:
        rows.append({"q": 2.0, "constant": float(results[-1][0][0]), "mode": "o2"})
    runtime = time.monotonic() - start
    return SweepReport(cfg.echo(), family.describe(), int(trunc), rows, runtime)


# ---------------------------------------------------------------------------
# square functions, telescoping, convergence, transference


@dataclass(frozen=True)
class SquareFunctionResult:
    s_value: float
    phi_value: float
    tail_last_term: float


def square_function(
    base, x, m: int, n_terms: int, p: float
) -> SquareFunctionResult:
    """Truncated square functions of the ergodic averages and differences.

    S(x) = (sum_{n>=1} n |M_{n+1} x - M_n x|^2)^(1/2) and Phi_m(x) =
    (sum_{n=0}^{N} (n+1)^(2m+1) |T^n (T-I)^(m+1) x|^2)^(1/2), both summed to
    ``n_terms`` and measured in L^p.  ``tail_last_term`` is the larger of
    the two final summands' pointwise maxima, a truncation diagnostic.
    """
    T = base if isinstance(base, MatrixOperator) else evolve(base, 1.0)
    m = int(m)
    n_terms = int(n_terms)
    if m < 0:
        raise ParameterError(f"order must be >= 0, got {m}")
    if n_terms < 1 or n_terms > 10**4:
        raise ParameterError(f"series length must be in 1..1e4, got {n_terms}")
    v = check_vector(T.space, x)
    t = T.matrix
    # averages square function
    s2 = np.zeros(T.size)
    power = v.copy()
    acc = v.copy()
    m_prev = v.copy()
    s_last = np.zeros(T.size)
    for j in range(1, n_terms + 2):
        power = t @ power
        acc = acc + power
        m_cur = acc / (j + 1)
        n = j - 1
        if n >= 1:
            s_last = n * np.abs(m_cur - m_prev) ** 2
            s2 += s_last
        m_prev = m_cur
    # difference square function
    y = v.copy()
    for _ in range(m + 1):
        y = t @ y - y
    phi2 = np.abs(y) ** 2  # n = 0 term, weight 1
    d = y
    phi_last = phi2.copy()
    for n in range(1, n_terms + 1):
        d = t @ d
        phi_last = float(n + 1) ** (2 * m + 1) * np.abs(d) ** 2
        phi2 += phi_last
    s_value = lp_norm(T.space, np.sqrt(s2), p)
    phi_value = lp_norm(T.space, np.sqrt(phi2), p)
    tail = max(float(s_last.max()), float(phi_last.max()))
    return SquareFunctionResult(float(s_value), float(phi_value), float(tail))


def square_function_spectral_p2(T: MatrixOperator, x, m: int, n_terms: int) -> float:
    """Spectral oracle for ||Phi_m(x)||_2 on normal operators.

    Expands x in the orthonormal eigenbasis of the weighted similarity and
    sums |xhat_k|^2 (n+1)^(2m+1) |lambda_k|^(2n) |1-lambda_k|^(2m+2) directly.
    """
    from scipy.linalg import schur

    if T.normality_defect > 1e-8:
        raise ParameterError("spectral oracle needs a normal operator")
    v = check_vector(T.space, x)
    r, z = schur(T.similarity, output="complex")
    lam = np.diag(r)
    xhat = z.conj().T @ (T.space.sqrt_weights * v)
    n = np.arange(0, int(n_terms) + 1)[:, None]
    terms = (
        (n + 1.0) ** (2 * m + 1)
        * np.abs(lam)[None, :] ** (2 * n)
        * np.abs(1.0 - lam)[None, :] ** (2 * (m + 1))
    )
    return float(np.sqrt((np.abs(xhat) ** 2 * terms.sum(axis=0)).sum()))


def telescoping_check(T: MatrixOperator, n: int, N: int, m: int) -> float:
    """Maximum entrywise defect of the telescoping identities.

    Checks Delta_N^m - Delta_n^m = sum_{j=n}^{N-1} Delta_j^(m+1) for the
    given 0 <= n < N and m >= -1, and additionally the doubling identity
    n^m Delta_{2n+1}^m = n^(m-1) sum_{j=n}^{2n} (j+1) Delta_j^(m+1)
    - n^(m-1)(n+1)(Delta_{2n+1}^m - Delta_n^m) + n^(m-1) Delta_{2n+1}^(m-1)
    - n^(m-1) Delta_{n+1}^(m-1) when n >= 1 and m >= 1.
    """
    n = int(n)
    N = int(N)
    m = int(m)
    if m < -1:
        raise ParameterError(f"difference order must be >= -1, got {m}")
    if not 0 <= n < N:
        raise ParameterError(f"need 0 <= n < N, got n={n}, N={N}")
    if m == -1 and n < 1:
        raise ParameterError("the m = -1 identity needs n >= 1")
    delta = lambda j, mm: difference_operator(T, j, mm).matrix  # noqa: E731
    lhs = delta(N, m) - delta(n, m)
    rhs = np.zeros_like(lhs)
    step = np.linalg.matrix_power(T.matrix - np.eye(T.size), m + 1)
    cur = np.linalg.matrix_power(T.matrix, n) @ step
    for j in range(n, N):
        rhs = rhs + cur
        cur = T.matrix @ cur
    defect = float(np.abs(lhs - rhs).max())
    if n >= 1 and m >= 1:
        lhs2 = float(n) ** m * delta(2 * n + 1, m)
        w = np.zeros_like(lhs2)
        cur = np.linalg.matrix_power(T.matrix, n) @ step
        for j in range(n, 2 * n + 1):
            w = w + (j + 1) * cur
            cur = T.matrix @ cur
        nm1 = float(n) ** (m - 1)
        rhs2 = (
            nm1 * w
            - nm1 * (n + 1) * (delta(2 * n + 1, m) - delta(n, m))
            + nm1 * delta(2 * n + 1, m - 1)
            - nm1 * delta(n + 1, m - 1)
        )
        defect = max(defect, float(np.abs(lhs2 - rhs2).max()))
    return defect


_MODES_DISCRETE = ("powers", "averages")
_MODES_CONTINUOUS = ("continuous_powers", "continuous_averages", "t_to_zero")


def pointwise_convergence(base, x, mode: str, schedule) -> np.ndarray:
    """Sup-distance over atoms between the family applied to x and its limit.

    Discrete modes converge to the mean ergodic projection of x; continuous
    modes to the generator's fixed-space projection; ``t_to_zero`` measures
    T_t x against x itself.  On a finite model almost-everywhere convergence
    is sup-convergence.
    """
    if mode in _MODES_DISCRETE:
        if not isinstance(base, MatrixOperator):
            raise InputError(f"mode {mode!r} needs a matrix operator")
        v = check_vector(base.space, x)
        steps = [int(s) for s in schedule]
        if any(s < 0 for s in steps):
            raise ParameterError("schedule entries must be >= 0")
        proj, _ = mean_ergodic_projection(base)
        limit = proj.matrix @ v
        need = max(steps) if steps else 0
        t = base.matrix
        powers = {0: v}
        cur = v.copy()
        acc = v.copy()
        averages = {0: v}
        for j in range(1, need + 1):
            cur = t @ cur
            acc = acc + cur
            powers[j] = cur
            averages[j] = acc / (j + 1)
        table = powers if mode == "powers" else averages
        return np.array([float(np.abs(table[s] - limit).max()) for s in steps])
    if mode not in _MODES_CONTINUOUS:
        raise InputError(f"unknown convergence mode {mode!r}")
    if not isinstance(base, GeneratorModel):
        raise InputError(f"mode {mode!r} needs a generator")
    v = check_vector(base.space, x)
    times = [float(s) for s in schedule]
    if any(not np.isfinite(s) or s <= 0.0 for s in times):
        raise ParameterError("schedule times must be positive")
    if mode == "t_to_zero":
        limit = v
    else:
        limit = oblique_null_projection(base.matrix, base.space) @ v
    out = []
    for t in times:
        if mode == "continuous_averages":
            ft = continuous_average(base, t).matrix @ v
        else:
            ft = evolve(base, t).matrix @ v
        out.append(float(np.abs(ft - limit).max()))
    return np.array(out)


@dataclass(frozen=True)
class TransferenceResult:
    lhs: float
    rhs: float
    ok: bool
    grid_size: int


def transference_check_p2(kernel, n: int, min_grid: int = 4096) -> TransferenceResult:
    """Scalar p = 2 transference instance on the cyclic group Z_n.

    lhs is the L^2 operator norm of sum_j h_j U^j with U the rotation shift
    (computed by SVD); rhs is the sup of |h_hat| over a unit-circle grid that
    contains all n-th roots of unity, so lhs <= rhs always holds.
    """
    n = int(n)
    if n < 1:
        raise InputError(f"group size must be positive, got {n}")
    if isinstance(kernel, dict):
        items = {int(j): complex(c) for j, c in kernel.items()}
    else:
        items = {j: complex(c) for j, c in enumerate(np.asarray(kernel).ravel())}
    if not items:
        raise InputError("kernel must have at least one coefficient")
    if any(abs(j) >= n / 2 for j in items):
        raise InputError(
            f"kernel support must lie strictly inside (-{n}/2, {n}/2)"
        )
    u = rotation_shift(n)
    mat = np.zeros((n, n), dtype=np.complex128)
    for j, c in items.items():
        mat += c * np.linalg.matrix_power(u.matrix, j % n)
    lhs = operator_pnorm(MatrixOperator(mat, u.space), 2.0).upper
    grid = n * max(1, int(np.ceil(min_grid / n)))
    theta = 2.0 * np.pi * np.arange(grid) / grid
    hhat = np.zeros(grid, dtype=np.complex128)
    for j, c in items.items():
        hhat += c * np.exp(1j * j * theta)
    rhs = float(np.abs(hhat).max())
    return TransferenceResult(float(lhs), rhs, bool(lhs <= rhs + 1e-9), grid)
