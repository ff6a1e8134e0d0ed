"""Quadratic bias extrapolation.

Finite-sample MI estimates carry a bias that is well described, for large
trial counts, by estimate = I + A/n_t + B/n_t**2.  The estimate is therefore
recomputed on stratified subsamples of decreasing size and a least-squares
quadratic in 1/n_t is fit; the intercept is the bias-corrected value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, derived_seed, subsample_indices
from .estimators import (
    HistogramConfig,
    KernelConfig,
    KsgConfig,
    bin_ids,
    contingency,
    kernel_bits_from_counts,
    ksg_mi,
    plugin_mi_bits,
)
from .metrics import DistanceMatrix

DEFAULT_LAMBDAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_REPEATS = 10


@dataclass(frozen=True)
class BiasFit:
    """Coefficients of the fitted expansion bits = I + A/n_t + B/n_t**2.

    ``intercept_bits`` is the extrapolated (bias-corrected) estimate;
    ``residual`` is the sum of squared fit residuals.
    """

    intercept_bits: float
    A_bits: float
    B_bits: float
    residual: float


def _kernel_bits_subset(
    full_orders: np.ndarray,
    labels: np.ndarray,
    subset: np.ndarray,
    n_s: int,
    n_h: int,
) -> float:
    # Filtering a full (distance, index)-stable neighbor order down to the
    # subset reproduces the subset's own neighbor order exactly, because
    # subsetting preserves the relative order of equal distances.
    member = np.zeros(labels.size, dtype=bool)
    member[subset] = True
    c = np.empty(subset.size, dtype=np.int64)
    for k in range(subset.size):
        row = full_orders[subset[k]]
        nearest = row[member[row]][:n_h]
        c[k] = np.count_nonzero(labels[nearest] == labels[subset[k]])
    return kernel_bits_from_counts(c, n_s, n_h)


def _sub_bandwidth(config: KernelConfig, n_r_full: int, n_r_sub: int) -> int:
    # Hold the mass fraction constant as the dataset shrinks.  Count-based
    # configs scale by exact integer arithmetic so that lam = 1 recovers the
    # configured n_h bit for bit.
    if config.n_h is not None:
        n_h = (config.n_h * n_r_sub) // n_r_full
    else:
        n_h = math.floor(config.h * n_r_sub)
    if n_h < 1:
        raise ValueError(
            f"bandwidth resolves to zero points on a subsample of {n_r_sub}"
        )
    return n_h


def subsample_curve(
    d: LabeledDataset,
    dm: DistanceMatrix | None,
    config,
    lambdas=DEFAULT_LAMBDAS,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
) -> list[tuple[int, float]]:
    """Mean MI estimate at each subsampled size: [(n_t_sub, mean_bits), ...].

    Each fraction lam keeps floor(lam * n_t) trials per stimulus; fractions
    below 2 trials are rejected.  For lam < 1 the mean is over ``repeats``
    independent stratified subsamples (substreams derived from (seed,
    lambda-index, repeat-index), so results do not depend on evaluation
    order); lam = 1 is computed once.  Kernel bandwidths given as a count are
    converted to the equivalent fraction of the full dataset so the
    estimator keeps its character as the subsample shrinks.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    lambdas = tuple(lambdas)
    if not lambdas:
        raise ValueError("no subsample fractions given")
    sizes = []
    for lam in lambdas:
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"subsample fraction must be in (0, 1], got {lam}")
        n_t_sub = math.floor(lam * d.n_t)
        if n_t_sub < 2:
            raise ValueError(
                f"fraction {lam} leaves {n_t_sub} < 2 trials per stimulus"
            )
        sizes.append(n_t_sub)

    if isinstance(config, KernelConfig):
        if dm is None:
            raise ValueError("kernel estimation needs a distance matrix")
        full_orders = np.argsort(dm.values, axis=1, kind="stable")

        def estimate(subset: np.ndarray) -> float:
            n_h = _sub_bandwidth(config, d.n_r, subset.size)
            return _kernel_bits_subset(full_orders, d.labels, subset, d.n_s, n_h)

    elif isinstance(config, HistogramConfig):
        ids = bin_ids(d.vectors, config)
        n_bins = int(ids.max()) + 1

        def estimate(subset: np.ndarray) -> float:
            table = contingency(ids[subset], d.labels[subset], n_bins, d.n_s)
            return plugin_mi_bits(table[table.any(axis=1)])

    elif isinstance(config, KsgConfig):
        if dm is None:
            raise ValueError("ksg estimation needs a distance matrix")

        def estimate(subset: np.ndarray) -> float:
            return ksg_mi(d.take(subset), dm.submatrix(subset), config).bits

    else:
        raise TypeError(f"unsupported estimator config {type(config).__name__}")

    curve = []
    for li, (lam, n_t_sub) in enumerate(zip(lambdas, sizes)):
        if n_t_sub == d.n_t:
            values = [estimate(np.arange(d.n_r, dtype=np.intp))]
        else:
            values = []
            for ri in range(repeats):
                idx = subsample_indices(d, lam, derived_seed(seed, li, ri))
                values.append(estimate(idx))
        curve.append((n_t_sub, float(np.mean(np.asarray(values)))))
    return curve


def _solve3(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # Gaussian elimination with partial pivoting, kept in long double.
    m = np.concatenate([g, rhs[:, None]], axis=1)
    for col in range(3):
        pivot = col + int(np.argmax(np.abs(m[col:, col])))
        if m[pivot, col] == 0:
            raise ValueError("rank-deficient fit: need 3 distinct subsample sizes")
        if pivot != col:
            m[[col, pivot]] = m[[pivot, col]]
        for row in range(col + 1, 3):
            m[row] -= (m[row, col] / m[col, col]) * m[col]
    beta = np.zeros(3, dtype=np.longdouble)
    for row in (2, 1, 0):
        beta[row] = (m[row, 3] - m[row, row + 1 : 3] @ beta[row + 1 :]) / m[row, row]
    return beta


def quadratic_extrapolate(curve) -> BiasFit:
    """Ordinary least squares of bits against (1, 1/n_t, 1/n_t**2).

    Needs at least three distinct subsample sizes.  Solved by normal
    equations in long double on the design centered in 1/n_t, which recovers
    exact quadratics to well below 1e-9.
    """
    sizes = np.asarray([p[0] for p in curve], dtype=np.float64)
    bits = np.asarray([p[1] for p in curve], dtype=np.float64)
    if np.unique(sizes).size < 3:
        raise ValueError(
            f"need >= 3 distinct subsample sizes, got {np.unique(sizes).size}"
        )
    u = 1.0 / sizes.astype(np.longdouble)
    y = bits.astype(np.longdouble)
    center = u.mean()
    uc = u - center
    cols = np.stack([np.ones_like(uc), uc, uc * uc])
    gram = cols @ cols.T
    rhs = cols @ y
    b0, b1, b2 = _solve3(gram, rhs)
    fitted = b0 + b1 * uc + b2 * uc * uc
    residual = float(((y - fitted) ** 2).sum())
    # translate back from the centered variable: bits = I + A*u + B*u^2
    intercept = float(b0 - b1 * center + b2 * center * center)
    a_coeff = float(b1 - 2.0 * b2 * center)
    b_coeff = float(b2)
    return BiasFit(intercept, a_coeff, b_coeff, residual)


def bias_corrected_mi(
    d: LabeledDataset,
    dm: DistanceMatrix | None,
    config,
    lambdas=DEFAULT_LAMBDAS,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
) -> tuple[BiasFit, list[tuple[int, float]]]:
    """Subsample curve plus its quadratic fit; intercept is the corrected MI."""
    curve = subsample_curve(d, dm, config, lambdas=lambdas, repeats=repeats, seed=seed)
    return quadratic_extrapolate(curve), curve
