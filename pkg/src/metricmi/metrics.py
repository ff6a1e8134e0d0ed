"""Distances between responses and the dense pairwise distance matrix.

All estimators downstream consume only the distance matrix, never the raw
points, so the metric fully determines what structure an estimate can see.
Three metrics are provided: Euclidean for vector responses, and the
Victor-Purpura and van Rossum metrics for spike trains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import SPIKE, VECTOR, LabeledDataset, ResponsePoint, format_float

EUCLIDEAN = "euclidean"
VICTOR_PURPURA = "victor-purpura"
VAN_ROSSUM = "van-rossum"


class MetricMismatchError(ValueError):
    """Metric applied to an incompatible response variant."""


@dataclass(frozen=True)
class MetricSpec:
    """Which metric to use, with its parameter.

    ``victor-purpura`` takes a shift cost ``q`` (1/seconds, q >= 0);
    ``van-rossum`` takes a filter time constant ``tau`` (seconds, tau > 0).
    """

    kind: str
    q: float | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.kind == EUCLIDEAN:
            if self.q is not None or self.tau is not None:
                raise ValueError("euclidean metric takes no parameters")
        elif self.kind == VICTOR_PURPURA:
            if self.q is None or not math.isfinite(self.q) or self.q < 0:
                raise ValueError("victor-purpura needs finite q >= 0")
            if self.tau is not None:
                raise ValueError("victor-purpura takes q only")
        elif self.kind == VAN_ROSSUM:
            if self.tau is None or not math.isfinite(self.tau) or self.tau <= 0:
                raise ValueError("van-rossum needs finite tau > 0")
            if self.q is not None:
                raise ValueError("van-rossum takes tau only")
        else:
            raise ValueError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def euclidean(cls) -> "MetricSpec":
        return cls(EUCLIDEAN)

    @classmethod
    def victor_purpura(cls, q: float) -> "MetricSpec":
        return cls(VICTOR_PURPURA, q=float(q))

    @classmethod
    def van_rossum(cls, tau: float) -> "MetricSpec":
        return cls(VAN_ROSSUM, tau=float(tau))

    @property
    def variant(self) -> str:
        return VECTOR if self.kind == EUCLIDEAN else SPIKE


class DistanceMatrix:
    """Symmetric nonnegative pairwise distances with a zero diagonal.

    Immutable after construction; this is the only view of the data that the
    estimators see.
    """

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray, *, validate: bool = True):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if validate:
            if values.ndim != 2 or values.shape[0] != values.shape[1]:
                raise ValueError(f"distance matrix must be square, got {values.shape}")
            if not np.all(np.isfinite(values)):
                raise ValueError("distances must be finite")
            if np.any(values < 0):
                raise ValueError("distances must be nonnegative")
            if np.any(np.diagonal(values) != 0.0):
                raise ValueError("self-distances must be exactly zero")
            if not np.array_equal(values, values.T):
                raise ValueError("distance matrix must be symmetric")
        values.setflags(write=False)
        self.values = values

    @property
    def n_r(self) -> int:
        return self.values.shape[0]

    def submatrix(self, indices) -> "DistanceMatrix":
        indices = np.asarray(indices, dtype=np.intp)
        sub = self.values[np.ix_(indices, indices)]
        return DistanceMatrix(sub, validate=False)


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricMismatchError(
            f"vector dimensions differ: {a.shape[0]} vs {b.shape[0]}"
        )
    return float(np.sqrt(np.sum((a - b) ** 2)))


def victor_purpura_distance(a, b, q: float) -> float:
    """Victor-Purpura spike-train edit distance.

    Minimal-cost transformation of train ``a`` into train ``b`` where deleting
    or inserting a spike costs 1 and moving a spike by dt costs q * |dt|.
    Computed by the standard O(len(a) * len(b)) dynamic program, vectorized
    one row at a time.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n_a, n_b = a.size, b.size
    if n_a == 0 or n_b == 0:
        return float(n_a + n_b)
    offsets = np.arange(n_b + 1, dtype=np.float64)
    prev = offsets.copy()
    cur = np.empty(n_b + 1, dtype=np.float64)
    for i in range(1, n_a + 1):
        cur[0] = float(i)
        # delete a[i-1], or shift it onto each b[j-1]
        cur[1:] = np.minimum(prev[1:] + 1.0, prev[:-1] + q * np.abs(a[i - 1] - b))
        # resolve insertions left to right: cur[j] = min_{k<=j} cur[k] + (j - k)
        cur -= offsets
        np.minimum.accumulate(cur, out=cur)
        cur += offsets
        prev, cur = cur, prev
    return float(prev[-1])


def _vr_kernel_sum(a: np.ndarray, b: np.ndarray, tau: float) -> float:
    if a.size == 0 or b.size == 0:
        return 0.0
    return float(np.sum(np.exp(-np.abs(a[:, None] - b[None, :]) / tau)))


def van_rossum_distance(a, b, tau: float) -> float:
    """van Rossum distance between spike trains.

    Each train is mapped to a sum of causal exponentials exp(-(t - t_i)/tau)
    and the distance is sqrt((1/tau) * integral (f - g)^2 dt), evaluated in
    closed form through pairwise exp(-|t_i - t_j|/tau) sums; no time grid is
    involved.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = 0.5 * (
        _vr_kernel_sum(a, a, tau)
        + _vr_kernel_sum(b, b, tau)
        - 2.0 * _vr_kernel_sum(a, b, tau)
    )
    return math.sqrt(max(d2, 0.0))


def _check_variant(kind: str, m: MetricSpec) -> None:
    if kind != m.variant:
        raise MetricMismatchError(
            f"{m.kind} metric requires {m.variant} responses, got {kind}"
        )


def distance(a: ResponsePoint, b: ResponsePoint, m: MetricSpec) -> float:
    """Distance between two responses under the given metric."""
    if a.kind != b.kind:
        raise MetricMismatchError(f"mixed response variants: {a.kind} vs {b.kind}")
    _check_variant(a.kind, m)
    if m.kind == EUCLIDEAN:
        return euclidean_distance(a.values, b.values)
    if m.kind == VICTOR_PURPURA:
        return victor_purpura_distance(a.values, b.values, m.q)
    return van_rossum_distance(a.values, b.values, m.tau)


def distance_matrix(d: LabeledDataset, m: MetricSpec) -> DistanceMatrix:
    """All pairwise distances, entry [i, j] = distance(point i, point j)."""
    _check_variant(d.kind, m)
    n = d.n_r
    if m.kind == EUCLIDEAN:
        values = cdist(d.vectors, d.vectors)
        np.fill_diagonal(values, 0.0)
        return DistanceMatrix(values)
    trains = d.trains
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            if m.kind == VICTOR_PURPURA:
                v = victor_purpura_distance(trains[i], trains[j], m.q)
            else:
                v = van_rossum_distance(trains[i], trains[j], m.tau)
            values[i, j] = values[j, i] = v
    return DistanceMatrix(values)


def neighbor_order(dm: DistanceMatrix, i: int) -> np.ndarray:
    """Indices sorted by (distance to i ascending, index ascending).

    Position 0 is i itself unless a duplicate point with a smaller index
    exists; the (distance, index) order makes every downstream count
    deterministic even with tied or duplicated points.
    """
    if not 0 <= i < dm.n_r:
        raise IndexError(f"index {i} out of range for {dm.n_r} points")
    return np.argsort(dm.values[i], kind="stable")


def write_distance_csv(dm: DistanceMatrix, path) -> None:
    """Write the matrix as CSV, one row per line, 17-significant-digit reals."""
    with open(path, "w", encoding="ascii") as fh:
        for row in dm.values:
            fh.write(",".join(format_float(v) for v in row) + "\n")
