"""Mutual information between a discrete stimulus and metric-space responses."""

from .bias import (
    DEFAULT_LAMBDAS,
    DEFAULT_REPEATS,
    BiasFit,
    bias_corrected_mi,
    quadratic_extrapolate,
    subsample_curve,
)
from .data import (
    FORMAT_CSV_VECTORS,
    FORMAT_SPIKE_TEXT,
    SPIKE,
    VECTOR,
    DatasetError,
    DatasetParseError,
    LabeledDataset,
    MixedVariantError,
    ResponsePoint,
    UnbalancedDesignError,
    derived_seed,
    load_dataset,
    save_dataset,
    subsample,
    subsample_indices,
)
from .estimators import (
    HistogramConfig,
    KernelConfig,
    KsgConfig,
    MiEstimate,
    digamma,
    histogram_mi,
    kernel_mi,
    ksg_mi,
    neighbor_count_C,
    neighbor_count_c,
)
from .metrics import (
    DistanceMatrix,
    MetricMismatchError,
    MetricSpec,
    distance,
    distance_matrix,
    euclidean_distance,
    neighbor_order,
    van_rossum_distance,
    victor_purpura_distance,
)
from .toybench import (
    DEFAULT_MC_SAMPLES,
    DEFAULT_WIDTHS,
    BenchmarkProtocol,
    BenchmarkResult,
    DatasetRecord,
    ToySpec,
    chi_density,
    generate_toy,
    run_benchmark,
    true_mi,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkProtocol",
    "BenchmarkResult",
    "BiasFit",
    "DatasetError",
    "DatasetParseError",
    "DatasetRecord",
    "DistanceMatrix",
    "HistogramConfig",
    "KernelConfig",
    "KsgConfig",
    "LabeledDataset",
    "MetricMismatchError",
    "MetricSpec",
    "MiEstimate",
    "MixedVariantError",
    "ResponsePoint",
    "ToySpec",
    "UnbalancedDesignError",
    "bias_corrected_mi",
    "chi_density",
    "derived_seed",
    "digamma",
    "distance",
    "distance_matrix",
    "euclidean_distance",
    "generate_toy",
    "histogram_mi",
    "kernel_mi",
    "ksg_mi",
    "load_dataset",
    "neighbor_count_C",
    "neighbor_count_c",
    "neighbor_order",
    "quadratic_extrapolate",
    "run_benchmark",
    "save_dataset",
    "subsample",
    "subsample_curve",
    "subsample_indices",
    "true_mi",
    "van_rossum_distance",
    "victor_purpura_distance",
]
