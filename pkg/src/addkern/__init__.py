"""Additive-kernel learning with NFFT-accelerated matrix products.

Subpackages cover the full pipeline: dataset scaling, exact and fast
kernel matvecs (including hyperparameter-derivative kernels), analytic
Fourier error bounds, feature grouping, ANOVA-based sensitivity-driven
window selection, and CG kernel ridge regression.
"""

__version__ = "0.1.0"

from .dataset import (Dataset, ScalingFactor, from_arrays, load_csv,
                      minmax_to_quarter_box, prescale, train_test_split,
                      zscore_normalize)
from .kernels import KernelSpec, dense_matvec, dsigma_matvec, eval_kernel
from .windows import WindowSet

__all__ = [
    "Dataset", "ScalingFactor", "KernelSpec", "WindowSet",
    "from_arrays", "load_csv", "zscore_normalize", "minmax_to_quarter_box",
    "prescale", "train_test_split", "dense_matvec", "dsigma_matvec",
    "eval_kernel", "__version__",
]
