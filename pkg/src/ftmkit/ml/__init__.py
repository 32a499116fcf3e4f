"""Distance estimators over ``(rtt_raw, mean_rssi)`` features."""

from .export import export_compact, import_compact, load_model, save_model
from .kernels import TABLE_I_EXPONENTIAL, KernelParams, exponential_kernel, gaussian_kernel
from .model import VARIANTS, TrainedModel, predict, train, train_gp, train_nn, train_svr, train_tree
from .normalize import Normalizer, fit_normalizer
from .search import CVResult, cross_validate
from .split import SplitSpec, kfold_indices, split

__all__ = [
    "CVResult",
    "KernelParams",
    "Normalizer",
    "SplitSpec",
    "TABLE_I_EXPONENTIAL",
    "TrainedModel",
    "VARIANTS",
    "cross_validate",
    "exponential_kernel",
    "export_compact",
    "fit_normalizer",
    "gaussian_kernel",
    "import_compact",
    "kfold_indices",
    "load_model",
    "predict",
    "save_model",
    "split",
    "train",
    "train_gp",
    "train_nn",
    "train_svr",
    "train_tree",
]
