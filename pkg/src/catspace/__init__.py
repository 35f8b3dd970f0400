"""Supervised dimensionality reduction onto orthonormal category axes.

Each class gets one axis; patterns are projected onto the span of all class
axes. Linear and RKHS-kernel fits, squared and absolute-value objectives, a
global-optimality certificate, classic baselines (PCA / kernel PCA / Fisher
discriminants) and a benchmark harness with SVM and angle classifiers.
"""

from .baselines import fld_fit, kfld_fit, kpca_fit, pca_fit
from .core import (
    CertificateReport,
    Dataset,
    FitConfig,
    LinearModel,
    certificate_check,
    certificate_from_covariances,
    fit_linear,
    objective_abs,
    objective_quad,
)
from .evaluation import (
    SplitPlan,
    angle_classify,
    benchmark,
    evaluate_split,
    split,
    svm_ova_train,
    svm_predict,
)
from .exceptions import CatspaceError, DataError, NumericalError
from .io import load_csv, load_model, save_model
from .kernel import KernelModel, KernelSpec, fit_kernel, gram, kernel_certificate
from .linalg import (
    inv_sqrt_psd,
    polar_factor,
    random_orthonormal,
    stiefel_tangent_basis,
    thin_svd,
)
from .svg import emit_svg_scatter

__version__ = "0.1.0"

__all__ = [
    "CertificateReport",
    "CatspaceError",
    "DataError",
    "Dataset",
    "FitConfig",
    "KernelModel",
    "KernelSpec",
    "LinearModel",
    "NumericalError",
    "SplitPlan",
    "angle_classify",
    "benchmark",
    "certificate_check",
    "certificate_from_covariances",
    "emit_svg_scatter",
    "evaluate_split",
    "fit_kernel",
    "fit_linear",
    "fld_fit",
    "gram",
    "inv_sqrt_psd",
    "kernel_certificate",
    "kfld_fit",
    "kpca_fit",
    "load_csv",
    "load_model",
    "objective_abs",
    "objective_quad",
    "pca_fit",
    "polar_factor",
    "random_orthonormal",
    "save_model",
    "split",
    "stiefel_tangent_basis",
    "svm_ova_train",
    "svm_predict",
    "thin_svd",
]
