"""Kernel variants of the category-space fit.

Class axes are expanded over the training patterns in an RKHS; orthonormality
becomes a Gram-weighted constraint on the coefficient matrix. All iterations
run in rank-reduced coordinates where the constraint is plain orthonormality
and the linear alternation engine applies unchanged; coefficients are
recovered at the end through the inverse square root of the Gram matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from . import core, linalg
from .exceptions import DataError, NumericalError

__all__ = [
    "KernelSpec",
    "KernelModel",
    "gram",
    "cross_gram",
    "fit_kernel",
    "kernel_quad_slopes",
    "kernel_abs_slopes",
    "kernel_certificate",
]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    rbf uses exp(-||a - b||^2 / (2 sigma^2)); polynomial is
    (a.b + offset)^degree; linear is the plain dot product.
    """

    kind: str = "rbf"
    sigma: float = 1.0
    degree: int = 3
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rbf", "linear", "polynomial"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and self.sigma <= 0:
            raise ValueError("rbf kernel needs sigma > 0")


def cross_gram(a, b, spec):
    """Pairwise kernel values between the rows of a and the rows of b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DataError("kernel inputs must be 2-d with matching feature counts")
    if spec.kind == "linear":
        return a @ b.T
    if spec.kind == "polynomial":
        return (a @ b.T + spec.offset) ** spec.degree
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.clip(sq, 0.0, None, out=sq)
    return np.exp(-sq / (2.0 * spec.sigma**2))


def gram(x, spec):
    """Kernel Gram matrix of a pattern set; symmetric, rbf diagonal exactly 1."""
    g = cross_gram(x, x, spec)
    g = 0.5 * (g + g.T)
    if spec.kind == "rbf":
        np.fill_diagonal(g, 1.0)
    return g


@dataclass
class KernelModel:
    """Fitted RKHS class axes.

    coef is (K, N): row k holds the expansion coefficients of axis k over the
    retained training patterns. ginvhalf and reduced_frame carry the
    rank-reduced coordinates in which the fit ran (reduced_frame has
    orthonormal columns there). train_X is stored after any z-scoring; new
    inputs are standardized with feature_mean/feature_scale before kernel
    evaluation.
    """

    coef: np.ndarray                 # (K, N)
    train_X: np.ndarray              # (N, D), already standardized when zscore
    spec: KernelSpec
    variant: str
    epsilon: float
    ginvhalf: np.ndarray = None      # (r, N)
    retained_rank: int = 0
    reduced_frame: np.ndarray = None  # (r, K)
    feature_mean: np.ndarray = None
    feature_scale: np.ndarray = None
    objective_trace: np.ndarray = field(default=None)
    converged: bool = True
    degenerate: bool = False
    n_iter: int = 0
    config: core.FitConfig = None

    def project(self, x):
        """Kernel projection of new patterns onto the class axes."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.train_X.shape[1]:
            raise DataError(
                f"expected {self.train_X.shape[1]} features, got {x.shape[1]}"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite feature values")
        if self.feature_mean is not None:
            x = (x - self.feature_mean) / self.feature_scale
        out = cross_gram(x, self.train_X, self.spec) @ self.coef.T
        return out[0] if single else out


def _score_matrix(coef, g):
    """Axis scores of every training pattern: coef times Gram."""
    return np.asarray(coef, dtype=float) @ np.asarray(g, dtype=float)


def kernel_quad_slopes(coef, data, g):
    """Quadratic-variant slopes from kernel scores, zero-sum per class."""
    scores = _score_matrix(coef, g)
    z = np.empty(data.n_samples)
    for k, idx in enumerate(data.class_indices):
        s = scores[k, idx]
        s = s - s.mean()
        s -= s.mean()
        z[idx] = s
    return z


def kernel_abs_slopes(coef, data, g, epsilon):
    """Absolute-variant slopes from kernel scores, zero-sum per class."""
    scores = _score_matrix(coef, g)
    z = np.empty(data.n_samples)
    for k, idx in enumerate(data.class_indices):
        z[idx], _ = core.solve_abs_slopes(scores[k, idx], epsilon)
    return z


def fit_kernel(data, spec, cfg=core.FitConfig(), rank_tol=1e-10, callback=None,
               init_frame=None):
    """Fit RKHS class axes by the alternating scheme in reduced coordinates.

    The Gram matrix is reduced to its numerical range (eigenvalues below
    ``rank_tol`` relative are dropped); the alternation then runs on the
    induced Euclidean coordinates, where the frame update is again a polar
    factor and the stopping rule on the reduced frame equals the
    Gram-half-weighted Frobenius change of the coefficients. ``init_frame``
    optionally fixes the starting reduced frame (r x K, orthonormal columns).
    """
    for k, idx in enumerate(data.class_indices):
        if idx.size < 2:
            raise DataError(f"class {k} needs at least 2 samples")

    mean = scale = None
    x = data.X
    if cfg.zscore:
        mean, scale = core.zscore_params(x)
        x = (x - mean) / scale

    g = gram(x, spec)
    ginvhalf, rank = linalg.inv_sqrt_psd(g, rank_tol=rank_tol)
    if rank < data.n_classes:
        raise NumericalError(
            f"Gram matrix rank {rank} cannot host {data.n_classes} orthonormal axes"
        )
    # Reduced pattern coordinates: inner products there reproduce the kernel.
    x_red = g @ ginvhalf.T  # (N, r)

    frame, trace, converged, degenerate, n_iter = _alternate_reduced(
        x_red, data.class_indices, cfg, callback=callback, init_frame=init_frame
    )
    coef = frame.T @ ginvhalf  # (K, N)
    return KernelModel(
        coef=coef,
        train_X=np.array(x, dtype=float),
        spec=spec,
        variant=cfg.variant,
        epsilon=cfg.epsilon,
        ginvhalf=ginvhalf,
        retained_rank=rank,
        reduced_frame=frame,
        feature_mean=mean,
        feature_scale=scale,
        objective_trace=trace,
        converged=converged,
        degenerate=degenerate,
        n_iter=n_iter,
        config=cfg,
    )


def _alternate_reduced(x_red, class_indices, cfg, callback=None, init_frame=None):
    return core._alternate(
        x_red, class_indices, cfg, callback=callback, init_frame=init_frame
    )


def kernel_certificate(model, data, tol=None):
    """Global-optimality certificate for a converged quadratic kernel fit.

    Forms the per-class centered kernel covariances, conjugates them into the
    rank-reduced coordinates, and reuses the Euclidean certificate machinery
    with the reduced frame. ``data`` must be the dataset the model was fitted
    on (the Gram matrix is recomputed from it).
    """
    if model.variant != "quad":
        raise ValueError("certificate applies to the quadratic variant only")
    x = data.X
    if model.feature_mean is not None:
        x = (x - model.feature_mean) / model.feature_scale
    g = gram(x, model.spec)
    p = model.ginvhalf
    centering = model.config.centering if model.config else "class"
    global_mean = g.mean(axis=1, keepdims=True)
    covs = []
    for idx in data.class_indices:
        if centering == "global":
            centered = g[:, idx] - global_mean
        else:
            centered = g[:, idx] - g[:, idx].mean(axis=1, keepdims=True)
        reduced = p @ centered
        covs.append(reduced @ reduced.T)
    return core.certificate_from_covariances(covs, model.reduced_frame, tol=tol)
