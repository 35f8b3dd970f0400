"""Linear category-space fitting.

Learns one orthonormal axis per class so that every training pattern has a
large inner product with its own class axis. The non-convex problem is solved
by block-coordinate descent: auxiliary per-sample slopes (zero-sum within each
class, which removes the class centroid) alternate with a frame update given
in closed form by a polar decomposition. A sufficiency check based on the
spectrum of the stacked second-order model can certify a global minimum.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .exceptions import DataError, NumericalError

__all__ = [
    "Dataset",
    "FitConfig",
    "LinearModel",
    "CertificateReport",
    "fit_linear",
    "quad_slopes",
    "abs_slopes",
    "solve_abs_slopes",
    "weighted_pattern_sums",
    "objective_quad",
    "objective_abs",
    "joint_objective",
    "class_covariances",
    "certificate_check",
    "certificate_from_covariances",
]


@dataclass
class Dataset:
    """Labeled feature vectors with per-class index lists.

    X is (N, D); y holds integer class ids 0..K-1 with every class non-empty.
    Arrays are copied and frozen so datasets can be shared across threads.
    """

    X: np.ndarray
    y: np.ndarray
    label_names: tuple = None

    def __post_init__(self):
        x = np.array(self.X, dtype=float, order="C")
        y = np.array(self.y, dtype=int)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise DataError(f"feature matrix must be 2-d and non-empty, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DataError("labels must be one integer per sample")
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite feature values")
        if y.min() < 0:
            raise DataError("negative class id")
        n_classes = int(y.max()) + 1
        class_indices = tuple(np.flatnonzero(y == k) for k in range(n_classes))
        for k, idx in enumerate(class_indices):
            if idx.size == 0:
                raise DataError(f"class {k} has no samples")
            idx.setflags(write=False)
        if self.label_names is not None:
            self.label_names = tuple(str(s) for s in self.label_names)
            if len(self.label_names) != n_classes:
                raise DataError("label_names must name every class")
        x.setflags(write=False)
        y.setflags(write=False)
        self.X = x
        self.y = y
        self._class_indices = class_indices

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return len(self._class_indices)

    @property
    def class_indices(self):
        return self._class_indices

    def subset(self, indices):
        """New dataset from a row selection (class ids are kept as-is)."""
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], self.y[indices], label_names=self.label_names)


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the alternating fit.

    variant "quad" maximizes squared inner products, "abs" absolute values
    (smoothed with epsilon). delta is the Frobenius-change stopping threshold
    on the frame; seed drives the random initial frame; zscore standardizes
    features (the parameters are stored on the model and re-applied when
    projecting).

    centering picks the origin of the inner products: "class" removes each
    class's own centroid (the zero-sum slope constraint does this
    automatically), so every axis tracks its class's dominant spread
    direction; "global" fixes the origin at the overall training centroid, so
    axes also pick up where classes sit relative to each other, which is
    usually the stronger choice for downstream classification.
    """

    variant: str = "quad"
    epsilon: float = 1e-3
    delta: float = 1e-8
    max_iter: int = 1000
    seed: int = 0
    zscore: bool = False
    centering: str = "class"

    def __post_init__(self):
        if self.variant not in ("quad", "abs"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.centering not in ("class", "global"):
            raise ValueError(f"unknown centering {self.centering!r}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.variant == "abs" and self.epsilon <= 0:
            raise ValueError("epsilon must be positive for the abs variant")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class LinearModel:
    """Fitted orthonormal class axes plus fit diagnostics."""

    axes: np.ndarray                 # (D, K), orthonormal columns
    variant: str
    epsilon: float
    feature_mean: np.ndarray = None  # z-score parameters, None when unused
    feature_scale: np.ndarray = None
    objective_trace: np.ndarray = field(default=None)
    converged: bool = True
    degenerate: bool = False
    n_iter: int = 0
    config: FitConfig = None

    def project(self, x):
        """Map patterns onto the class axes: one coordinate per class."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.axes.shape[0]:
            raise DataError(
                f"expected {self.axes.shape[0]} features, got {x.shape[1]}"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite feature values")
        if self.feature_mean is not None:
            x = (x - self.feature_mean) / self.feature_scale
        out = x @ self.axes
        return out[0] if single else out


def _class_scores(axes, data):
    """Per-sample inner product with the own-class axis, as a flat vector."""
    scores = np.empty(data.n_samples)
    for k, idx in enumerate(data.class_indices):
        scores[idx] = data.X[idx] @ axes[:, k]
    return scores


def quad_slopes(axes, data):
    """Optimal auxiliary slopes for the squared objective.

    Per class these are the own-axis scores minus their class mean; a second
    centering pass removes the accumulated rounding so each class sums to
    zero essentially exactly.
    """
    z = np.empty(data.n_samples)
    for k, idx in enumerate(data.class_indices):
        s = data.X[idx] @ axes[:, k]
        s -= s.mean()
        s -= s.mean()
        z[idx] = s
    return z


def solve_abs_slopes(scores, epsilon):
    """Zero-sum slopes for the smoothed absolute-value objective.

    Solves for the per-class shift mu so that
    ``z_i = (s_i + mu) / sqrt((s_i + mu)^2 + eps^2)`` sums to zero. The sum is
    strictly increasing in mu, so the root is unique; it is bracketed
    analytically, located by bisection and polished with a few Newton steps.

    Returns ``(z, mu)``; all slopes lie strictly inside (-1, 1).
    """
    s = np.asarray(scores, dtype=float)
    eps2 = epsilon * epsilon

    def total(mu):
        t = s + mu
        return float(np.sum(t / np.sqrt(t * t + eps2)))

    lo = -float(np.max(s)) - epsilon
    hi = -float(np.min(s)) + epsilon
    f_lo, f_hi = total(lo), total(hi)
    grow = 0
    while f_lo > 0.0 or f_hi < 0.0:  # analytic bracket; expansion is a safety net
        span = max(hi - lo, epsilon)
        lo -= span
        hi += span
        f_lo, f_hi = total(lo), total(hi)
        grow += 1
        if grow > 60:
            raise NumericalError("could not bracket the slope multiplier")

    mu = 0.5 * (lo + hi)
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        f_mid = total(mu)
        if abs(f_mid) <= 1e-12:
            break
        if f_mid > 0.0:
            hi = mu
        else:
            lo = mu
        if hi - lo <= 1e-15 * max(1.0, abs(mu)):
            break
    # Newton polish: the derivative is strictly positive everywhere.
    for _ in range(3):
        t = s + mu
        denom = np.sqrt(t * t + eps2)
        f = float(np.sum(t / denom))
        fp = float(np.sum(eps2 / denom**3))
        if fp <= 0.0:
            break
        step = f / fp
        if not np.isfinite(step):
            break
        mu = min(max(mu - step, lo), hi)
    t = s + mu
    z = t / np.sqrt(t * t + eps2)
    if abs(float(z.sum())) > 1e-8:
        raise NumericalError("slope multiplier search failed to zero the class sum")
    return z, mu


def abs_slopes(axes, data, epsilon):
    """Auxiliary slopes for the absolute-value objective, zero-sum per class."""
    z = np.empty(data.n_samples)
    for k, idx in enumerate(data.class_indices):
        s = data.X[idx] @ axes[:, k]
        z[idx], _ = solve_abs_slopes(s, epsilon)
    return z


def _free_slopes(axes, data, cfg):
    """Unconstrained majorization slopes (fixed-origin centering).

    The patterns are assumed already shifted to the chosen origin, so the
    per-sample optimum needs no class constraint: the score itself for the
    quadratic variant, its smooth sign for the absolute one.
    """
    z = _class_scores(axes, data)
    if cfg.variant == "quad":
        return z
    return z / np.sqrt(z * z + cfg.epsilon * cfg.epsilon)


def weighted_pattern_sums(z, data):
    """Slope-weighted pattern sums, one column per class.

    Column k is the sum of z_i * x_i over the samples of class k; its polar
    factor is the optimal frame for fixed slopes.
    """
    y = np.zeros((data.n_features, data.n_classes))
    for k, idx in enumerate(data.class_indices):
        y[:, k] = data.X[idx].T @ z[idx]
    return y


def _centered_scores(axes, data, k, idx, centering, origin):
    s = data.X[idx] @ axes[:, k]
    if centering == "class":
        return s - s.mean()
    return s - origin @ axes[:, k]


def objective_quad(axes, data, centering="class"):
    """Squared-inner-product objective: minus half the captured squared scores.

    Scores are centered per class ("class") or about the overall centroid
    ("global") before squaring.
    """
    origin = data.X.mean(axis=0) if centering == "global" else None
    total = 0.0
    for k, idx in enumerate(data.class_indices):
        s = _centered_scores(axes, data, k, idx, centering, origin)
        total += float(s @ s)
    return -0.5 * total


def objective_abs(axes, data, epsilon, centering="class"):
    """Smoothed absolute-value objective on centered scores."""
    origin = data.X.mean(axis=0) if centering == "global" else None
    total = 0.0
    for k, idx in enumerate(data.class_indices):
        s = _centered_scores(axes, data, k, idx, centering, origin)
        total += float(np.sum(np.sqrt(s * s + epsilon * epsilon)))
    return -total


def joint_objective(variant, axes, z, y, epsilon=None):
    """Value of the majorized objective at a frame/slope pair.

    y must be the slope-weighted pattern sums of z, so the coupling term is
    trace(axes.T @ y).
    """
    coupling = -float(np.einsum("dk,dk->", axes, y))
    if variant == "quad":
        return coupling + 0.5 * float(z @ z)
    return coupling - float(epsilon * np.sum(np.sqrt(np.clip(1.0 - z * z, 0.0, None))))


def _alternate(x, class_indices, cfg, callback=None, init_frame=None):
    """Alternating slope/frame minimization on raw arrays.

    Shared by the linear and kernel fitters (the kernel path runs it on
    rank-reduced coordinates). With global centering the patterns are shifted
    to the overall centroid once and the slopes are the unconstrained
    majorization optima; with class centering the zero-sum constraint centers
    each class implicitly. Returns
    (frame, objective_trace, converged, degenerate, n_iter).
    """
    n, d = x.shape
    k = len(class_indices)
    if cfg.centering == "global":
        x = x - x.mean(axis=0)
    data = _ArrayView(x, class_indices)
    if init_frame is not None:
        frame = np.array(init_frame, dtype=float)
        if frame.shape != (d, k):
            raise ValueError(f"initial frame must have shape {(d, k)}")
        if np.linalg.norm(frame.T @ frame - np.eye(k)) > 1e-8:
            raise ValueError("initial frame is not orthonormal")
    else:
        frame = linalg.random_orthonormal(d, k, cfg.seed)

    trace = []
    degenerate = False
    converged = False
    n_iter = 0
    for n_iter in range(1, cfg.max_iter + 1):
        if cfg.centering == "global":
            z = _free_slopes(frame, data, cfg)
        elif cfg.variant == "quad":
            z = quad_slopes(frame, data)
        else:
            z = abs_slopes(frame, data, cfg.epsilon)
        y = weighted_pattern_sums(z, data)

        # A numerically zero column means the slopes of that class vanished
        # (all its scores identical); the polar factor is undefined there, so
        # the previous axis is kept and re-orthonormalized with the rest.
        col_norms = np.linalg.norm(y, axis=0)
        dead = col_norms <= 1e-12 * max(1.0, float(col_norms.max()))
        y_work = y
        if np.any(dead):
            degenerate = True
            y_work = y.copy()
            for j in np.flatnonzero(dead):
                y_work[:, j] = frame[:, j]
        new_frame, polar_degen = linalg.polar_factor(y_work)
        degenerate = degenerate or polar_degen

        trace.append(joint_objective(cfg.variant, new_frame, z, y, cfg.epsilon))
        if callback is not None:
            callback(n_iter, new_frame, trace[-1])

        step = float(np.linalg.norm(new_frame - frame))
        frame = new_frame
        if step <= cfg.delta:
            converged = True
            break
    return frame, np.asarray(trace), converged, degenerate, n_iter


class _ArrayView:
    """Minimal dataset facade over raw arrays for the alternation engine."""

    __slots__ = ("X", "class_indices", "n_samples", "n_features", "n_classes")

    def __init__(self, x, class_indices):
        self.X = x
        self.class_indices = class_indices
        self.n_samples = x.shape[0]
        self.n_features = x.shape[1]
        self.n_classes = len(class_indices)


def zscore_params(x):
    """Per-feature mean and standard deviation; zero spreads map to scale 1."""
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale <= 0.0, 1.0, scale)
    return mean, scale


def fit_linear(data, cfg=FitConfig(), callback=None, init_frame=None):
    """Fit orthonormal class axes by alternating slope and frame updates.

    Each iteration recomputes the auxiliary slopes for the current frame and
    then replaces the frame with the polar factor of the slope-weighted
    pattern sums; the loop stops when the frame moves less than ``cfg.delta``
    in Frobenius norm or ``cfg.max_iter`` is hit (flagged, best iterate kept).

    ``callback(iteration, frame, objective)`` runs after every frame update.
    """
    if data.n_classes > data.n_features:
        raise DataError(
            f"{data.n_classes} classes cannot span {data.n_features} feature dims"
        )
    for k, idx in enumerate(data.class_indices):
        if idx.size < 2:
            raise DataError(f"class {k} needs at least 2 samples")

    mean = scale = None
    x = data.X
    if cfg.zscore:
        mean, scale = zscore_params(x)
        x = (x - mean) / scale

    frame, trace, converged, degenerate, n_iter = _alternate(
        x, data.class_indices, cfg, callback=callback, init_frame=init_frame
    )
    return LinearModel(
        axes=frame,
        variant=cfg.variant,
        epsilon=cfg.epsilon,
        feature_mean=mean,
        feature_scale=scale,
        objective_trace=trace,
        converged=converged,
        degenerate=degenerate,
        n_iter=n_iter,
        config=cfg,
    )


def class_covariances(data, centering="class"):
    """Per-class scatter matrices about the class or global centroid."""
    origin = data.X.mean(axis=0) if centering == "global" else None
    covs = []
    for idx in data.class_indices:
        center = origin if centering == "global" else data.X[idx].mean(axis=0)
        xc = data.X[idx] - center
        covs.append(xc.T @ xc)
    return covs


@dataclass(frozen=True)
class CertificateReport:
    """Optimality diagnostics at a feasible frame.

    first_order_residual measures stationarity of the stacked axes vector.
    tangent_max_eig is the largest eigenvalue of the second-order model
    restricted to the manifold tangent space (<= tol means the necessary
    condition holds); full_max_eig is over the whole stacked space, and by a
    sufficiency result <= tol certifies a global minimum.
    """

    first_order_residual: float
    tangent_max_eig: float
    full_max_eig: float
    tol: float
    is_second_order_necessary: bool
    is_global_certified: bool


def certificate_from_covariances(covs, axes, tol=None):
    """Optimality certificate from explicit per-class scatter matrices.

    Builds the block-diagonal scatter operator and the symmetric multiplier
    matrix of the stationarity system, then reports the first-order residual
    and the extreme curvature eigenvalues (tangent-restricted and full).
    The default tolerance is 1e-8 * (1 + largest scatter eigenvalue).
    """
    axes = np.asarray(axes, dtype=float)
    d, k = axes.shape
    if len(covs) != k:
        raise ValueError("need one scatter matrix per axis")
    if k * d > 2000:
        raise NumericalError(f"stacked dimension {k * d} exceeds the dense eigensolve budget")
    if np.linalg.norm(axes.T @ axes - np.eye(k)) > 1e-8:
        raise ValueError("axes are not orthonormal")
    covs = [np.asarray(c, dtype=float) for c in covs]
    for c in covs:
        if c.shape != (d, d):
            raise ValueError("scatter matrix shape mismatch")

    # Stacked first-order system: scatter-applied axes vs. the symmetrized
    # multiplier acting blockwise.
    rw = np.column_stack([covs[j] @ axes[:, j] for j in range(k)])  # (D, K)
    sigma = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            sigma[i, j] = 0.5 * (axes[:, i] @ rw[:, j] + axes[:, j] @ rw[:, i])
    s_apply = axes @ sigma.T  # column i = sum_j sigma[i, j] * axes[:, j]
    residual = float(np.linalg.norm((rw - s_apply).reshape(-1, order="F")))

    big = np.zeros((k * d, k * d))
    for j in range(k):
        big[j * d : (j + 1) * d, j * d : (j + 1) * d] = covs[j]
    big -= np.kron(sigma, np.eye(d))

    lam_max_scatter = max(float(linalg.sym_eig(c)[0][0]) for c in covs)
    if tol is None:
        tol = 1e-8 * (1.0 + lam_max_scatter)

    basis = linalg.stiefel_tangent_basis(axes)
    tangent = basis.T @ big @ basis
    tangent_max = float(linalg.sym_eig(tangent)[0][0]) if tangent.size else float("-inf")
    full_max = float(linalg.sym_eig(big)[0][0])

    stationary = residual <= tol
    return CertificateReport(
        first_order_residual=residual,
        tangent_max_eig=tangent_max,
        full_max_eig=full_max,
        tol=float(tol),
        is_second_order_necessary=bool(stationary and tangent_max <= tol),
        is_global_certified=bool(stationary and full_max <= tol),
    )


def certificate_check(axes, data, tol=None, centering="class"):
    """Optimality certificate for a frame on a dataset (see fit_linear).

    The caller is responsible for passing a converged frame; the report only
    describes the given point. ``centering`` must match the fit. Note: when
    the model was fitted with z-scoring the axes live in standardized
    coordinates, so pass standardized data.
    """
    return certificate_from_covariances(
        class_covariances(data, centering=centering), axes, tol=tol
    )
