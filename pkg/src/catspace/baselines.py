"""Reference dimensionality reducers used as comparison columns.

PCA and kernel PCA (unsupervised), multi-class Fisher discriminant and its
kernel form (supervised, at most K-1 directions). Each fit returns a small
model object with a ``project`` method.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .exceptions import DataError
from .kernel import KernelSpec, cross_gram, gram

__all__ = [
    "PcaModel",
    "KpcaModel",
    "FldModel",
    "KfldModel",
    "pca_fit",
    "kpca_fit",
    "fld_fit",
    "kfld_fit",
]

_TIE_TOL = 1e-10


@dataclass
class PcaModel:
    kind: str
    mean: np.ndarray          # (D,)
    components: np.ndarray    # (d, D), orthonormal rows
    eigenvalues: np.ndarray   # (d,), descending scatter eigenvalues
    degenerate: bool          # tie at the retained/dropped boundary

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.mean) @ self.components.T


def pca_fit(data, d):
    """Principal axes of the total scatter; projection removes the global mean."""
    x = data.X
    if d < 1 or d > data.n_features:
        raise DataError(f"cannot keep {d} of {data.n_features} dimensions")
    mean = x.mean(axis=0)
    xc = x - mean
    w, v = linalg.sym_eig(xc.T @ xc)
    rank = int(np.count_nonzero(w > _TIE_TOL * max(w[0], 1e-300)))
    if d > rank:
        raise DataError(f"requested {d} components but scatter rank is {rank}")
    degenerate = d < data.n_features and (w[d - 1] - w[d]) <= _TIE_TOL * max(w[0], 1.0)
    return PcaModel(
        kind="pca",
        mean=mean,
        components=v[:, :d].T,
        eigenvalues=w[:d],
        degenerate=bool(degenerate),
    )


@dataclass
class KpcaModel:
    kind: str
    train_X: np.ndarray
    spec: KernelSpec
    alphas: np.ndarray        # (N, d), eigenvectors scaled by 1/sqrt(eigenvalue)
    col_means: np.ndarray     # (N,) train Gram column means
    total_mean: float
    eigenvalues: np.ndarray
    degenerate: bool

    def project(self, x):
        x = np.asarray(x, dtype=float)
        kc = cross_gram(x, self.train_X, self.spec)
        kc = kc - kc.mean(axis=1, keepdims=True) - self.col_means[None, :] + self.total_mean
        return kc @ self.alphas


def kpca_fit(data, spec, d):
    """Kernel PCA via the double-centered Gram eigendecomposition."""
    x = data.X
    g = gram(x, spec)
    col_means = g.mean(axis=0)
    total_mean = float(g.mean())
    gc = g - col_means[None, :] - col_means[:, None] + total_mean
    gc = 0.5 * (gc + gc.T)
    w, v = linalg.sym_eig(gc)
    rank = int(np.count_nonzero(w > _TIE_TOL * max(w[0], 1e-300)))
    if d < 1 or d > rank:
        raise DataError(f"requested {d} components but centered Gram rank is {rank}")
    degenerate = d < len(w) and (w[d - 1] - w[d]) <= _TIE_TOL * max(w[0], 1.0)
    alphas = v[:, :d] / np.sqrt(w[:d])
    return KpcaModel(
        kind="kpca",
        train_X=np.array(x, dtype=float),
        spec=spec,
        alphas=alphas,
        col_means=col_means,
        total_mean=total_mean,
        eigenvalues=w[:d],
        degenerate=bool(degenerate),
    )


@dataclass
class FldModel:
    kind: str
    directions: np.ndarray    # (K-1, D) generalized eigenvectors, rows
    eigenvalues: np.ndarray   # (K-1,) generalized eigenvalues, descending
    degenerate: bool          # between-class scatter rank below K-1
    ridged: bool              # within-class scatter was singular before the ridge

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.directions.T


def _generalized_directions(between, within, n_dirs):
    """Top generalized eigenpairs of (between, within + ridge)."""
    dim = within.shape[0]
    ridge = 1e-8 * float(np.trace(within)) / dim
    if ridge <= 0.0:
        ridge = 1e-8
    within_r = within + ridge * np.eye(dim)
    w_within = np.linalg.eigvalsh(0.5 * (within + within.T))
    ridged = bool(w_within[0] <= 1e-12 * max(w_within[-1], 1e-300))
    w, v = scipy.linalg.eigh(0.5 * (between + between.T), within_r)
    order = np.argsort(w)[::-1][:n_dirs]
    vals = w[order]
    vecs = v[:, order]
    (vecs,) = linalg._fix_signs(vecs)
    degenerate = bool(np.any(vals <= 1e-6 * max(vals[0], 1e-300)))
    return vals, vecs, degenerate, ridged


def fld_fit(data):
    """Multi-class Fisher discriminant: K-1 directions maximizing the
    between/within scatter ratio, ridge-stabilized."""
    x, k = data.X, data.n_classes
    if k < 2:
        raise DataError("need at least 2 classes")
    if k - 1 > data.n_features:
        raise DataError("more discriminant directions than feature dims")
    mean = x.mean(axis=0)
    d = data.n_features
    s_within = np.zeros((d, d))
    s_between = np.zeros((d, d))
    for idx in data.class_indices:
        mk = x[idx].mean(axis=0)
        xc = x[idx] - mk
        s_within += xc.T @ xc
        diff = (mk - mean)[:, None]
        s_between += idx.size * (diff @ diff.T)
    vals, vecs, degenerate, ridged = _generalized_directions(s_between, s_within, k - 1)
    return FldModel(
        kind="fld",
        directions=vecs.T,
        eigenvalues=vals,
        degenerate=degenerate,
        ridged=ridged,
    )


@dataclass
class KfldModel:
    kind: str
    train_X: np.ndarray
    spec: KernelSpec
    coef: np.ndarray          # (N, K-1) expansion coefficients
    eigenvalues: np.ndarray
    degenerate: bool
    ridged: bool

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return cross_gram(x, self.train_X, self.spec) @ self.coef


def kfld_fit(data, spec):
    """Kernel Fisher discriminant on Gram-column statistics."""
    x, k = data.X, data.n_classes
    if k < 2:
        raise DataError("need at least 2 classes")
    g = gram(x, spec)
    n = g.shape[0]
    m_total = g.mean(axis=1)
    s_within = np.zeros((n, n))
    s_between = np.zeros((n, n))
    for idx in data.class_indices:
        cols = g[:, idx]
        mk = cols.mean(axis=1)
        centered = cols - mk[:, None]
        s_within += centered @ centered.T
        diff = (mk - m_total)[:, None]
        s_between += idx.size * (diff @ diff.T)
    vals, vecs, degenerate, ridged = _generalized_directions(s_between, s_within, k - 1)
    return KfldModel(
        kind="kfld",
        train_X=np.array(x, dtype=float),
        spec=spec,
        coef=vecs,
        eigenvalues=vals,
        degenerate=degenerate,
        ridged=ridged,
    )
