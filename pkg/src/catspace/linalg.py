"""Dense matrix primitives used by the category-space optimizers.

Everything here is a pure function of its inputs and deterministic: SVD and
eigenvector signs are normalized so repeated runs produce bit-identical
results, and random frames are driven entirely by an explicit seed.
"""

import numpy as np

from .exceptions import NumericalError

__all__ = [
    "thin_svd",
    "polar_factor",
    "sym_eig",
    "inv_sqrt_psd",
    "random_orthonormal",
    "stiefel_tangent_basis",
]


def _check_finite(m, name):
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"non-finite entries in {name}")


def _fix_signs(u, *companions):
    """Flip column signs so the largest-|entry| of each u column is positive.

    Companion matrices (e.g. the right singular vectors) get the same flips so
    factorizations stay valid. Removes the inherent sign ambiguity of
    SVD/eigendecompositions; ties resolve to the first maximal entry.
    """
    if u.shape[1] == 0:
        return (u, *companions)
    rows = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[rows, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return (u * signs, *(c * signs for c in companions))


def thin_svd(m):
    """Thin singular value decomposition of a tall matrix.

    Parameters
    ----------
    m : (D, K) array with D >= K.

    Returns
    -------
    u : (D, K) with orthonormal columns.
    s : (K,) singular values, descending.
    v : (K, K) with orthonormal columns, so that ``m ~= u @ diag(s) @ v.T``.

    Column signs are normalized (largest-magnitude entry of each u column is
    positive) so the factorization is unique and reproducible.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if m.shape[0] < m.shape[1]:
        raise ValueError(f"need rows >= cols, got shape {m.shape}")
    _check_finite(m, "SVD input")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    u, v = _fix_signs(u, vt.T)
    return u, s, v


def polar_factor(m):
    """Orthonormal polar factor of a tall matrix.

    Returns ``(q, degenerate)`` where q = u @ v.T from the thin SVD. Among all
    matrices with orthonormal columns, q maximizes trace(q.T @ m). When m is
    (near-)rank-deficient the factor is not unique; the SVD-derived one is
    returned and ``degenerate`` is set.
    """
    u, s, v = thin_svd(m)
    s_max = s[0] if s.size else 0.0
    degenerate = bool(s.size == 0 or s_max <= 0.0 or s[-1] < 1e-12 * s_max)
    return u @ v.T, degenerate


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(w, v)`` with orthonormal eigenvector columns and normalized
    signs. Input is symmetrized before the solve; asymmetry beyond 1e-8
    relative is rejected.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    _check_finite(m, "eigendecomposition input")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    w = w[::-1]
    v = v[:, ::-1]
    (v,) = _fix_signs(v)
    return w, v


def inv_sqrt_psd(g, rank_tol=1e-10):
    """Inverse square root of a PSD matrix on its numerical range.

    Eigenvalues at or below ``rank_tol`` times the largest are dropped.
    Returns ``(ginvhalf, rank)`` where ginvhalf has shape (rank, N) and
    ``ginvhalf @ g @ ginvhalf.T == I_rank`` up to roundoff.

    Raises NumericalError when no eigenvalue survives the tolerance.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    _check_finite(g, "PSD input")
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    w, v = sym_eig(g)
    lam_max = w[0]
    if lam_max <= 0.0:
        raise NumericalError("matrix has no positive eigenvalue")
    keep = w > rank_tol * lam_max
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise NumericalError("all eigenvalues below rank tolerance")
    ginvhalf = (v[:, keep] / np.sqrt(w[keep])).T
    return ginvhalf, rank


def random_orthonormal(n_rows, n_cols, seed):
    """Haar-distributed orthonormal frame, deterministic in the seed.

    QR of a seeded standard-Gaussian matrix with the R diagonal forced
    positive, which makes the distribution uniform and the output unique.
    """
    if n_cols > n_rows:
        raise ValueError(f"cannot fit {n_cols} orthonormal columns in {n_rows} dims")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_rows, n_cols))
    q, r = np.linalg.qr(a)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def stiefel_tangent_basis(w):
    """Orthonormal basis of the tangent space at an orthonormal frame.

    A direction ``delta`` is tangent at w when ``w.T @ delta + delta.T @ w``
    vanishes. Basis vectors are returned as the columns of a
    ``(D*K, D*K - K*(K+1)//2)`` matrix; each column is a direction matrix
    stacked column-by-column (Fortran vec order, matching the stacked-axes
    vector used by the optimality certificate).
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] < w.shape[1]:
        raise ValueError("expected a tall orthonormal frame")
    _check_finite(w, "frame")
    d, k = w.shape
    if np.linalg.norm(w.T @ w - np.eye(k)) > 1e-8:
        raise ValueError("frame columns are not orthonormal")
    # Complete w to an orthonormal basis of the ambient space; the trailing
    # columns span the orthogonal complement.
    q_full, _ = np.linalg.qr(w, mode="complete")
    w_perp = q_full[:, k:]

    n_basis = d * k - k * (k + 1) // 2
    basis = np.zeros((d * k, n_basis))
    col = 0
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    # Rotations inside the frame's own span: skew-symmetric mixing of columns.
    for i in range(k):
        for j in range(i + 1, k):
            delta = np.zeros((d, k))
            delta[:, j] = w[:, i] * inv_sqrt2
            delta[:, i] = -w[:, j] * inv_sqrt2
            basis[:, col] = delta.reshape(-1, order="F")
            col += 1
    # Motions out of the span: any complement direction into any column.
    for j in range(k):
        for a in range(d - k):
            delta = np.zeros((d, k))
            delta[:, j] = w_perp[:, a]
            basis[:, col] = delta.reshape(-1, order="F")
            col += 1
    (basis,) = _fix_signs(basis)
    return basis
