"""Dense linear-algebra primitives.

Everything here is a pure function of its inputs. Matrices are plain
``numpy.ndarray`` objects in float64.
"""

import numpy as np

from .errors import DimensionMismatch, NotSymmetric, RankDeficient

RANK_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def _check_rank(sv, what):
    # sv: singular values along the last axis, descending
    top = sv[..., 0]
    bottom = sv[..., -1]
    bad = ~(bottom > RANK_TOL * top)
    if np.any(bad):
        raise RankDeficient(
            f"{what} is rank deficient (sigma_min/sigma_max <= {RANK_TOL:g})"
        )


def qr_positive(m):
    """Reduced QR factorization with a positive diagonal in ``R``.

    Parameters
    ----------
    m : ndarray, shape (d, r) or (k, d, r)
        Tall matrix (or a stack of them) with full column rank.

    Returns
    -------
    q : ndarray
        Orthonormal factor, same shape as `m`.
    r_factor : ndarray
        Upper-triangular factor with strictly positive diagonal.

    Raises
    ------
    RankDeficient
        If ``sigma_min(m) <= 1e-12 * sigma_max(m)``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-2] < m.shape[-1]:
        raise DimensionMismatch(f"qr_positive needs a tall matrix, got shape {m.shape}")
    q, r = np.linalg.qr(m)
    # R shares its singular values with m, and is only r x r.
    _check_rank(np.linalg.svd(r, compute_uv=False), "QR input")
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1)).copy()
    signs[signs == 0] = 1.0
    q = q * signs[..., None, :]
    r = r * signs[..., :, None]
    return q, r


def least_squares(a, y):
    """Solve ``min_b ||a b - y||`` for a tall full-column-rank `a`.

    Accepts a single system ``a (n, r)``, ``y (n,)`` or a stack
    ``a (k, n, r)``, ``y (k, n)``; returns ``b`` of shape ``(r,)`` or ``(k, r)``.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim not in (2, 3) or y.shape != a.shape[:-1]:
        raise DimensionMismatch(f"design {a.shape} and response {y.shape} disagree")
    if a.shape[-2] < a.shape[-1]:
        raise RankDeficient(f"underdetermined system: n={a.shape[-2]} < r={a.shape[-1]}")
    q, r = np.linalg.qr(a)
    _check_rank(np.linalg.svd(r, compute_uv=False), "least-squares design")
    qty = np.einsum("...nr,...n->...r", q, y)
    return np.linalg.solve(r, qty[..., None])[..., 0]


def subspace_distance(u1, u2):
    """Spectral norm of ``(I - u1 u1^T) u2`` for orthonormal bases `u1`, `u2`."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise DimensionMismatch(f"bases have shapes {u1.shape} and {u2.shape}")
    if u1.ndim == 1:
        u1 = u1[:, None]
        u2 = u2[:, None]
    resid = u2 - u1 @ (u1.T @ u2)
    return float(min(1.0, spectral_norm(resid)))


def spectral_norm(m):
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(np.atleast_2d(m), 2))


def symmetric_eigenvalues(m):
    """Eigenvalues of a symmetric matrix in descending order."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric to 1e-10")
    return np.linalg.eigvalsh(m)[::-1].copy()


def orthonormality_error(u):
    """``max |u^T u - I|``; zero for a perfectly orthonormal basis."""
    u = np.asarray(u, dtype=float)
    gram = np.swapaxes(u, -1, -2) @ u
    return float(np.max(np.abs(gram - np.eye(u.shape[-1]))))
