"""Small dense symmetric-matrix numerics.

Everything here works on plain ``numpy`` arrays. Covariances that enter the
model are wrapped in :class:`SpdMatrix`, which carries its eigendecomposition so
that inverses and determinants are always taken through eigenvalue reciprocals
and logarithms; no dense inverse is ever formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError, ParameterError

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

# Absolute slack when testing membership in P_eps, so that eigensolver
# round-off does not trigger spurious infinities.
EIG_SLACK = 1e-12


class EigenPair(NamedTuple):
    """Eigenvalues in decreasing order and the matching orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def as_symmetric(m) -> np.ndarray:
    """Validate a square finite matrix and return its symmetric part as float64."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InputError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    return 0.5 * (a + a.T)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(m) -> EigenPair:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    drops below ``1e-12 * ||M||_F``. Eigenvalues are returned in decreasing
    order (stable sort for ties) and each eigenvector is signed so that its
    largest-magnitude component is positive.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    threshold = JACOBI_REL_TOL * scale

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return EigenPair(values[order], _fix_signs(v[:, order]))


@dataclass(frozen=True)
class SpdMatrix:
    """A symmetric positive definite matrix with its cached eigendecomposition.

    Build instances with :meth:`from_matrix` or :meth:`from_eig`; the cached
    eigenvalues are authoritative for everything downstream (Mahalanobis norm,
    log-determinant, membership in P_eps).
    """

    matrix: np.ndarray
    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if not np.all(self.values > 0):
            raise InputError(f"matrix is not positive definite: eigenvalues {self.values}")

    @classmethod
    def from_matrix(cls, m) -> "SpdMatrix":
        a = as_symmetric(m)
        pair = sym_eig(a)
        return cls(a, pair.values, pair.vectors)

    @classmethod
    def from_eig(cls, values, vectors) -> "SpdMatrix":
        values = np.array(values, dtype=float)
        vectors = np.array(vectors, dtype=float)
        if values.ndim != 1 or vectors.shape != (values.size, values.size):
            raise InputError(f"eigenvalues {values.shape} and eigenvectors {vectors.shape} disagree")
        order = np.argsort(-values, kind="stable")
        values, vectors = values[order], vectors[:, order]
        m = (vectors * values) @ vectors.T
        return cls(0.5 * (m + m.T), values, vectors)

    @property
    def dim(self) -> int:
        return self.values.size

    def min_eigenvalue(self) -> float:
        return float(self.values[-1])

    def in_p_eps(self, eps: float) -> bool:
        return bool(self.values[-1] >= eps * eps - eig_slack(eps))


def eig_slack(eps: float) -> float:
    """Slack used for the eigenvalue floor ``eps**2``; never more than a tiny fraction of the floor."""
    return min(EIG_SLACK, 1e-3 * eps * eps)


def project_to_P_eps(m, eps: float) -> SpdMatrix:
    """Clamp eigenvalues of ``m`` from below at ``eps**2``, keeping its eigenvectors."""
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if isinstance(m, SpdMatrix):
        values, vectors = m.values, m.vectors
    else:
        values, vectors = sym_eig(m)
    floor = eps * eps
    if np.all(values >= floor) and isinstance(m, SpdMatrix):
        return m
    return SpdMatrix.from_eig(np.maximum(values, floor), vectors)


def mahalanobis_eta(z, s: SpdMatrix, eta: float):
    """Regularized norm ``sqrt(z^T S^{-1} z + eta)``.

    ``z`` may be a single vector of length L or a stack of shape ``(..., L)``.
    The quadratic form is evaluated in the eigenbasis of ``s`` as
    ``sum_i (V^T z)_i**2 / sigma_i``.
    """
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    z = np.asarray(z, dtype=float)
    if z.shape[-1:] != (s.dim,):
        raise InputError(f"vector dimension {z.shape[-1:]} does not match matrix dimension {s.dim}")
    coeffs = z @ s.vectors
    q = np.sum(coeffs * coeffs / s.values, axis=-1)
    out = np.sqrt(q + eta)
    return float(out) if out.ndim == 0 else out


def log_det(s: SpdMatrix) -> float:
    """Log-determinant as the sum of logs of the cached eigenvalues."""
    return float(np.sum(np.log(s.values)))
