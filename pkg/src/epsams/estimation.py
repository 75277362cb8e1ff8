"""Per-segment parameter estimation for fixed labels.

Two pieces live here. The closed-form minimizer of ``a/sqrt(x) + b log x``
gives, direction by direction, the eigenvalue that balances the data term
against the log-determinant. The mean and covariance updates used by the
solver are built on it. They are acceptance-guarded, so a segment's energy
never goes up.

A direction without any spread in the data has ``a = 0``. The scalar
function is then increasing and has no positive minimizer. This is reported
as a *floor-signal*, a returned eigenvalue of exactly ``0.0``, and callers
clamp it to the eigenvalue floor.
"""
from __future__ import annotations

import math

import numpy as np

from .energy import HyperImage, ModelParams, segment_energy, SegmentModel
from .errors import EmptySegmentError, InputError, ParameterError
from .linalg import SpdMatrix, mahalanobis_eta, sym_eig

FLOOR_SIGNAL = 0.0

# Relative size below which a per-pixel projection counts as zero.
DEGENERACY_TOL = 1e-10


def _segment_spectra(img: HyperImage, mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (img.height, img.width):
        raise InputError(f"mask shape {mask.shape} does not match image {(img.height, img.width)}")
    g = img.spectra()[mask.ravel()]
    if g.shape[0] == 0:
        raise EmptySegmentError("segment is empty")
    return g


def sample_stats(img: HyperImage, mask) -> tuple[np.ndarray, np.ndarray]:
    """Mean and biased (1/N) sample covariance of the spectra under ``mask``."""
    g = _segment_spectra(img, mask)
    mean = g.mean(axis=0)
    r = g - mean
    cov = r.T @ r / g.shape[0]
    return mean, 0.5 * (cov + cov.T)


def eigenvalue_minimizer(a: float, b: float) -> float:
    """Minimizer of ``a/sqrt(x) + b*log(x)`` over ``x > 0``.

    Returns ``(a / (2b))**2`` for ``a > 0``. For ``a == 0`` the function is
    strictly increasing, so there is no interior minimizer and
    :data:`FLOOR_SIGNAL` is returned.
    """
    if not b > 0:
        raise ParameterError(f"b must be positive, got {b}")
    if not a >= 0:
        raise ParameterError(f"a must be nonnegative, got {a}")
    if a == 0:
        return FLOOR_SIGNAL
    return (a / (2.0 * b)) ** 2


def direction_coefficient(img: HyperImage, mask, mean, v) -> float:
    """``pixel_area / sqrt(L) * sum_x |v^T (g(x) - mean)|`` over the segment."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise InputError(f"direction must be a unit vector, has norm {np.linalg.norm(v)}")
    g = _segment_spectra(img, mask)
    proj = (g - np.asarray(mean, dtype=float)) @ v
    return img.pixel_area / math.sqrt(img.channels) * float(np.sum(np.abs(proj)))


def eigenvalue_bounds_for_segment(img: HyperImage, mask, mean, vectors) -> np.ndarray:
    """Per-direction eigenvalue minimizers for a segment, with floor-signals.

    Entry ``i`` is ``(a_i / (2 b))**2`` with ``a_i`` the direction coefficient
    along column ``i`` of ``vectors`` and ``b = pixel_area * count``. A
    direction whose per-pixel projections all vanish (relative to the size of
    the residuals, up to round-off) yields a floor-signal.
    """
    vectors = np.asarray(vectors, dtype=float)
    L = img.channels
    if vectors.shape != (L, L):
        raise InputError(f"basis shape {vectors.shape} does not match {L} channels")
    if np.max(np.abs(vectors.T @ vectors - np.eye(L))) > 1e-8:
        raise InputError("basis is not orthogonal")
    g = _segment_spectra(img, mask)
    r = g - np.asarray(mean, dtype=float)
    proj = r @ vectors
    scale = max(1.0, float(np.max(np.linalg.norm(r, axis=1))))
    b = img.pixel_area * g.shape[0]
    a = img.pixel_area / math.sqrt(L) * np.sum(np.abs(proj), axis=0)
    degenerate = np.max(np.abs(proj), axis=0) <= DEGENERACY_TOL * scale
    return np.array([FLOOR_SIGNAL if degenerate[i] else eigenvalue_minimizer(a[i], b) for i in range(L)])


def update_mean(img: HyperImage, mask, cov: SpdMatrix, eta: float, max_iters: int = 100,
                tol: float = 1e-10, start=None) -> np.ndarray:
    """Weiszfeld-type update of a segment mean under the regularized Mahalanobis norm.

    Iterates ``mu <- sum_x w_x g(x) / sum_x w_x`` with
    ``w_x = 1 / ||g(x) - mu||_{cov^-1, eta}``. Because ``eta > 0`` every weight
    is finite, so the iteration has no singularity at data points. Starts from
    ``start`` if given, else the sample mean, and stops once the step norm
    drops below ``tol``. An iterate that raises the data term is rejected.
    """
    g = _segment_spectra(img, mask)

    def cost(mu):
        return float(np.sum(mahalanobis_eta(g - mu, cov, eta)))

    mu = g.mean(axis=0) if start is None else np.array(start, dtype=float)
    if start is not None:
        sample_mean = g.mean(axis=0)
        if cost(sample_mean) < cost(mu):
            mu = sample_mean
    best = cost(mu)
    for _ in range(max_iters):
        w = 1.0 / mahalanobis_eta(g - mu, cov, eta)
        new = w @ g / np.sum(w)
        new_cost = cost(new)
        if new_cost > best:
            break
        step = np.linalg.norm(new - mu)
        mu, best = new, new_cost
        if step < tol:
            break
    return mu


def update_covariance(img: HyperImage, mask, mean, params: ModelParams,
                      previous: SpdMatrix | None = None) -> SpdMatrix:
    """Eigenvalue-domain covariance update, clamped to the floor ``eps**2``.

    Eigenvectors are taken from the scatter matrix of the segment about
    ``mean``; every eigenvalue is set to its closed-form minimizer
    (floor-signals become ``eps**2``). If ``previous`` is given and lies in
    P_eps, the proposal is kept only when the segment energy (data plus
    log-det) does not increase; otherwise ``previous`` is returned.
    """
    g = _segment_spectra(img, mask)
    mean = np.asarray(mean, dtype=float)
    r = g - mean
    scatter = r.T @ r / g.shape[0]
    vectors = sym_eig(scatter).vectors
    bounds = eigenvalue_bounds_for_segment(img, mask, mean, vectors)
    proposal = SpdMatrix.from_eig(np.maximum(bounds, params.eps ** 2), vectors)
    if previous is None or not previous.in_p_eps(params.eps):
        return proposal
    e_new = sum(segment_energy(img, mask, SegmentModel(mean, proposal), params.eta))
    e_old = sum(segment_energy(img, mask, SegmentModel(mean, previous), params.eta))
    return proposal if e_new <= e_old else previous
