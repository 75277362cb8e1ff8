"""Numerical witnesses for the limit behaviour of the model as eps -> 0.

* :func:`make_degenerate_image` builds an image whose spectra span only an
  ``(L - m)``-dimensional subspace.
* :func:`descent_sequence` shrinks the covariance eigenvalues along the
  ``m`` invisible directions as ``4**-t``. The limit functional J_0 then
  decreases without bound.
* :func:`floor_comparison` runs the same sweep under J_eps, which stays above
  its analytic lower bound and becomes infinite once ``4**-t < eps**2``.
* :func:`recovery_check` evaluates J_eps on a constant configuration along a
  sequence ``eps_n -> 0``. The values equal J_0 exactly once ``eps_n`` is
  small enough.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import HyperImage, ModelParams, SegmentModel, lower_bound, segment_energy, total_energy_eps, \
    total_energy_limit
from .errors import ParameterError, PreconditionError
from .estimation import eigenvalue_bounds_for_segment
from .linalg import SpdMatrix, eig_slack

SHRINK = 4.0
DEGENERACY_TOL = 1e-10


def make_degenerate_image(width: int, height: int, L: int, m: int, seed: int = 0, dense: bool = False,
                          pixel_area: float = 1.0):
    """Random image whose spectra lie in an ``(L - m)``-dimensional subspace.

    Returns ``(img, basis, L - m)``. The first ``L - m`` columns of ``basis``
    span the data and the last ``m`` span the orthogonal complement.

    By default the basis is a random signed permutation of the identity. The
    complement coordinates of every spectrum are then exactly zero, and the
    descent sweep stays exact even when eigenvalues reach ``4**-60``. With
    ``dense=True`` a dense random orthonormal basis is used instead. Its
    complement coefficients vanish only up to round-off (about 1e-16).
    """
    if not 1 <= m <= L - 1:
        raise ParameterError(f"m must lie in 1..L-1 = 1..{L - 1}, got {m}")
    rng = np.random.default_rng(seed)
    if dense:
        q, r = np.linalg.qr(rng.standard_normal((L, L)))
        basis = q * np.sign(np.diag(r))
    else:
        basis = np.eye(L)[:, rng.permutation(L)] * rng.choice([-1.0, 1.0], size=L)
    r_dim = L - m
    scales = rng.uniform(0.5, 2.0, size=r_dim)
    coeffs = rng.standard_normal((height * width, r_dim)) * scales + rng.uniform(-3.0, 3.0, size=r_dim)
    data = coeffs @ basis[:, :r_dim].T
    return HyperImage(data.reshape(height, width, L), pixel_area), basis, r_dim


def complement_residual(img: HyperImage, basis, m: int, mask=None, mean=None) -> float:
    """Largest absolute coefficient of ``g(x) - mean`` along the last ``m`` basis vectors."""
    g = img.spectra() if mask is None else img.spectra()[np.asarray(mask, dtype=bool).ravel()]
    if mean is not None:
        g = g - np.asarray(mean, dtype=float)
    coeffs = g @ np.asarray(basis)[:, img.channels - m:]
    return float(np.max(np.abs(coeffs))) if coeffs.size else 0.0


def _check_degenerate(img, mask, mean, basis, m):
    g = img.spectra()[np.asarray(mask, dtype=bool).ravel()] - np.asarray(mean, dtype=float)
    scale = max(1.0, float(np.max(np.abs(g))))
    res = complement_residual(img, basis, m, mask, mean)
    if res > DEGENERACY_TOL * scale:
        raise PreconditionError(f"image is not degenerate in the last {m} directions: residual {res:.3e}")


@dataclass
class SweepRow:
    t: int
    data_term: float
    logdet_term: float
    total: float
    eigenvalue: float
    infinite: bool = False

    @property
    def j_eps(self) -> float:
        return math.inf if self.infinite else self.total


def _data_eigenvalues(img, mask, mean, basis, m, eps=None):
    bounds = eigenvalue_bounds_for_segment(img, mask, mean, basis)[: img.channels - m]
    if np.any(bounds == 0):
        raise PreconditionError("a data-carrying direction has no spread")
    return bounds if eps is None else np.maximum(bounds, eps * eps)


def descent_sequence(img: HyperImage, mask, mean, basis, m: int, t_max: int, eta: float = 1e-3,
                     data_eigenvalues=None) -> list[SweepRow]:
    """J_0 segment energy with the ``m`` complement eigenvalues set to ``4**-t``, ``t = 0..t_max``.

    Eigenvalues along the data-carrying directions stay fixed, by default at
    their closed-form minimizers. The data term is constant in ``t`` and the
    log-det term drops by ``pixel_area * count * m * log 4`` per step.
    """
    _check_degenerate(img, mask, mean, basis, m)
    fixed = _data_eigenvalues(img, mask, mean, basis, m) if data_eigenvalues is None \
        else np.asarray(data_eigenvalues, dtype=float)
    rows = []
    for t in range(t_max + 1):
        lam_t = SHRINK ** (-t)
        cov = SpdMatrix.from_eig(np.concatenate([fixed, np.full(m, lam_t)]), basis)
        data, logdet = segment_energy(img, mask, SegmentModel(np.asarray(mean, dtype=float), cov), eta)
        rows.append(SweepRow(t, data, logdet, data + logdet, lam_t))
    return rows


@dataclass
class FloorReport:
    rows: list
    eps: float
    t_cross: int | None
    bound: float

    @property
    def finite_min(self) -> float:
        return min(r.total for r in self.rows if not r.infinite)


def crossover_index(eps: float) -> int:
    """First ``t`` with ``4**-t`` below the floor ``eps**2``: ``ceil(-2 log eps / log 4)``.

    When ``-2 log eps / log 4`` is an integer, ``4**-t`` equals the floor
    there and is still admissible, so the index moves one step further.
    """
    t = max(0, math.ceil(-2.0 * math.log(eps) / math.log(SHRINK)))
    while SHRINK ** (-t) >= eps * eps - eig_slack(eps):
        t += 1
    return t


def floor_comparison(img: HyperImage, mask, mean, basis, m: int, eps: float, t_max: int,
                     eta: float = 1e-3) -> FloorReport:
    """The descent sweep evaluated under J_eps.

    Rows whose covariance leaves P_eps are flagged infinite. The finite rows
    are checked against the lower bound ``pixel_area * count * (sqrt(eta) + 2L log eps)``.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    fixed = _data_eigenvalues(img, mask, mean, basis, m, eps)
    rows = descent_sequence(img, mask, mean, basis, m, t_max, eta, data_eigenvalues=fixed)
    floor = eps * eps - eig_slack(eps)
    for r in rows:
        r.infinite = r.eigenvalue < floor
    crossing = [r.t for r in rows if r.infinite]
    count = int(np.count_nonzero(mask))
    bound = lower_bound([count], img.pixel_area, eta, eps, img.channels)
    return FloorReport(rows, eps, crossing[0] if crossing else None, bound)


@dataclass
class RecoveryReport:
    eps: list
    j_eps: list
    j0: float
    eps0: float

    @property
    def n_infinite(self) -> int:
        return sum(math.isinf(v) for v in self.j_eps)

    @property
    def tail_exact(self) -> bool:
        """Every entry with ``eps_n <= eps0`` equals J_0 exactly."""
        return all(v == self.j0 for e, v in zip(self.eps, self.j_eps) if e <= self.eps0)


def recovery_check(img: HyperImage, labels, models, eps_sequence, eta: float = 1e-3,
                   lam: float = 1.0) -> RecoveryReport:
    """Evaluate J_eps along ``eps_sequence`` on a fixed configuration and compare with J_0."""
    eps_sequence = [float(e) for e in eps_sequence]
    if any(not e > 0 for e in eps_sequence):
        raise ParameterError("eps sequence entries must be positive")
    k = len(models)
    base = ModelParams(k=k, eps=1.0, eta=eta, lam=lam)
    j0 = total_energy_limit(img, labels, models, base).total
    values = []
    for e in eps_sequence:
        base.eps = e
        values.append(total_energy_eps(img, labels, models, base).total)
    eps0 = min(math.sqrt(m.cov.min_eigenvalue()) for m in models)
    return RecoveryReport(eps_sequence, values, j0, eps0)
