"""Seeded synthetic cubes with Gaussian segments on Voronoi regions."""
from __future__ import annotations

import numpy as np

from .energy import HyperImage
from .errors import ParameterError

COVARIANCE_KINDS = ("isotropic", "random", "degenerate")


def _random_orthonormal(rng, L):
    q, r = np.linalg.qr(rng.standard_normal((L, L)))
    return q * np.sign(np.diag(r))


def synth_gaussian(width: int, height: int, L: int, k: int, seed: int = 0, separation: float = 10.0,
                   covariance: str = "random", rank: int | None = None, scale: float = 1.0,
                   pixel_area: float = 1.0):
    """Generate a cube with ``k`` Gaussian segments and its ground-truth labels.

    Regions are the Voronoi cells of ``k`` seeded sites. Segment ``l`` draws
    its spectra from ``N(mu_l, Sigma_l)``. The covariance kind is one of:

    ``isotropic``
        ``scale**2 * I``.
    ``random``
        A random orthonormal frame with eigenvalues drawn from
        ``scale**2 * [0.2, 2]``, independently per segment (anisotropic).
    ``degenerate``
        Rank ``rank`` covariances that share one ``rank``-dimensional
        subspace. The means lie in that subspace too, so every spectrum does.

    Pairwise mean distances are ``separation`` times the average spectral
    standard deviation ``sqrt(trace(Sigma) / L)`` (exactly so when ``k <= L``
    or, for the degenerate kind, ``k <= rank``).
    """
    if width < 1 or height < 1 or L < 1 or k < 1:
        raise ParameterError("width, height, L and k must be positive")
    if covariance not in COVARIANCE_KINDS:
        raise ParameterError(f"covariance must be one of {COVARIANCE_KINDS}, got {covariance!r}")
    if covariance == "degenerate" and (rank is None or not 1 <= rank <= L):
        raise ParameterError(f"degenerate covariance needs 1 <= rank <= L, got {rank}")
    if separation < 0 or scale <= 0:
        raise ParameterError("separation must be nonnegative and scale positive")

    rng = np.random.default_rng(seed)
    sites = rng.uniform(0, 1, size=(k, 2)) * [height, width]
    yy, xx = np.indices((height, width))
    d2 = (yy[..., None] + 0.5 - sites[:, 0]) ** 2 + (xx[..., None] + 0.5 - sites[:, 1]) ** 2
    labels = np.argmin(d2, axis=2) + 1

    span = _random_orthonormal(rng, L)
    factors = []
    for _ in range(k):
        if covariance == "isotropic":
            factors.append(scale * np.eye(L))
        elif covariance == "random":
            frame = _random_orthonormal(rng, L)
            factors.append(frame * (scale * np.sqrt(rng.uniform(0.2, 2.0, size=L))))
        else:
            basis = span[:, :rank]
            factors.append(basis @ _random_orthonormal(rng, rank) * (scale * np.sqrt(rng.uniform(0.2, 2.0, size=rank))))
    avg_std = float(np.mean([np.sqrt(np.sum(f * f) / L) for f in factors]))

    mean_dim = rank if covariance == "degenerate" else L
    if k <= mean_dim:
        directions = _random_orthonormal(rng, mean_dim)[:, :k].T / np.sqrt(2.0)
    else:
        directions = rng.standard_normal((k, mean_dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    if covariance == "degenerate":
        directions = directions @ span[:, :rank].T
    means = separation * avg_std * directions

    data = np.empty((height, width, L))
    for l in range(k):
        mask = labels == l + 1
        n = int(np.count_nonzero(mask))
        z = rng.standard_normal((n, factors[l].shape[1]))
        data[mask] = means[l] + z @ factors[l].T
    return HyperImage(data, pixel_area), labels
