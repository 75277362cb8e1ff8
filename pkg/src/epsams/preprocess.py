"""Global PCA reduction of a hyperspectral cube.

Keeping only components that carry variance removes directions in which a
segment can have no spread, which is exactly where the covariance
eigenvalues would otherwise collapse to the floor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import HyperImage
from .errors import InputError, ParameterError
from .linalg import sym_eig

# Eigenvalues at or below this fraction of the largest one count as zero.
ZERO_EIG_RTOL = 1e-12


@dataclass(frozen=True)
class PcaTransform:
    """Columns of ``basis`` are the retained principal directions; ``eigenvalues`` covers all L."""

    basis: np.ndarray
    means: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n_components(self) -> int:
        return self.basis.shape[1]

    @property
    def discarded_variance(self) -> float:
        return float(np.sum(np.clip(self.eigenvalues[self.n_components:], 0.0, None)))


def pca_reduce(img: HyperImage, retained_fraction: float = 0.999, drop_zero: bool = True):
    """Project the cube onto its leading principal components.

    Keeps the smallest number ``L'`` of leading components whose eigenvalue
    sum reaches ``retained_fraction`` of the total variance. With
    ``drop_zero`` (the default) components with zero variance are dropped even
    at ``retained_fraction = 1``; without it, a fraction of 1 keeps all ``L``.
    At least one component is always kept.

    Returns ``(reduced_image, transform)``.
    """
    if not 0 < retained_fraction <= 1:
        raise ParameterError(f"retained fraction must lie in (0, 1], got {retained_fraction}")
    g = img.spectra()
    means = g.mean(axis=0)
    r = g - means
    values, vectors = sym_eig(r.T @ r / g.shape[0])
    variance = np.clip(values, 0.0, None)
    cumulative = np.cumsum(variance)
    total = float(cumulative[-1])

    if retained_fraction == 1 and not drop_zero:
        keep = img.channels
    elif total == 0.0:
        keep = 1
    else:
        keep = int(np.searchsorted(cumulative, retained_fraction * total) + 1)
        keep = min(keep, img.channels)
        if drop_zero:
            nonzero = int(np.count_nonzero(variance > ZERO_EIG_RTOL * variance[0]))
            keep = max(1, min(keep, nonzero))

    transform = PcaTransform(vectors[:, :keep].copy(), means, values)
    return pca_apply(img, transform), transform


def pca_apply(img: HyperImage, transform: PcaTransform) -> HyperImage:
    """Project an image with an existing transform."""
    if img.channels != transform.means.size:
        raise InputError(f"image has {img.channels} channels, transform expects {transform.means.size}")
    reduced = (img.spectra() - transform.means) @ transform.basis
    return HyperImage(reduced.reshape(img.height, img.width, -1), img.pixel_area)


def pca_inverse(reduced: HyperImage, transform: PcaTransform) -> HyperImage:
    """Map a reduced cube back to the original channel space (best rank-L' reconstruction)."""
    if reduced.channels != transform.n_components:
        raise InputError(f"reduced image has {reduced.channels} channels, basis has {transform.n_components}")
    full = reduced.spectra() @ transform.basis.T + transform.means
    return HyperImage(full.reshape(reduced.height, reduced.width, -1), reduced.pixel_area)
