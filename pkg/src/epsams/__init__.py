"""Hyperspectral segmentation with the eigenvalue-floored anisotropic Mumford-Shah model."""
from .energy import (EnergyReport, HyperImage, ModelParams, SegmentModel, discrete_perimeter, indicator_value,
                     ms_energy, total_energy_eps, total_energy_limit)
from .linalg import EigenPair, SpdMatrix, log_det, mahalanobis_eta, project_to_P_eps, sym_eig
from .segmentation import SolverState, init_state, run, step, update_labels

__version__ = "0.1.0"
