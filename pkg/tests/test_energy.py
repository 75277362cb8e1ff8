import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epsams.energy import (HyperImage, ModelParams, SegmentModel, data_costs, discrete_perimeter, indicator_value,
                           lower_bound, ms_energy, total_energy_eps, total_energy_limit)
from epsams.errors import InputError, ParameterError
from epsams.linalg import SpdMatrix, log_det, mahalanobis_eta, project_to_P_eps

from oracles import energy_brute_force, perimeter_by_enumeration, random_spd


def random_config(rng, h=8, w=8, L=3, k=2, eps=0.05):
    img = HyperImage(rng.standard_normal((h, w, L)) * rng.uniform(0.5, 3))
    labels = rng.integers(1, k + 1, size=(h, w))
    models = [SegmentModel(rng.standard_normal(L), project_to_P_eps(random_spd(rng, L, 1e-4, 3.0), eps))
              for _ in range(k)]
    return img, labels, models


class TestPerimeter:
    def test_empty(self):
        assert discrete_perimeter(np.zeros((5, 6), bool)) == 0

    def test_full(self):
        assert discrete_perimeter(np.ones((5, 6), bool)) == 0

    @pytest.mark.parametrize("a,b", [(1, 1), (2, 3), (4, 1)])
    def test_inner_rectangle(self, a, b):
        mask = np.zeros((8, 9), bool)
        mask[2:2 + a, 3:3 + b] = True
        assert perimeter_by_enumeration(mask) == 2 * a + 2 * b
        assert discrete_perimeter(mask) == 2 * a + 2 * b

    def test_frame_does_not_count(self):
        mask = np.zeros((4, 4), bool)
        mask[:2, :] = True
        assert discrete_perimeter(mask) == 4

    def test_pixel_area_scales_edge_length(self):
        mask = np.zeros((5, 5), bool)
        mask[1:3, 1:3] = True
        assert discrete_perimeter(mask, pixel_area=0.25) == pytest.approx(4.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
    def test_complement_and_enumeration(self, h, w, seed):
        mask = np.random.default_rng(seed).random((h, w)) < 0.5
        assert discrete_perimeter(mask) == discrete_perimeter(~mask) == perimeter_by_enumeration(mask)


class TestIndicator:
    def test_at_mean(self):
        m = SegmentModel(np.array([1.0, 2.0]), SpdMatrix.from_matrix(np.eye(2)))
        assert indicator_value([1.0, 2.0], m, 4.0) == 2.0

    def test_euclidean(self):
        m = SegmentModel(np.zeros(2), SpdMatrix.from_matrix(np.eye(2)))
        assert indicator_value([3.0, 4.0], m, 11.0) == pytest.approx(6.0, abs=1e-15)

    def test_compositional(self, rng):
        for _ in range(20):
            s = SpdMatrix.from_matrix(random_spd(rng, 4))
            mu = rng.standard_normal(4)
            g = rng.standard_normal(4)
            expected = mahalanobis_eta(g - mu, s, 0.2) + log_det(s)
            assert indicator_value(g, SegmentModel(mu, s), 0.2) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            indicator_value([1.0], SegmentModel(np.zeros(2), SpdMatrix.from_matrix(np.eye(2))), 1.0)


class TestTotalEnergy:
    def test_single_pixel(self):
        g = np.array([[[1.0, -2.0]]])
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        mu = np.array([0.3, 0.1])
        params = ModelParams(k=1, eps=0.1, eta=0.5, lam=3.0)
        rep = total_energy_eps(HyperImage(g), np.ones((1, 1), int), [SegmentModel(mu, SpdMatrix.from_matrix(cov))], params)
        z = g[0, 0] - mu
        expected = math.sqrt(z @ np.linalg.solve(cov, z) + 0.5) + math.log(np.linalg.det(cov))
        assert rep.total == pytest.approx(expected, rel=1e-12)
        assert rep.perimeter_term[0] == 0

    def test_indicator_fires(self, rng):
        img, labels, models = random_config(rng, eps=0.1)
        bad = SpdMatrix.from_eig([1.0, 0.5, 0.1 ** 2 / 2], np.eye(3))
        models[0] = SegmentModel(models[0].mean, bad)
        rep = total_energy_eps(img, labels, models, ModelParams(k=2, eps=0.1, eta=0.1, lam=1.0))
        assert rep.infinite and rep.total == math.inf and rep.violating == [1]
        assert math.isfinite(rep.finite_total)

    def test_brute_force_8x8(self, rng):
        img, labels, models = random_config(rng, 8, 8, 3, 2)
        params = ModelParams(k=2, eps=0.05, eta=0.3, lam=0.7)
        rep = total_energy_eps(img, labels, models, params)
        expected = energy_brute_force(img.data, labels, [m.mean for m in models], [m.cov.matrix for m in models],
                                      0.3, 0.7)
        assert rep.total == pytest.approx(expected, rel=1e-10)

    def test_brute_force_pixel_area(self, rng):
        img, labels, models = random_config(rng, 5, 7, 2, 3)
        img = HyperImage(img.data, pixel_area=0.04)
        params = ModelParams(k=3, eps=0.05, eta=0.3, lam=2.0)
        rep = total_energy_eps(img, labels, models, params)
        expected = energy_brute_force(img.data, labels, [m.mean for m in models], [m.cov.matrix for m in models],
                                      0.3, 2.0, pixel_area=0.04)
        assert rep.total == pytest.approx(expected, rel=1e-10)

    def test_inconsistent_inputs(self, rng):
        img, labels, models = random_config(rng)
        with pytest.raises(InputError):
            total_energy_eps(img, labels, models[:1], ModelParams(k=2))
        with pytest.raises(InputError):
            total_energy_eps(img, labels[:4], models, ModelParams(k=2))
        with pytest.raises(InputError):
            total_energy_eps(img, labels + 1, models, ModelParams(k=2))

    def test_empty_segment_contributes_nothing(self, rng):
        img, labels, models = random_config(rng, k=3)
        labels[labels == 3] = 1
        rep = total_energy_eps(img, labels, models, ModelParams(k=3, eps=0.05, eta=0.1, lam=1.0))
        assert rep.counts[2] == 0
        assert rep.data_term[2] == rep.logdet_term[2] == rep.perimeter_term[2] == 0

    def test_csv_rows(self, rng):
        img, labels, models = random_config(rng)
        rows = total_energy_eps(img, labels, models, ModelParams(k=2, eps=0.05)).csv_rows()
        assert rows[0] == ["segment", "data_term", "logdet_term", "perimeter_term", "total", "infinite_flag"]
        assert len(rows) == 4 and rows[-1][0] == "all"


class TestLimit:
    def test_equals_eps_on_P_eps(self, rng):
        img, labels, models = random_config(rng)
        params = ModelParams(k=2, eps=0.05, eta=0.3, lam=0.7)
        assert total_energy_limit(img, labels, models, params).total == total_energy_eps(img, labels, models, params).total

    def test_small_eigenvalue_admissible(self, rng):
        img, labels, _ = random_config(rng, L=2)
        models = [SegmentModel(np.zeros(2), SpdMatrix.from_eig([1.0, 1e-6], np.eye(2)))] * 2
        params = ModelParams(k=2, eps=0.1, eta=0.3, lam=0.7)
        assert math.isfinite(total_energy_limit(img, labels, models, params).total)
        assert total_energy_eps(img, labels, models, params).infinite

    def test_log4_decrement(self):
        # one direction carries no data; shrinking its eigenvalue by 4 lowers J_0 by count * log 4
        rng = np.random.default_rng(3)
        data = np.zeros((4, 5, 2))
        data[..., 0] = rng.standard_normal((4, 5))
        img = HyperImage(data, pixel_area=0.5)
        labels = np.ones((4, 5), int)
        params = ModelParams(k=1, eta=0.1, lam=1.0)
        vals = [total_energy_limit(img, labels, [SegmentModel(np.zeros(2), SpdMatrix.from_eig([1.0, 4.0 ** -t], np.eye(2)))],
                                   params).total for t in range(5)]
        np.testing.assert_allclose(np.diff(vals), -0.5 * 20 * math.log(4), rtol=1e-12)


class TestMsEnergy:
    def test_zero_table(self, rng):
        img = HyperImage(rng.standard_normal((3, 4, 2)))
        assert ms_energy(img, rng.integers(1, 3, (3, 4)), np.zeros((3, 4, 2)), 0.0) == 0.0

    def test_constant_table(self):
        img = HyperImage(np.zeros((3, 4, 2)), pixel_area=2.0)
        assert ms_energy(img, np.ones((3, 4), int), np.full((3, 4, 1), 1.5), 5.0) == 1.5 * 12 * 2.0

    def test_instantiation(self, rng):
        img, labels, models = random_config(rng, 6, 5, 3, 3)
        params = ModelParams(k=3, eps=0.05, eta=0.2, lam=0.9)
        table = np.array([[[indicator_value(img.data[y, x], m, 0.2) for m in models] for x in range(5)] for y in range(6)])
        expected = total_energy_limit(img, labels, models, params).total
        assert ms_energy(img, labels, table, 0.9) == pytest.approx(expected, rel=1e-12)

    def test_shape_mismatch(self, rng):
        img = HyperImage(rng.standard_normal((3, 4, 2)))
        with pytest.raises(InputError):
            ms_energy(img, np.ones((3, 4), int), np.zeros((4, 3, 1)), 1.0)


def test_eigenbasis_form_matches_quadratic_form(rng):
    img, _, models = random_config(rng, 6, 6, 4, 2)
    costs = data_costs(img, models, 0.1)
    for l, m in enumerate(models):
        inv = np.linalg.inv(m.cov.matrix)
        r = img.spectra() - m.mean
        dense = np.sqrt(np.einsum("ij,jk,ik->i", r, inv, r) + 0.1)
        np.testing.assert_allclose(costs[..., l].ravel(), dense, rtol=1e-10)


def test_lower_bound_random(rng):
    for _ in range(50):
        L = int(rng.integers(1, 5))
        k = int(rng.integers(1, 4))
        eps = float(rng.choice([0.01, 0.1, 0.5]))
        img, labels, models = random_config(rng, 6, 6, L, k, eps)
        params = ModelParams(k=k, eps=eps, eta=float(rng.uniform(0.01, 1)), lam=1.0)
        rep = total_energy_eps(img, labels, models, params)
        assert rep.total >= lower_bound(rep.counts, 1.0, params.eta, eps, L)


def test_monotone_in_eps(rng):
    img, labels, models = random_config(rng, eps=0.01)
    prev = None
    for eps in [0.001, 0.01, 0.05, 0.1, 0.5, 1.0]:
        rep = total_energy_eps(img, labels, models, ModelParams(k=2, eps=eps, eta=0.1))
        if prev is not None:
            assert rep.total >= prev
        prev = rep.total
    assert prev == math.inf


def test_recovery_threshold(rng):
    img, labels, models = random_config(rng, eps=0.01)
    eps0 = min(math.sqrt(m.cov.min_eigenvalue()) for m in models)
    params = ModelParams(k=2, eta=0.2, lam=0.3)
    j0 = total_energy_limit(img, labels, models, params).total
    for eps in [eps0, eps0 / 2, eps0 / 10, 1e-9]:
        params.eps = eps
        assert total_energy_eps(img, labels, models, params).total == j0


def test_params_validation():
    for kwargs in ({"k": 0}, {"eps": 0.0}, {"eta": -1.0}, {"lam": -0.5}):
        with pytest.raises(ParameterError):
            ModelParams(**kwargs)


def test_image_validation():
    with pytest.raises(InputError):
        HyperImage(np.full((2, 2, 1), np.inf))
    with pytest.raises(InputError):
        HyperImage(np.zeros((2, 2)))
