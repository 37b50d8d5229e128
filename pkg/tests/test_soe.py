"""Tests for the sum-of-exponentials kernel compression."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracvisco.errors import BudgetExceeded
from fracvisco.mlf import ml_integral
from fracvisco.soe import (SoeApprox, _assemble, build_panels, build_soe,
                           certify_soe, eval_soe, gauss_legendre, write_table)


class TestPanels:
    def test_ladder_q10_k2(self):
        # [0,1], [1,10], [10,100] as center/radius pairs
        panels = build_panels(10.0, 2)
        got = [(p.c, p.r) for p in panels]
        assert got == [(0.5, 0.5), (5.5, 4.5), (55.0, 45.0)]

    def test_k_zero_is_unit_interval(self):
        panels = build_panels(10.0, 0)
        assert len(panels) == 1
        assert (panels[0].c, panels[0].r) == (0.5, 0.5)

    def test_panels_tile_contiguously(self):
        panels = build_panels(3.0, 6)
        edges = [(p.c - p.r, p.c + p.r) for p in panels]
        assert edges[0][0] == 0.0
        for (lo_a, hi_a), (lo_b, _) in zip(edges, edges[1:]):
            assert hi_a == pytest.approx(lo_b, rel=1e-14)
        assert edges[-1][1] == pytest.approx(3.0 ** 6, rel=1e-14)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            build_panels(1.0, 2)
        with pytest.raises(ValueError):
            build_panels(10.0, -1)


class TestGaussLegendre:
    def test_one_point_is_midpoint(self):
        x, w = gauss_legendre(1)
        assert x[0] == pytest.approx(0.0, abs=1e-15)
        assert w[0] == pytest.approx(2.0)

    def test_two_point_nodes(self):
        x, w = gauss_legendre(2)
        assert np.allclose(np.sort(x), [-1 / math.sqrt(3), 1 / math.sqrt(3)])
        assert np.allclose(w, [1.0, 1.0])

    def test_degree_exactness(self):
        # J points integrate monomials up to degree 2J-1 exactly
        x, w = gauss_legendre(5)
        for deg in range(10):
            exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
            assert w @ x ** deg == pytest.approx(exact, abs=1e-14)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            gauss_legendre(0)
        with pytest.raises(ValueError):
            gauss_legendre(65)


class TestAssemble:
    def test_positive_rates_and_weights(self):
        nodes, weights = _assemble(0.5, 10.0, 4, 8, down=2)
        assert np.all(nodes > 0)
        assert np.all(weights > 0)

    def test_weight_sum_below_one(self):
        # sum_j b_j -> E_alpha(0) = 1 from below as the rule refines
        for alpha in (0.3, 0.5, 0.8):
            nodes, weights = _assemble(alpha, 10.0, 12, 24, down=6)
            assert weights.sum() <= 1.0 + 1e-12
            assert weights.sum() > 0.9

    def test_node_count(self):
        nodes, weights = _assemble(0.5, 10.0, 3, 8, down=2)
        # panels: 1 base + 2 down + 3 up; 8 points each
        assert nodes.size == 6 * 8
        assert weights.size == nodes.size


class TestBuildAndCertify:
    def test_certified_build_meets_tolerance(self):
        soe = build_soe(0.5, 1e-6, 10.0, 1e-4, 2.0)
        assert soe.eps_certified <= 1e-6
        assert soe.n_exp <= 4096

    def test_certification_is_honest(self):
        # re-measuring on a finer grid stays within a small factor
        soe = build_soe(0.5, 1e-6, 10.0, 1e-4, 2.0)
        recorded = soe.eps_certified
        dev = certify_soe(soe, 1e-4, 2.0, samples=2048)
        assert dev <= 4.0 * max(recorded, 1e-30)
        assert dev <= 1e-6 * 4.0

    def test_eval_matches_reference_pointwise(self):
        soe = build_soe(0.3, 1e-8, 10.0, 1e-4, 2.0)
        for t in (1e-4, 1e-2, 0.3, 1.0, 2.0):
            assert eval_soe(soe, t) == pytest.approx(
                ml_integral(0.3, t), abs=1e-8)

    def test_node_growth_under_tolerance_tightening(self):
        # halving log(eps) by 1e-3 -> 1e-6 grows the node count by at most 4x
        for alpha in (0.3, 0.5, 0.8):
            loose = build_soe(alpha, 1e-3, 10.0, 1e-4, 2.0)
            tight = build_soe(alpha, 1e-6, 10.0, 1e-4, 2.0)
            assert tight.n_exp <= 4 * loose.n_exp

    def test_eval_monotone_decreasing(self):
        soe = build_soe(0.5, 1e-8, 10.0, 1e-4, 2.0)
        grid = np.geomspace(1e-4, 2.0, 400)
        vals = eval_soe(soe, grid)
        assert np.all(np.diff(vals) < 0)

    def test_perturbation_detected(self):
        # corrupting one weight must blow up the certified deviation
        soe = build_soe(0.5, 1e-6, 10.0, 1e-4, 2.0)
        soe.weights = soe.weights.copy()
        soe.weights[soe.weights.argmax()] *= 1.01
        dev = certify_soe(soe, 1e-4, 2.0)
        assert dev > 1e-4

    def test_refining_j_does_not_degrade(self):
        # doubling J at fixed panels keeps the deviation from growing much
        def dev_for(j):
            nodes, weights = _assemble(0.5, 10.0, 8, j, down=4)
            soe = SoeApprox(alpha=0.5, q=10.0, big_k=8, j_per_panel=j,
                            nodes=nodes, weights=weights, eps_target=1.0,
                            down_panels=4)
            return certify_soe(soe, 1e-3, 2.0)

        coarse, fine = dev_for(8), dev_for(16)
        assert fine <= 2.0 * coarse

    def test_budget_exceeded(self):
        with pytest.raises(BudgetExceeded):
            build_soe(0.5, 1e-14, 1.0001, 1e-4, 2.0)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            build_soe(1.5, 1e-6, 10.0, 1e-4, 2.0)
        with pytest.raises(ValueError):
            build_soe(0.5, 2.0, 10.0, 1e-4, 2.0)
        with pytest.raises(ValueError):
            build_soe(0.5, 1e-6, 10.0, 2.0, 1e-4)
        with pytest.raises(ValueError):
            certify_soe(build_soe(0.5, 1e-3, 10.0, 1e-2, 2.0),
                        1e-2, 2.0, samples=50)

    @settings(max_examples=10, deadline=None)
    @given(alpha=st.floats(0.15, 0.9), scale=st.floats(0.5, 2.0))
    def test_certified_accuracy_property(self, alpha, scale):
        soe = build_soe(alpha, 1e-4, 10.0, 1e-3 * scale, 2.0 * scale)
        assert soe.eps_certified <= 1e-4


class TestWriteTable:
    def test_round_trip(self, tmp_path):
        soe = build_soe(0.5, 1e-3, 10.0, 1e-2, 2.0)
        path = tmp_path / "soe.txt"
        write_table(soe, str(path))
        data = np.loadtxt(path)
        assert data.shape == (soe.n_exp, 2)
        assert np.array_equal(data[:, 0], soe.nodes)
        assert np.array_equal(data[:, 1], soe.weights)
