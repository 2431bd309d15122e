import math

import numpy as np
import pytest

from conftest import FIVE_DOMAIN_WINPS, THREE_DOMAIN_GRID, THREE_DOMAIN_WINPS, FIVE_DOMAIN_GRID, FIVE_DOMAIN_RHOS, make_design
from exceptions import DomainError, InfeasibleDesignError
from sample_size import (
    NONPARAMETRIC_INFLATION,
    apply_overrides,
    expand_sweep,
    f_endpoint,
    f_global,
    mean_diff_from_winp,
    required_sample_size,
    resolve_correlation,
    sweep_designs,
    winp_from_normal_means,
)
from schemas import EndpointAssumption
from special_functions import normal_pdf, normal_quantile


def three_domain_n(correlation, lower_bound, sd_ratio, alloc_ratio, assurance):
    design = make_design(THREE_DOMAIN_WINPS, correlation=correlation, lower_bound=lower_bound,
                         sd_ratio=sd_ratio, alloc_ratio=alloc_ratio, assurance=assurance)
    return required_sample_size(design).n_total


def five_domain_n(alloc_ratio, sd_ratio, assurance, rho):
    design = make_design(FIVE_DOMAIN_WINPS, correlation=rho, lower_bound=0.5,
                         sd_ratio=sd_ratio, alloc_ratio=alloc_ratio, assurance=assurance)
    return required_sample_size(design).n_total


class TestVarianceFunction:
    def test_null_value(self):
        assert f_endpoint(EndpointAssumption(winp=0.5), 1.0) == pytest.approx(1.0 / math.pi, rel=1e-12)

    @pytest.mark.parametrize("theta", [0.3, 0.5, 0.55, 0.7, 0.9])
    def test_balanced_equal_sd_form(self, theta):
        z = normal_quantile(theta)
        expected = 0.5 * normal_pdf(z) ** 2 * (z * z + 4.0)
        assert f_endpoint(EndpointAssumption(winp=theta), 1.0) == pytest.approx(expected, rel=1e-12)

    def test_reference_value(self):
        assert f_endpoint(EndpointAssumption(winp=0.7), 1.0) == pytest.approx(0.2584, abs=1e-4)

    def test_unequal_allocation_scales_equal_sd(self):
        # with B = 1 the r = 2 bracket is exactly 9/8 of the r = 1 bracket
        e = EndpointAssumption(winp=0.65)
        assert f_endpoint(e, 2.0) == pytest.approx(1.125 * f_endpoint(e, 1.0), rel=1e-12)

    def test_rejects_nonpositive_allocation(self):
        with pytest.raises(DomainError):
            f_endpoint(EndpointAssumption(winp=0.6), 0.0)

    def test_single_endpoint_global(self):
        design = make_design([0.66], sd_ratio=1.5, alloc_ratio=0.7)
        assert f_global(design) == pytest.approx(f_endpoint(design.endpoints[0], 0.7), rel=1e-14)

    def test_perfectly_correlated_identical_endpoints(self):
        single = make_design([0.62])
        triple = make_design([0.62, 0.62, 0.62], correlation=1.0)
        assert f_global(triple) == pytest.approx(f_global(single), rel=1e-12)


class TestRequiredSampleSize:
    @pytest.mark.parametrize("key", list(THREE_DOMAIN_GRID))
    def test_multi_domain_grid(self, key):
        for assurance, expected in zip((0.8, 0.9), THREE_DOMAIN_GRID[key]):
            assert abs(three_domain_n(*key, assurance) - expected) <= 2

    def test_multi_domain_grid_mostly_exact(self):
        cells = [(key, a, n) for key, ns in THREE_DOMAIN_GRID.items() for a, n in zip((0.8, 0.9), ns)]
        exact = sum(three_domain_n(*key, a) == n for key, a, n in cells)
        assert exact >= 0.9 * len(cells)

    @pytest.mark.parametrize("key, assurance, expected", [
        ((0.75, 0.55, 1.0, 1.0), 0.8, 214),
        ((0.75, 0.55, 1.0, 1.0), 0.9, 286),
        ((0.15, 0.55, 1.0, 1.0), 0.8, 112),
        ((0.15, 0.55, 1.0, 1.0), 0.9, 150),
        ((0.15, 0.55, 2.0, 2.0), 0.8, 102),
        ((0.15, 0.55, 2.0, 2.0), 0.9, 135),
    ])
    def test_multi_domain_anchors(self, key, assurance, expected):
        assert three_domain_n(*key, assurance) == expected

    @pytest.mark.parametrize("key", list(FIVE_DOMAIN_GRID))
    def test_five_domain_grid(self, key):
        for rho, expected in zip(FIVE_DOMAIN_RHOS, FIVE_DOMAIN_GRID[key]):
            assert abs(five_domain_n(*key, rho) - expected) <= 2

    @pytest.mark.parametrize("rho, expected", [(0.1, 280), (0.3, 438), (0.5, 598)])
    def test_five_domain_anchors_balanced(self, rho, expected):
        assert five_domain_n(1.0, 1.0, 0.9, rho) == expected

    def test_five_domain_anchor_unbalanced(self):
        assert five_domain_n(0.5, 1.0, 0.9, 0.3) == 492

    def test_hand_formula_single_endpoint(self):
        design = make_design([0.64], lower_bound=0.52, assurance=0.85, ci_level=0.9)
        z_sum = normal_quantile(0.85) + normal_quantile(0.95)
        effect = math.log(0.64 / 0.36) - math.log(0.52 / 0.48)
        f = f_endpoint(design.endpoints[0], 1.0)
        expected = (z_sum / effect) ** 2 * f / (0.64 * 0.36) ** 2 * NONPARAMETRIC_INFLATION
        assert required_sample_size(design).raw_n == pytest.approx(expected, rel=1e-12)

    def test_allocation_identity(self):
        for r in (0.5, 1.0, 1.7, 3.0):
            result = required_sample_size(make_design(THREE_DOMAIN_WINPS, correlation=0.4, alloc_ratio=r))
            assert result.n_total == result.n_treated + result.n_control
            assert result.n_treated == math.ceil(result.raw_n / (r + 1))
            assert result.n_control == math.ceil(r * result.raw_n / (r + 1))
            if r == 1.0:
                assert abs(result.n_treated - result.n_control) <= 1

    def test_monotone_in_assurance(self):
        sizes = [required_sample_size(make_design(THREE_DOMAIN_WINPS, assurance=a)).n_total
                 for a in np.linspace(0.55, 0.99, 23)]
        assert sizes == sorted(sizes)

    def test_monotone_in_lower_bound(self):
        raw = [required_sample_size(make_design(THREE_DOMAIN_WINPS, lower_bound=b)).raw_n
               for b in np.linspace(0.4, 0.64, 13)]
        assert np.all(np.diff(raw) > 0)

    def test_monotone_in_correlation(self):
        raw = [required_sample_size(make_design(THREE_DOMAIN_WINPS, correlation=rho)).raw_n
               for rho in np.linspace(0.0, 1.0, 11)]
        assert np.all(np.diff(raw) >= 0)

    @pytest.mark.parametrize("lower_bound", [0.65, 0.7])
    def test_infeasible(self, lower_bound):
        with pytest.raises(InfeasibleDesignError, match="infeasible"):
            required_sample_size(make_design(THREE_DOMAIN_WINPS, lower_bound=lower_bound))

    def test_full_correlation_matrix(self):
        exchangeable = make_design(THREE_DOMAIN_WINPS, correlation=0.3)
        matrix = make_design(THREE_DOMAIN_WINPS, correlation=[[1, 0.3, 0.3], [0.3, 1, 0.3], [0.3, 0.3, 1]])
        assert required_sample_size(matrix).raw_n == pytest.approx(required_sample_size(exchangeable).raw_n, rel=1e-14)


class TestNormalConversions:
    def test_no_shift_is_half(self):
        assert winp_from_normal_means(0.0, 1.0, 2.0) == 0.5

    def test_mean_shift_reference(self):
        assert mean_diff_from_winp(0.65, 1.0, 1.0) == pytest.approx(0.5449, abs=1e-4)

    def test_round_trip(self):
        for theta in (0.2, 0.5, 0.61, 0.93):
            diff = mean_diff_from_winp(theta, 0.8, 1.3)
            assert winp_from_normal_means(diff, 0.8, 1.3) == pytest.approx(theta, abs=1e-12)

    def test_scale_invariance(self):
        assert winp_from_normal_means(1.5, 2.0, 1.0) == pytest.approx(winp_from_normal_means(3.0, 4.0, 2.0), abs=1e-15)

    @pytest.mark.parametrize("sds", [(0.0, 1.0), (1.0, -1.0)])
    def test_rejects_nonpositive_sd(self, sds):
        with pytest.raises(DomainError):
            winp_from_normal_means(0.3, *sds)

    def test_endpoint_from_mean_difference(self):
        endpoint = EndpointAssumption.model_validate({"mean_diff": 0.5, "sd_treated": 1.0, "sd_control": 2.0})
        assert endpoint.winp == pytest.approx(winp_from_normal_means(0.5, 1.0, 2.0), abs=1e-15)
        assert endpoint.sd_ratio == 2.0


class TestCorrelationAndSweeps:
    def test_exchangeable_broadcast(self):
        matrix = resolve_correlation(0.4, 3)
        np.testing.assert_array_equal(np.diag(matrix), 1.0)
        assert matrix[0, 2] == 0.4

    @pytest.mark.parametrize("value", [1.2, [[1.0, 0.2], [0.3, 1.0]], [[1.0, 0.2], [0.2, 0.9]], [[1.0]]])
    def test_invalid_correlation(self, value):
        with pytest.raises(DomainError):
            resolve_correlation(value, 2)

    def test_expand_sweep_order(self):
        grid = expand_sweep({"alloc_ratio": [1.0, 0.5], "assurance": [0.8, 0.9]})
        assert grid == [
            {"alloc_ratio": 1.0, "assurance": 0.8},
            {"alloc_ratio": 1.0, "assurance": 0.9},
            {"alloc_ratio": 0.5, "assurance": 0.8},
            {"alloc_ratio": 0.5, "assurance": 0.9},
        ]
        assert expand_sweep({}) == [{}]

    def test_sd_ratio_override_applies_to_every_endpoint(self):
        design = apply_overrides(make_design(THREE_DOMAIN_WINPS), {"sd_ratio": 2.0, "lower_bound": 0.6})
        assert [e.sd_ratio for e in design.endpoints] == [2.0, 2.0, 2.0]
        assert design.lower_bound == 0.6

    def test_sweep_reproduces_five_domain_grid(self):
        rows = sweep_designs(make_design(FIVE_DOMAIN_WINPS, lower_bound=0.5), {
            "alloc_ratio": [1.0, 0.5], "sd_ratio": [0.5, 1.0, 2.0],
            "assurance": [0.8, 0.9], "correlation": list(FIVE_DOMAIN_RHOS),
        })
        expected = [n for ns in FIVE_DOMAIN_GRID.values() for n in ns]
        assert len(rows) == 36
        assert all(abs(row.result.n_total - n) <= 2 for row, n in zip(rows, expected))

    def test_sweep_keeps_going_after_infeasible_point(self):
        rows = sweep_designs(make_design(THREE_DOMAIN_WINPS), {"lower_bound": [0.55, 0.7, 0.6]})
        assert [row.status for row in rows] == ["success", "error", "success"]
        assert rows[1].result is None and "infeasible" in rows[1].message
