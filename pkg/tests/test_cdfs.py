"""Tests for the conditional power distributions and cell averages."""

import numpy as np
import pytest

from oracles import (
    arcsine_pointwise_cdf,
    gaussian_phase_cdf_reference,
    mc_cell_average,
    sample_interference_power,
    sup_distance,
)
from pdqrng.cdfs import (
    CdfKind,
    CdfModelError,
    CellBox,
    cdf_gaussian_phase,
    cdf_single_arm,
    cdf_uniform_phase,
    cell_averaged_cdf,
    default_wrap_terms,
    interference_support,
    interval_probability,
    wrapped_normal_mass,
)
from pdqrng.pulses import ConditionVector


def random_condition(rng):
    p_s = rng.uniform(0.02, 0.24)
    p_l = rng.uniform(0.02, 0.24)
    v = rng.uniform(0.1, 1.0)
    phi_c = rng.uniform(-8.0, 8.0)
    return ConditionVector(p_s=p_s, p_l=p_l, visibility=v, phi_c=phi_c)


class TestGaussianPhaseCdf:
    def test_exact_outside_support(self):
        rng = np.random.Generator(np.random.PCG64(0))
        for _ in range(10):
            x = random_condition(rng)
            sigma = rng.uniform(0.3, 6.0)
            lo, hi = interference_support(x)
            assert cdf_gaussian_phase(lo - 1e-9, x, sigma) == 0.0
            assert cdf_gaussian_phase(hi + 1e-9, x, sigma) == 1.0

    def test_matches_direct_normal_accounting(self):
        x = ConditionVector(0.22, 0.18, 0.8, phi_c=1.3)
        sigma = 0.7
        for p in np.linspace(0.0, 0.8, 23):
            want = gaussian_phase_cdf_reference(p, 0.22, 0.18, 0.8, 1.3, sigma)
            assert cdf_gaussian_phase(p, x, sigma) == pytest.approx(want, abs=1e-12)

    def test_uniform_limit_at_large_sigma(self):
        x = ConditionVector(0.25, 0.25, 1.0, phi_c=np.pi / 2)
        p = np.linspace(-0.05, 1.05, 401)
        gauss = cdf_gaussian_phase(p, x, sigma_q=8.0 * np.pi)
        uniform = cdf_uniform_phase(p, x)
        assert np.max(np.abs(gauss - uniform)) < 1e-9

    def test_family_ordering_and_monotonicity(self):
        sigma = np.pi / 8
        p = np.linspace(0.0, 1.0, 801)
        curves = []
        for k in range(9):
            x = ConditionVector(0.25, 0.25, 0.7, phi_c=k * np.pi / 8)
            f = cdf_gaussian_phase(p, x, sigma)
            assert np.all(np.diff(f) >= -1e-12)
            curves.append(f)
        for a, b in zip(curves, curves[1:]):
            assert np.all(b - a >= -1e-12)
        # the extreme phases actually separate
        assert np.max(curves[-1] - curves[0]) > 0.5

    def test_monte_carlo_cross_check(self):
        x = ConditionVector(0.25, 0.25, 0.7, phi_c=np.pi / 8)
        sigma = np.pi / 8
        samples = sample_interference_power(
            0.25, 0.25, 0.7, np.pi / 8, sigma, 1_000_000, seed=42
        )
        dist = sup_distance(samples, lambda p: cdf_gaussian_phase(p, x, sigma))
        assert dist < 0.005

    def test_wrap_invariances(self):
        x = ConditionVector(0.2, 0.15, 0.9, phi_c=0.8)
        x_shift = ConditionVector(0.2, 0.15, 0.9, phi_c=0.8 + 2 * np.pi)
        x_neg = ConditionVector(0.2, 0.15, 0.9, phi_c=-0.8)
        p = np.linspace(0.0, 0.7, 101)
        sigma = 0.9
        base = cdf_gaussian_phase(p, x, sigma)
        assert np.max(np.abs(cdf_gaussian_phase(p, x_shift, sigma) - base)) < 1e-12
        assert np.max(np.abs(cdf_gaussian_phase(p, x_neg, sigma) - base)) < 1e-12

    def test_term_count_rule_saturates(self):
        x = ConditionVector(0.2, 0.15, 0.9, phi_c=2.1)
        sigma = 1.1
        n = default_wrap_terms(sigma, x.phi_c)
        p = np.linspace(0.0, 0.7, 101)
        a = cdf_gaussian_phase(p, x, sigma, wrap_terms=n)
        b = cdf_gaussian_phase(p, x, sigma, wrap_terms=n + 1)
        assert np.max(np.abs(a - b)) < 1e-12
        with pytest.raises(CdfModelError):
            cdf_gaussian_phase(0.5, x, sigma, wrap_terms=0)

    def test_degenerate_interference_is_step(self):
        x = ConditionVector(0.2, 0.0, 0.9, phi_c=0.3)
        assert cdf_gaussian_phase(0.2 - 1e-12, x, 1.0) == 0.0
        assert cdf_gaussian_phase(0.2, x, 1.0) == 1.0
        assert cdf_gaussian_phase(0.3, x, 1.0) == 1.0

    def test_monotone_with_limits_random_conditions(self):
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(8):
            x = random_condition(rng)
            sigma = rng.uniform(0.2, 5.0)
            lo, hi = interference_support(x)
            p = np.linspace(lo - 0.05, hi + 0.05, 1000)
            f = cdf_gaussian_phase(p, x, sigma)
            assert np.all(np.diff(f) >= -1e-12)
            assert f[0] == 0.0 and f[-1] == 1.0


class TestUniformPhaseCdf:
    def test_center_is_half(self):
        x = ConditionVector(0.25, 0.2, 0.8, phi_c=5.0)
        assert cdf_uniform_phase(0.45, x) == pytest.approx(0.5, abs=1e-15)

    def test_support_ends(self):
        x = ConditionVector(0.25, 0.25, 1.0, phi_c=0.0)
        assert cdf_uniform_phase(0.0, x) == 0.0
        assert cdf_uniform_phase(1.0, x) == 1.0

    def test_arcsine_quantile(self):
        x = ConditionVector(0.25, 0.25, 1.0, phi_c=0.0)
        p_quarter = 0.5 + 0.5 * np.cos(0.75 * np.pi)
        assert cdf_uniform_phase(p_quarter, x) == pytest.approx(0.25, abs=1e-12)

    def test_degenerate_denominator_is_step(self):
        x = ConditionVector(0.0, 0.3, 1.0, phi_c=0.0)
        assert cdf_uniform_phase(0.3 - 1e-12, x) == 0.0
        assert cdf_uniform_phase(0.3, x) == 1.0


class TestSingleArmCdf:
    def test_step_convention(self):
        x = ConditionVector(0.2, 0.3, 0.9, phi_c=0.0)
        assert cdf_single_arm(0.2 - 1e-12, x, "short") == 0.0
        assert cdf_single_arm(0.2, x, "short") == 1.0
        assert cdf_single_arm(0.21, x, "short") == 1.0
        assert cdf_single_arm(0.29, x, "long") == 0.0
        assert cdf_single_arm(0.3, x, "long") == 1.0
        with pytest.raises(CdfModelError):
            cdf_single_arm(0.5, x, "middle")


class TestIntervalProbability:
    def test_continuous_kinds_difference_of_cdfs(self):
        x = ConditionVector(0.2, 0.22, 0.85, phi_c=0.4)
        kind = CdfKind.gaussian_phase(0.8)
        got = interval_probability(0.3, 0.5, x, kind)
        want = cdf_gaussian_phase(0.5, x, 0.8) - cdf_gaussian_phase(0.3, x, 0.8)
        assert got == pytest.approx(want, abs=1e-12)

    def test_step_atom_on_half_open_bins(self):
        x = ConditionVector(0.2, 0.3, 0.9, phi_c=0.0)
        kind = CdfKind.step_short()
        assert interval_probability(0.1, 0.2, x, kind) == 0.0
        assert interval_probability(0.2, 0.25, x, kind) == 1.0
        assert interval_probability(0.2, np.inf, x, kind) == 1.0
        assert interval_probability(-np.inf, 0.2, x, kind) == 0.0

    def test_degenerate_interference_atom(self):
        x = ConditionVector(0.2, 0.1, 0.0, phi_c=0.0)
        kind = CdfKind.uniform_phase()
        assert interval_probability(0.25, 0.3, x, kind) == 0.0
        assert interval_probability(0.3, 0.31, x, kind) == 1.0

    def test_order_validated(self):
        x = ConditionVector(0.2, 0.3, 0.9, phi_c=0.0)
        with pytest.raises(CdfModelError):
            interval_probability(0.5, 0.4, x, CdfKind.uniform_phase())


class TestWrappedMass:
    def test_against_wide_brute_force(self):
        from scipy.stats import norm

        rng = np.random.Generator(np.random.PCG64(17))
        for _ in range(25):
            sigma = rng.uniform(0.05, 12.0)
            center = rng.uniform(-40.0, 40.0)
            width = rng.uniform(0.0, 2.0 * np.pi)
            a, b = center - width / 2, center + width / 2
            want = 0.0
            for n in range(-300, 301):
                want += norm.cdf((b + 2 * np.pi * n) / sigma) - norm.cdf(
                    (a + 2 * np.pi * n) / sigma
                )
            got = wrapped_normal_mass(a, b, sigma)
            assert got == pytest.approx(min(want, 1.0), abs=1e-12)

    def test_full_and_empty_arcs(self):
        assert wrapped_normal_mass(0.3, 0.3, 1.0) == 0.0
        assert wrapped_normal_mass(-np.pi, np.pi, 0.7) == 1.0
        arr = wrapped_normal_mass(
            np.array([0.0, 1.0]), np.array([0.5, 1.0 + 2 * np.pi]), 0.9
        )
        assert arr[1] == 1.0

    def test_sigma_validated(self):
        with pytest.raises(CdfModelError):
            wrapped_normal_mass(0.0, 1.0, 0.0)


class TestKindAndCell:
    def test_kind_validation(self):
        with pytest.raises(CdfModelError):
            CdfKind("gaussian-phase")
        with pytest.raises(CdfModelError):
            CdfKind("uniform-phase", sigma_q=1.0)
        with pytest.raises(CdfModelError):
            CdfKind("triangular")

    def test_cell_validation(self):
        with pytest.raises(CdfModelError):
            CellBox(0.3, 0.2, 0.0, 0.1, 0.0, 1.0)
        with pytest.raises(CdfModelError):
            CellBox(0.0, 0.1, 0.0, 0.1, 0.0, 1.2)
        with pytest.raises(CdfModelError):
            CellBox(0.0, 0.5, 0.0, 0.5, 0.0, 1.0)  # corner peak power 2

    def test_support_hull(self):
        box = CellBox(0.1, 0.2, 0.1, 0.2, 0.5, 1.0)
        lo, hi = box.support()
        assert lo == pytest.approx(0.2 - 2 * 0.2)
        assert hi == pytest.approx(0.4 + 2 * 0.2)


class TestCellAveragedCdf:
    def test_point_cell_equals_pointwise(self):
        x = ConditionVector(0.21, 0.17, 0.83, phi_c=0.0)
        box = CellBox.from_point(x)
        p = np.linspace(0.0, 0.8, 41)
        got = cell_averaged_cdf(p, box, CdfKind.uniform_phase())
        np.testing.assert_allclose(got, cdf_uniform_phase(p, x), atol=1e-12)
        got_s = cell_averaged_cdf(p, box, CdfKind.step_short())
        np.testing.assert_allclose(got_s, cdf_single_arm(p, x, "short"), atol=0)

    def test_center_average_is_half(self):
        box = CellBox(0.2, 0.2, 0.23, 0.23, 0.3, 0.9)
        assert cell_averaged_cdf(0.43, box, CdfKind.uniform_phase()) == pytest.approx(
            0.5, abs=1e-10
        )

    def test_step_kind_ramp(self):
        box = CellBox(0.1, 0.3, 0.0, 0.1, 0.0, 1.0)
        p = np.array([-np.inf, 0.05, 0.1, 0.2, 0.3, 0.4, np.inf])
        got = cell_averaged_cdf(p, box, CdfKind.step_short())
        np.testing.assert_allclose(got, [0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0])
        got_l = cell_averaged_cdf(np.array([0.02, 0.05, 0.2]), box, CdfKind.step_long())
        np.testing.assert_allclose(got_l, [0.2, 0.5, 1.0])

    @pytest.mark.parametrize(
        "box",
        [
            (0.05, 0.22, 0.08, 0.2, 0.2, 0.9),
            (0.01, 0.25, 0.01, 0.25, 0.0, 1.0),
            (0.18, 0.21, 0.18, 0.21, 0.94, 0.98),
        ],
    )
    def test_monte_carlo_oracle(self, box):
        cell = CellBox(*box)
        lo, hi = cell.support()
        p = np.linspace(lo - 0.02, hi + 0.02, 9)
        got = cell_averaged_cdf(p, cell, CdfKind.uniform_phase())
        want, err = mc_cell_average(
            p, box, arcsine_pointwise_cdf, count=100_000, seed=5
        )
        assert np.all(np.abs(got - want) <= 3 * err + 1e-4)

    def test_monotone_in_p_with_limits(self):
        cell = CellBox(0.02, 0.2, 0.05, 0.24, 0.1, 1.0)
        lo, hi = cell.support()
        p = np.linspace(lo - 0.03, hi + 0.03, 200)
        f = cell_averaged_cdf(p, cell, CdfKind.uniform_phase())
        assert np.all(np.diff(f) >= -1e-9)
        assert f[0] == 0.0 and f[-1] == 1.0
        assert cell_averaged_cdf(-np.inf, cell, CdfKind.uniform_phase()) == 0.0
        assert cell_averaged_cdf(np.inf, cell, CdfKind.uniform_phase()) == 1.0

    def test_degenerate_axes_mix(self):
        # one axis wide, two collapsed
        cell = CellBox(0.05, 0.25, 0.15, 0.15, 0.8, 0.8)
        p = np.array([0.1, 0.3, 0.5])
        got = cell_averaged_cdf(p, cell, CdfKind.uniform_phase())
        want, err = mc_cell_average(
            p, (0.05, 0.25, 0.15, 0.15, 0.8, 0.8), arcsine_pointwise_cdf,
            count=60_000, seed=9,
        )
        assert np.all(np.abs(got - want) <= 3 * err + 1e-4)

    def test_v_degenerate_at_zero_is_step_average(self):
        # V pinned to 0: point mass at ps + pl, averaged over ps
        cell = CellBox(0.1, 0.2, 0.1, 0.1, 0.0, 0.0)
        got = cell_averaged_cdf(np.array([0.19, 0.25, 0.35]), cell, CdfKind.uniform_phase())
        np.testing.assert_allclose(got, [0.0, 0.5, 1.0], atol=1e-9)

    def test_gaussian_kind_average_refused(self):
        cell = CellBox(0.1, 0.2, 0.1, 0.2, 0.5, 1.0)
        with pytest.raises(CdfModelError, match="phi_c"):
            cell_averaged_cdf(0.3, cell, CdfKind.gaussian_phase(1.0))
