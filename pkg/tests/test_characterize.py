"""Tests for digitizer limits, response recovery, and hangover brackets."""

import numpy as np
import pytest

from pdqrng.characterize import (
    AutocorrelationProfile,
    CharacterizationError,
    CodeLimits,
    NonperturbativeInputError,
    characterize_digitizer,
    compute_autocorrelation,
    compute_hangover_bounds,
    read_calibration,
    recover_impulse_response,
    significant_max_lag,
    synthesize_calibration,
    write_calibration,
)
from pdqrng.detection import ImpulseResponse, SymbolStream, default_error_model, digitize


def hand_limits():
    return CodeLimits(
        bits=2,
        dig_lo=np.array([0.00, 0.24, 0.50, 0.70]),
        dig_hi=np.array([0.26, 0.52, 0.76, 1.00]),
        counts=np.full(4, 100),
        min_samples=100,
    )


class TestCodeLimits:
    def test_hand_built_limits_from_pairs(self):
        # code-unit references at bits=2, full scale = 4 code units
        refs = np.array([0.1, 0.5, 0.9, 1.1, 1.4, 1.9, 2.0, 2.5, 2.9, 3.0, 3.6, 3.9])
        codes = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3])
        limits = characterize_digitizer(refs, codes, bits=2, min_samples=3)
        np.testing.assert_allclose(limits.dig_lo, np.array([0.1, 1.1, 2.0, 3.0]) / 4)
        np.testing.assert_allclose(limits.dig_hi, np.array([0.9, 1.9, 2.9, 3.9]) / 4)
        np.testing.assert_array_equal(limits.counts, [3, 3, 3, 3])
        np.testing.assert_allclose(limits.dig_lo_codes(), [0.1, 1.1, 2.0, 3.0])
        assert limits.confidence == 1 - 1 / 3

    def test_under_observed_codes_are_listed(self):
        refs = np.array([0.1, 0.5, 1.1, 1.4, 1.9, 2.5, 3.0, 3.6, 3.9])
        codes = np.array([0, 0, 1, 1, 1, 2, 3, 3, 3])
        with pytest.raises(CharacterizationError, match=r"\[0, 2\]"):
            characterize_digitizer(refs, codes, bits=2, min_samples=3)

    def test_partial_scale_coverage_rejected(self):
        # all codes seen, but no reference above half scale
        refs = np.array([0.1, 0.5, 0.8, 1.0, 1.3, 1.5, 1.6, 1.8, 1.9])
        codes = np.array([0, 0, 0, 1, 1, 1, 2, 2, 3])
        with pytest.raises(CharacterizationError, match="span"):
            characterize_digitizer(refs, codes, bits=2, min_samples=1)

    def test_perfect_digitizer_recovers_ideal_bins(self):
        bits = 6
        n = 1 << bits
        rng = np.random.Generator(np.random.PCG64(7))
        values = rng.uniform(0.0, 1.0, 200_000)
        stream = digitize(values, bits=bits, mode="ideal")
        limits = characterize_digitizer(
            values * n, stream.symbols.astype(int), bits=bits, min_samples=2500
        )
        lo_ideal = np.arange(n) / n
        hi_ideal = np.arange(1, n + 1) / n
        assert np.all(limits.dig_lo >= lo_ideal - 1e-12)
        assert np.all(limits.dig_hi <= hi_ideal + 1e-12)
        # observed ranges fill their bins up to sampling resolution
        assert np.max(limits.dig_lo - lo_ideal) < 2e-4
        assert np.max(hi_ideal - limits.dig_hi) < 2e-4

    def test_injected_model_round_trip_stays_in_declared_ranges(self):
        model = default_error_model(bits=8)
        refs, codes = synthesize_calibration(model, samples_per_code=2048, seed=11)
        limits = characterize_digitizer(refs, codes, bits=8, min_samples=128)
        lo_decl, hi_decl = model.declared_ranges()
        lo_decl = np.clip(lo_decl, 0.0, 1.0)
        hi_decl = np.clip(hi_decl, 0.0, 1.0)
        assert np.all(limits.dig_lo >= lo_decl - 1e-12)
        assert np.all(limits.dig_hi <= hi_decl + 1e-12)
        # the sweep probes most of each claimable range
        width_obs = limits.dig_hi - limits.dig_lo
        width_decl = hi_decl - lo_decl
        assert np.all(width_obs > 0.5 * width_decl)

    def test_ideal_edges_have_open_ends(self):
        limits = hand_limits()
        lo, hi = limits.ideal_edges()
        assert lo[0] == -np.inf and hi[-1] == np.inf
        np.testing.assert_allclose(lo[1:], [0.25, 0.50, 0.75])
        np.testing.assert_allclose(hi[:-1], [0.25, 0.50, 0.75])

    def test_scaled_edges_interpolate(self):
        limits = hand_limits()
        zeta = (-0.01, 0.02)
        lo1, hi1 = limits.scaled_edges(1.0, zeta)
        np.testing.assert_allclose(lo1[1:], limits.dig_lo[1:] - 0.01)
        np.testing.assert_allclose(hi1[:-1], limits.dig_hi[:-1] + 0.02)
        lo0, hi0 = limits.scaled_edges(0.0, zeta)
        np.testing.assert_allclose(lo0[1:], [0.25, 0.50, 0.75])
        np.testing.assert_allclose(hi0[:-1], [0.25, 0.50, 0.75])
        lo5, hi5 = limits.scaled_edges(0.5, zeta)
        np.testing.assert_allclose(lo5[1:], 0.5 * (lo1[1:] + lo0[1:]))
        np.testing.assert_allclose(hi5[:-1], 0.5 * (hi1[:-1] + hi0[:-1]))
        for eta in (0.0, 0.37, 1.0):
            lo, hi = limits.scaled_edges(eta, zeta)
            assert lo[0] == -np.inf and hi[-1] == np.inf
            assert np.all(np.isfinite(lo[1:])) and np.all(np.isfinite(hi[:-1]))

    def test_scaled_edges_validation(self):
        limits = hand_limits()
        with pytest.raises(CharacterizationError):
            limits.scaled_edges(1.5)
        with pytest.raises(CharacterizationError):
            limits.scaled_edges(0.5, zeta=(0.01, 0.02))

    def test_coarsen_matches_recharacterization(self):
        bits = 3
        rng = np.random.Generator(np.random.PCG64(3))
        values = rng.uniform(0.0, 1.0, 50_000)
        stream = digitize(values, bits=bits, mode="ideal")
        codes = stream.symbols.astype(int)
        fine = characterize_digitizer(values * 8, codes, bits=3, min_samples=1000)
        coarse = fine.coarsen(1)
        direct = characterize_digitizer(values * 2, codes >> 2, bits=1, min_samples=1000)
        np.testing.assert_allclose(coarse.dig_lo, direct.dig_lo)
        np.testing.assert_allclose(coarse.dig_hi, direct.dig_hi)
        np.testing.assert_array_equal(coarse.counts, direct.counts)
        with pytest.raises(CharacterizationError):
            fine.coarsen(4)


class TestCalibrationFiles:
    def test_round_trip(self, tmp_path):
        model = default_error_model(bits=4)
        refs, codes = synthesize_calibration(model, samples_per_code=64, seed=2)
        path = tmp_path / "cal.csv"
        write_calibration(path, refs, codes)
        refs_back, codes_back = read_calibration(path)
        np.testing.assert_array_equal(codes_back, codes)
        np.testing.assert_allclose(refs_back, refs, atol=5e-10)

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("value,symbol\n1.0,2\n")
        with pytest.raises(CharacterizationError, match="header"):
            read_calibration(path)


class TestAutocorrelation:
    def test_white_stream_has_no_significant_tail(self):
        rng = np.random.Generator(np.random.PCG64(5))
        x = rng.normal(0.0, 0.3, 100_000)
        profile = compute_autocorrelation(x, max_lag=20)
        assert profile.ac[0] == pytest.approx(0.09, rel=0.05)
        assert np.max(np.abs(profile.ac[1:])) < 4 * profile.sampling_uncertainty
        assert not profile.degenerate

    def test_planted_taps_set_autocovariance_ratios(self):
        taps = np.array([1.0, 0.05, -0.02])
        rng = np.random.Generator(np.random.PCG64(9))
        x = rng.normal(0.0, 1.0, 400_000)
        y = np.convolve(x, taps)[: x.size]
        profile = compute_autocorrelation(y, max_lag=4)
        norm = np.dot(taps, taps)
        expect_1 = (taps[0] * taps[1] + taps[1] * taps[2]) / norm
        expect_2 = taps[0] * taps[2] / norm
        assert profile.ac[1] / profile.ac[0] == pytest.approx(expect_1, abs=0.005)
        assert profile.ac[2] / profile.ac[0] == pytest.approx(expect_2, abs=0.005)

    def test_symbol_stream_input_matches_code_scale(self):
        rng = np.random.Generator(np.random.PCG64(1))
        values = rng.uniform(0.0, 1.0, 20_000)
        stream = digitize(values, bits=8, mode="ideal")
        via_stream = compute_autocorrelation(stream, max_lag=5)
        via_array = compute_autocorrelation(stream.symbols / 256.0, max_lag=5)
        np.testing.assert_allclose(via_stream.ac, via_array.ac)
        assert via_stream.count == 20_000

    def test_short_stream_rejected(self):
        with pytest.raises(CharacterizationError, match="too short"):
            compute_autocorrelation(np.ones(500), max_lag=10)

    def test_constant_stream_is_degenerate(self):
        profile = compute_autocorrelation(np.full(1000, 0.4), max_lag=3)
        assert profile.degenerate
        assert profile.ac[0] == 0.0
        assert significant_max_lag(profile) == 0
        with pytest.raises(CharacterizationError, match="degenerate"):
            recover_impulse_response(profile)

    def test_significant_max_lag_finds_planted_tail(self):
        taps = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.08])
        rng = np.random.Generator(np.random.PCG64(13))
        x = rng.normal(0.0, 1.0, 300_000)
        y = np.convolve(x, taps)[: x.size]
        profile = compute_autocorrelation(y, max_lag=12)
        assert significant_max_lag(profile) == 5


def exact_autocovariance(taps, n_lags, scale=1.0):
    """Population autocovariance of white noise filtered by taps."""
    ac = np.zeros(n_lags)
    for k in range(n_lags):
        if k < taps.size:
            ac[k] = np.dot(taps[: taps.size - k], taps[k:])
    return scale * ac


class TestResponseRecovery:
    def test_first_order_formula(self):
        ac = np.array([0.25, 0.003, -0.001])
        got = recover_impulse_response(ac, order=1)
        expect = np.array([0.5, 0.003 / 0.5, -0.001 / 0.5])
        np.testing.assert_allclose(got.taps, expect)

    @pytest.mark.parametrize(
        "taps,order,tol,resid_tol",
        [
            (np.array([1.0, 0.009, 0.003, 0, 0, 0, 0, 0, 0, 0, -0.004]), 8, 1e-9, 1e-12),
            (np.array([1.0, -0.15, 0.0, 0.05]), 8, 1e-6, 1e-8),
            (np.array([1.0, 0.2, 0.1]), 16, 1e-6, 1e-7),
        ],
    )
    def test_planted_taps_recovered(self, taps, order, tol, resid_tol):
        ac = exact_autocovariance(taps, taps.size, scale=0.0137)
        got = recover_impulse_response(ac, order=order)
        np.testing.assert_allclose(got.normalized.taps, taps / taps[0], atol=tol)
        norms = np.array(got.residual_norms)
        assert norms[-1] < norms[0]
        assert norms[-1] < resid_tol

    def test_raw_scale_follows_variance(self):
        taps = np.array([1.0, 0.01])
        ac = exact_autocovariance(taps, 2, scale=4.0)
        got = recover_impulse_response(ac)
        assert got.taps[0] == pytest.approx(2.0, rel=1e-4)
        assert got.response.taps[0] > 0

    def test_early_stop_on_stalled_residual(self):
        ac = exact_autocovariance(np.array([1.0, 0.01]), 2)
        got = recover_impulse_response(ac, order=30)
        assert len(got.residual_norms) < 20
        assert got.residual_norms[-1] < 1e-10

    def test_dominance_guard(self):
        with pytest.raises(NonperturbativeInputError, match="0.6"):
            recover_impulse_response(np.array([1.0, 0.6]))

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(CharacterizationError):
            recover_impulse_response(np.array([0.0, 0.0]))
        with pytest.raises(CharacterizationError):
            recover_impulse_response(np.array([-1.0]))


class TestHangoverBounds:
    def test_prompt_only_response_has_no_hangover(self):
        stream = SymbolStream(
            bits=2, origin="interference", symbols=np.array([0, 1, 2, 3], dtype=np.uint8)
        )
        bounds = compute_hangover_bounds(stream, ImpulseResponse([2.0]), hand_limits())
        assert bounds.zeta_minus == 0.0 and bounds.zeta_plus == 0.0

    def test_hand_worked_interval_extremes(self):
        lo = np.array([0.10, 0.24, 0.50, 0.70])
        hi = np.array([0.26, 0.52, 0.76, 0.90])
        limits = CodeLimits(
            bits=2, dig_lo=lo, dig_hi=hi, counts=np.full(4, 10), min_samples=10
        )
        symbols = np.array([3, 0, 2, 1, 3, 0], dtype=np.uint8)
        stream = SymbolStream(bits=2, origin="interference", symbols=symbols)
        taps = np.array([2.0, 0.2, -0.1])  # normalized tail: +0.1, -0.05
        v_max = np.full(symbols.size, -np.inf)
        v_min = np.full(symbols.size, np.inf)
        for i in range(2, symbols.size):
            d1, d2 = symbols[i - 1], symbols[i - 2]
            v_max[i] = 0.1 * hi[d1] - 0.05 * lo[d2]
            v_min[i] = 0.1 * lo[d1] - 0.05 * hi[d2]
        bounds = compute_hangover_bounds(stream, ImpulseResponse(taps), limits)
        assert bounds.zeta_plus == pytest.approx(np.max(v_max[2:]), abs=1e-15)
        assert bounds.zeta_minus == pytest.approx(np.min(v_min[2:]), abs=1e-15)
        assert bounds.zeta_minus < 0.0 < bounds.zeta_plus
        assert bounds.count == symbols.size - 2
        assert bounds.exception_budget == pytest.approx(10.0 / 4)

    def test_planted_pipeline_brackets_true_hangover(self):
        taps = np.array([1.0, 0.009, 0.003, 0, 0, 0, 0, 0, 0, 0, -0.004])
        rng = np.random.Generator(np.random.PCG64(21))
        powers = rng.uniform(0.05, 0.85, 60_000)
        trace = np.convolve(powers, taps)[: powers.size]
        stream = digitize(trace, bits=8, mode="ideal")

        cal_values = rng.uniform(0.0, 1.0, 300_000)
        cal_stream = digitize(cal_values, bits=8, mode="ideal")
        limits = characterize_digitizer(
            cal_values * 256, cal_stream.symbols.astype(int), bits=8, min_samples=512
        )

        tail = taps[1:]
        true_prev = np.convolve(powers, np.concatenate([[0.0], tail]))[
            tail.size : powers.size
        ]
        bounds = compute_hangover_bounds(stream, ImpulseResponse(taps), limits)
        # reconstruction through symbol intervals is exact only to first
        # order in the tail, hence the small tolerance
        assert bounds.zeta_minus <= true_prev.min() + 1e-4
        assert bounds.zeta_plus >= true_prev.max() - 1e-4
        assert bounds.zeta_plus - bounds.zeta_minus < 0.05

    def test_stream_shorter_than_tail_rejected(self):
        stream = SymbolStream(
            bits=2, origin="interference", symbols=np.array([1, 2], dtype=np.uint8)
        )
        with pytest.raises(CharacterizationError, match="shorter"):
            compute_hangover_bounds(
                stream, ImpulseResponse([1.0, 0.1, 0.05]), hand_limits()
            )

    def test_bit_depth_mismatch_rejected(self):
        stream = SymbolStream(
            bits=3, origin="interference", symbols=np.zeros(10, dtype=np.uint8)
        )
        with pytest.raises(CharacterizationError, match="depth"):
            compute_hangover_bounds(stream, ImpulseResponse([1.0, 0.1]), hand_limits())
