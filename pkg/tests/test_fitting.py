"""Tests for spectrum/lasing-curve fitting and the regression helpers."""

import numpy as np
import pytest

from loopfwm.fitting import (
    FitParameter,
    FitReport,
    Spectrum,
    fit_lasing_curve,
    fit_lorentzian,
    linear_least_squares,
    lorentzian_profile,
)
from loopfwm.instrument import centered_grid
from loopfwm.laser import (
    LossBudget,
    default_gain_model,
    output_power_curve,
    steady_state_roundtrip,
)
from loopfwm.ring import RingGeometry, drop_spectrum, solve_coupling, through_spectrum

CENTER_NM = 1555.87
Q_TARGET = 2750.0
GEOMETRY = RingGeometry(radius_um=10.0, group_index=5.136951696849072)
COUPLING = solve_coupling(GEOMETRY, CENTER_NM, Q_TARGET, 0.04)


def synthetic_lorentzian(window_half_nm, step_nm, fwhm_nm, amplitude, baseline):
    grid = centered_grid(CENTER_NM, 2.0 * window_half_nm, step_nm)
    return grid, lorentzian_profile(grid, CENTER_NM, fwhm_nm, amplitude, baseline)


class TestSpectrumType:
    def test_rejects_unsorted_wavelengths(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            Spectrum(np.array([1.0, 3.0, 2.0]), np.zeros(3), 50.0, "drop")

    def test_rejects_nonfinite_values(self):
        with pytest.raises(ValueError, match="finite"):
            Spectrum(np.array([1.0, 2.0, 3.0]), np.array([0.0, np.nan, 0.0]), 50.0, "drop")

    def test_rejects_out_of_range_transmission(self):
        with pytest.raises(ValueError, match="transmission"):
            Spectrum(np.array([1.0, 2.0]), np.array([0.0, 1.2]), 50.0, "through")
        with pytest.raises(ValueError, match="transmission"):
            Spectrum(np.array([1.0, 2.0]), np.array([-0.1, 0.5]), 50.0, "drop")

    def test_idler_kind_is_unbounded_above(self):
        spectrum = Spectrum(np.array([1.0, 2.0]), np.array([0.0, 7.5]), 50.0, "idler")
        assert spectrum.size == 2

    def test_allows_noise_headroom(self):
        Spectrum(np.array([1.0, 2.0]), np.array([0.3, 1.04]), 50.0, "through")

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            Spectrum(np.array([1.0, 2.0]), np.zeros(2), 50.0, "add")

    def test_rejects_bad_resolution(self):
        with pytest.raises(ValueError, match="resolution_pm"):
            Spectrum(np.array([1.0, 2.0]), np.zeros(2), 0.0, "drop")


class TestFitReportType:
    def test_rejects_negative_uncertainty(self):
        with pytest.raises(ValueError, match="nonnegative"):
            FitParameter(1.0, -0.1)

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError, match="nonnegative"):
            FitReport({"a": FitParameter(1.0, 0.0)}, 0.0, -1, 0)

    def test_parameters_are_read_only(self):
        report = FitReport({"a": FitParameter(1.0, 0.0)}, 0.0, 1, 0)
        with pytest.raises(TypeError):
            report.parameters["b"] = FitParameter(2.0, 0.0)


class TestLorentzianFit:
    def test_recovers_noiseless_model(self):
        grid, values = synthetic_lorentzian(4.0, 0.01, 0.57, -0.19, 0.2)
        spectrum = Spectrum(grid, values, 10.0, "through")
        report = fit_lorentzian(spectrum, (CENTER_NM - 4.0, CENTER_NM + 4.0))
        assert report.value("center_nm") == pytest.approx(CENTER_NM, rel=1e-6)
        assert report.value("fwhm_nm") == pytest.approx(0.57, rel=1e-6)
        assert report.value("baseline") == pytest.approx(0.2, rel=1e-6)
        assert report.value("amplitude") == pytest.approx(-0.19, rel=1e-6)
        assert report.residual_rms < 1e-9

    def test_quality_factor_is_center_over_fwhm(self):
        grid, values = synthetic_lorentzian(3.0, 0.05, 0.57, 0.6, 0.1)
        report = fit_lorentzian(
            Spectrum(grid, values, 50.0, "drop"), (CENTER_NM - 3.0, CENTER_NM + 3.0)
        )
        assert report.value("quality_factor") == pytest.approx(
            report.value("center_nm") / report.value("fwhm_nm"), rel=1e-12
        )

    def test_dip_reports_extinction_peak_reports_peak(self):
        grid, dip = synthetic_lorentzian(3.0, 0.05, 0.57, -0.76, 0.8)
        report = fit_lorentzian(
            Spectrum(grid, dip, 50.0, "through"), (CENTER_NM - 3.0, CENTER_NM + 3.0)
        )
        assert report.value("extinction") == pytest.approx(0.04, rel=1e-6)
        grid, peak = synthetic_lorentzian(3.0, 0.05, 0.57, 0.6, 0.05)
        report = fit_lorentzian(
            Spectrum(grid, peak, 50.0, "drop"), (CENTER_NM - 3.0, CENTER_NM + 3.0)
        )
        assert report.value("peak") == pytest.approx(0.65, rel=1e-6)

    def test_idempotent_restart(self):
        grid, values = synthetic_lorentzian(3.0, 0.05, 0.57, 0.6, 0.1)
        rng = np.random.default_rng(7)
        noisy = values + rng.normal(0.0, 0.006, size=grid.size)
        spectrum = Spectrum(grid, noisy, 50.0, "drop")
        window = (CENTER_NM - 3.0, CENTER_NM + 3.0)
        first = fit_lorentzian(spectrum, window)
        converged = (
            first.value("center_nm"),
            first.value("fwhm_nm"),
            first.value("amplitude"),
            first.value("baseline"),
        )
        second = fit_lorentzian(spectrum, window, initial=converged)
        for name in ("center_nm", "fwhm_nm", "amplitude", "baseline"):
            assert second.value(name) == pytest.approx(first.value(name), abs=1e-10)

    def test_monte_carlo_quality_recovery(self):
        # Frozen configuration: 50 pm sampling, noise sigma at 1% of the
        # line amplitude, +/-3 nm window, seeds 0..99.
        fwhm = CENTER_NM / Q_TARGET
        amplitude = 0.6382200814494171
        grid, clean = synthetic_lorentzian(3.0, 0.05, fwhm, amplitude, 0.2)
        worst = 0.0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            noisy = clean + rng.normal(0.0, 0.01 * amplitude, size=grid.size)
            report = fit_lorentzian(
                Spectrum(grid, noisy, 50.0, "drop"),
                (CENTER_NM - 3.0, CENTER_NM + 3.0),
            )
            error = abs(report.value("quality_factor") - Q_TARGET) / Q_TARGET
            worst = max(worst, error)
        assert worst < 0.02

    def test_fitted_ring_quality_in_published_band(self):
        grid = centered_grid(CENTER_NM, 6.0, 0.05)
        values = drop_spectrum(grid, CENTER_NM, GEOMETRY, COUPLING)
        report = fit_lorentzian(
            Spectrum(grid, values, 50.0, "drop"), (CENTER_NM - 3.0, CENTER_NM + 3.0)
        )
        assert 2500.0 <= report.value("quality_factor") <= 3000.0

    def test_through_port_extinction_recovered(self):
        grid = centered_grid(CENTER_NM, 6.0, 0.05)
        values = through_spectrum(grid, CENTER_NM, GEOMETRY, COUPLING)
        report = fit_lorentzian(
            Spectrum(grid, values, 50.0, "through"), (CENTER_NM - 3.0, CENTER_NM + 3.0)
        )
        assert report.value("extinction") == pytest.approx(0.04, abs=0.005)
        assert report.value("extinction") < 0.05

    def test_flags_second_resonance(self):
        grid = centered_grid(CENTER_NM, 8.0, 0.05)
        values = (
            0.8
            + lorentzian_profile(grid, CENTER_NM - 2.0, 0.57, -0.7, 0.0)
            + lorentzian_profile(grid, CENTER_NM + 2.0, 0.57, -0.7, 0.0)
        )
        spectrum = Spectrum(grid, values, 50.0, "through")
        with pytest.raises(ValueError, match="more than one resonance"):
            fit_lorentzian(spectrum, (CENTER_NM - 4.0, CENTER_NM + 4.0))

    def test_rejects_coarse_sampling(self):
        fwhm = CENTER_NM / Q_TARGET
        grid, values = synthetic_lorentzian(3.0, 0.2, fwhm, 0.6, 0.1)
        with pytest.raises(ValueError, match="across the fitted linewidth"):
            fit_lorentzian(
                Spectrum(grid, values, 200.0, "drop"),
                (CENTER_NM - 3.0, CENTER_NM + 3.0),
            )

    def test_rejects_empty_or_reversed_window(self):
        grid, values = synthetic_lorentzian(3.0, 0.05, 0.57, 0.6, 0.1)
        spectrum = Spectrum(grid, values, 50.0, "drop")
        with pytest.raises(ValueError, match="start < stop"):
            fit_lorentzian(spectrum, (CENTER_NM + 1.0, CENTER_NM - 1.0))
        with pytest.raises(ValueError, match="samples"):
            fit_lorentzian(spectrum, (CENTER_NM + 10.0, CENTER_NM + 11.0))

    def test_noisy_uncertainties_cover_truth(self):
        grid, clean = synthetic_lorentzian(3.0, 0.05, 0.57, 0.6, 0.1)
        rng = np.random.default_rng(11)
        noisy = clean + rng.normal(0.0, 0.006, size=grid.size)
        report = fit_lorentzian(
            Spectrum(grid, noisy, 50.0, "drop"), (CENTER_NM - 3.0, CENTER_NM + 3.0)
        )
        assert report.sigma("center_nm") > 0.0
        assert abs(report.value("center_nm") - CENTER_NM) < 5.0 * report.sigma("center_nm")
        assert abs(report.value("fwhm_nm") - 0.57) < 5.0 * report.sigma("fwhm_nm")

    def test_point_accounting(self):
        grid, values = synthetic_lorentzian(4.0, 0.05, 0.57, 0.6, 0.1)
        spectrum = Spectrum(grid, values, 50.0, "drop")
        report = fit_lorentzian(spectrum, (CENTER_NM - 2.0, CENTER_NM + 2.0))
        assert report.points_used + report.points_excluded == spectrum.size
        assert report.points_excluded > 0


class TestLinearLeastSquares:
    def test_exact_line(self):
        xs = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        report = linear_least_squares(xs, 2.0 * xs + 1.0)
        assert report.value("slope") == pytest.approx(2.0, abs=1e-14)
        assert report.value("intercept") == pytest.approx(1.0, abs=1e-14)
        assert report.residual_rms < 1e-13
        assert report.sigma("slope") < 1e-13

    def test_two_point_line_is_exact(self):
        report = linear_least_squares(np.array([1.0, 3.0]), np.array([3.0, 7.0]))
        assert report.value("slope") == pytest.approx(2.0, abs=1e-14)
        assert report.value("intercept") == pytest.approx(1.0, abs=1e-14)
        assert report.sigma("slope") == 0.0
        assert report.sigma("intercept") == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        xs = rng.uniform(0.0, 10.0, size=25)
        ys = 1.7 * xs - 0.3 + rng.normal(0.0, 0.2, size=25)
        order = rng.permutation(25)
        a = linear_least_squares(xs, ys)
        b = linear_least_squares(xs[order], ys[order])
        assert b.value("slope") == pytest.approx(a.value("slope"), rel=1e-12)
        assert b.value("intercept") == pytest.approx(a.value("intercept"), rel=1e-12)

    def test_matches_matrix_solution(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            n = rng.integers(5, 40)
            xs = rng.uniform(-5.0, 5.0, size=n)
            ys = rng.normal(size=n)
            weights = rng.uniform(0.1, 3.0, size=n)
            report = linear_least_squares(xs, ys, weights)
            scaled = np.sqrt(weights)
            design = np.column_stack([xs, np.ones(n)]) * scaled[:, None]
            params, *_ = np.linalg.lstsq(design, ys * scaled, rcond=None)
            assert report.value("slope") == pytest.approx(params[0], rel=1e-10, abs=1e-12)
            assert report.value("intercept") == pytest.approx(params[1], rel=1e-10, abs=1e-12)
            residual = ys - (params[0] * xs + params[1])
            scale = float(weights @ residual**2) / (n - 2)
            covariance = scale * np.linalg.inv(design.T @ design)
            assert report.sigma("slope") == pytest.approx(
                np.sqrt(covariance[0, 0]), rel=1e-8
            )
            assert report.sigma("intercept") == pytest.approx(
                np.sqrt(covariance[1, 1]), rel=1e-8
            )

    def test_validation(self):
        with pytest.raises(ValueError, match="at least 2"):
            linear_least_squares(np.array([1.0]), np.array([2.0]))
        with pytest.raises(ValueError, match="no spread"):
            linear_least_squares(np.array([2.0, 2.0, 2.0]), np.array([1.0, 2.0, 3.0]))
        with pytest.raises(ValueError, match="weights"):
            linear_least_squares(
                np.array([1.0, 2.0]), np.array([1.0, 2.0]), np.array([1.0, -1.0])
            )


class TestLasingCurveFit:
    BUDGET = LossBudget.paper_default()
    GAIN = default_gain_model()
    CURRENTS = np.arange(80.0, 152.5, 5.0)

    def test_recovers_configured_threshold(self):
        powers, _ = output_power_curve(self.GAIN, self.BUDGET, self.CURRENTS)
        report = fit_lasing_curve(self.CURRENTS, powers, exclusion_cutoff_ma=130.0)
        assert report.value("threshold_ma") == pytest.approx(90.0, abs=0.1)

    def test_hinge_excludes_dark_points(self):
        powers, _ = output_power_curve(self.GAIN, self.BUDGET, self.CURRENTS)
        report = fit_lasing_curve(self.CURRENTS, powers, exclusion_cutoff_ma=130.0)
        dark = int(np.count_nonzero(self.CURRENTS <= 90.0))
        over = int(np.count_nonzero(self.CURRENTS > 130.0))
        assert report.points_excluded == dark + over
        assert report.points_used + report.points_excluded == self.CURRENTS.size

    def test_tpa_contamination_handled_by_cutoff(self):
        powers = np.array(
            [
                steady_state_roundtrip(
                    self.GAIN, self.BUDGET, current, tpa_db_per_mw=0.02
                ).drop_port_power_mw
                for current in self.CURRENTS
            ]
        )
        report = fit_lasing_curve(self.CURRENTS, powers, exclusion_cutoff_ma=130.0)
        assert report.value("threshold_ma") == pytest.approx(90.0, abs=1.0)

    def test_four_point_exact_line(self):
        currents = np.array([100.0, 110.0, 120.0, 130.0])
        report = fit_lasing_curve(currents, 0.02 * (currents - 90.0))
        assert report.value("threshold_ma") == pytest.approx(90.0, abs=1e-10)
        assert report.sigma("threshold_ma") < 1e-12

    def test_rejects_all_dark_data(self):
        with pytest.raises(ValueError, match="below threshold"):
            fit_lasing_curve(self.CURRENTS, np.zeros_like(self.CURRENTS))

    def test_rejects_too_few_points(self):
        with pytest.raises(ValueError, match="four points"):
            fit_lasing_curve(
                np.array([100.0, 110.0, 120.0, 130.0]),
                np.array([0.2, 0.4, 0.6, 0.8]),
                exclusion_cutoff_ma=115.0,
            )

    def test_noisy_threshold_uncertainty(self):
        rng = np.random.default_rng(23)
        currents = np.arange(95.0, 131.0, 2.5)
        powers = 0.02 * (currents - 90.0) + rng.normal(0.0, 0.01, size=currents.size)
        report = fit_lasing_curve(currents, powers)
        assert report.sigma("threshold_ma") > 0.0
        assert abs(report.value("threshold_ma") - 90.0) < 5.0 * report.sigma("threshold_ma")
