"""Unit tests for the pulse model, gating windows and step-overlap correction."""
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oamwalk import resonator
from oamwalk.exceptions import DegenerateGatingError, EmptySpectrumError, InvalidParameterError
from oamwalk.models import QPlateSpec, Spectrum, StepSeries, WaveplateSpec
from oamwalk.resonator import (
    STENCIL,
    CavityConfig,
    PulseModel,
    bs_weight,
    convolve_steps,
    deconvolve_series,
    deconvolve_step,
    deconvolve_weights,
    fwhm,
    fwtm,
    gate_offset,
    overlap_coefficients,
    overlap_matrix,
    pulse_value,
    round_trip_from_perimeter,
    window_bounds,
    window_integral,
    window_integral_quad,
)
from oamwalk.testing import WalkFixtures
from oamwalk.walk import evolve, probabilities


def _hadamard_series(n=8):
    states = evolve(WalkFixtures.symmetric(), WaveplateSpec("quarter", 45.0), QPlateSpec(0.5), n)
    return StepSeries.from_sequence([probabilities(s) for s in states])


class TestPulseModel:
    """Gaussian pulse shape and widths."""

    def test_fwhm_matches_measured_pulse(self):
        """c = 6.107 ns gives a 14.3 ns FWHM."""
        assert fwhm(PulseModel()) == pytest.approx(14.3, abs=0.1)

    def test_fwtm_ratio(self):
        """FWTM / FWHM = sqrt(ln 10 / ln 2) for any Gaussian."""
        p = PulseModel(c=3.0)
        assert fwtm(p) / fwhm(p) == pytest.approx(np.sqrt(np.log(10) / np.log(2)), rel=1e-12)
        assert fwtm(PulseModel()) == pytest.approx(26.21, abs=0.01)

    def test_half_maximum_at_half_width(self):
        """G(FWHM / 2) is half the peak."""
        p = PulseModel()
        assert pulse_value(p, fwhm(p) / 2) == pytest.approx(p.a / 2)

    @pytest.mark.parametrize("kwargs", [{"a": 0.0}, {"c": -1.0}])
    def test_invalid_pulse(self, kwargs):
        """Amplitude and width must be positive."""
        with pytest.raises(InvalidParameterError):
            PulseModel(**kwargs)


class TestCavityConfig:
    """Resonator parameter validation and derived values."""

    def test_defaults(self, cavity):
        """Default cavity: R = 0.5 and a 15 ns trim on each side."""
        assert cavity.reflection == 0.5
        assert gate_offset(cavity) == 15.0

    @pytest.mark.parametrize("kwargs", [
        {"transmission": 0.0},
        {"transmission": 1.2},
        {"round_trip_ns": 0.0},
        {"gate_width_ns": 50.0},
        {"gate_width_ns": 0.0},
    ])
    def test_invalid_cavity(self, kwargs):
        """Out-of-range cavity parameters are rejected."""
        with pytest.raises(InvalidParameterError):
            CavityConfig(**kwargs)

    def test_full_transmission_allowed(self):
        """T = 1 is the no-recirculation limit."""
        assert CavityConfig(transmission=1.0).reflection == 0.0

    def test_round_trip_from_perimeter(self):
        """A 3 m ring circulates in about 10 ns."""
        assert round_trip_from_perimeter(3.0) == pytest.approx(10.0069, abs=1e-4)
        with pytest.raises(InvalidParameterError):
            round_trip_from_perimeter(-1.0)


class TestBeamSplitterWeights:
    """Round-trip weighting w(n)."""

    def test_values(self, cavity):
        """R for the direct reflection, T^2 R^(n-1) after."""
        assert [bs_weight(cavity, n) for n in (-1, 0, 1, 2, 3)] == [0.0, 0.5, 0.25, 0.125, 0.0625]

    @pytest.mark.parametrize("t", [0.2, 0.5, 0.9])
    def test_weights_sum_to_one(self, t):
        """All light eventually reaches the detector."""
        cfg = CavityConfig(transmission=t)
        assert sum(bs_weight(cfg, n) for n in range(2000)) == pytest.approx(1.0, abs=1e-9)


class TestWindows:
    """Gate windows and their integrals."""

    def test_default_bounds(self, cavity):
        """Main window [-5, 5]; neighbours tile outwards in steps of tau."""
        bounds = window_bounds(cavity)
        assert bounds[0] == (-5.0, 5.0)
        assert bounds[-1] == (5.0, 15.0)
        assert bounds[-2] == (15.0, 25.0)
        assert bounds[1] == (-15.0, -5.0)
        assert bounds[2] == (-25.0, -15.0)

    def test_gate_equal_to_window(self):
        """GW = PW leaves no trim."""
        cfg = CavityConfig(gate_width_ns=40.0)
        assert window_bounds(cfg)[0] == (-20.0, 20.0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=2.0, max_value=20.0), st.floats(min_value=-10.0, max_value=10.0),
           st.floats(min_value=-40.0, max_value=40.0), st.floats(min_value=0.1, max_value=20.0))
    def test_closed_form_matches_quadrature(self, c, b, t1, width):
        """erf closed form agrees with numerical integration."""
        p = PulseModel(a=0.0605, b=b, c=c, k=0.001)
        assert window_integral(p, t1, t1 + width) == pytest.approx(
            window_integral_quad(p, t1, t1 + width), rel=1e-8, abs=1e-10
        )

    def test_coefficients_at_first_step(self, cavity):
        """Pulses before the input contribute nothing."""
        coeffs = overlap_coefficients(cavity, 0)
        assert coeffs[STENCIL.index(-2)] == 0.0
        assert coeffs[STENCIL.index(-1)] == 0.0
        assert coeffs[STENCIL.index(0)] > coeffs[STENCIL.index(1)] > coeffs[STENCIL.index(2)] > 0

    def test_coefficients_without_recirculation(self):
        """T = 1: only the first round trip carries light."""
        coeffs = overlap_coefficients(CavityConfig(transmission=1.0), 0)
        nonzero = [k for k, c in zip(STENCIL, coeffs) if c != 0]
        assert nonzero == [1]


class TestConvolution:
    """Forward overlap model."""

    def test_single_step_unchanged(self, cavity):
        """A lone step has no neighbours to mix in."""
        series = StepSeries.from_sequence([Spectrum.from_mapping({-1: 0.3, 1: 0.7})])
        assert convolve_steps(series, cavity)[0].weights == pytest.approx([0.3, 0.0, 0.7])

    def test_normalized_and_symmetric(self, cavity):
        """Measured steps are normalized and keep the walk's mirror symmetry."""
        for spec in convolve_steps(_hadamard_series(), cavity):
            assert spec.total == pytest.approx(1.0)
            assert spec.weights == pytest.approx(spec.weights[::-1], abs=1e-12)

    def test_odd_step_gains_even_weight(self, cavity):
        """Overlap broadens odd steps with even-l weight from their neighbours."""
        step5 = convolve_steps(_hadamard_series(), cavity)[5]
        assert np.sum(step5.weights[step5.sites % 2 == 0]) > 0.0


class TestDeconvolution:
    """Inverse overlap model."""

    @pytest.mark.parametrize("transmission", [0.5, 0.3])
    def test_exact_round_trip(self, transmission):
        """The default correction inverts the overlap exactly before clipping."""
        cfg = CavityConfig(transmission=transmission)
        ideal = _hadamard_series()
        measured = convolve_steps(ideal, cfg)
        for n in range(len(ideal)):
            raw = deconvolve_weights(measured, cfg=cfg, n=n)
            assert np.max(np.abs(raw - ideal[n].weights)) < 1e-9

    def test_corrected_series_matches_ideal(self, cavity):
        """deconvolve_series recovers every step of a measured walk."""
        ideal = _hadamard_series()
        corrected = deconvolve_series(convolve_steps(ideal, cavity), cavity)
        for got, want in zip(corrected, ideal):
            np.testing.assert_allclose(got.weights, want.weights, atol=1e-9)

    def test_reference_override_round_trip(self, cavity):
        """With the true series as reference, single-step correction is exact too."""
        ideal = _hadamard_series()
        measured = convolve_steps(ideal, cavity)
        for n in range(len(ideal)):
            raw = deconvolve_weights(measured, cfg=cavity, n=n, reference=ideal)
            assert np.max(np.abs(raw - ideal[n].weights)) < 1e-9

    def test_overlap_matrix_rows(self, cavity):
        """Row n carries the step-n coefficients on columns n - 2 .. n + 2."""
        matrix = overlap_matrix(cavity, 6)
        for n in range(6):
            coeffs = overlap_coefficients(cavity, n)
            for k, coeff in zip(STENCIL, coeffs):
                if 0 <= n + k < 6:
                    assert matrix[n, n + k] == pytest.approx(coeff)
        assert np.count_nonzero(np.triu(matrix, 3)) == 0
        assert np.count_nonzero(np.tril(matrix, -3)) == 0

    def test_overlap_matrix_reproduces_convolution(self, cavity):
        """Normalized rows of matrix @ ideal are the measured distributions."""
        ideal = _hadamard_series(6)
        table = overlap_matrix(cavity, len(ideal)) @ np.vstack([s.weights for s in ideal])
        measured = convolve_steps(ideal, cavity)
        for row, spec in zip(table, measured):
            np.testing.assert_allclose(row / row.sum(), spec.weights, atol=1e-12)

    def test_correction_improves_measured_steps(self, cavity):
        """Correction moves odd steps back towards pure parity."""
        measured = convolve_steps(_hadamard_series(), cavity)
        corrected = deconvolve_series(measured, cavity)
        for n in (3, 5):
            before = np.sum(measured[n].weights[measured[n].sites % 2 == 0])
            after = np.sum(corrected[n].weights[corrected[n].sites % 2 == 0])
            assert after < before

    def test_negatives_clamped(self, cavity, caplog):
        """Negative corrected entries become zero and are logged."""
        measured = StepSeries.from_sequence([Spectrum.delta(0, 0, 1), Spectrum.delta(1, 0, 1)])
        with caplog.at_level(logging.WARNING, logger="oamwalk.resonator"):
            corrected = deconvolve_step(measured, cavity, 0)
        assert list(corrected.weights) == [1.0, 0.0]
        assert "clamped" in caplog.text

    def test_degenerate_step_raises(self):
        """T = 1 leaves step 0 outside its own gate."""
        cfg = CavityConfig(transmission=1.0)
        measured = StepSeries.from_sequence([Spectrum.delta(0, -1, 1), Spectrum.delta(1, -1, 1)])
        with pytest.raises(DegenerateGatingError):
            deconvolve_step(measured, cfg, 0)

    def test_series_passes_degenerate_step_through(self, caplog):
        """deconvolve_series keeps a degenerate step as measured."""
        cfg = CavityConfig(transmission=1.0)
        measured = StepSeries.from_sequence([Spectrum.delta(0, -1, 1), Spectrum.delta(1, -1, 1)])
        with caplog.at_level(logging.WARNING, logger="oamwalk.resonator"):
            corrected = deconvolve_series(measured, cfg)
        assert list(corrected[0].weights) == [0.0, 1.0, 0.0]
        assert corrected[1].total == pytest.approx(1.0)
        assert "keeping the measured distribution" in caplog.text

    def test_step_emptied_by_clamp_raises(self, cavity, monkeypatch):
        """A step with no positive corrected weight cannot be normalized."""
        measured = StepSeries.from_sequence([Spectrum.delta(0, 0, 1), Spectrum.delta(1, 0, 1)])
        raw = np.array([[-0.2, -0.1], [0.3, 0.7]])
        monkeypatch.setattr(resonator, "_unmix", lambda series, cfg: (raw, np.array([True, True])))
        with pytest.raises(EmptySpectrumError):
            deconvolve_step(measured, cavity, 0)

    def test_series_keeps_step_emptied_by_clamp(self, cavity, caplog, monkeypatch):
        """deconvolve_series keeps a step whose clamp removes all weight."""
        measured = StepSeries.from_sequence([Spectrum.delta(0, 0, 1), Spectrum.delta(1, 0, 1)])
        raw = np.array([[-0.2, -0.1], [0.3, 0.7]])
        monkeypatch.setattr(resonator, "_unmix", lambda series, cfg: (raw, np.array([True, True])))
        with caplog.at_level(logging.WARNING, logger="oamwalk.resonator"):
            corrected = deconvolve_series(measured, cavity)
        assert list(corrected[0].weights) == [1.0, 0.0]
        np.testing.assert_allclose(corrected[1].weights, [0.3, 0.7])
        assert "keeping the measured distribution" in caplog.text

    def test_single_step_series(self, cavity):
        """A one-step series has no neighbours, so correction returns it unchanged."""
        measured = StepSeries.from_sequence([Spectrum(-1, 1, np.array([0.25, 0.5, 0.25]))])
        np.testing.assert_allclose(deconvolve_weights(measured, cavity, 0), [0.25, 0.5, 0.25])
