"""Unit tests for the log-polar sorter: designs, element phases, pipeline and detection."""
import math

import numpy as np
import pytest

from oamwalk.exceptions import (
    EmptySpectrumError,
    GridExtentError,
    InvalidParameterError,
    SamplingError,
)
from oamwalk.models import Spectrum
from oamwalk.optics import FieldGrid, GridSampling, oam_mode
from oamwalk.sorter import (
    PRESETS,
    CrosstalkMatrix,
    SorterDesign,
    bin_spectrum,
    corrector_phase,
    crosstalk_matrix,
    default_waist,
    design_grid,
    fanout_order_coefficients,
    fanout_phase,
    optimal_fanout_orders,
    preset,
    similarity,
    sorter_pipeline,
    spot_centroid,
    spot_law_fit,
    spot_position,
    unwrapper_phase,
    weighting_spectrum,
)


def _row_field(design: SorterDesign, rows, n=512) -> FieldGrid:
    """Field that is uniform along x on the given y-row indices."""
    sampling = design_grid(design, n)
    values = np.zeros((n, n), dtype=complex)
    for r in rows:
        values[r, :] = 1.0
    return FieldGrid(sampling, values)


class TestDesigns:
    """Geometry presets and parameter validation."""

    @pytest.mark.parametrize("name,pitch_um", [
        ("refractive", 30.14),
        ("diffractive-1", 56.52),
        ("diffractive-3", 126.6),
    ])
    def test_spot_pitch(self, name, pitch_um):
        """Spot spacing lambda f / d of each preset."""
        assert preset(name).spot_pitch * 1e6 == pytest.approx(pitch_um, abs=0.01)

    def test_spot_position_linear_in_l(self):
        """t = lambda f l / d."""
        design = preset("diffractive-1")
        assert spot_position(design, -3) == pytest.approx(-3 * design.spot_pitch)

    def test_defaults(self):
        """b is four spot pitches and copies sit one unwrapped length apart."""
        design = preset("diffractive-3")
        assert design.b == pytest.approx(4 * design.spot_pitch)
        assert design.omega == pytest.approx(design.d / design.f)
        assert design.copy_offset == pytest.approx(design.d)
        assert len(design.gammas) == 3 and len(design.alphas) == 3

    def test_preset_names(self):
        """Three named designs are available."""
        assert set(PRESETS) == {"refractive", "diffractive-1", "diffractive-3"}
        with pytest.raises(InvalidParameterError):
            preset("holographic")

    @pytest.mark.parametrize("kwargs", [
        {"d": 0.0, "f": 0.1, "wavelength": 633e-9},
        {"d": 1e-3, "f": 0.1, "wavelength": 633e-9, "copies": 2},
        {"d": 1e-3, "f": 0.1, "wavelength": 633e-9, "b": -1e-4},
        {"d": 1e-3, "f": 0.1, "wavelength": 633e-9, "copies": 3,
         "gammas": (1.0, 1.0), "alphas": (0.0, 0.0)},
    ])
    def test_invalid_design(self, kwargs):
        """Inconsistent designs are rejected."""
        with pytest.raises(InvalidParameterError):
            SorterDesign(**kwargs)


class TestElementPhases:
    """Unwrapper, corrector and fan-out phase profiles."""

    def test_unwrapper_matches_scalar_formula(self):
        """Vectorized unwrapper equals the formula evaluated point by point."""
        design = preset("diffractive-1")
        coords = np.linspace(-3 * design.b, 3 * design.b, 16)
        X, Y = np.meshgrid(coords, coords)
        phase = unwrapper_phase(design, X, Y)
        scale = design.d / (design.wavelength * design.f)
        for (i, j), x in np.ndenumerate(X):
            y = Y[i, j]
            r = math.hypot(x, y)
            expected = scale * (y * math.atan2(y, x) - x * math.log(r / design.b) + x)
            assert phase[i, j] == pytest.approx(expected, rel=1e-12, abs=1e-9)

    def test_unwrapper_zero_at_origin(self):
        """The log singularity is removed at r = 0."""
        assert unwrapper_phase(preset("refractive"), 0.0, 0.0) == 0.0

    def test_corrector_periodic_in_v(self):
        """Corrector repeats every unwrapped length d along v."""
        design = preset("diffractive-3")
        u = np.linspace(-design.d, design.d, 7)
        assert corrector_phase(design, u, 0.3 * design.d) == pytest.approx(
            corrector_phase(design, u, 1.3 * design.d), rel=1e-12
        )
        assert corrector_phase(design, 0.0, 0.0) == pytest.approx(
            design.d * design.b / (design.wavelength * design.f)
        )

    def test_single_copy_has_no_fanout(self):
        """N_c = 1 means a flat fan-out phase."""
        design = preset("diffractive-1")
        assert np.all(fanout_phase(design, np.linspace(-1e-3, 1e-3, 50)) == 0.0)

    def test_fanout_periodic(self):
        """The grating repeats every lambda / omega."""
        design = preset("diffractive-3")
        x = np.linspace(-2e-4, 2e-4, 41)
        period = design.wavelength / design.omega
        shifted = np.exp(1j * fanout_phase(design, x + period))
        assert np.allclose(np.exp(1j * fanout_phase(design, x)), shifted)


class TestFanoutDesign:
    """Order amplitudes of the fan-out element."""

    def test_single_copy(self):
        """One copy is the unmodified beam."""
        gammas, alphas, efficiency = optimal_fanout_orders(1)
        assert (gammas, alphas, efficiency) == ((1.0,), (0.0,), 1.0)
        assert np.allclose(fanout_order_coefficients(gammas, alphas), [1.0])

    def test_three_copies_uniform_and_efficient(self):
        """Three equal orders carrying over 92% of the power."""
        gammas, alphas, efficiency = optimal_fanout_orders(3)
        powers = np.abs(fanout_order_coefficients(gammas, alphas)) ** 2
        assert efficiency >= 0.92
        assert (powers.max() - powers.min()) / powers.max() < 0.01
        assert gammas[0] == pytest.approx(gammas[2]) and gammas[1] == 1.0

    def test_even_copies_rejected(self):
        """Copy count must be odd."""
        with pytest.raises(InvalidParameterError):
            optimal_fanout_orders(4)


class TestPipeline:
    """Field propagation through the two-element sorter."""

    def test_energy_conserved(self):
        """Phase elements and ideal lenses preserve power."""
        design = preset("diffractive-3")
        sampling = design_grid(design, 256)
        source = oam_mode(sampling, 2, default_waist(sampling))
        assert sorter_pipeline(source, design).power() == pytest.approx(source.power(), rel=1e-9)

    def test_wavelength_mismatch(self):
        """The source must be at the design wavelength."""
        design = preset("diffractive-1")
        sampling = GridSampling.square(256, design.spot_pitch / 16, 532e-9)
        with pytest.raises(InvalidParameterError):
            sorter_pipeline(oam_mode(sampling, 0, default_waist(sampling)), design)

    def test_undersampled_grid(self):
        """One pixel per spot pitch cannot carry the unwrapper phase."""
        design = preset("diffractive-1")
        sampling = design_grid(design, 256, oversample=1)
        source = oam_mode(sampling, 0, default_waist(sampling))
        with pytest.raises(SamplingError):
            sorter_pipeline(source, design)
        sorter_pipeline(source, design, check_sampling=False)

    @pytest.mark.parametrize("name", ["diffractive-1", "diffractive-3"])
    def test_spot_law_on_small_grid(self, name):
        """Spots move by lambda f / d per unit of OAM."""
        design = preset(name)
        fit = spot_law_fit(design, (-3, 3), design_grid(design, 512))
        assert fit.slope_error < 0.1
        assert fit.r_squared > 0.99
        assert fit.modes == (-3, -2, -1, 0, 1, 2, 3)


class TestDetection:
    """Binning, centroids and the cross-talk matrix."""

    def test_bin_centred_row(self):
        """Light on the axis row lands in bin 0."""
        design = preset("diffractive-1")
        spec = bin_spectrum(_row_field(design, [256]), design, (-2, 2))
        assert spec.weights == pytest.approx([0.0, 0.0, 1.0, 0.0, 0.0])

    def test_bin_edge_row_splits(self):
        """A pixel straddling a bin edge is shared by overlap."""
        design = preset("diffractive-1")
        spec = bin_spectrum(_row_field(design, [256 + 4]), design, (-2, 2))
        assert spec.at(0) == pytest.approx(0.5)
        assert spec.at(1) == pytest.approx(0.5)

    def test_bins_outside_grid(self):
        """Bins must fit inside the detection plane."""
        design = preset("diffractive-1")
        with pytest.raises(GridExtentError):
            bin_spectrum(_row_field(design, [256]), design, (-40, 40))

    def test_no_power_in_bins(self):
        """Light entirely outside the binned range cannot be normalized."""
        design = preset("diffractive-1")
        with pytest.raises(EmptySpectrumError):
            bin_spectrum(_row_field(design, [0]), design, (-2, 2))

    def test_centroid_of_single_row(self):
        """Centroid sits on the lit row."""
        design = preset("diffractive-1")
        centroid = spot_centroid(_row_field(design, [256 + 24]), design)
        assert centroid == pytest.approx(3 * design.spot_pitch)

    def test_crosstalk_diagonal_dominant_and_mirror_symmetric(self):
        """Most light is detected in its own bin, symmetrically in l."""
        design = preset("diffractive-1")
        matrix = crosstalk_matrix(design, (-3, 3), design_grid(design, 512))
        assert matrix.diagonal().mean() > 0.4
        assert np.array_equal(np.argmax(matrix.entries, axis=1), np.arange(7))
        assert np.allclose(matrix.mirrored().entries, matrix.entries, atol=1e-3)

    def test_three_copies_reduce_leakage(self):
        """Fan-out copies sharpen the spots."""
        leak = {}
        for name in ("diffractive-1", "diffractive-3"):
            design = preset(name)
            leak[name] = crosstalk_matrix(design, (-5, 5), design_grid(design, 512)).mean_leakage()
        assert leak["diffractive-3"] < leak["diffractive-1"]

    def test_threaded_rows_identical(self):
        """Worker threads do not change the result."""
        design = preset("diffractive-1")
        sampling = design_grid(design, 256)
        serial = crosstalk_matrix(design, (-2, 2), sampling)
        threaded = crosstalk_matrix(design, (-2, 2), sampling, workers=3)
        assert np.array_equal(serial.entries, threaded.entries)


class TestCrosstalkMatrix:
    """Matrix container and statistics."""

    def test_identity(self):
        """A perfect sorter has no leakage."""
        matrix = CrosstalkMatrix.identity(-2, 2)
        assert matrix.mean_leakage() == 0.0
        assert list(matrix.modes) == [-2, -1, 0, 1, 2]
        assert matrix.row(1).at(1) == 1.0

    def test_rows_must_sum_to_one(self):
        """Each input mode's light is fully accounted for."""
        with pytest.raises(InvalidParameterError):
            CrosstalkMatrix(0, 1, np.array([[0.5, 0.4], [0.0, 1.0]]))

    def test_leakage(self):
        """Leakage is the mean off-diagonal fraction."""
        matrix = CrosstalkMatrix(0, 1, np.array([[0.8, 0.2], [0.4, 0.6]]))
        assert matrix.mean_leakage() == pytest.approx(0.3)


class TestSimilarity:
    """Overlap score between detected and expected spectra."""

    def test_identical(self):
        """S(w, w) = 1 exactly."""
        w = Spectrum.from_mapping({-1: 0.2, 0: 0.5, 1: 0.3})
        assert similarity(w, w) == 1.0

    def test_disjoint(self):
        """No shared support gives 0."""
        assert similarity(Spectrum.delta(0, 0, 1), Spectrum.delta(1, 0, 1)) == 0.0

    def test_hand_computed(self):
        """(0.5, 0.5, 0) against (1, 0, 0) scores 0.5."""
        a = Spectrum.from_mapping({0: 0.5, 1: 0.5, 2: 0.0})
        b = Spectrum.from_mapping({0: 1.0, 1: 0.0, 2: 0.0})
        assert similarity(a, b) == pytest.approx(0.5, abs=1e-12)

    def test_scale_invariant_on_union_of_supports(self):
        """Unnormalized inputs on different lattices are compared on their union."""
        a = Spectrum.from_mapping({0: 2.0, 1: 2.0})
        b = Spectrum.from_mapping({1: 1.0, 2: 1.0})
        assert similarity(a, b) == pytest.approx(0.25)

    def test_empty_input(self):
        """Zero-weight spectra are rejected."""
        with pytest.raises(EmptySpectrumError):
            similarity(Spectrum(0, 1, np.zeros(2)), Spectrum.delta(0, 0, 1))

    def test_weighting_spectrum(self):
        """Expected weights are |c_l|^2 normalized over the detected range."""
        spec = weighting_spectrum({-2: 1.0, 1: 0.8, 3: 0.6, 9: 5.0}, (-5, 5))
        assert spec.at(-2) == pytest.approx(0.5)
        assert spec.at(1) == pytest.approx(0.32)
        assert spec.at(3) == pytest.approx(0.18)
        assert spec.at(9) == 0.0
