"""Log-polar OAM mode sorter with optional fan-out copying.

The first element maps (x, y) to (u, v) = (-a ln(r/b), a theta) with a = d / 2 pi,
so the azimuthal phase of an OAM mode becomes a linear gradient along v. A lens
then focuses each OAM value to its own spot on the detection plane, displaced
along y by lambda f l / d. Arrays are indexed [y, x]; the spot axis is y.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, stats

from .exceptions import EmptySpectrumError, GridExtentError, InvalidParameterError, SamplingError
from .models import Spectrum
from .optics import FieldGrid, GridSampling, lens_transform, oam_mode

logger = logging.getLogger(__name__)

DEFAULT_GRID = 1024
DEFAULT_OVERSAMPLE = 8
# Input pixels below this fraction of the peak intensity are ignored by the sampling check.
SAMPLING_FLOOR = 1e-6
_ORDER_SAMPLES = 256


@lru_cache(maxsize=None)
def optimal_fanout_orders(copies: int) -> Tuple[Tuple[float, ...], Tuple[float, ...], float]:
    """Fan-out order parameters giving equal-power copies with high efficiency.

    The orders are kept symmetric (gamma_-m = gamma_m, alpha_-m = alpha_m) with
    gamma_0 = 1 and alpha_0 = 0, and Nelder-Mead maximises the power in the wanted
    orders while penalising their imbalance.

    Returns:
        (gammas, alphas, efficiency), orders listed from m = -N to N
    """
    if copies < 1 or copies % 2 == 0:
        raise InvalidParameterError(
            "Copy count must be an odd positive integer", log_details=f"copies={copies}"
        )
    n = copies // 2
    if n == 0:
        return (1.0,), (0.0,), 1.0
    m = np.arange(1, n + 1)
    if n == 1:
        start = np.array([1.32859, np.pi / 2])
    else:
        start = np.concatenate([np.ones(n), np.pi * m ** 2 / copies])

    def expand(params: NDArray) -> Tuple[NDArray, NDArray]:
        gam, alp = params[:n], params[n:]
        gammas = np.concatenate([gam[::-1], [1.0], gam])
        alphas = np.concatenate([alp[::-1], [0.0], alp])
        return gammas, alphas

    def objective(params: NDArray) -> float:
        powers = np.abs(fanout_order_coefficients(*expand(params))) ** 2
        spread = (powers.max() - powers.min()) / (powers.max() + powers.min())
        return float(-powers.sum() + 10.0 * spread)

    result = optimize.minimize(objective, start, method="Nelder-Mead",
                               options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000 * n})
    gammas, alphas = expand(result.x)
    efficiency = float(np.sum(np.abs(fanout_order_coefficients(gammas, alphas)) ** 2))
    logger.debug(
        f"Fan-out design for {copies} copies: efficiency={efficiency:.4f} iterations={result.nit}"
    )
    return tuple(float(g) for g in gammas), tuple(float(a) for a in alphas), efficiency


def _fanout_profile(gammas: ArrayLike, alphas: ArrayLike, phase: ArrayLike) -> NDArray[np.float64]:
    """atan2 of the order sums at normalized grating phase 2 pi omega x / lambda."""
    gammas = np.asarray(gammas, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    n = len(gammas) // 2
    orders = np.arange(-n, n + 1)
    arg = np.multiply.outer(np.asarray(phase, dtype=float), orders) + alphas
    return np.arctan2(np.sum(gammas * np.sin(arg), axis=-1), np.sum(gammas * np.cos(arg), axis=-1))


def _fanout_slope(gammas: ArrayLike, alphas: ArrayLike, phase: ArrayLike) -> NDArray[np.float64]:
    """Derivative of ``_fanout_profile`` with respect to the grating phase."""
    gammas = np.asarray(gammas, dtype=float)
    n = len(gammas) // 2
    orders = np.arange(-n, n + 1)
    alphas = np.asarray(alphas, dtype=float)
    arg = np.multiply.outer(np.asarray(phase, dtype=float), orders) + alphas
    s = np.sum(gammas * np.sin(arg), axis=-1)
    c = np.sum(gammas * np.cos(arg), axis=-1)
    ds = np.sum(gammas * orders * np.cos(arg), axis=-1)
    dc = -np.sum(gammas * orders * np.sin(arg), axis=-1)
    return (c * ds - s * dc) / (s ** 2 + c ** 2)


def fanout_order_coefficients(gammas: ArrayLike, alphas: ArrayLike) -> NDArray[np.complex128]:
    """Complex amplitudes of orders -N..N of exp(i phi_FOE) over one grating period."""
    n = len(gammas) // 2
    phase = 2 * np.pi * np.arange(_ORDER_SAMPLES) / _ORDER_SAMPLES
    transmission = np.exp(1j * _fanout_profile(gammas, alphas, phase))
    spectrum = np.fft.fft(transmission) / _ORDER_SAMPLES
    return spectrum[np.arange(-n, n + 1) % _ORDER_SAMPLES]


@dataclass(frozen=True)
class SorterDesign:
    """Geometry of a two-element log-polar sorter.

    Attributes:
        d: Length of the unwrapped beam (m)
        f: Focal length of the transforming lenses (m)
        wavelength: Design wavelength (m)
        b: Translation parameter of the log map (m); defaults to 4 spot pitches
        copies: Number of fan-out copies N_c = 2N + 1
        omega: Angular separation of the copies (rad); defaults to d / f, which
            places the copies edge to edge
        gammas: Fan-out order intensities for m = -N..N
        alphas: Fan-out order phases for m = -N..N
    """
    d: float
    f: float
    wavelength: float
    b: Optional[float] = None
    copies: int = 1
    omega: Optional[float] = None
    gammas: Optional[Tuple[float, ...]] = None
    alphas: Optional[Tuple[float, ...]] = None
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not (self.d > 0 and self.f > 0 and self.wavelength > 0):
            raise InvalidParameterError(
                "Sorter length, focal length and wavelength must be positive",
                log_details=f"d={self.d} f={self.f} wavelength={self.wavelength}",
            )
        if self.copies < 1 or self.copies % 2 == 0:
            raise InvalidParameterError(
                "Copy count must be an odd positive integer", log_details=f"copies={self.copies}"
            )
        if self.b is None:
            object.__setattr__(self, "b", 4.0 * self.spot_pitch)
        elif not self.b > 0:
            raise InvalidParameterError(
                "Translation parameter b must be positive", log_details=f"b={self.b}"
            )
        if self.omega is None:
            object.__setattr__(self, "omega", self.d / self.f)
        if self.gammas is None or self.alphas is None:
            gammas, alphas, _ = optimal_fanout_orders(self.copies)
            object.__setattr__(self, "gammas", self.gammas or gammas)
            object.__setattr__(self, "alphas", self.alphas or alphas)
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.gammas) != self.copies or len(self.alphas) != self.copies:
            raise InvalidParameterError(
                "Fan-out parameters need one entry per copy",
                log_details=(
                    f"copies={self.copies} gammas={len(self.gammas)} alphas={len(self.alphas)}"
                ),
            )

    @property
    def spot_pitch(self) -> float:
        """Detection-plane spacing between adjacent OAM values, lambda f / d."""
        return self.wavelength * self.f / self.d

    @property
    def copy_offset(self) -> float:
        """Separation of neighbouring copies in the corrector plane, f omega."""
        return self.f * self.omega


PRESETS: Dict[str, Dict] = {
    "refractive": {"d": 10.5e-3, "f": 500e-3, "wavelength": 633e-9, "copies": 1},
    "diffractive-1": {"d": 1.12e-3, "f": 100e-3, "wavelength": 633e-9, "copies": 1},
    "diffractive-3": {"d": 0.5e-3, "f": 100e-3, "wavelength": 633e-9, "copies": 3},
}


def preset(name: str) -> SorterDesign:
    """Named design: refractive, diffractive-1 or diffractive-3."""
    try:
        params = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(
            f"Unknown sorter preset '{name}'", log_details=f"available={sorted(PRESETS)}"
        ) from None
    return SorterDesign(name=name, **params)


def design_grid(design: SorterDesign, n: int = DEFAULT_GRID,
                oversample: int = DEFAULT_OVERSAMPLE) -> GridSampling:
    """Input-plane sampling with ``oversample`` pixels per spot pitch.

    The detection plane then has the same pitch as the input plane.
    """
    return GridSampling.square(n, design.spot_pitch / oversample, design.wavelength)


def default_waist(sampling: GridSampling) -> float:
    return sampling.nx * sampling.dx / 16.0


def unwrapper_phase(design: SorterDesign, x: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
    """(d / lambda f) [y atan2(y, x) - x ln(r / b) + x]; zero at the origin."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    origin = r == 0
    safe_r = np.where(origin, 1.0, r)
    phase = (design.d / (design.wavelength * design.f)) * (
        y * np.arctan2(y, x) - x * np.log(safe_r / design.b) + x
    )
    return np.where(origin, 0.0, phase)


def corrector_phase(design: SorterDesign, u: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
    """(d b / lambda f) exp(-2 pi u / d) cos(2 pi v / d)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    scale = design.d * design.b / (design.wavelength * design.f)
    return scale * np.exp(-2 * np.pi * u / design.d) * np.cos(2 * np.pi * v / design.d)


def fanout_phase(design: SorterDesign, x: ArrayLike) -> NDArray[np.float64]:
    """Copying phase along the grating axis; period lambda / omega."""
    phase = 2 * np.pi * design.omega * np.asarray(x, dtype=float) / design.wavelength
    return _fanout_profile(design.gammas, design.alphas, phase)


def _copy_equalization(design: SorterDesign, v: NDArray[np.float64]) -> NDArray[np.complex128]:
    """Per-copy phase factors exp(-i arg c_m) on stripes |v - m f omega| <= f omega / 2."""
    coeffs = fanout_order_coefficients(design.gammas, design.alphas)
    n = design.copies // 2
    factors = np.ones_like(v, dtype=np.complex128)
    order = np.rint(v / design.copy_offset).astype(int)
    for m, c in zip(range(-n, n + 1), coeffs):
        factors[order == m] = np.exp(-1j * np.angle(c))
    return factors


def _check_sampling(name: str, step: NDArray[np.float64], intensity: NDArray[np.float64]) -> None:
    """Raise SamplingError if the per-pixel phase step reaches pi where light is present."""
    lit = intensity > SAMPLING_FLOOR * intensity.max()
    worst = float(np.max(step[lit])) if np.any(lit) else 0.0
    if worst >= np.pi:
        raise SamplingError(
            f"{name} phase is undersampled on this grid",
            log_details=f"max phase step per pixel={worst:.3f} rad",
        )


def _unwrapper_step(design: SorterDesign, sampling: GridSampling, unwrap: NDArray[np.float64],
                    Y: NDArray[np.float64]) -> NDArray[np.float64]:
    """Per-pixel phase step of the first element, fan-out term included."""
    gy, gx = np.gradient(unwrap)
    if design.copies > 1:
        k = 2 * np.pi * design.omega / design.wavelength
        gy = gy + _fanout_slope(design.gammas, design.alphas, k * Y) * k * sampling.dy
    return np.hypot(gx, gy)


def _corrector_step(design: SorterDesign, sampling: GridSampling, X: NDArray[np.float64],
                    Y: NDArray[np.float64]) -> NDArray[np.float64]:
    """Per-pixel corrector phase step where each input point lands geometrically.

    Radius r maps to exp(-2 pi u / d) = r / b, where the corrector gradient is 2 pi r / (lambda f).
    """
    out = sampling.fourier_plane(design.f)
    return 2 * np.pi * np.hypot(X, Y) * max(out.dx, out.dy) / (design.wavelength * design.f)


def sorter_pipeline(source: FieldGrid, design: SorterDesign,
                    check_sampling: bool = True) -> FieldGrid:
    """Propagate a field through unwrapper, lens, corrector and lens to the detector.

    With several copies the fan-out term is folded into the unwrapper and the
    corrector also sets the copies in phase. Sampling of both elements is judged
    on the input plane, over pixels carrying light.

    Raises:
        InvalidParameterError: If the field wavelength differs from the design
        SamplingError: If an element phase is undersampled where light is present
    """
    if not np.isclose(source.wavelength, design.wavelength, rtol=1e-9):
        raise InvalidParameterError(
            "Input wavelength does not match the sorter design",
            log_details=f"field={source.wavelength} design={design.wavelength}",
        )
    X, Y = source.sampling.mesh()
    unwrap = unwrapper_phase(design, X, Y)
    if check_sampling:
        intensity = source.intensity()
        _check_sampling("Unwrapper", _unwrapper_step(design, source.sampling, unwrap, Y), intensity)
        _check_sampling("Corrector", _corrector_step(design, source.sampling, X, Y), intensity)
    element = unwrap
    if design.copies > 1:
        element = element + fanout_phase(design, Y)
    unwrapped = lens_transform(source.with_values(source.values * np.exp(1j * element)), design.f)

    U, V = unwrapped.sampling.mesh()
    transmission = np.exp(-1j * corrector_phase(design, U, V))
    if design.copies > 1:
        transmission = transmission * _copy_equalization(design, V)
    detected = lens_transform(unwrapped.with_values(unwrapped.values * transmission), design.f)
    logger.debug(
        f"Sorter {design.name}: input power={source.power():.9f} "
        f"detected power={detected.power():.9f}"
    )
    return detected


def spot_position(design: SorterDesign, l: int) -> float:
    """Detection-plane displacement lambda f l / d of OAM value l."""
    return design.wavelength * design.f * l / design.d


def _profile(field: FieldGrid) -> NDArray[np.float64]:
    """Intensity integrated over x, as a function of detection-plane y."""
    return np.sum(field.intensity(), axis=1) * field.dx


def bin_spectrum(field: FieldGrid, design: SorterDesign, lrange: Tuple[int, int]) -> Spectrum:
    """Power in full-height bins of width lambda f / d centred on each spot, normalized.

    Pixels straddling a bin edge contribute their overlapping fraction.

    Raises:
        GridExtentError: If the outermost bins leave the grid
        EmptySpectrumError: If no power falls inside the binned range
    """
    lmin, lmax = lrange
    pitch = design.spot_pitch
    half = field.ny * field.dy / 2.0
    reach = (max(abs(lmin), abs(lmax)) + 0.5) * pitch
    if reach > half:
        raise GridExtentError(
            "Detection bins extend beyond the grid",
            log_details=f"lrange={lrange} reach={reach:.3e} half_extent={half:.3e}",
        )
    ls = np.arange(lmin, lmax + 1)
    lo = (ls - 0.5) * pitch
    hi = (ls + 0.5) * pitch
    y = field.sampling.y
    y_lo, y_hi = y - field.dy / 2.0, y + field.dy / 2.0
    overlap = np.clip(
        np.minimum(hi[:, None], y_hi[None, :]) - np.maximum(lo[:, None], y_lo[None, :]), 0.0, None
    ) / field.dy
    weights = overlap @ (_profile(field) * field.dy)
    return Spectrum(lmin, lmax, weights).normalized()


def spot_centroid(field: FieldGrid, design: SorterDesign) -> float:
    """Intensity-weighted mean y within one spot pitch of the brightest row."""
    profile = _profile(field)
    y = field.sampling.y
    peak = y[int(np.argmax(profile))]
    window = np.abs(y - peak) <= design.spot_pitch
    return float(np.sum(profile[window] * y[window]) / np.sum(profile[window]))


@dataclass(frozen=True)
class SpotLawFit:
    """Straight-line fit of spot centroid against OAM value."""
    slope: float
    intercept: float
    r_squared: float
    expected_slope: float
    modes: Tuple[int, ...] = ()
    centroids: Tuple[float, ...] = ()

    @property
    def slope_error(self) -> float:
        return abs(self.slope - self.expected_slope) / self.expected_slope


def spot_law_fit(design: SorterDesign, lrange: Tuple[int, int] = (-5, 5),
                 sampling: Optional[GridSampling] = None, w0: Optional[float] = None) -> SpotLawFit:
    """Fit detected spot centroids of ring modes lrange against t = lambda f l / d."""
    sampling = sampling or design_grid(design)
    w0 = w0 or default_waist(sampling)
    ls = list(range(lrange[0], lrange[1] + 1))
    centroids = [
        spot_centroid(sorter_pipeline(oam_mode(sampling, l, w0), design), design) for l in ls
    ]
    fit = stats.linregress(ls, centroids)
    result = SpotLawFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2),
                        design.spot_pitch, tuple(ls), tuple(centroids))
    logger.info(
        f"Spot law for {design.name}: slope={result.slope * 1e6:.2f} um/l "
        f"(design {result.expected_slope * 1e6:.2f}) r2={result.r_squared:.5f}"
    )
    return result


@dataclass(frozen=True, eq=False)
class CrosstalkMatrix:
    """Detected-weight fractions; row = input OAM, column = detected OAM, both lmin..lmax."""
    lmin: int
    lmax: int
    entries: NDArray[np.float64]

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float, copy=True)
        size = self.lmax - self.lmin + 1
        if entries.shape != (size, size):
            raise InvalidParameterError(
                "Cross-talk matrix shape does not match its OAM range",
                log_details=f"shape={entries.shape} range=[{self.lmin}, {self.lmax}]",
            )
        if not np.allclose(entries.sum(axis=1), 1.0, atol=1e-6):
            raise InvalidParameterError(
                "Cross-talk rows must each sum to one",
                log_details=f"row sums={entries.sum(axis=1)}",
            )
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @classmethod
    def identity(cls, lmin: int, lmax: int) -> "CrosstalkMatrix":
        """Matrix of a perfect sorter."""
        return cls(lmin, lmax, np.eye(lmax - lmin + 1))

    @property
    def modes(self) -> NDArray[np.int64]:
        return np.arange(self.lmin, self.lmax + 1)

    def row(self, l: int) -> Spectrum:
        return Spectrum(self.lmin, self.lmax, self.entries[l - self.lmin])

    def diagonal(self) -> NDArray[np.float64]:
        """Fraction detected in the correct bin, per input mode."""
        return np.diag(self.entries).copy()

    def mean_leakage(self) -> float:
        """Mean fraction detected outside the correct bin."""
        return float(np.mean(1.0 - self.diagonal()))

    def mirrored(self) -> "CrosstalkMatrix":
        """l -> -l on rows and columns."""
        return CrosstalkMatrix(-self.lmax, -self.lmin, self.entries[::-1, ::-1])


def crosstalk_matrix(design: SorterDesign, lrange: Tuple[int, int],
                     sampling: Optional[GridSampling] = None, w0: Optional[float] = None,
                     workers: int = 1) -> CrosstalkMatrix:
    """Sort each ring mode of lrange on its own and bin the detected light.

    Rows are independent and are spread over ``workers`` threads when > 1.
    """
    sampling = sampling or design_grid(design)
    w0 = w0 or default_waist(sampling)
    ls = list(range(lrange[0], lrange[1] + 1))

    def row(l: int) -> NDArray[np.float64]:
        detected = sorter_pipeline(oam_mode(sampling, l, w0), design)
        return bin_spectrum(detected, design, lrange).weights

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, ls))
    else:
        rows = [row(l) for l in ls]
    matrix = CrosstalkMatrix(lrange[0], lrange[1], np.vstack(rows))
    logger.info(
        f"Cross-talk for {design.name} over {lrange}: mean diagonal={matrix.diagonal().mean():.4f} "
        f"mean leakage={matrix.mean_leakage():.4f}"
    )
    return matrix


def similarity(w_exp: Spectrum, w_th: Spectrum) -> float:
    """S = (sum sqrt(W_exp W_th))^2 / (sum W_exp * sum W_th) on the union of supports.

    Raises:
        EmptySpectrumError: If either input has zero total weight
    """
    if w_exp.total <= 0 or w_th.total <= 0:
        raise EmptySpectrumError(
            "Similarity needs two spectra with nonzero weight",
            log_details=f"totals=({w_exp.total}, {w_th.total})",
        )
    lmin, lmax = min(w_exp.lmin, w_th.lmin), max(w_exp.lmax, w_th.lmax)
    a = w_exp.embed(lmin, lmax).weights
    b = w_th.embed(lmin, lmax).weights
    overlap = float(np.sum(np.sqrt(a * b)))
    return min(1.0, overlap ** 2 / (float(np.sum(a)) * float(np.sum(b))))


def weighting_spectrum(amplitudes: Dict[int, complex], lrange: Tuple[int, int]) -> Spectrum:
    """Expected detected weights |c_l|^2 of a superposition, normalized over lrange."""
    weights = {l: abs(c) ** 2 for l, c in amplitudes.items() if lrange[0] <= l <= lrange[1]}
    return Spectrum.from_mapping(weights, *lrange).normalized()
