"""Sampled scalar fields and the ideal-lens Fourier transform."""
import logging
from dataclasses import dataclass
from typing import Mapping, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .exceptions import GridExtentError, InvalidParameterError

logger = logging.getLogger(__name__)


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSampling:
    """Sample layout of a square-pixel field; arrays are indexed [y, x].

    Attributes:
        nx: Samples along x (power of two)
        ny: Samples along y (power of two)
        dx: Pitch along x (m)
        dy: Pitch along y (m)
        wavelength: Optical wavelength (m)
    """
    nx: int
    ny: int
    dx: float
    dy: float
    wavelength: float

    def __post_init__(self):
        if not (is_power_of_two(self.nx) and is_power_of_two(self.ny)):
            raise InvalidParameterError(
                "Grid sample counts must be powers of two",
                log_details=f"nx={self.nx} ny={self.ny}",
            )
        if not (self.dx > 0 and self.dy > 0 and self.wavelength > 0):
            raise InvalidParameterError(
                "Grid pitch and wavelength must be positive",
                log_details=f"dx={self.dx} dy={self.dy} wavelength={self.wavelength}",
            )

    @classmethod
    def square(cls, n: int, pitch: float, wavelength: float) -> "GridSampling":
        return cls(n, n, pitch, pitch, wavelength)

    @property
    def x(self) -> NDArray[np.float64]:
        """Centred coordinates; index n // 2 is the optical axis."""
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    @property
    def y(self) -> NDArray[np.float64]:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def mesh(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return np.meshgrid(self.x, self.y, indexing="xy")

    @property
    def half_extent(self) -> float:
        return min(self.nx * self.dx, self.ny * self.dy) / 2.0

    def fourier_plane(self, focal_length: float) -> "GridSampling":
        """Sampling of the back focal plane of a lens of the given focal length."""
        scale = self.wavelength * focal_length
        return GridSampling(
            self.nx, self.ny,
            scale / (self.nx * self.dx), scale / (self.ny * self.dy),
            self.wavelength,
        )


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Complex field sampled on a GridSampling; values are read-only."""
    sampling: GridSampling
    values: NDArray[np.complex128]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128, copy=True)
        if values.shape != (self.sampling.ny, self.sampling.nx):
            raise InvalidParameterError(
                "Field array does not match its sampling",
                log_details=f"shape={values.shape} expected={(self.sampling.ny, self.sampling.nx)}",
            )
        power = float(np.sum(np.abs(values) ** 2)) * self.sampling.dx * self.sampling.dy
        if not np.isfinite(power) or power <= 0:
            raise InvalidParameterError(
                "Field power must be finite and positive", log_details=f"power={power}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def nx(self) -> int:
        return self.sampling.nx

    @property
    def ny(self) -> int:
        return self.sampling.ny

    @property
    def dx(self) -> float:
        return self.sampling.dx

    @property
    def dy(self) -> float:
        return self.sampling.dy

    @property
    def wavelength(self) -> float:
        return self.sampling.wavelength

    def intensity(self) -> NDArray[np.float64]:
        return np.abs(self.values) ** 2

    def power(self) -> float:
        return float(np.sum(self.intensity()) * self.dx * self.dy)

    def phase(self) -> NDArray[np.float64]:
        return np.angle(self.values)

    def with_values(self, values: NDArray[np.complex128]) -> "FieldGrid":
        return FieldGrid(self.sampling, values)


GridLike = Union[GridSampling, FieldGrid]


def _sampling(grid: GridLike) -> GridSampling:
    return grid.sampling if isinstance(grid, FieldGrid) else grid


def lens_transform(field: FieldGrid, focal_length: float) -> FieldGrid:
    """Field in the back focal plane of an ideal lens (front focal plane input).

    E'(u, v) = 1/(i lambda f) * integral E(x, y) exp(-i 2 pi (x u + y v) / (lambda f)) dx dy,
    sampled with pitch lambda f / (N dx). Sum |E|^2 dx dy is preserved.
    """
    if not focal_length > 0:
        raise InvalidParameterError(
            "Focal length must be positive", log_details=f"f={focal_length}"
        )
    out = field.sampling.fourier_plane(focal_length)
    spectrum = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(field.values)))
    prefactor = field.dx * field.dy / (1j * field.wavelength * focal_length)
    return FieldGrid(out, prefactor * spectrum)


def _check_waist(sampling: GridSampling, w0: float) -> None:
    if not w0 > 0:
        raise InvalidParameterError("Beam waist must be positive", log_details=f"w0={w0}")
    if w0 >= sampling.half_extent / 3.0:
        raise GridExtentError(
            "Beam waist too large for the sampled grid",
            log_details=f"w0={w0} half_extent={sampling.half_extent}",
        )


def _ring_mode(sampling: GridSampling, l: int, w0: float) -> NDArray[np.complex128]:
    X, Y = sampling.mesh()
    rho = np.hypot(X, Y) / w0
    amp = rho ** abs(l) * np.exp(-rho ** 2) * np.exp(1j * l * np.arctan2(Y, X))
    norm = np.sqrt(np.sum(np.abs(amp) ** 2) * sampling.dx * sampling.dy)
    return amp / norm


def oam_mode(grid: GridLike, l: int, w0: float) -> FieldGrid:
    """Unit-power ring mode (r/w0)^|l| exp(-r^2/w0^2) exp(i l phi).

    Raises:
        GridExtentError: If w0 is not below a third of the grid half-extent
    """
    sampling = _sampling(grid)
    _check_waist(sampling, w0)
    return FieldGrid(sampling, _ring_mode(sampling, l, w0))


def superposition_mode(grid: GridLike, weights: Mapping[int, complex], w0: float) -> FieldGrid:
    """Unit-power superposition sum_l c_l |l> of unit-power ring modes.

    The power fraction carried by mode l is |c_l|^2 / sum |c|^2.
    """
    sampling = _sampling(grid)
    _check_waist(sampling, w0)
    if not weights or all(abs(c) == 0 for c in weights.values()):
        raise InvalidParameterError("Superposition needs at least one nonzero mode amplitude")
    values = sum(complex(c) * _ring_mode(sampling, l, w0) for l, c in weights.items())
    norm = np.sqrt(np.sum(np.abs(values) ** 2) * sampling.dx * sampling.dy)
    logger.debug(f"Superposition of modes {sorted(weights)} with w0={w0:.3e}")
    return FieldGrid(sampling, values / norm)
