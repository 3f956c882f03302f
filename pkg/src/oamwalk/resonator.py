"""Ring-cavity readout model: pulse shape, round-trip weighting and step overlap.

The detector gate isolates one round trip, but the Gaussian pulse is longer than
the gate, so each measured distribution also carries tails of the neighbouring
round trips. ``convolve_steps`` models that distortion and ``deconvolve_step``
removes it. Times are in nanoseconds throughout.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import constants, integrate, linalg, special

from .exceptions import DegenerateGatingError, EmptySpectrumError, InvalidParameterError
from .models import Spectrum, StepSeries

logger = logging.getLogger(__name__)

# Neighbour offsets k of the five-term stencil; index k + 2 in coefficient arrays.
STENCIL: Tuple[int, ...] = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class PulseModel:
    """Gaussian pulse G(t) = a exp(-(t - b)^2 / (2 c^2)) + k.

    Attributes:
        a: Peak amplitude (arb. units)
        b: Temporal offset (ns)
        c: Gaussian width (ns)
        k: Baseline (arb. units)
    """
    a: float = 0.0605
    b: float = 0.0
    c: float = 6.107
    k: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParameterError(
                "Pulse amplitude must be positive", log_details=f"a={self.a}"
            )
        if not self.c > 0:
            raise InvalidParameterError("Pulse width must be positive", log_details=f"c={self.c}")


@dataclass(frozen=True)
class CavityConfig:
    """Beam-splitter, gating and pulse parameters of the resonator.

    Attributes:
        round_trip_ns: Cavity circulation time
        transmission: Beam-splitter transmission T, 0 < T <= 1
        pulse: Pulse shape
        pulse_window_ns: Modelled full pulse extent PW
        gate_width_ns: Detector gate GW, at most PW
        reflection: R = 1 - T, derived
    """
    round_trip_ns: float = 10.0
    transmission: float = 0.5
    pulse: PulseModel = field(default_factory=PulseModel)
    pulse_window_ns: float = 40.0
    gate_width_ns: float = 10.0
    reflection: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.transmission <= 1.0:
            raise InvalidParameterError(
                "Beam-splitter transmission must satisfy 0 < T <= 1",
                log_details=f"T={self.transmission}",
            )
        if not self.round_trip_ns > 0:
            raise InvalidParameterError(
                "Round-trip time must be positive",
                log_details=f"round_trip_ns={self.round_trip_ns}",
            )
        if not 0 < self.gate_width_ns <= self.pulse_window_ns:
            raise InvalidParameterError(
                "Gate width must be positive and no wider than the pulse window",
                log_details=f"GW={self.gate_width_ns} PW={self.pulse_window_ns}",
            )
        object.__setattr__(self, "reflection", 1.0 - self.transmission)


def pulse_value(p: PulseModel, t: ArrayLike) -> NDArray[np.float64]:
    """Evaluate G(t).

    Args:
        p: Pulse shape
        t: Times in ns, scalar or array

    Returns:
        Pulse intensity at each time, in the units of ``p.a``
    """
    t = np.asarray(t, dtype=float)
    return p.a * np.exp(-((t - p.b) ** 2) / (2.0 * p.c ** 2)) + p.k


def fwhm(p: PulseModel) -> float:
    """Full width at half maximum of the Gaussian part, in ns."""
    return float(2.0 * np.sqrt(2.0 * np.log(2.0)) * p.c)


def fwtm(p: PulseModel) -> float:
    """Full width at a tenth of the maximum of the Gaussian part, in ns."""
    return float(2.0 * np.sqrt(2.0 * np.log(10.0)) * p.c)


def round_trip_from_perimeter(length_m: float) -> float:
    """Circulation time in ns of a free-space ring of the given perimeter."""
    if not length_m > 0:
        raise InvalidParameterError("Cavity length must be positive", log_details=f"L={length_m}")
    return float(length_m / constants.c * 1e9)


def bs_weight(cfg: CavityConfig, n: int) -> float:
    """Fraction of the input reaching the detector after n round trips.

    0 before the pulse enters, R for the directly reflected pulse, T^2 R^(n-1) after.

    Args:
        cfg: Cavity parameters
        n: Round-trip index; negative values precede the pulse

    Returns:
        Dimensionless intensity fraction in [0, 1]
    """
    if n < 0:
        return 0.0
    if n == 0:
        return cfg.reflection
    return cfg.transmission ** 2 * cfg.reflection ** (n - 1)


def gate_offset(cfg: CavityConfig) -> float:
    """Trim a = (PW - GW) / 2 from each side of the pulse window."""
    return (cfg.pulse_window_ns - cfg.gate_width_ns) / 2.0


def window_bounds(cfg: CavityConfig) -> Dict[int, Tuple[float, float]]:
    """Integration limits of the captured section of pulse n + k, keyed by k.

    Earlier round trips (k < 0) contribute their trailing edge, later ones
    their leading edge.
    """
    a = gate_offset(cfg)
    lo = -cfg.pulse_window_ns / 2.0 + a
    hi = cfg.pulse_window_ns / 2.0 - a
    tau = cfg.round_trip_ns
    return {
        -2: (hi + tau, hi + 2 * tau),
        -1: (hi, hi + tau),
        0: (lo, hi),
        1: (lo - tau, lo),
        2: (lo - 2 * tau, lo - tau),
    }


def window_integral(p: PulseModel, t1: float, t2: float) -> float:
    """Closed-form integral of G(t) over [t1, t2].

    Args:
        p: Pulse shape
        t1: Lower limit in ns
        t2: Upper limit in ns

    Returns:
        Integrated intensity in units of ``p.a`` times ns
    """
    scale = p.c * np.sqrt(2.0)
    gauss = p.a * p.c * np.sqrt(np.pi / 2.0) * (
        special.erf((t2 - p.b) / scale) - special.erf((t1 - p.b) / scale)
    )
    return float(gauss + p.k * (t2 - t1))


def window_integral_quad(p: PulseModel, t1: float, t2: float) -> float:
    """Quadrature of G(t) over [t1, t2]; reference for ``window_integral``."""
    value, _ = integrate.quad(lambda t: float(pulse_value(p, t)), t1, t2)
    return float(value)


def overlap_coefficients(cfg: CavityConfig, n: int) -> NDArray[np.float64]:
    """Coefficients c_(n-2) .. c_(n+2) of the measured step n, ordered as STENCIL.

    Entry k + 2 is w(n + k) times the pulse integral over window k; entries for
    k with n + k < 0 are zero.
    """
    windows = window_bounds(cfg)
    coeffs = np.array([
        bs_weight(cfg, n + k) * window_integral(cfg.pulse, *windows[k]) for k in STENCIL
    ])
    logger.debug(f"Overlap coefficients for step {n}: {coeffs}")
    return coeffs


def _neighbour(series: StepSeries, m: int) -> Optional[Spectrum]:
    if 0 <= m < len(series):
        return series[m]
    return None


def convolve_steps(series: StepSeries, cfg: CavityConfig) -> StepSeries:
    """Measured distributions: each step mixed with its four neighbours, then normalized.

    Steps outside the series contribute nothing.

    Raises:
        EmptySpectrumError: If every contributing coefficient of some step is zero
    """
    measured = []
    for n in range(len(series)):
        coeffs = overlap_coefficients(cfg, n)
        total = np.zeros(series.lmax - series.lmin + 1)
        for k, coeff in zip(STENCIL, coeffs):
            neighbour = _neighbour(series, n + k)
            if neighbour is not None:
                total += coeff * neighbour.weights
        measured.append(Spectrum(series.lmin, series.lmax, total).normalized())
    return StepSeries.from_sequence(measured)


def overlap_matrix(cfg: CavityConfig, count: int) -> NDArray[np.float64]:
    """Mixing matrix of a ``count``-step series.

    Row n holds the coefficients of ``overlap_coefficients(cfg, n)`` at columns
    n + k, so the unnormalized measured table is ``overlap_matrix @ ideal``.

    Args:
        cfg: Cavity parameters
        count: Number of steps in the series

    Returns:
        Pentadiagonal (count, count) array
    """
    windows = window_bounds(cfg)
    integrals = {k: window_integral(cfg.pulse, *windows[k]) for k in STENCIL}
    matrix = np.zeros((count, count))
    for n in range(count):
        for k in STENCIL:
            if 0 <= n + k < count:
                matrix[n, n + k] = bs_weight(cfg, n + k) * integrals[k]
    return matrix


def _banded(matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    # (l, u) = (2, 2) storage for scipy.linalg.solve_banded: ab[2 + i - j, j] = matrix[i, j]
    count = matrix.shape[0]
    ab = np.zeros((5, count))
    for offset in STENCIL:
        diagonal = np.diagonal(matrix, offset)
        if offset >= 0:
            ab[2 - offset, offset:] = diagonal
        else:
            ab[2 - offset, :count + offset] = diagonal
    return ab


def _unmix(measured: StepSeries,
           cfg: CavityConfig) -> Tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Solve every step of the measured series at once.

    Each normalized measured row is rescaled by its known mixing total
    S_n = sum_k c_(n+k), restoring the unnormalized table, which is then solved
    against the mixing matrix. Steps whose column is zero (w(m) = 0) cannot be
    recovered and are left out of the solve.

    Returns:
        Raw corrected weights, shape (steps, sites), and a mask of recoverable steps

    Raises:
        DegenerateGatingError: If the mixing matrix is singular on the recoverable steps
    """
    count = len(measured)
    matrix = overlap_matrix(cfg, count)
    totals = matrix.sum(axis=1)
    table = np.vstack([
        measured[n].normalized().weights * totals[n] if totals[n] > 0
        else np.zeros(measured.lmax - measured.lmin + 1)
        for n in range(count)
    ])
    recoverable = np.any(matrix != 0, axis=0)
    raw = np.zeros_like(table)
    try:
        if recoverable.all() and count == 1:
            raw = linalg.solve(matrix, table)
        elif recoverable.all():
            raw = linalg.solve_banded((2, 2), _banded(matrix), table)
        elif recoverable.any():
            raw[recoverable] = linalg.lstsq(matrix[:, recoverable], table)[0]
    except linalg.LinAlgError as e:
        raise DegenerateGatingError(
            "Overlap matrix cannot be inverted for this cavity",
            log_details=f"steps={count} T={cfg.transmission} error={e}",
        ) from e
    logger.debug(f"Unmixed {count} steps; recoverable={recoverable.tolist()}")
    return raw, recoverable


def _degenerate(cfg: CavityConfig, n: int) -> DegenerateGatingError:
    return DegenerateGatingError(
        f"Step {n} has no weight inside its own gate window",
        log_details=f"w({n})={bs_weight(cfg, n)} coefficients={overlap_coefficients(cfg, n)}",
    )


def _local_weights(measured: StepSeries, cfg: CavityConfig, n: int,
                   reference: StepSeries) -> NDArray[np.float64]:
    # Step n alone, with the neighbour terms taken from a known series.
    coeffs = overlap_coefficients(cfg, n)
    c_n = coeffs[STENCIL.index(0)]
    if c_n == 0:
        raise _degenerate(cfg, n)
    if (reference.lmin, reference.lmax) != (measured.lmin, measured.lmax):
        reference = StepSeries.from_sequence(
            [s.embed(measured.lmin, measured.lmax) for s in reference]
        )
    scale = c_n
    neighbours = np.zeros(measured.lmax - measured.lmin + 1)
    for k, coeff in zip(STENCIL, coeffs):
        if k == 0:
            continue
        neighbour = _neighbour(reference, n + k)
        if neighbour is not None:
            scale += coeff * neighbour.total
            neighbours += coeff * neighbour.weights
    return (measured[n].normalized().weights * scale - neighbours) / c_n


def deconvolve_weights(measured: StepSeries, cfg: CavityConfig, n: int,
                       reference: Optional[StepSeries] = None) -> NDArray[np.float64]:
    """Unclipped corrected weights of step n; entries may be negative.

    By default the whole measured series is unmixed in one banded solve, which
    exactly inverts ``convolve_steps``. Passing ``reference`` instead corrects
    step n alone, taking the neighbour terms from that series.

    Args:
        measured: Measured step distributions
        cfg: Cavity parameters
        n: Step to correct
        reference: Optional known series supplying the neighbour terms

    Raises:
        DegenerateGatingError: If c_n is zero
    """
    if reference is not None:
        return _local_weights(measured, cfg, n, reference)
    raw, recoverable = _unmix(measured, cfg)
    if not recoverable[n]:
        raise _degenerate(cfg, n)
    return raw[n]


def _clamped(raw: NDArray[np.float64], measured: StepSeries, n: int) -> Spectrum:
    negative = raw < 0
    if np.any(negative):
        logger.warning(
            f"Step {n}: clamped {int(np.sum(negative))} negative entries "
            f"(min {raw.min():.3e}) to zero"
        )
    return Spectrum(measured.lmin, measured.lmax, np.where(negative, 0.0, raw)).normalized()


def deconvolve_step(measured: StepSeries, cfg: CavityConfig, n: int,
                    reference: Optional[StepSeries] = None) -> Spectrum:
    """Corrected distribution of step n: negatives set to zero, then renormalized.

    Raises:
        DegenerateGatingError: If c_n is zero
        EmptySpectrumError: If no positive weight survives the clamp
    """
    return _clamped(deconvolve_weights(measured, cfg, n, reference), measured, n)


def deconvolve_series(measured: StepSeries, cfg: CavityConfig,
                      reference: Optional[StepSeries] = None) -> StepSeries:
    """Corrected distribution of every step.

    Steps that cannot be corrected are passed through unchanged with a warning:
    those whose c_n vanishes (for instance n = 0 when T = 1) and those left with
    no positive weight after clamping.
    """
    if reference is None:
        raw, recoverable = _unmix(measured, cfg)
    corrected = []
    for n in range(len(measured)):
        try:
            if reference is not None:
                corrected.append(deconvolve_step(measured, cfg, n, reference))
            elif not recoverable[n]:
                raise _degenerate(cfg, n)
            else:
                corrected.append(_clamped(raw[n], measured, n))
        except (DegenerateGatingError, EmptySpectrumError) as e:
            logger.warning(f"{e.message}; keeping the measured distribution ({e.log_details})")
            corrected.append(measured[n])
    return StepSeries.from_sequence(corrected)
