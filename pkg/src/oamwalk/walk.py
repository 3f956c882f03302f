"""Discrete-time walk on the OAM lattice with a polarization coin.

One round trip of the cavity is one step: the q-plate shift (which also flips
the coin) followed by the intracavity wave plate.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from .coins import waveplate_operator
from .exceptions import InvalidParameterError, LatticeOverflowError
from .models import L, R, QPlateSpec, Spectrum, WalkerState, WaveplateSpec

logger = logging.getLogger(__name__)


def shift_apply(state: WalkerState, qplate: QPlateSpec) -> WalkerState:
    """q-plate selection rules: |l,R> -> |l+2q,L> and |l,L> -> |l-2q,R>.

    Raises:
        LatticeOverflowError: If nonzero amplitude would be shifted off the lattice
    """
    s = qplate.step
    sites = state.sites
    leaving_r = (sites + s > state.lmax) | (sites + s < state.lmin)
    leaving_l = (sites - s > state.lmax) | (sites - s < state.lmin)
    if np.any(state.amps[leaving_r, R] != 0) or np.any(state.amps[leaving_l, L] != 0):
        raise LatticeOverflowError(
            "Walker amplitude would leave the truncated OAM lattice",
            log_details=f"bounds=[{state.lmin}, {state.lmax}] step={s} support={state.support()}",
        )
    amps = np.empty_like(state.amps)
    # Wrapped entries are zero by the check above.
    amps[:, L] = np.roll(state.amps[:, R], s)
    amps[:, R] = np.roll(state.amps[:, L], -s)
    return WalkerState(state.lmin, state.lmax, amps)


def step(state: WalkerState, plate: Optional[WaveplateSpec],
         qplate: QPlateSpec = QPlateSpec()) -> WalkerState:
    """One round trip: shift, then the wave plate (identity when absent, the NOT-coin walk)."""
    shifted = shift_apply(state, qplate)
    coin = waveplate_operator(plate)
    return WalkerState(state.lmin, state.lmax, shifted.amps @ coin.matrix.T)


def required_bounds(state: WalkerState, qplate: QPlateSpec, n: int) -> Tuple[int, int]:
    """Smallest lattice that holds the state's support after n steps."""
    support = state.support(tol=0.0)
    reach = n * abs(qplate.step)
    return min(support) - reach, max(support) + reach


def evolve(initial: WalkerState, plate: Optional[WaveplateSpec],
           qplate: QPlateSpec = QPlateSpec(), n: int = 1,
           bounds: Optional[Tuple[int, int]] = None) -> List[WalkerState]:
    """States after steps 0..n inclusive.

    Args:
        initial: Starting state
        plate: Intracavity wave plate, or None for the NOT-coin walk
        qplate: q-plate
        n: Number of steps
        bounds: Explicit lattice (lmin, lmax); when omitted the lattice is grown to
            cover everything reachable in n steps

    Raises:
        InvalidParameterError: If n is negative
        LatticeOverflowError: If explicit bounds cannot hold the walk
    """
    if n < 0:
        raise InvalidParameterError("Step count must be nonnegative", log_details=f"n={n}")
    need_lo, need_hi = required_bounds(initial, qplate, n)
    if bounds is None:
        bounds = (min(initial.lmin, need_lo), max(initial.lmax, need_hi))
    elif bounds[0] > need_lo or bounds[1] < need_hi:
        raise LatticeOverflowError(
            f"Lattice bounds too small for {n} steps",
            log_details=f"bounds={bounds} required=({need_lo}, {need_hi})",
        )
    state = initial.embed(*bounds)
    states = [state]
    for k in range(n):
        state = step(state, plate, qplate)
        states.append(state)
    logger.debug(
        f"Evolved {n} steps on [{bounds[0]}, {bounds[1]}] plate={plate} "
        f"final_norm={states[-1].norm():.15f}"
    )
    return states


def probabilities(state: WalkerState) -> Spectrum:
    """Born-rule OAM distribution P(l) = |a(l,R)|^2 + |a(l,L)|^2."""
    return Spectrum(state.lmin, state.lmax, np.sum(np.abs(state.amps) ** 2, axis=1))


def coin_marginals(state: WalkerState) -> Tuple[float, float]:
    """Total right- and left-circular weights (P_R, P_L)."""
    weights = np.sum(np.abs(state.amps) ** 2, axis=0)
    return float(weights[R]), float(weights[L])


def variance(spec: Spectrum) -> float:
    """Second central moment of the OAM distribution."""
    l = spec.sites.astype(float)
    mean = float(np.dot(spec.weights, l))
    return float(np.dot(spec.weights, l ** 2) - mean ** 2)


def classical_rw_distribution(n: int, p_right: float = 0.5) -> Spectrum:
    """Binomial random walk on {-n, -n+2, ..., n}; zero on off-parity sites."""
    if not 0.0 <= p_right <= 1.0:
        raise InvalidParameterError(
            "Step probability must lie in [0, 1]", log_details=f"p_right={p_right}"
        )
    weights = np.zeros(2 * n + 1)
    k = np.arange(n + 1)
    weights[2 * k] = stats.binom.pmf(k, n, p_right)
    return Spectrum(-n, n, weights)


def nonseparability(state: WalkerState) -> float:
    """2 s0 s1 from the singular values of the (sites x 2) amplitude matrix.

    0 for a product of OAM and polarization, 1 when maximally non-separable.
    """
    singular = np.linalg.svd(state.amps, compute_uv=False)
    if singular.size < 2:
        return 0.0
    return float(min(1.0, 2.0 * singular[0] * singular[1]))


def mirror(state: WalkerState) -> WalkerState:
    """Reflect l -> -l and swap R <-> L."""
    return WalkerState(-state.lmax, -state.lmin, state.amps[::-1, ::-1])


def lobe_weights(spec: Spectrum, n: int) -> Tuple[float, float]:
    """Summed probability of the outer lobes |l| > n/2, as (left, right)."""
    l = spec.sites
    left = float(np.sum(spec.weights[l < -n / 2]))
    right = float(np.sum(spec.weights[l > n / 2]))
    return left, right
