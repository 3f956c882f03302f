"""Jones-calculus operators for wave plates and walk coins.

All matrices are written in the circular basis (|R>, |L>) with |R> = [1, 0].
Angles are fast-axis orientations in degrees from horizontal.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import InvalidParameterError
from .models import CoinOperator, WaveplateSpec

logger = logging.getLogger(__name__)

_SQRT_HALF = 1.0 / np.sqrt(2.0)

RIGHT = np.array([1.0, 0.0], dtype=np.complex128)
LEFT = np.array([0.0, 1.0], dtype=np.complex128)


def qwp_operator(theta: float) -> CoinOperator:
    """Quarter-wave plate Jones matrix.

    Args:
        theta: Fast-axis angle in degrees from horizontal

    Returns:
        Operator named "Q<theta>"
    """
    phase = np.exp(2j * np.deg2rad(theta))
    mat = _SQRT_HALF * np.array([[1.0, 1j / phase], [1j * phase, 1.0]])
    return CoinOperator(mat, name=f"Q{theta:g}")


def hwp_operator(theta: float) -> CoinOperator:
    """Half-wave plate Jones matrix; anti-diagonal, so it flips R and L.

    Args:
        theta: Fast-axis angle in degrees from horizontal

    Returns:
        Operator named "H<theta>"
    """
    phase = np.exp(2j * np.deg2rad(theta))
    mat = np.array([[0.0, 1j / phase], [1j * phase, 0.0]])
    return CoinOperator(mat, name=f"H{theta:g}")


def waveplate_operator(plate: Optional[WaveplateSpec]) -> CoinOperator:
    """Operator of an intracavity plate; identity when no plate is fitted."""
    if plate is None:
        return identity_coin()
    if plate.kind == "quarter":
        return qwp_operator(plate.theta)
    return hwp_operator(plate.theta)


def coin_theta(theta: float) -> CoinOperator:
    """Single-parameter coin C_theta.

    C_theta = [[cos(theta/2), i sin(theta/2)], [i sin(theta/2), cos(theta/2)]].

    The 1/sqrt(2) prefactor sometimes printed for this matrix is omitted: with it
    the operator is not unitary, and without it C_90 equals the balanced coin.

    Args:
        theta: Coin angle in degrees
    """
    half = np.deg2rad(theta) / 2.0
    c, s = np.cos(half), np.sin(half)
    return CoinOperator(np.array([[c, 1j * s], [1j * s, c]]), name=f"C{theta:g}")


def hadamard() -> CoinOperator:
    """Hadamard coin (1/sqrt(2))[[1, 1], [1, -1]], named C_H."""
    return CoinOperator(_SQRT_HALF * np.array([[1.0, 1.0], [1.0, -1.0]]), name="C_H")


def balanced() -> CoinOperator:
    """Balanced coin (1/sqrt(2))[[1, i], [i, 1]], named C_B; equals C_theta at 90 degrees."""
    return CoinOperator(_SQRT_HALF * np.array([[1.0, 1j], [1j, 1.0]]), name="C_B")


def not_coin() -> CoinOperator:
    """Pauli-X coin swapping R and L, named C_N."""
    return CoinOperator(np.array([[0.0, 1.0], [1.0, 0.0]]), name="C_N")


def identity_coin() -> CoinOperator:
    """Identity coin C_I; the walk it drives is the bare q-plate walk."""
    return CoinOperator(np.eye(2), name="C_I")


def coin_from_matrix(matrix: ArrayLike, name: str = "custom") -> CoinOperator:
    """Wrap a user-supplied 2x2 matrix; raises NonUnitaryError if it is not unitary."""
    return CoinOperator(np.asarray(matrix, dtype=np.complex128), name=name)


def compose(ops: Sequence[CoinOperator]) -> CoinOperator:
    """Product of operators; the first listed acts first on the state.

    Raises:
        InvalidParameterError: If ops is empty
    """
    if not ops:
        raise InvalidParameterError("compose() needs at least one operator")
    result = ops[0]
    for op in ops[1:]:
        result = op @ result
    return result


def global_phase(a: CoinOperator, b: CoinOperator) -> complex:
    """Unit-modulus lambda aligning b with a on b's largest-magnitude entry."""
    idx = np.unravel_index(np.argmax(np.abs(b.matrix)), b.matrix.shape)
    ratio = a.matrix[idx] / b.matrix[idx]
    if ratio == 0:
        return 1.0 + 0.0j
    return complex(ratio / abs(ratio))


def equal_up_to_global_phase(a: CoinOperator, b: CoinOperator, tol: float = 1e-12) -> bool:
    """True iff ||a - lambda*b||_max <= tol for a unit-modulus lambda."""
    if tol <= 0:
        raise InvalidParameterError("Tolerance must be positive", log_details=f"tol={tol}")
    lam = global_phase(a, b)
    err = float(np.max(np.abs(a.matrix - lam * b.matrix)))
    logger.debug(f"Phase comparison {a.name} vs {b.name}: lambda={lam:.6f} err={err:.3e}")
    return err <= tol


def horizontal() -> NDArray[np.complex128]:
    """|H> = i(|L> - |R>)/sqrt(2)."""
    return 1j * _SQRT_HALF * (LEFT - RIGHT)


def vertical() -> NDArray[np.complex128]:
    """|V> = (|R> + |L>)/sqrt(2)."""
    return _SQRT_HALF * (RIGHT + LEFT)


def linear_polarization(angle: float) -> NDArray[np.complex128]:
    """Linear polarization at angle degrees from horizontal (equals |H> at 0)."""
    phase = np.exp(1j * np.deg2rad(angle))
    return _SQRT_HALF * np.array([-1j / phase, 1j * phase])


def initial_coin_state(hwp_angle: float) -> NDArray[np.complex128]:
    """Coin state prepared by a half-wave plate acting on vertical input.

    45 degrees gives horizontal (up to phase i); 67.5 degrees gives diagonal.

    Args:
        hwp_angle: Plate fast-axis angle in degrees

    Returns:
        Normalized (R, L) amplitude pair
    """
    return hwp_operator(hwp_angle).apply(vertical())
