"""Testing utilities: a brute-force walk oracle and canonical inputs."""
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .coins import (
    balanced,
    hadamard,
    identity_coin,
    initial_coin_state,
    not_coin,
)
from .models import CoinOperator, WalkerState, WaveplateSpec

SYMMETRIC_HWP = 67.5
HORIZONTAL_HWP = 45.0

# Named coin -> plate that realizes it after the q-plate's built-in NOT.
ORACLE_COINS: Dict[str, Tuple[Callable[[], CoinOperator], Optional[WaveplateSpec]]] = {
    "hadamard": (hadamard, WaveplateSpec("quarter", 45.0)),
    "balanced": (balanced, WaveplateSpec("quarter", 90.0)),
    "not": (not_coin, None),
    "identity": (identity_coin, WaveplateSpec("half", 0.0)),
}


def translation_matrix(lmin: int, lmax: int, step: int = 1) -> NDArray[np.complex128]:
    """Cyclic conditional translation |l,R> -> |l+s,R>, |l,L> -> |l-s,L>.

    Basis index of (l, c) is 2 (l - lmin) + c.
    """
    size = lmax - lmin + 1
    T = np.zeros((2 * size, 2 * size), dtype=np.complex128)
    for i in range(size):
        T[2 * ((i + step) % size), 2 * i] = 1.0
        T[2 * ((i - step) % size) + 1, 2 * i + 1] = 1.0
    return T


def coined_walk_unitary(coin: CoinOperator, lmin: int, lmax: int,
                        step: int = 1) -> NDArray[np.complex128]:
    """Dense one-step operator (I x C) T of the textbook coined walk."""
    size = lmax - lmin + 1
    return np.kron(np.eye(size), coin.matrix) @ translation_matrix(lmin, lmax, step)


def dense_evolve(initial: WalkerState, coin: CoinOperator, n: int,
                 step: int = 1) -> NDArray[np.complex128]:
    """Amplitude table after n textbook coined-walk steps, by matrix power."""
    U = np.linalg.matrix_power(coined_walk_unitary(coin, initial.lmin, initial.lmax, step), n)
    return (U @ initial.amps.reshape(-1)).reshape(-1, 2)


class WalkFixtures:
    """Factories for the walker inputs used across tests."""

    @staticmethod
    def symmetric(lmin: int = 0, lmax: int = 0) -> WalkerState:
        """Diagonal polarization at l = 0 (HWP at 67.5 degrees on vertical light)."""
        return WalkerState.localized(0, initial_coin_state(SYMMETRIC_HWP), lmin, lmax)

    @staticmethod
    def horizontal(lmin: int = 0, lmax: int = 0) -> WalkerState:
        """Horizontal polarization at l = 0 (HWP at 45 degrees)."""
        return WalkerState.localized(0, initial_coin_state(HORIZONTAL_HWP), lmin, lmax)

    @staticmethod
    def right(lmin: int = 0, lmax: int = 0) -> WalkerState:
        return WalkerState.localized(0, [1.0, 0.0], lmin, lmax)
