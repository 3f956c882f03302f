"""Data models for coins, walker states and OAM spectra.

All models are immutable: numpy payloads are copied on construction and
marked read-only, so values can be shared between threads freely.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, Literal, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import (
    EmptySpectrumError,
    InvalidParameterError,
    InvalidStateError,
    LatticeOverflowError,
    NonUnitaryError,
)

UNITARY_TOL = 1e-12
NORM_TOL = 1e-10

# Coin basis order: index 0 is |R>, index 1 is |L>.
R, L = 0, 1


def _frozen(values: ArrayLike, dtype) -> NDArray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CoinOperator:
    """2x2 unitary acting on the polarization (coin) space in the (|R>, |L>) basis.

    Attributes:
        matrix: Complex 2x2 entries
        name: Optional label used in logs and scenario output
    """
    matrix: NDArray[np.complex128]
    name: str = ""

    def __post_init__(self):
        mat = _frozen(self.matrix, np.complex128)
        if mat.shape != (2, 2):
            raise InvalidParameterError(
                "Coin operator must be a 2x2 matrix",
                log_details=f"shape={mat.shape}",
            )
        err = unitarity_error(mat)
        if err > UNITARY_TOL:
            raise NonUnitaryError(
                f"Coin operator {self.name or '<unnamed>'} is not unitary",
                log_details=f"max|U^dag U - I|={err:.3e}",
            )
        object.__setattr__(self, "matrix", mat)

    def __matmul__(self, other: "CoinOperator") -> "CoinOperator":
        label = f"{self.name}*{other.name}" if self.name and other.name else ""
        return CoinOperator(self.matrix @ other.matrix, name=label)

    def dagger(self) -> "CoinOperator":
        return CoinOperator(self.matrix.conj().T, name=f"{self.name}^dag" if self.name else "")

    def apply(self, coin_vector: ArrayLike) -> NDArray[np.complex128]:
        return self.matrix @ np.asarray(coin_vector, dtype=np.complex128)


def unitarity_error(matrix: ArrayLike) -> float:
    """Max-entry deviation of U^dag U from the identity."""
    mat = np.asarray(matrix, dtype=np.complex128)
    return float(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))))


@dataclass(frozen=True)
class WaveplateSpec:
    """Intracavity wave plate.

    Attributes:
        kind: "quarter" or "half"
        theta: Fast-axis angle in degrees from horizontal, normalized to [0, 180)
    """
    kind: Literal["quarter", "half"]
    theta: float

    def __post_init__(self):
        if self.kind not in ("quarter", "half"):
            raise InvalidParameterError(
                f"Unknown wave plate kind '{self.kind}'",
                log_details="expected 'quarter' or 'half'",
            )
        object.__setattr__(self, "theta", float(self.theta) % 180.0)


@dataclass(frozen=True)
class QPlateSpec:
    """q-plate of charge q; each pass shifts OAM by +-2q.

    Attributes:
        q: Plate charge (half-integer)
        step: Integer lattice step 2q, derived
    """
    q: float = 0.5
    step: int = field(init=False)

    def __post_init__(self):
        two_q = 2.0 * float(self.q)
        if two_q == 0 or abs(two_q - round(two_q)) > 1e-12:
            raise InvalidParameterError(
                "q-plate charge must satisfy 2q = nonzero integer",
                log_details=f"q={self.q}",
            )
        object.__setattr__(self, "step", int(round(two_q)))


@dataclass(frozen=True, eq=False)
class WalkerState:
    """Amplitude table over OAM sites l in [lmin, lmax] and coin {R, L}.

    Attributes:
        lmin: Lowest lattice site
        lmax: Highest lattice site
        amps: Complex array of shape (lmax - lmin + 1, 2); column 0 is R, column 1 is L
    """
    lmin: int
    lmax: int
    amps: NDArray[np.complex128]

    def __post_init__(self):
        if self.lmax < self.lmin:
            raise InvalidStateError(
                "Lattice upper bound is below lower bound",
                log_details=f"lmin={self.lmin} lmax={self.lmax}",
            )
        amps = _frozen(self.amps, np.complex128)
        expected = (self.lmax - self.lmin + 1, 2)
        if amps.shape != expected:
            raise InvalidStateError(
                "Amplitude table does not match lattice bounds",
                log_details=f"shape={amps.shape} expected={expected}",
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(
                "Walker state is not normalized",
                log_details=f"sum|amp|^2={norm!r}",
            )
        object.__setattr__(self, "lmin", int(self.lmin))
        object.__setattr__(self, "lmax", int(self.lmax))
        object.__setattr__(self, "amps", amps)

    @classmethod
    def localized(cls, l0: int, coin: ArrayLike, lmin: int | None = None,
                  lmax: int | None = None) -> "WalkerState":
        """State |l0> x |coin> on [lmin, lmax] (defaults to the single site l0)."""
        lmin = l0 if lmin is None else lmin
        lmax = l0 if lmax is None else lmax
        if not lmin <= l0 <= lmax:
            raise InvalidStateError(
                "Initial site lies outside the lattice",
                log_details=f"l0={l0} bounds=[{lmin}, {lmax}]",
            )
        vec = np.asarray(coin, dtype=np.complex128).reshape(2)
        amps = np.zeros((lmax - lmin + 1, 2), dtype=np.complex128)
        amps[l0 - lmin] = vec / np.linalg.norm(vec)
        return cls(lmin, lmax, amps)

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.lmin, self.lmax + 1)

    def index(self, l: int) -> int:
        if not self.lmin <= l <= self.lmax:
            raise InvalidStateError(
                f"Site {l} is outside the lattice",
                log_details=f"bounds=[{self.lmin}, {self.lmax}]",
            )
        return l - self.lmin

    def amplitude(self, l: int, coin: int) -> complex:
        return complex(self.amps[self.index(l), coin])

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def support(self, tol: float = 1e-14) -> Tuple[int, ...]:
        probs = np.sum(np.abs(self.amps) ** 2, axis=1)
        return tuple(int(l) for l in self.sites[probs > tol])

    def embed(self, lmin: int, lmax: int) -> "WalkerState":
        """Same state on a different lattice; dropping nonzero amplitude is an error."""
        outside = (self.sites < lmin) | (self.sites > lmax)
        if np.any(self.amps[outside] != 0):
            raise LatticeOverflowError(
                "Re-embedding would discard nonzero amplitude",
                log_details=f"bounds=[{lmin}, {lmax}] support={self.support()}",
            )
        amps = np.zeros((lmax - lmin + 1, 2), dtype=np.complex128)
        lo, hi = max(lmin, self.lmin), min(lmax, self.lmax)
        if lo <= hi:
            amps[lo - lmin:hi - lmin + 1] = self.amps[lo - self.lmin:hi - self.lmin + 1]
        return WalkerState(lmin, lmax, amps)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Nonnegative weight per OAM index l in [lmin, lmax]."""
    lmin: int
    lmax: int
    weights: NDArray[np.float64]

    def __post_init__(self):
        weights = _frozen(self.weights, np.float64)
        if weights.shape != (self.lmax - self.lmin + 1,):
            raise InvalidParameterError(
                "Spectrum weights do not match lattice bounds",
                log_details=f"shape={weights.shape} bounds=[{self.lmin}, {self.lmax}]",
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise InvalidParameterError(
                "Spectrum weights must be finite and nonnegative",
                log_details=f"min={weights.min() if weights.size else None}",
            )
        object.__setattr__(self, "lmin", int(self.lmin))
        object.__setattr__(self, "lmax", int(self.lmax))
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_mapping(cls, weights: Dict[int, float], lmin: int | None = None,
                     lmax: int | None = None) -> "Spectrum":
        lmin = min(weights) if lmin is None else lmin
        lmax = max(weights) if lmax is None else lmax
        arr = np.zeros(lmax - lmin + 1)
        for l, w in weights.items():
            arr[l - lmin] = w
        return cls(lmin, lmax, arr)

    @classmethod
    def delta(cls, l0: int, lmin: int, lmax: int) -> "Spectrum":
        return cls.from_mapping({l0: 1.0}, lmin, lmax)

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.lmin, self.lmax + 1)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def at(self, l: int) -> float:
        if not self.lmin <= l <= self.lmax:
            return 0.0
        return float(self.weights[l - self.lmin])

    def normalized(self) -> "Spectrum":
        total = self.total
        if total <= 0.0:
            raise EmptySpectrumError(
                "Cannot normalize a spectrum with zero total weight",
                log_details=f"bounds=[{self.lmin}, {self.lmax}]",
            )
        return Spectrum(self.lmin, self.lmax, self.weights / total)

    def embed(self, lmin: int, lmax: int) -> "Spectrum":
        arr = np.zeros(lmax - lmin + 1)
        lo, hi = max(lmin, self.lmin), min(lmax, self.lmax)
        if lo <= hi:
            arr[lo - lmin:hi - lmin + 1] = self.weights[lo - self.lmin:hi - self.lmin + 1]
        return Spectrum(lmin, lmax, arr)

    def mirrored(self) -> "Spectrum":
        return Spectrum(-self.lmax, -self.lmin, self.weights[::-1])


@dataclass(frozen=True, eq=False)
class StepSeries:
    """Per-step spectra indexed by step n = 0..N, embedded on a common lattice."""
    distributions: Tuple[Spectrum, ...]

    def __post_init__(self):
        dists = tuple(self.distributions)
        if not dists:
            raise InvalidParameterError("Step series must contain at least one step")
        lmin = min(d.lmin for d in dists)
        lmax = max(d.lmax for d in dists)
        object.__setattr__(self, "distributions", tuple(d.embed(lmin, lmax) for d in dists))

    @classmethod
    def from_sequence(cls, spectra: Sequence[Spectrum]) -> "StepSeries":
        return cls(tuple(spectra))

    def __len__(self) -> int:
        return len(self.distributions)

    def __getitem__(self, n: int) -> Spectrum:
        return self.distributions[n]

    def __iter__(self) -> Iterator[Spectrum]:
        return iter(self.distributions)

    @property
    def lmin(self) -> int:
        return self.distributions[0].lmin

    @property
    def lmax(self) -> int:
        return self.distributions[0].lmax

    def matrix(self) -> NDArray[np.float64]:
        """Weights stacked as (steps, sites)."""
        return np.vstack([d.weights for d in self.distributions])
