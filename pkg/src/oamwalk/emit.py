"""CSV emission of spectra and result tables.

Numbers are written with ``repr`` so that re-reading a file reproduces every
value bit for bit. Lines end with a single newline on every platform.
"""
import csv
import logging
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import InvalidParameterError
from .models import Spectrum

logger = logging.getLogger(__name__)

SPECTRUM_HEADER = ("l", "probability")

PathLike = Union[str, Path]


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a header plus rows, creating parent directories as needed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def emit_spectrum_csv(spec: Spectrum, path: PathLike) -> Path:
    """One row per lattice site in ascending l, header ``l,probability``."""
    return write_table_csv(path, SPECTRUM_HEADER, zip(spec.sites, spec.weights))


def read_spectrum_csv(path: PathLike) -> Spectrum:
    """Parse a file written by ``emit_spectrum_csv``.

    Raises:
        InvalidParameterError: If the header or the site sequence is malformed
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != SPECTRUM_HEADER:
            raise InvalidParameterError(
                f"Unexpected spectrum header in {path}", log_details=f"header={header}"
            )
        rows = [(int(l), float(p)) for l, p in reader]
    if not rows:
        raise InvalidParameterError(f"Spectrum file {path} has no rows")
    sites = [l for l, _ in rows]
    if sites != list(range(sites[0], sites[0] + len(sites))):
        raise InvalidParameterError(
            f"Spectrum file {path} does not list consecutive ascending sites",
            log_details=f"first={sites[0]} count={len(sites)}",
        )
    return Spectrum(sites[0], sites[-1], np.array([p for _, p in rows]))
