"""CSV ingestion and emission for sample matrices.

Input: n rows x p numeric columns, optional header line, ``#`` comments.
Output: header ``x1,...,xp`` and values at 17 significant digits so that a
64-bit float survives the round trip exactly.
"""

import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from sphdir.core.estimation import SampleMatrix
from sphdir.exceptions import DataError, DimensionMismatchError, DomainError, NotOnSphereError
from sphdir.schemas.run import Transform

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

PathOrBuffer = Union[str, Path, TextIO]


def read_matrix(source: PathOrBuffer) -> Tuple[np.ndarray, Optional[List[str]]]:
    """Parse a numeric CSV into an (n, p) float array and the header, if there was one."""
    try:
        frame = pd.read_csv(source, header=None, comment="#", dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError("input contains no data rows")
    except pd.errors.ParserError as e:
        raise DimensionMismatchError(f"rows have inconsistent lengths: {e}")

    header = None
    try:
        np.asarray(frame.iloc[0].to_numpy(), dtype=float)
    except (ValueError, TypeError):
        header = [str(v).strip() for v in frame.iloc[0]]
        frame = frame.iloc[1:]
    if frame.empty:
        raise DataError("input contains no data rows")

    try:
        values = frame.to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise DataError(f"non-numeric entry in input: {e}")
    missing = np.isnan(values).any(axis=1)
    if missing.any():
        row = int(np.argmax(missing))
        raise DimensionMismatchError(
            f"data row {row + 1} has {int((~np.isnan(values[row])).sum())} of {values.shape[1]} columns"
        )
    return values, header


def column_names(p: int) -> List[str]:
    return [f"x{i}" for i in range(1, p + 1)]


def write_matrix(
    rows: ArrayLike,
    dest: Optional[PathOrBuffer] = None,
    columns: Optional[Sequence[str]] = None,
) -> str:
    """Write rows as CSV to ``dest`` (a path, an open text stream, or stdout when None); returns the text."""
    arr = np.asarray(rows, dtype=float)
    frame = pd.DataFrame(arr, columns=list(columns) if columns else column_names(arr.shape[1]))
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if dest is None:
        sys.stdout.write(text)
    elif hasattr(dest, "write"):
        dest.write(text)
    else:
        path = Path(dest)
        try:
            path.write_text(text)
        except OSError as e:
            raise DataError(f"cannot write {path}: {e}")
        logger.info("wrote %d rows to %s", arr.shape[0], path)
    return text


def normalize_rows(values: ArrayLike) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DataError(f"row {int(np.argmax(norms.ravel() == 0)) + 1} is all zeros and cannot be normalized")
    return arr / norms


def log_shift_transform(raw: ArrayLike, c: float) -> np.ndarray:
    """ln(c + v) elementwise, then each row scaled to unit length."""
    if not c > 0:
        raise DomainError(f"log-shift constant must be > 0, got {c!r}")
    arr = np.asarray(raw, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        shifted = np.log(c + arr)
    if not np.all(shifted > 0):
        raise DataError(f"ln({c} + v) is not positive for every entry; counts must satisfy v > {1 - c:.6g}")
    return normalize_rows(shifted)


def ingest(raw: ArrayLike, transform: Transform = Transform.NONE, c: float = 1.10) -> SampleMatrix:
    """Turn parsed CSV values into a validated sample."""
    transform = Transform(transform)
    if transform is Transform.LOG_SHIFT:
        rows = log_shift_transform(raw, c)
    else:
        rows = np.asarray(raw, dtype=float)
        if np.any(rows == 0):
            cols = sorted({int(k) + 1 for k in np.argwhere(rows == 0)[:, 1]})
            logger.warning(
                "zero coordinates in column(s) %s: the likelihood is undefined; use --transform log-shift", cols
            )
    try:
        return SampleMatrix.from_rows(rows)
    except (NotOnSphereError, DimensionMismatchError) as e:
        raise DataError(f"{e}; rows must be unit-norm points unless --transform log-shift is given")


def load_sample(source: PathOrBuffer, transform: Transform = Transform.NONE, c: float = 1.10) -> SampleMatrix:
    values, _ = read_matrix(source)
    data = ingest(values, transform, c)
    logger.info("loaded %d observations with p = %d", data.n, data.p)
    return data
