"""Subject-level trial data ingestion from delimited text files using pandas."""
import csv
import os
from typing import List, Optional

import numpy as np
import pandas as pd

from exceptions import DataFormatError
from schemas import TrialData

_MISSING_TOKENS = {"", "na", "nan", "null", "none", "."}


def read_table(path: str, delimiter: Optional[str] = None) -> pd.DataFrame:
    """
    Read a delimited file with a header row, keeping every cell as text.

    Args:
        path: Path to the data file
        delimiter: Field separator; sniffed from the file when None

    Returns:
        DataFrame of strings
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Data file not found: {path}")

    try:
        if delimiter is None:
            return pd.read_csv(path, sep=None, engine="python", dtype=str, keep_default_na=False)
        return pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False)
    except (csv.Error, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Error parsing data file {path}: {e}") from e


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    # short rows leave trailing cells absent rather than empty
    text = frame[column].fillna("").str.strip()
    values = pd.to_numeric(text, errors="coerce")
    for position, (raw, value) in enumerate(zip(text, values)):
        # +2: one for the header line, one for 1-based numbering
        row = position + 2
        if raw.lower() in _MISSING_TOKENS:
            raise DataFormatError(f"Missing value in column '{column}' at row {row} (missing data is not supported)")
        if pd.isna(value) or not np.isfinite(value):
            raise DataFormatError(f"Non-numeric value '{raw}' in column '{column}' at row {row}")
    return values.to_numpy(dtype=float)


def load_trial_data(path: str, arm_column: str, delimiter: Optional[str] = None) -> TrialData:
    """
    Load two-arm trial data: one arm column coded 1 (treated) / 0 (control)
    and every other column an endpoint outcome where higher is better.

    Args:
        path: Path to the data file
        arm_column: Name of the arm indicator column
        delimiter: Field separator; sniffed when None

    Returns:
        TrialData with endpoints in file column order

    Raises:
        DataFormatError: On a missing arm column, bad arm codes, non-numeric or
            missing outcomes, or fewer than two subjects in an arm
    """
    frame = read_table(path, delimiter)
    if arm_column not in frame.columns:
        raise DataFormatError(f"Arm column '{arm_column}' not found; columns are {list(frame.columns)}")

    endpoints: List[str] = [c for c in frame.columns if c != arm_column]
    if not endpoints:
        raise DataFormatError("No endpoint columns found besides the arm column")

    arm = _numeric_column(frame, arm_column)
    bad = np.flatnonzero((arm != 0) & (arm != 1))
    if bad.size:
        raise DataFormatError(f"Arm column '{arm_column}' must be 0 or 1; row {bad[0] + 2} has {arm[bad[0]]:g}")

    outcomes = np.column_stack([_numeric_column(frame, c) for c in endpoints])
    treated = outcomes[arm == 1]
    control = outcomes[arm == 0]
    if treated.shape[0] < 2 or control.shape[0] < 2:
        raise DataFormatError(
            f"Need at least 2 subjects per arm; found {treated.shape[0]} treated and {control.shape[0]} control"
        )
    return TrialData(treated=treated, control=control, endpoint_names=endpoints)
