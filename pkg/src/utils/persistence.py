"""
Persistence - Reading datasets and writing/reading fitted draws and result tables.

Delimited files go through pandas; floats are written in their shortest
round-trip form and read back with ``float_precision='round_trip'`` so a
stored chain reproduces its summaries exactly.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import DataError, DrawsFileError
from ..models.chain import ChainDraws
from ..models.dataset import Dataset

logger = logging.getLogger(__name__)

DRAWS_FILE = 'draws.csv'
METADATA_FILE = 'metadata.json'
CURVE_FILE = 'summary_curve.csv'
PARAMS_FILE = 'summary_params.csv'
STUDY_FILE = 'study_results.csv'
REPLICATES_FILE = 'study_replicates.csv'


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def read_dataset(path) -> Dataset:
    """
    Read a two-column ``x,y`` CSV with a header.

    Raises:
        DataError: For a missing or empty file, a wrong header, or a malformed row
            (the message names the 1-based file line)
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty", line=1) from None
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: {exc}") from None
    columns = [c.strip().lower() for c in frame.columns]
    if columns != ['x', 'y']:
        raise DataError(f"expected header 'x,y', got '{','.join(frame.columns)}'", line=1)
    if frame.empty:
        raise DataError(f"{path} has a header but no rows", line=2)
    frame.columns = columns
    values = {}
    for name in columns:
        numeric = pd.to_numeric(frame[name].str.strip(), errors='coerce')
        bad = numeric.isna() | ~np.isfinite(numeric.fillna(0.0))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataError(f"column {name}: cannot parse '{frame[name].iloc[row]}' as a finite number",
                            line=row + 2)
        values[name] = numeric.to_numpy(dtype=float)
    return Dataset(values['x'], values['y'])


def write_draws(draws: ChainDraws, directory, extra: Optional[Dict] = None) -> Tuple[Path, Path]:
    """
    Write ``draws.csv`` and ``metadata.json`` (with the draws file's SHA-256).

    Returns:
        (draws path, metadata path)
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    draws_path = directory / DRAWS_FILE
    draws.to_frame().to_csv(draws_path, index=False)
    metadata = draws.metadata()
    metadata.update(extra or {})
    metadata['draws_sha256'] = sha256_file(draws_path)
    meta_path = directory / METADATA_FILE
    with open(meta_path, 'w') as handle:
        json.dump(metadata, handle, indent=2)
    logger.debug("wrote %d draws to %s", draws.n_draws, draws_path)
    return draws_path, meta_path


def read_draws(directory) -> Tuple[ChainDraws, Dict]:
    """
    Load draws written by :func:`write_draws` after checking the checksum.

    Raises:
        DrawsFileError: If a file is missing, unreadable or fails its checksum
    """
    directory = Path(directory)
    draws_path = directory / DRAWS_FILE
    meta_path = directory / METADATA_FILE
    for path in (draws_path, meta_path):
        if not path.is_file():
            raise DrawsFileError(f"missing {path}")
    try:
        with open(meta_path) as handle:
            metadata = json.load(handle)
    except json.JSONDecodeError as exc:
        raise DrawsFileError(f"{meta_path} is not valid JSON: {exc}") from None
    expected = metadata.get('draws_sha256')
    if expected is None:
        raise DrawsFileError(f"{meta_path} has no draws checksum")
    if sha256_file(draws_path) != expected:
        raise DrawsFileError(f"{draws_path} does not match its recorded checksum")
    try:
        frame = pd.read_csv(draws_path, float_precision='round_trip')
        draws = ChainDraws.from_frame(frame, metadata)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, KeyError, ValueError) as exc:
        raise DrawsFileError(f"cannot rebuild draws from {draws_path}: {exc}") from None
    return draws, metadata


def write_table(frame: pd.DataFrame, path, index: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index)
    return path
