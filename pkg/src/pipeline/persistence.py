"""
CSV artifacts with reproducibility headers.

Every file starts with '#' comment lines carrying the tool version, the resolved
configuration as canonical JSON, the root seed, a git-style hash of that JSON and
the unit convention. pandas reads the files back with ``comment='#'``.
"""
import hashlib
import json
import logging
import os
from typing import Optional

import numpy as np
import pandas as pd

from .. import __version__
from ..models.experiment import RECORD_COLUMNS, SORT_KEYS
from ..models.sensor import UNITS_HEADER

logger = logging.getLogger(__name__)

TOOL_NAME = "flux-sense"
FLOAT_FORMAT = "%.15g"


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data: dict) -> str:
    """Git blob hash of the canonical JSON: sha1(b'blob <len>\\0' + content)."""
    content = canonical_json(data).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()


def header_lines(config: dict, seed: Optional[int]) -> list[str]:
    return [
        f"# {TOOL_NAME} {__version__}",
        f"# config: {canonical_json(config)}",
        f"# seed: {seed if seed is not None else 'none'}",
        f"# config_hash: {config_hash(config)}",
        f"# {UNITS_HEADER}",
    ]


def read_header(path: str) -> dict:
    """Parse the leading comment block of an artifact into a dict."""
    header = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            key, sep, value = text.partition(": ")
            if sep:
                header[key] = value
            elif text.startswith(TOOL_NAME):
                header["tool"] = text
    if "config" in header:
        header["config"] = json.loads(header["config"])
    return header


def write_frame(frame: pd.DataFrame, path: str, config: dict, seed: Optional[int], **kwargs) -> str:
    """Write a DataFrame below the reproducibility header."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(header_lines(config, seed)) + "\n")
        frame.to_csv(f, float_format=FLOAT_FORMAT, lineterminator="\n", **kwargs)
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def read_frame(path: str, **kwargs) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", **kwargs)


def pattern_frame(fluxes: np.ndarray, taus: np.ndarray, pattern: np.ndarray) -> pd.DataFrame:
    """Pattern table: flux_phi0 index, one column per delay in scientific notation."""
    columns = [f"{t:.6e}" for t in taus]
    frame = pd.DataFrame(pattern, columns=columns)
    frame.insert(0, "flux_phi0", fluxes)
    return frame.set_index("flux_phi0")


def write_pattern(path: str, fluxes, taus, pattern, config: dict, seed: Optional[int] = None) -> str:
    return write_frame(pattern_frame(np.asarray(fluxes), np.asarray(taus), pattern), path, config, seed)


class RecordStore:
    """
    Append-only step-record CSV of one sensor.

    Rows arrive in completion order; ``canonicalize`` rewrites the file sorted by
    (j, k, l) so the final bytes do not depend on scheduling.
    """

    def __init__(self, path: str, config: dict, seed: Optional[int]):
        self.path = path
        self.config = config
        self.seed = seed
        self.hash = config_hash(config)

    def exists(self) -> bool:
        return os.path.exists(self.path)

    def stored_hash(self) -> Optional[str]:
        return read_header(self.path).get("config_hash") if self.exists() else None

    def load(self) -> pd.DataFrame:
        if not self.exists():
            return pd.DataFrame(columns=RECORD_COLUMNS)
        return read_frame(self.path)

    def reset(self, frame: Optional[pd.DataFrame] = None):
        frame = pd.DataFrame(columns=RECORD_COLUMNS) if frame is None else frame
        write_frame(frame[RECORD_COLUMNS], self.path, self.config, self.seed, index=False)

    def append(self, rows: list[dict]):
        frame = pd.DataFrame(rows, columns=RECORD_COLUMNS)
        with open(self.path, "a", encoding="utf-8", newline="") as f:
            frame.to_csv(f, header=False, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    def canonicalize(self) -> pd.DataFrame:
        frame = self.load().sort_values(SORT_KEYS).reset_index(drop=True)
        self.reset(frame)
        return frame
