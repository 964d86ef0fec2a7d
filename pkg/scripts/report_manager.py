"""
ReportManager class - writes JSON reports and TSV curve files, each stamped with a run manifest
"""
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from errors import ValidationError

logger = logging.getLogger(__name__)

SOFTWARE_VERSION = "1.0.0"
REPORT_VERSION = "1.0"


def _canonical_json(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(settings):
    """SHA-256 of the canonical JSON form of the settings"""
    return "sha256:" + hashlib.sha256(_canonical_json(to_serializable(settings)).encode("utf-8")).hexdigest()


def file_digest(path):
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def run_timestamp():
    """UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible output"""
    epoch = os.environ.get('SOURCE_DATE_EPOCH')
    moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.replace(microsecond=0).isoformat()


def to_serializable(value):
    """
    Convert numpy and pandas values to plain JSON types; NaN and infinities become None

    Args:
        value: Nested structure

    Returns:
        object: JSON-ready structure
    """
    if isinstance(value, dict):
        return {str(key): to_serializable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_serializable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_serializable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if value is None or isinstance(value, str):
        return value
    if value is pd.NA:
        return None
    return str(value)


@dataclass(frozen=True)
class RunManifest:
    """
    Provenance stamped into every emitted artifact

    Attributes:
        command (str): CLI command name
        config_hash (str): Digest of the effective settings
        inputs (dict): Input path -> file digest
        seed (int or None): Seed of stochastic commands
        version (str): Software version
        timestamp (str): UTC time of the run
    """

    command: str
    config_hash: str
    inputs: dict = field(default_factory=dict)
    seed: int = None
    version: str = SOFTWARE_VERSION
    timestamp: str = field(default_factory=run_timestamp)

    @classmethod
    def create(cls, command, settings, input_paths=(), seed=None):
        """
        Build a manifest, hashing the settings and every input file

        Args:
            command (str): Command name
            settings (dict): Effective settings
            input_paths (iterable): Input files
            seed (int or None): Seed

        Returns:
            RunManifest: Manifest
        """
        inputs = {os.path.basename(path): file_digest(path) for path in sorted(input_paths)}
        return cls(command, config_hash(settings), inputs, seed)

    def to_dict(self):
        return {
            'command': self.command,
            'config_hash': self.config_hash,
            'inputs': dict(self.inputs),
            'seed': self.seed,
            'version': self.version,
            'timestamp': self.timestamp,
        }


class ReportManager:
    """
    Manages report output with JSON and TSV persistence
    """

    def __init__(self, directory="reports"):
        """
        Initialize report manager

        Args:
            directory (str): Directory to store reports
        """
        self.directory = directory
        os.makedirs(directory, exist_ok=True)

    def path(self, name):
        return os.path.join(self.directory, name)

    def write_json(self, name, payload, manifest):
        """
        Write a pretty-printed JSON report with the manifest embedded

        Args:
            name (str): File name
            payload (dict): Report content
            manifest (RunManifest): Run manifest

        Returns:
            str: Written path
        """
        document = {'report_version': REPORT_VERSION, 'manifest': manifest.to_dict()}
        document.update(to_serializable(payload))
        path = self.path(name)
        try:
            text = json.dumps(document, indent=2, allow_nan=False)
        except ValueError as error:
            raise ValidationError(f"Report {name} holds a non-finite number: {error}") from error
        with open(path, 'w') as f:
            f.write(text + "\n")
        logger.info("Wrote %s", path)
        return path

    def write_tsv(self, name, columns, rows, manifest, sort=True):
        """
        Write a TSV table: a '# manifest' comment line, one header line, then rows sorted
        by the first column

        Args:
            name (str): File name
            columns (list): Column names
            rows (list): Row tuples
            manifest (RunManifest): Run manifest
            sort (bool): Sort rows by the first column (stable)

        Returns:
            str: Written path
        """
        frame = pd.DataFrame(list(rows), columns=list(columns))
        if sort and len(frame):
            frame = frame.sort_values(columns[0], kind='stable')
        numeric = frame.select_dtypes(include='number').to_numpy(dtype=float, na_value=np.nan)
        if np.any(np.isinf(numeric)):
            raise ValidationError(f"Table {name} holds an infinite number")
        # Missing values (infeasible solves) are written as empty cells
        frame = frame.astype(object).where(frame.notna(), "")
        path = self.path(name)
        with open(path, 'w') as f:
            f.write("# manifest " + _canonical_json(manifest.to_dict()) + "\n")
            frame.to_csv(f, sep='\t', index=False, float_format="%.17g", lineterminator="\n")
        logger.info("Wrote %s", path)
        return path

    def load_json(self, name):
        """
        Load a written JSON report

        Args:
            name (str): File name

        Returns:
            dict or None: Report, None when missing
        """
        path = self.path(name)
        if not os.path.exists(path):
            return None
        with open(path, 'r') as f:
            return json.load(f)
