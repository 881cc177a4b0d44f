"""CSV/JSON writers and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "read_csv", "write_json", "RunManifest", "config_hash", "OUTPUT_ENV"]

OUTPUT_ENV = "FBCOOL_OUTPUT_DIR"


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest string that round-trips
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")
    return path


def config_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    output_dir: str
    tool_version: str
    config_hash: str
    timestamp: str

    @classmethod
    def create(cls, command, config_bytes, config_path, output_dir, version):
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return cls(command, None if config_path is None else os.fspath(config_path),
                   os.fspath(output_dir), version, config_hash(config_bytes), stamp)

    def write(self, directory):
        return write_json(Path(directory) / "manifest.json", asdict(self))
