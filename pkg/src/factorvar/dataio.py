"""CSV and JSON formats: panels, manifests, and metadata headers.

Panel CSV layout: commented metadata lines, a header row of variable
identifiers with an ISO date column first, one ``tcode`` row, then one row
per quarter. Manifest JSON: an array of {code, tcode, sizes} records
mapping identifiers to transformation codes and subset tags.
"""

import hashlib
import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .data import RawSeries
from .exceptions import ConfigError, DataError

TOOL_NAME = "factorvar"
TOOL_VERSION = "0.1.0"

#: conventions recorded in every output header so results are interpretable
CONVENTIONS = {
    "evidence": "exact matrix-normal inverse-Wishart constants",
    "bic_dof": "focus-equation count times shrinkage hat-matrix trace",
    "omega_grid": "20 points from 0.01 in steps of 0.05",
}


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def meta_lines(config: Optional[dict] = None, extra: Optional[dict] = None) -> list:
    fields = {"tool": f"{TOOL_NAME} {TOOL_VERSION}"}
    if config is not None:
        fields["config_hash"] = config_hash(config)
    fields.update(CONVENTIONS)
    if extra:
        fields.update(extra)
    return [f"# {key}={value}" for key, value in fields.items()]


def write_csv_with_meta(path, frame: pd.DataFrame, config: Optional[dict] = None,
                        extra: Optional[dict] = None) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for line in meta_lines(config, extra):
            fh.write(line + "\n")
        frame.to_csv(fh, index=False, lineterminator="\n")


def read_csv_with_meta(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_json_with_meta(path, payload: dict, config: Optional[dict] = None,
                         extra: Optional[dict] = None) -> None:
    meta = {line[2:].split("=", 1)[0]: line[2:].split("=", 1)[1]
            for line in meta_lines(config, extra)}
    Path(path).write_text(json.dumps({"meta": meta, **payload}, indent=2,
                                     default=str) + "\n", encoding="utf-8")


def quarterly_dates(n: int, start: str = "1960-01-01") -> pd.DatetimeIndex:
    return pd.date_range(start=start, periods=n, freq="QS")


def write_panel_csv(path, names: Sequence[str], values: np.ndarray,
                    tcodes: Sequence[int], dates=None,
                    config: Optional[dict] = None) -> None:
    """Write a panel in the standard layout (tcode row after the header)."""
    values = np.asarray(values, dtype=float)
    if values.shape[1] != len(names) or len(tcodes) != len(names):
        raise DataError("names, tcodes, and value columns must align")
    if dates is None:
        dates = quarterly_dates(values.shape[0])
    date_strings = [pd.Timestamp(d).date().isoformat() for d in dates]
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for line in meta_lines(config):
            fh.write(line + "\n")
        fh.write("date," + ",".join(names) + "\n")
        fh.write("tcode," + ",".join(str(int(t)) for t in tcodes) + "\n")
        for stamp, row in zip(date_strings, values):
            fh.write(stamp + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_panel_csv(path):
    """Read a panel CSV; returns (names, tcodes, dates, values)."""
    frame = pd.read_csv(path, comment="#", header=0, dtype=str)
    if frame.columns[0] != "date":
        raise DataError(f"{path}: first column must be 'date', got {frame.columns[0]!r}")
    if frame.empty or frame.iloc[0, 0] != "tcode":
        raise DataError(f"{path}: second row must carry the transformation codes")
    names = list(frame.columns[1:])
    tcodes = [int(v) for v in frame.iloc[0, 1:]]
    body = frame.iloc[1:]
    dates = pd.to_datetime(body.iloc[:, 0]).reset_index(drop=True)
    values = body.iloc[:, 1:].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: panel contains missing or non-finite values")
    return names, tcodes, dates, values


def load_manifest(path) -> list:
    """Load and validate a manifest (array of {code, tcode, sizes})."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: manifest must be a JSON array")
    for i, entry in enumerate(entries):
        missing = {"code", "tcode", "sizes"} - set(entry)
        if missing:
            raise ConfigError(f"{path}: manifest entry {i} lacks fields {sorted(missing)}")
    return entries


def raw_series_from_csv(data_path, manifest_path) -> list:
    """Combine a raw-levels CSV with a manifest into RawSeries records.

    The CSV's tcode row must agree with the manifest where both are
    present; the manifest supplies the size tags.
    """
    names, tcodes, _, values = read_panel_csv(data_path)
    manifest = {e["code"]: e for e in load_manifest(manifest_path)}
    missing = [n for n in names if n not in manifest]
    if missing:
        raise ConfigError(f"series missing from manifest: {missing}")
    series = []
    for j, name in enumerate(names):
        entry = manifest[name]
        if int(entry["tcode"]) != tcodes[j]:
            raise ConfigError(
                f"series {name}: manifest tcode {entry['tcode']} != data tcode {tcodes[j]}")
        series.append(RawSeries(code=name, values=values[:, j], tcode=tcodes[j],
                                sizes=frozenset(entry["sizes"])))
    return series
