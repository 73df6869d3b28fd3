"""
Single writer for run outputs. JSON is written with sorted keys and CSV with a
fixed column order, so two runs with the same seed produce identical bytes.
"""
import csv
import hashlib
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("delta", "survival", "ci_low", "ci_high", "n_paths")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=True)


def content_hash(data) -> str:
    return hashlib.md5(canonical_json(data).encode()).hexdigest()[:16]


def write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    logger.info(f"Wrote {path}")
    return path


def write_jsonl(path: Path, records: Iterable[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")
    return path


def write_csv(path: Path, rows: Sequence[dict], columns: Sequence[str] | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns or (rows[0].keys() if rows else []))
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in columns})
    logger.info(f"Wrote {path}")
    return path


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else value


def write_timing(path: Path, timings: dict[str, float]) -> Path:
    # Wall-clock only goes here, never into the JSON/CSV outputs
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{name}\t{seconds:.3f}\n" for name, seconds in timings.items()))
    return path
