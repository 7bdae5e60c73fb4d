"""
Tabular output and run manifests.

Rows are written through pandas as CSV (UTF-8, LF), JSON records or Parquet.
Every written table gets a `<out>.manifest.json` whose digest is the SHA-256
of the CSV rendering with timing columns removed, so identical inputs give
identical digests.
"""

import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

import pandas as pd

from . import __version__
from .errors import UsageError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "parquet")
TIMING_COLUMNS = ("elapsed_ms",)


def to_frame(rows: list[dict[str, Any]], columns: list[str]) -> pd.DataFrame:
    """DataFrame with exactly `columns`, in order; an empty row list gives a header-only frame."""
    frame = pd.DataFrame(rows, columns=columns)
    return frame[columns]


def render_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def table_digest(frame: pd.DataFrame) -> str:
    """SHA-256 of the CSV body without timing columns."""
    stable = frame.drop(columns=[c for c in TIMING_COLUMNS if c in frame.columns])
    return hashlib.sha256(render_csv(stable).encode("utf-8")).hexdigest()


def write_table(frame: pd.DataFrame, out: Path | None, fmt: str = "csv") -> None:
    """Write to `out`, or to stdout when out is None (csv and json only)."""
    if fmt not in FORMATS:
        raise UsageError(f"--format must be one of {', '.join(FORMATS)}, got {fmt!r}")
    if out is None:
        if fmt == "parquet":
            raise UsageError("--format parquet needs --out")
        if fmt == "csv":
            sys.stdout.write(render_csv(frame))
        else:
            sys.stdout.write(frame.to_json(orient="records", indent=2) + "\n")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(render_csv(frame))
    elif fmt == "json":
        frame.to_json(out, orient="records", indent=2)
    else:
        frame.to_parquet(out, engine="pyarrow", index=False)
    logger.debug("wrote %d rows to %s", len(frame), out)


def read_table(path: Path, fmt: str = "csv") -> pd.DataFrame:
    if fmt == "csv":
        return pd.read_csv(path)
    if fmt == "json":
        return pd.read_json(path, orient="records")
    return pd.read_parquet(path, engine="pyarrow")


def write_document(document: dict[str, Any], out: Path | None) -> None:
    """A single JSON object (snf-solve output)."""
    text = json.dumps(document, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def document_digest(document: dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(document, sort_keys=True).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """What ran, with which parameters, and a digest of what it produced."""

    subcommand: str
    parameters: dict[str, Any]
    version: str = __version__
    started_at: str = field(default_factory=lambda: datetime.now().isoformat())
    timings: dict[str, float] = field(default_factory=dict)
    digest: str = ""
    rows: int = 0
    output: str | None = None

    @staticmethod
    def path_for(out: Path) -> Path:
        return out.with_name(out.name + ".manifest.json")

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(asdict(self), indent=indent, default=str)

    def save_json(self, out: Path) -> Path:
        path = self.path_for(out)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        logger.debug("manifest saved to %s", path)
        return path

    @classmethod
    def load_json(cls, path: Path) -> "RunManifest":
        with open(path, encoding="utf-8") as f:
            return cls(**json.load(f))
