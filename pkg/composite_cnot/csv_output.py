"""
CSV writers with '#'-prefixed provenance lines ahead of the header row.
"""

import csv
import logging
import os
import sys
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

PACKAGE_VERSION = "0.1.0"


class OutputError(Exception):
    """Exception raised when results cannot be written."""

    pass


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def write_rows(
    path: Optional[str],
    fieldnames: Sequence[str],
    rows: Iterable[dict],
    provenance: Optional[Dict[str, object]] = None,
) -> None:
    """
    Write provenance comments, a header row and data rows.

    Floats are written with repr so they round-trip exactly.

    Args:
        path: Output file; None or "-" writes to stdout
        fieldnames: Column order
        rows: Mappings keyed by field name (extra keys are ignored)
        provenance: Key/value pairs written as "# key: value" lines

    Raises:
        OutputError: If the file cannot be written
    """
    to_stdout = path in (None, "-")
    try:
        if to_stdout:
            handle = sys.stdout
        else:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            handle = open(path, "w", newline="")
        try:
            for key, value in (provenance or {}).items():
                handle.write(f"# {key}: {value}\n")
            writer = csv.DictWriter(
                handle, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n"
            )
            writer.writeheader()
            count = 0
            for row in rows:
                writer.writerow({k: _format(v) for k, v in row.items()})
                count += 1
        finally:
            if not to_stdout:
                handle.close()
    except OSError as e:
        raise OutputError(f"Cannot write results to '{path}': {e}") from e
    if not to_stdout:
        logger.info(f"Wrote {count} rows to {path}")


def read_rows(path: str) -> Tuple[Dict[str, str], List[dict]]:
    """Read a file written by write_rows back into (provenance, rows)."""
    provenance: Dict[str, str] = {}
    body = []
    with open(path, "r", newline="") as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(": ")
                provenance[key] = value
            else:
                body.append(line)
    return provenance, list(csv.DictReader(body))
