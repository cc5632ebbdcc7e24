"""
Table and document writers shared by the CLI commands.

CSV: header row, comma separated, '.' decimals, floats with 9 significant
digits, preceded by one '#' comment line naming the tool version and the
invocation. Files are written to a temporary sibling and renamed into place
so a failed command never leaves partial output.
"""

import io
import json
import sys
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from epr_steering import __version__

FORMATS = ("csv", "json")


def format_value(value):
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    if value is None:
        return ""
    return str(value)


def jsonable(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.9g}")
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return value


def comment_line(invocation=None):
    """'# epr-steering <version>' followed by the command line, if known"""
    line = f"# epr-steering {__version__}"
    return f"{line}: {invocation}" if invocation else line


def render_table(columns, rows, fmt="csv", invocation=None):
    """Render report output (columns as in report.get_columns, rows as dicts)"""
    names = [c["fieldname"] for c in columns]
    if fmt == "csv":
        frame = pd.DataFrame([[format_value(row.get(name)) for name in names] for row in rows], columns=names)
        buffer = io.StringIO()
        buffer.write(comment_line(invocation) + "\n")
        frame.to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()
    if fmt == "json":
        document = {
            "meta": {"version": __version__, "invocation": invocation},
            "columns": names,
            "rows": [{name: jsonable(row.get(name)) for name in names} for row in rows],
        }
        return json.dumps(document, indent=2) + "\n"
    raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")


def render_json(document):
    return json.dumps(jsonable(document), indent=2, sort_keys=True) + "\n"


def write_text(text, path=None):
    """Atomic write to path, or stdout when path is None or '-'"""
    if path in (None, "-"):
        sys.stdout.write(text)
        return None
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(path)
    finally:
        if tmp.exists():
            tmp.unlink()
    return path
