"""Configuration files, CSV output, input fingerprints and the result cache."""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigurationError

CSV_VERSION = 1
COLUMNS = (
    "fingerprint", "scenario", "method", "N", "Gamma", "Delta",
    "n_c", "n_h", "n_w", "beta_c", "beta_h", "beta_w", "alpha_C", "alpha_P", "width",
    "realizations", "I_c", "I_h", "I_w", "I_c_stderr", "I_S_c", "I_S_h", "I_S_w",
    "noise", "entropy_production", "cop", "tur", "residual_work", "residual_hot",
    "first_law", "cooling", "reference", "ratio", "slope", "status", "wall_time",
)
# columns that legitimately differ between otherwise identical runs
VOLATILE_COLUMNS = ("wall_time",)


def load_config(path):
    """Read a TOML scenario file into a plain dict."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float.hex(obj)
    if hasattr(obj, "item"):  # numpy scalars
        return _canonical(obj.item())
    return obj


def fingerprint(obj, length=16):
    """sha256 of the canonical JSON form (floats hashed by their exact bits)."""
    text = json.dumps(_canonical(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:length]


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float) or hasattr(value, "dtype"):
        return format(float(value), ".17g")
    return str(value)


def write_csv(rows, out):
    """Write rows with the fixed column set; ``out`` is a path or a text stream."""
    lines = [f"# qutritfridge results v{CSV_VERSION}", ",".join(COLUMNS)]
    for row in rows:
        unknown = set(row) - set(COLUMNS)
        if unknown:
            raise ValueError(f"unexpected result columns {sorted(unknown)}")
        lines.append(",".join(_quote(format_value(row.get(c))) for c in COLUMNS))
    text = "\n".join(lines) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)


def _quote(s):
    return f'"{s}"' if ("," in s or '"' in s) else s


def read_csv(path):
    import csv
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def default_cache_dir():
    root = os.environ.get("QUTRITFRIDGE_CACHE")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "qutritfridge"


class ResultCache:
    """Rows stored as JSON under their scenario fingerprint."""

    def __init__(self, directory=None, enabled=True):
        self.directory = Path(directory) if directory else default_cache_dir()
        self.enabled = enabled

    def _path(self, key):
        return self.directory / f"{key}.json"

    def get(self, key):
        if not self.enabled:
            return None
        p = self._path(key)
        if not p.exists():
            return None
        try:
            return json.loads(p.read_text())
        except (OSError, json.JSONDecodeError):
            return None

    def put(self, key, rows):
        if not self.enabled:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(rows, default=_json_default))
        tmp.replace(self._path(key))


def _json_default(value):
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(type(value))
