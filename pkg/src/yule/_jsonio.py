"""JSON emission with 17-significant-digit floats and run manifests."""

from __future__ import annotations

import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "yule/1"


def _format_float(x: float) -> str:
    if x != x:
        return '"nan"'
    if x == float("inf"):
        return '"inf"'
    if x == float("-inf"):
        return '"-inf"'
    text = format(x, ".17g")
    # bare exponents like 1e+20 are valid JSON numbers already
    return text


def dumps(obj, indent: int = 0) -> str:
    """Serialize with every float printed to 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 2).lstrip()}'
            for k, v in obj.items())
        return f"{pad}{{\n{items}\n{pad}}}" if obj else f"{pad}{{}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        items = ", ".join(dumps(v).strip() for v in seq)
        return f"{pad}[{items}]"
    if isinstance(obj, (bool, np.bool_)):
        return pad + ("true" if obj else "false")
    if isinstance(obj, (float, np.floating)):
        return pad + _format_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return pad + str(int(obj))
    if obj is None:
        return pad + "null"
    return pad + json.dumps(str(obj))


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def print_json(obj) -> None:
    sys.stdout.write(dumps(obj) + "\n")


@dataclass
class RunManifest:
    """Reproducibility record written alongside every file output."""

    command: str
    argv: list
    config: dict
    seed: int | None = None
    outputs: list = field(default_factory=list)
    started: str = ""
    finished: str = ""
    versions: dict = field(default_factory=dict)
    schema: str = SCHEMA

    def start(self) -> "RunManifest":
        self.started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.versions = _versions()
        return self

    def finish(self) -> "RunManifest":
        self.finished = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        return self

    def write(self, path) -> None:
        write_json(path, dataclasses.asdict(self))


def _versions() -> dict:
    import scipy

    from . import __version__

    return {
        "yule": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    }


def load_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
