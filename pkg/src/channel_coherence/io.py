"""Channel JSON format.

A channel file is an object::

    {"name": "...", "dim_in": 2, "dim_out": 2,
     "kraus": [[[[re, im], [re, im]], [[re, im], [re, im]]], ...]}

Each Kraus matrix is a list of rows, each entry a ``[re, im]`` pair.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channels import KrausChannel
from .numerics import DimensionError


class ChannelFormatError(ValueError):
    """Malformed channel JSON."""


def _entry(x, where: str) -> complex:
    if (
        not isinstance(x, (list, tuple))
        or len(x) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
    ):
        raise ChannelFormatError(f"{where}: expected a [re, im] pair of numbers, got {x!r}")
    re, im = float(x[0]), float(x[1])
    if not (math.isfinite(re) and math.isfinite(im)):
        raise ChannelFormatError(f"{where}: non-finite number")
    return complex(re, im)


def _matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ChannelFormatError(f"{where}: expected a non-empty list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise ChannelFormatError(f"{where}: ragged matrix")
    return np.array(
        [[_entry(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(rows)],
        dtype=complex,
    )


def channel_from_dict(obj) -> KrausChannel:
    if not isinstance(obj, dict):
        raise ChannelFormatError("channel JSON must be an object")
    for key in ("dim_in", "dim_out", "kraus"):
        if key not in obj:
            raise ChannelFormatError(f"missing field {key!r}")
    d_in, d_out = obj["dim_in"], obj["dim_out"]
    if not (isinstance(d_in, int) and isinstance(d_out, int)) or d_in < 1 or d_out < 1:
        raise ChannelFormatError("dim_in and dim_out must be positive integers")
    kraus = obj["kraus"]
    if not isinstance(kraus, list) or not kraus:
        raise ChannelFormatError("kraus must be a non-empty list of matrices")
    ks = [_matrix(k, f"kraus[{n}]") for n, k in enumerate(kraus)]
    for n, k in enumerate(ks):
        if k.shape != (d_out, d_in):
            raise DimensionError(f"kraus[{n}] has shape {k.shape}, expected {(d_out, d_in)}")
    name = obj.get("name")
    return KrausChannel(d_in, d_out, tuple(ks), name=name if isinstance(name, str) else None)


def channel_to_dict(ch: KrausChannel, name: str | None = None) -> dict:
    out = {}
    if name or ch.name:
        out["name"] = name or ch.name
    out["dim_in"] = ch.dim_in
    out["dim_out"] = ch.dim_out
    out["kraus"] = [
        [[[float(z.real), float(z.imag)] for z in row] for row in k] for k in ch.kraus
    ]
    return out


def loads_channel(text: str) -> KrausChannel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelFormatError(f"invalid JSON: {exc}") from exc
    return channel_from_dict(obj)


def dumps_channel(ch: KrausChannel, name: str | None = None) -> str:
    return json.dumps(channel_to_dict(ch, name), indent=1) + "\n"


def read_channel(path) -> KrausChannel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ChannelFormatError(f"not UTF-8 text: {exc}") from exc
    return loads_channel(text)


def write_channel(ch: KrausChannel, path, name: str | None = None) -> None:
    Path(path).write_text(dumps_channel(ch, name), encoding="utf-8")
