"""Small helpers for reading JSON inputs given as paths, bytes, text or streams."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import IO, Any, Union

from .errors import MalformedFile

Source = Union[str, bytes, os.PathLike, IO]


def read_json(source: Source) -> Any:
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith(("{", "["))):
        raw = Path(source).read_bytes()
    elif isinstance(source, str):
        raw = source.encode("utf-8")
    else:
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFile(str(exc)) from exc
