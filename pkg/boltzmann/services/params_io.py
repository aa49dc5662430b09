"""
Parameter files.

RBMP is a flat little-endian container: a 16-byte header (magic "RBMP",
version u32, m u32, n u32) followed by w (n x m, row-major), b and c as f64.
The JSON form carries {m, n, w (row-major list), b, c}.
"""
import json
import logging
import struct
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError
from .model import RbmParams

logger = logging.getLogger(__name__)

RBMP_MAGIC = b'RBMP'
RBMP_VERSION = 1
_HEADER = struct.Struct('<4sIII')


def params_to_bytes(params: RbmParams) -> bytes:
    header = _HEADER.pack(RBMP_MAGIC, RBMP_VERSION, params.m, params.n)
    payload = np.concatenate([params.w.ravel(), params.b, params.c]).astype('<f8')
    return header + payload.tobytes()


def params_from_bytes(raw: bytes) -> RbmParams:
    if len(raw) < _HEADER.size:
        raise DataFormatError("RBMP file is shorter than its header")
    magic, version, m, n = _HEADER.unpack_from(raw)
    if magic != RBMP_MAGIC:
        raise DataFormatError(f"bad RBMP magic {magic!r}")
    if version != RBMP_VERSION:
        raise DataFormatError(f"unsupported RBMP version {version}")
    expected = 8 * (n * m + m + n)
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise DataFormatError(f"RBMP payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype='<f8').astype(np.float64)
    w = values[:n * m].reshape(n, m)
    b = values[n * m:n * m + m]
    c = values[n * m + m:]
    return RbmParams(w, b, c)


def params_to_json(params: RbmParams) -> dict:
    return {
        'm': params.m,
        'n': params.n,
        'w': params.w.ravel().tolist(),
        'b': params.b.tolist(),
        'c': params.c.tolist(),
    }


def params_from_json(doc: dict) -> RbmParams:
    try:
        m, n = int(doc['m']), int(doc['n'])
        w = np.asarray(doc['w'], dtype=np.float64).reshape(n, m)
        b, c = doc['b'], doc['c']
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"malformed parameter JSON: {e}") from e
    return RbmParams(w, b, c)


def save_params(params: RbmParams, path) -> Path:
    """Write RBMP, or JSON when the path ends in .json."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == '.json':
        path.write_text(json.dumps(params_to_json(params)))
    else:
        path.write_bytes(params_to_bytes(params))
    logger.debug(f"Saved m={params.m} n={params.n} parameters to {path}")
    return path


def load_params(path) -> RbmParams:
    path = Path(path)
    if path.suffix == '.json':
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{path} is not valid JSON: {e}") from e
        return params_from_json(doc)
    return params_from_bytes(path.read_bytes())
