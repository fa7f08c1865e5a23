"""JSON coefficient files and machine-readable reports.

Complex scalars are written as ``[re, im]`` pairs.  ``S_blocks[i][j]`` holds
the operator ``S^i_j``, which is block ``(j, i)`` of the stored gauge.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import linalg as la
from .model import QleCoefficients


class ParseError(ValueError):
    """Malformed coefficient file; ``field`` names the offending entry."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def encode_matrix(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim == 0:
        return [float(A.real), float(A.imag)]
    return [encode_matrix(a) for a in A]


def decode_matrix(obj, shape, name):
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"not a numeric array ({exc})", name) from None
    if arr.shape != tuple(shape) + (2,):
        raise ParseError(f"expected shape {tuple(shape)} of [re, im] pairs, got {arr.shape}", name)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class CoefficientFile:
    coefficients: QleCoefficients
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        c = self.coefficients
        B = c.S_blocks()
        return {
            "dim_system": c.n,
            "dim_noise": c.d,
            "H": encode_matrix(c.H),
            "L0": [encode_matrix(L) for L in c.L0],
            "S_blocks": [[encode_matrix(B[j, i]) for j in range(c.d)] for i in range(c.d)],
            "metadata": {str(k): str(v) for k, v in self.metadata.items()},
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ParseError("top level must be an object")
        for key in ("dim_system", "dim_noise", "H", "L0", "S_blocks"):
            if key not in obj:
                raise ParseError("missing", key)
        n, d = obj["dim_system"], obj["dim_noise"]
        for key, v in (("dim_system", n), ("dim_noise", d)):
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ParseError("must be a positive integer", key)
        H = decode_matrix(obj["H"], (n, n), "H")
        if not isinstance(obj["L0"], list) or len(obj["L0"]) != d:
            raise ParseError(f"expected {d} matrices", "L0")
        L0 = tuple(decode_matrix(L, (n, n), f"L0[{i}]") for i, L in enumerate(obj["L0"]))
        rows = obj["S_blocks"]
        if not isinstance(rows, list) or len(rows) != d or any(not isinstance(r, list) or len(r) != d for r in rows):
            raise ParseError(f"expected a {d} x {d} array of matrices", "S_blocks")
        B = np.zeros((d, d, n, n), dtype=complex)
        for i in range(d):
            for j in range(d):
                B[j, i] = decode_matrix(rows[i][j], (n, n), f"S_blocks[{i}][{j}]")
        meta = obj.get("metadata", {})
        if not isinstance(meta, dict):
            raise ParseError("must be an object", "metadata")
        return cls(QleCoefficients(H, L0, la.from_noise_blocks(B)), {str(k): str(v) for k, v in meta.items()})

    @classmethod
    def loads(cls, text):
        if not text.strip():
            raise ParseError("empty input")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        return cls.from_dict(obj)

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def digest(text):
    if isinstance(text, str):
        text = text.encode("utf-8")
    return "sha256:" + hashlib.sha256(text).hexdigest()


def to_jsonable(obj):
    """Recursively convert numpy data (complex as ``[re, im]``) into JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj)
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def report(command, body, source_text=None):
    out = {"tool": "qlenv", "version": __version__, "command": command}
    if source_text is not None:
        out["input_digest"] = digest(source_text)
    out.update(body)
    return json.dumps(to_jsonable(out), indent=1, sort_keys=True, allow_nan=False) + "\n"
