"""File formats: HSC cubes, PGM label maps and CSV sidecars.

HSC layout (all little-endian)::

    offset 0   4 bytes  magic "HSC1"
    offset 4   u32      width
    offset 8   u32      height
    offset 12  u32      channels
    offset 16  f64      pixel_area
    offset 24  f64[...] width*height*channels samples, row-major pixels, channel fastest

All writers are atomic: the file is written next to its target and renamed
into place.
"""
from __future__ import annotations

import csv
import io as _io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .energy import HyperImage, SegmentModel
from .errors import FormatError
from .linalg import SpdMatrix
from .preprocess import PcaTransform

HSC_MAGIC = b"HSC1"
_HSC_HEADER = struct.Struct("<4sIIId")


def atomic_write_bytes(path, payload: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_csv(path, rows):
    buf = _io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    atomic_write_bytes(path, buf.getvalue().encode())


def encode_hsc(img: HyperImage) -> bytes:
    header = _HSC_HEADER.pack(HSC_MAGIC, img.width, img.height, img.channels, float(img.pixel_area))
    return header + img.data.astype("<f8").tobytes()


def decode_hsc(payload: bytes) -> HyperImage:
    if len(payload) < _HSC_HEADER.size:
        raise FormatError(f"HSC header truncated: {len(payload)} bytes, need {_HSC_HEADER.size}")
    magic, width, height, channels, pixel_area = _HSC_HEADER.unpack_from(payload)
    if magic != HSC_MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0, expected {HSC_MAGIC!r}")
    for name, value, offset in (("width", width, 4), ("height", height, 8), ("channels", channels, 12)):
        if value == 0:
            raise FormatError(f"field {name} at offset {offset} is zero")
    if not (np.isfinite(pixel_area) and pixel_area > 0):
        raise FormatError(f"field pixel_area at offset 16 is not a positive finite number ({pixel_area})")
    n = width * height * channels
    expected = _HSC_HEADER.size + 8 * n
    if len(payload) != expected:
        raise FormatError(f"payload size mismatch: file has {len(payload)} bytes, header declares {expected}")
    data = np.frombuffer(payload, dtype="<f8", offset=_HSC_HEADER.size, count=n).astype(float)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise FormatError(f"non-finite sample at offset {_HSC_HEADER.size + 8 * int(bad[0])}")
    return HyperImage(data.reshape(height, width, channels), pixel_area)


def write_hsc(path, img: HyperImage):
    atomic_write_bytes(path, encode_hsc(img))


def read_hsc(path) -> HyperImage:
    return decode_hsc(Path(path).read_bytes())


def encode_pgm(labels) -> bytes:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise FormatError("label values must fit in 0..255 for PGM output")
    h, w = labels.shape
    return f"P5\n{w} {h}\n255\n".encode() + labels.astype(np.uint8).tobytes()


def _pgm_tokens(payload: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(payload) and payload[pos:pos + 1].isspace():
            pos += 1
        if payload[pos:pos + 1] == b"#":
            while pos < len(payload) and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(payload) and not payload[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"PGM header truncated at offset {pos}")
        tokens.append((payload[start:pos], start))
    return tokens, pos + 1


def decode_pgm(payload: bytes) -> np.ndarray:
    tokens, pos = _pgm_tokens(payload, 4)
    if tokens[0][0] != b"P5":
        raise FormatError(f"bad PGM magic {tokens[0][0]!r} at offset 0, expected b'P5'")
    values = []
    for (tok, offset), name in zip(tokens[1:], ("width", "height", "maxval")):
        try:
            values.append(int(tok))
        except ValueError:
            raise FormatError(f"PGM field {name} at offset {offset} is not an integer: {tok!r}") from None
    w, h, maxval = values
    if maxval != 255:
        raise FormatError(f"PGM maxval at offset {tokens[3][1]} must be 255, got {maxval}")
    if len(payload) - pos != w * h:
        raise FormatError(f"PGM raster size mismatch: {len(payload) - pos} bytes after offset {pos}, expected {w * h}")
    return np.frombuffer(payload, dtype=np.uint8, offset=pos).reshape(h, w).astype(int)


def write_pgm(path, labels):
    atomic_write_bytes(path, encode_pgm(labels))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


def model_rows(models) -> list[list]:
    """Sidecar rows: label, mean entries, eigenvalues, eigenvector matrix (row-major)."""
    L = models[0].mean.size
    header = (["label"] + [f"mu_{i}" for i in range(L)] + [f"sigma_{i}" for i in range(L)]
              + [f"v_{i}_{j}" for i in range(L) for j in range(L)])
    rows = [header]
    for l, m in enumerate(models, start=1):
        rows.append([l] + [repr(float(x)) for x in m.mean] + [repr(float(x)) for x in m.cov.values]
                    + [repr(float(x)) for x in m.cov.vectors.ravel()])
    return rows


def write_models(path, models):
    atomic_write_csv(path, model_rows(models))


def read_models(path) -> list[SegmentModel]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty model file")
    header = rows[0]
    L = sum(1 for name in header if name.startswith("mu_"))
    if L == 0 or len(header) != 1 + 2 * L + L * L:
        raise FormatError(f"{path}: header has {len(header)} columns, inconsistent with mean length {L}")
    models = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            label = int(row[0])
            nums = np.array([float(x) for x in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from None
        if label != lineno - 1:
            raise FormatError(f"{path}: line {lineno} carries label {label}, expected {lineno - 1}")
        mean, values, vectors = nums[:L], nums[L:2 * L], nums[2 * L:].reshape(L, L)
        models.append(SegmentModel(mean, SpdMatrix.from_eig(values, vectors)))
    return models


def write_basis(path, transform: PcaTransform):
    L = transform.means.size
    rows = [["kind", "index"] + [f"c{j}" for j in range(L)]]
    rows.append(["mean", 0] + [repr(float(x)) for x in transform.means])
    rows.append(["eigenvalues", 0] + [repr(float(x)) for x in transform.eigenvalues])
    for i in range(transform.n_components):
        rows.append(["component", i] + [repr(float(x)) for x in transform.basis[:, i]])
    atomic_write_csv(path, rows)


def read_basis(path) -> PcaTransform:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    try:
        kinds = {}
        comps = []
        for row in rows[1:]:
            vec = np.array([float(x) for x in row[2:]])
            if row[0] == "component":
                comps.append(vec)
            else:
                kinds[row[0]] = vec
        return PcaTransform(np.column_stack(comps), kinds["mean"], kinds["eigenvalues"])
    except (KeyError, ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed basis file ({exc})") from None
