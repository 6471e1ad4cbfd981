"""Portable binary layout for dense complex matrices.

Layout (all integers little-endian):

    offset  size  field
    0       8     magic b"CTMATRIX"
    8       4     uint32 format version (1)
    12      4     uint32 element code (1 = complex128)
    16      8     uint64 rows
    24      8     uint64 cols
    32      16*rows*cols  elements, row-major, each as float64 real then float64 imag
"""

import struct

import numpy as np

from .errors import InputError

MAGIC = b"CTMATRIX"
VERSION = 1
COMPLEX128 = 1
_HEADER = struct.Struct("<8sIIQQ")


def write_matrix(path, matrix):
    m = np.ascontiguousarray(matrix, dtype="<c16")
    if m.ndim != 2:
        raise InputError("only 2-d matrices can be written")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, COMPLEX128, m.shape[0], m.shape[1]))
        fh.write(m.tobytes(order="C"))


def read_matrix(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InputError(f"{path}: truncated header")
        magic, version, code, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC or version != VERSION or code != COMPLEX128:
            raise InputError(f"{path}: not a version-1 complex128 matrix file")
        data = fh.read()
    if len(data) != 16 * rows * cols:
        raise InputError(f"{path}: expected {rows}x{cols} elements")
    return np.frombuffer(data, dtype="<c16").reshape(rows, cols).astype(complex)
