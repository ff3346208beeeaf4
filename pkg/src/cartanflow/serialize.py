"""JSON encodings of matrices and floats.

Matrices are row-major nested lists; complex entries are ``[re, im]`` pairs.
Floats are written with ``repr`` (shortest round-trip decimal).
"""
import numpy as np


def matrix_to_json(a, complex_entries=None):
    a = np.asarray(a)
    if complex_entries is None:
        complex_entries = np.iscomplexobj(a)
    if complex_entries:
        return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(a)]
    return [[float(z) for z in row] for row in np.atleast_2d(np.real(a))]


def matrix_from_json(obj):
    """Inverse of :func:`matrix_to_json`; accepts real or ``[re, im]`` entries."""
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ValueError("a matrix must be a non-empty list of rows")
    width = len(obj[0])
    rows = []
    is_complex = False
    for row in obj:
        if len(row) != width:
            raise ValueError("matrix rows have different lengths")
        out = []
        for z in row:
            if isinstance(z, list):
                if len(z) != 2:
                    raise ValueError("complex entries must be [re, im] pairs")
                out.append(complex(float(z[0]), float(z[1])))
                is_complex = True
            elif isinstance(z, (int, float)) and not isinstance(z, bool):
                out.append(float(z))
            else:
                raise ValueError(f"invalid matrix entry {z!r}")
        rows.append(out)
    return np.array(rows, dtype=np.complex128 if is_complex else np.float64)


def fmt(x):
    """Shortest round-trip decimal for a float."""
    x = float(x)
    if x != x:
        return "nan"
    if x in (float("inf"), float("-inf")):
        return "inf" if x > 0 else "-inf"
    return repr(x)
