"""Truncated bivariate Taylor series in two independent increments.

A series is a complex array ``c`` of shape ``(R+1, S+1)`` standing for
``sum c[a, b] eps**a delta**b``; products drop every term beyond the shape.
Used to carry exact zeta / conj(zeta) derivatives through determinants.
"""

from __future__ import annotations

import numpy as np


def const(value: complex, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=complex)
    out[0, 0] = value
    return out


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    R, S = a.shape
    out = np.zeros_like(a)
    for p in range(R):
        for q in range(S):
            if a[p, q] != 0:
                out[p:, q:] += a[p, q] * b[: R - p, : S - q]
    return out


def inv(a: np.ndarray) -> np.ndarray:
    a00 = a[0, 0]
    if a00 == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    R, S = a.shape
    b = np.zeros_like(a)
    b[0, 0] = 1.0 / a00
    for i in range(R):
        for j in range(S):
            if i == 0 and j == 0:
                continue
            acc = 0j
            for p in range(i + 1):
                for q in range(j + 1):
                    if p or q:
                        acc += a[p, q] * b[i - p, j - q]
            b[i, j] = -acc / a00
    return b


def det(m: list[list[np.ndarray]]) -> np.ndarray:
    """Determinant of a square matrix of series.

    Laplace expansion along rows, memoised on the set of remaining columns.
    Exact even when the constant part of the matrix is singular, which
    elimination with series pivots cannot handle.
    """
    n = len(m)
    shape = m[0][0].shape if n else (1, 1)
    memo: dict[tuple[int, int], np.ndarray] = {}

    def minor(row: int, cols: int) -> np.ndarray:
        if row == n:
            return const(1.0, shape)
        key = (row, cols)
        if key not in memo:
            acc = np.zeros(shape, dtype=complex)
            sign = 1
            for c in range(n):
                if cols >> c & 1:
                    if m[row][c].any():
                        acc += sign * mul(m[row][c], minor(row + 1, cols & ~(1 << c)))
                    sign = -sign
            memo[key] = acc
        return memo[key]

    return minor(0, (1 << n) - 1)
