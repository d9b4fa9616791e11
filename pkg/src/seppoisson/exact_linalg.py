"""Exact rational linear algebra for constant skew-symmetric coefficient matrices.

Everything here works over :class:`fractions.Fraction`, so results are exact.
Two kernels matter downstream: the nullspace of ``A`` (one Casimir per basis
vector) and a congruence ``P A P^T`` bringing ``A`` to symplectic block form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "SkewSymmetryError",
    "DimensionError",
    "CoefficientMatrix",
    "KernelBasis",
    "CongruenceResult",
    "parse_rational",
    "format_rational",
    "kernel_basis",
    "skew_canonical_congruence",
    "congruence_apply",
    "canonical_form",
    "matmul",
    "transpose",
    "identity",
    "determinant",
    "inverse",
    "rank",
]


class SkewSymmetryError(ValueError):
    """Raised when a coefficient matrix is not skew-symmetric.

    ``offending`` holds the 1-based ``(i, j)`` pairs with ``a_ij != -a_ji``.
    """

    def __init__(self, offending: Sequence[tuple[int, int]], context: str = ""):
        self.offending = list(offending)
        pairs = ", ".join(f"({i},{j})" for i, j in self.offending[:10])
        if len(self.offending) > 10:
            pairs += ", ..."
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}matrix is not skew-symmetric; offending entries {pairs}")


class DimensionError(ValueError):
    pass


_MINUS_SIGNS = ("−", "–")


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"``, ``"p"``, a decimal string or an int into an exact Fraction.

    Floats are rejected: they are almost never the rational the user meant.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        for m in _MINUS_SIGNS:
            text = text.replace(m, "-")
        if text.lower() in ("inf", "-inf", "+inf", "nan", "infinity", "-infinity"):
            raise ValueError(f"not a finite rational: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {value!r}") from exc
    raise TypeError(f"cannot interpret {type(value).__name__} as an exact rational")


def format_rational(q: Fraction) -> str:
    return str(q)


Matrix = tuple[tuple[Fraction, ...], ...]


def _as_matrix(rows: Iterable[Iterable]) -> Matrix:
    return tuple(tuple(parse_rational(v) for v in row) for row in rows)


def _check_square(m: Matrix) -> int:
    n = len(m)
    for row in m:
        if len(row) != n:
            raise DimensionError(f"matrix is not square: {n} rows but a row of length {len(row)}")
    return n


@dataclass(frozen=True)
class CoefficientMatrix:
    """Constant skew-symmetric matrix ``A`` with exact rational entries."""

    entries: Matrix

    def __init__(self, rows: Iterable[Iterable], context: str = ""):
        m = _as_matrix(rows)
        n = _check_square(m)
        if n == 0:
            raise DimensionError("dimension must be positive")
        bad = [
            (i + 1, j + 1)
            for i in range(n)
            for j in range(i, n)
            if m[i][j] != -m[j][i]
        ]
        if bad:
            raise SkewSymmetryError(bad, context)
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i][j]

    def to_float(self):
        import numpy as np

        return np.array([[float(v) for v in row] for row in self.entries], dtype=float)

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(v) for v in row] for row in self.entries]

    def rank(self) -> int:
        return rank(self.entries)


@dataclass(frozen=True)
class KernelBasis:
    vectors: tuple[tuple[Fraction, ...], ...]

    @property
    def m(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class CongruenceResult:
    P: Matrix
    rank: int
    canonical: Matrix


# -- small exact helpers -----------------------------------------------------

def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def transpose(m: Sequence[Sequence[Fraction]]) -> Matrix:
    return tuple(zip(*m)) if m else ()


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Matrix:
    if a and len(a[0]) != len(b):
        raise DimensionError(f"cannot multiply {len(a)}x{len(a[0])} by {len(b)}x{len(b[0]) if b else 0}")
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def _row_echelon(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; pivot is the first nonzero entry scanning down each column."""
    m = [list(r) for r in rows]
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [vi - f * vr for vi, vr in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(m: Sequence[Sequence[Fraction]]) -> int:
    if not m:
        return 0
    return len(_row_echelon([list(r) for r in m])[1])


def determinant(m: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [list(map(Fraction, r)) for r in m]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] / a[c][c]
                a[i] = [vi - f * vc for vi, vc in zip(a[i], a[c])]
    return det


def inverse(m: Sequence[Sequence[Fraction]]) -> Matrix:
    n = len(m)
    aug = [list(map(Fraction, row)) + list(e) for row, e in zip(m, identity(n))]
    red, pivots = _row_echelon(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return tuple(tuple(row[n:]) for row in red)


def _normalize_integer(v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    lcm = 1
    for q in v:
        lcm = lcm * q.denominator // math.gcd(lcm, q.denominator)
    ints = [int(q * lcm) for q in v]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g == 0:
        return tuple(Fraction(0) for _ in v)
    lead = next(x for x in ints if x != 0)
    sign = 1 if lead > 0 else -1
    return tuple(Fraction(sign * x // g) for x in ints)


# -- public operations -----------------------------------------------------------

def kernel_basis(A: CoefficientMatrix) -> KernelBasis:
    """Basis of ``Ker(A)``, one vector per free column of the reduced echelon form.

    Each vector is scaled to coprime integers with a positive leading entry, so
    the output is a deterministic function of ``A``.
    """
    n = A.n
    red, pivots = _row_echelon([list(r) for r in A.entries])
    free = [c for c in range(n) if c not in pivots]
    vectors = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        vectors.append(_normalize_integer(v))
    return KernelBasis(tuple(vectors))


def canonical_form(n: int, r: int) -> Matrix:
    """``diag(D, ..., D, 0, ..., 0)`` with ``r/2`` blocks ``D = [[0, 1], [-1, 0]]``."""
    if r % 2 or r > n or r < 0:
        raise ValueError(f"invalid rank {r} for dimension {n}")
    m = [[Fraction(0)] * n for _ in range(n)]
    for b in range(0, r, 2):
        m[b][b + 1] = Fraction(1)
        m[b + 1][b] = Fraction(-1)
    return tuple(tuple(row) for row in m)


def skew_canonical_congruence(A: CoefficientMatrix) -> CongruenceResult:
    """Exact ``P`` with ``P A P^T = diag(D_1, ..., D_{r/2}, 0, ..., 0)``.

    Symmetric-pair elimination: take the first nonzero ``a_ij`` of the trailing
    block (row-major scan), move it to position ``(s, s+1)``, scale it to 1,
    clear the rest of rows/columns ``s`` and ``s+1`` with congruence operations
    and continue on the trailing block.

    The trailing ``n - r`` rows of ``P`` are replaced by the normalized kernel
    basis: every basis of ``Ker(A)`` leaves ``P A P^T`` unchanged there, and
    with this choice the last Darboux coordinates are exactly the Casimirs.
    """
    n = A.n
    M = [list(r) for r in A.entries]
    P = [list(r) for r in identity(n)]

    def swap(a: int, b: int) -> None:
        if a == b:
            return
        M[a], M[b] = M[b], M[a]
        for row in M:
            row[a], row[b] = row[b], row[a]
        P[a], P[b] = P[b], P[a]

    def scale(a: int, c: Fraction) -> None:
        M[a] = [v * c for v in M[a]]
        for row in M:
            row[a] *= c
        P[a] = [v * c for v in P[a]]

    def add(target: int, src: int, c: Fraction) -> None:
        # e_target <- e_target + c * e_src, applied as E M E^T and E P
        M[target] = [vt + c * vs for vt, vs in zip(M[target], M[src])]
        for row in M:
            row[target] += c * row[src]
        P[target] = [vt + c * vs for vt, vs in zip(P[target], P[src])]

    s = 0
    while s + 1 < n:
        pivot = next(
            ((i, j) for i in range(s, n) for j in range(s, n) if M[i][j] != 0),
            None,
        )
        if pivot is None:
            break
        i, j = pivot
        swap(s, i)
        # j may have been the column we just moved
        j = i if j == s else j
        swap(s + 1, j)
        scale(s, 1 / M[s][s + 1])
        for k in range(s + 2, n):
            beta = M[k][s]
            alpha = -M[k][s + 1]
            if alpha:
                add(k, s, alpha)
            if beta:
                add(k, s + 1, beta)
        s += 2
    r = s
    basis = kernel_basis(A)
    for row, v in zip(range(r, n), basis.vectors):
        P[row] = list(v)
    P_t = tuple(tuple(row) for row in P)
    canonical = canonical_form(n, r)
    if congruence_apply(P_t, A).entries != canonical:
        raise ArithmeticError("congruence elimination failed to reach canonical form")
    return CongruenceResult(P=P_t, rank=r, canonical=canonical)


def congruence_apply(P: Sequence[Sequence], A: CoefficientMatrix) -> CoefficientMatrix:
    Pm = _as_matrix(P)
    if len(Pm) != A.n or any(len(row) != A.n for row in Pm):
        raise DimensionError(f"P must be {A.n}x{A.n} to act on A")
    return CoefficientMatrix(matmul(matmul(Pm, A.entries), transpose(Pm)))
