"""Casimir invariants ``C = sum_j k^j F_j(x^j)`` for ``k`` in ``Ker(A)``."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charts import ChartFunction
from .exact_linalg import format_rational, kernel_basis
from .structure import SeparableStructure, numerical_rank

__all__ = [
    "CasimirFunction",
    "CasimirSet",
    "casimir_set",
    "evaluate_casimir",
    "casimir_gradient",
    "casimir_gradient_check",
    "casimir_jacobian",
]


@dataclass(frozen=True)
class CasimirFunction:
    k: tuple[Fraction, ...]
    charts: tuple[ChartFunction, ...]

    def __post_init__(self):
        if len(self.k) != len(self.charts):
            raise ValueError("coefficient vector and charts differ in length")
        object.__setattr__(self, "k", tuple(Fraction(v) for v in self.k))
        object.__setattr__(self, "charts", tuple(self.charts))

    def __call__(self, x: Sequence[float]) -> float:
        return sum(float(kj) * c.forward(float(v)) for kj, c, v in zip(self.k, self.charts, x) if kj)

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        return np.array([float(kj) / c.phi(float(v)) for kj, c, v in zip(self.k, self.charts, x)])

    def formula(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"x{i}" for i in range(1, len(self.k) + 1)]
        parts = []
        for kj, c, name in zip(self.k, self.charts, names):
            if kj == 0:
                continue
            f = c.formula(name)
            if f.startswith("-"):
                f = f"({f})"
            coef = format_rational(abs(kj))
            sign = "-" if kj < 0 else "+"
            parts.append((sign, f"{coef}*{f}"))
        if not parts:
            return "0"
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, term in parts[1:]:
            out += f" {sign} {term}"
        return out


@dataclass(frozen=True)
class CasimirSet:
    functions: tuple[CasimirFunction, ...]

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i: int) -> CasimirFunction:
        return self.functions[i]

    def values(self, x: Sequence[float]) -> np.ndarray:
        return np.array([C(x) for C in self.functions])


def casimir_set(s: SeparableStructure) -> CasimirSet:
    """One Casimir per vector of the normalized kernel basis of ``A``."""
    return CasimirSet(tuple(CasimirFunction(k, s.charts) for k in kernel_basis(s.A)))


def evaluate_casimir(C: CasimirFunction, x: Sequence[float], s: SeparableStructure | None = None) -> float:
    if s is not None:
        s.domain.require(x)
    return C(x)


def casimir_gradient(C: CasimirFunction, x: Sequence[float]) -> np.ndarray:
    return C.gradient(x)


def casimir_gradient_check(s: SeparableStructure, C: CasimirFunction, x: Sequence[float]) -> float:
    """``max |J(x) grad C(x)|``; vanishes exactly in exact arithmetic when ``A k = 0``."""
    J = s.matrix(x)
    return float(np.abs(J @ C.gradient(x)).max())


def casimir_jacobian(cs: CasimirSet, x: Sequence[float]) -> np.ndarray:
    if not len(cs):
        return np.zeros((0, len(x)))
    return np.vstack([C.gradient(x) for C in cs])


def independent(cs: CasimirSet, x: Sequence[float], rel_tol: float = 1e-10) -> bool:
    return numerical_rank(casimir_jacobian(cs, x), rel_tol) == len(cs)
