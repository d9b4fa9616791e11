"""Global Darboux reduction ``z = P F(x)`` of a separable structure.

The chart step ``y^i = F_i(x^i)`` turns ``J`` into the constant matrix ``A``;
the exact congruence ``P`` then brings ``A`` to ``diag(D, ..., D, 0, ..., 0)``.
Both steps are defined on the whole domain, so the reduction is global.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .charts import ChartError
from .exact_linalg import Matrix, determinant, identity, inverse, skew_canonical_congruence
from .structure import DomainError, SeparableStructure

__all__ = [
    "DarbouxTransform",
    "DarbouxRangeError",
    "build_darboux",
    "forward_map",
    "inverse_map",
    "transformed_structure_check",
]


class DarbouxRangeError(DomainError):
    def __init__(self, message: str, coordinate: int):
        self.coordinate = coordinate
        super().__init__(message)


def _to_float(m: Matrix) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in m], dtype=float).reshape(len(m), len(m))


@dataclass(frozen=True)
class DarbouxTransform:
    structure: SeparableStructure
    P: Matrix
    rank: int
    canonical: Matrix
    P_inv: Matrix = field(repr=False)
    _P: np.ndarray = field(init=False, repr=False, compare=False)
    _P_inv: np.ndarray = field(init=False, repr=False, compare=False)
    _canonical: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_P", _to_float(self.P))
        object.__setattr__(self, "_P_inv", _to_float(self.P_inv))
        object.__setattr__(self, "_canonical", _to_float(self.canonical))

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def P_float(self) -> np.ndarray:
        return self._P

    @property
    def canonical_float(self) -> np.ndarray:
        return self._canonical

    @property
    def is_identity(self) -> bool:
        """True when both steps are the identity map (``P = I`` and every ``F(x) = x``)."""
        return self.P == identity(self.n) and all(
            c.family == "constant" and c.c == 1 for c in self.structure.charts
        )

    def chart_values(self, x: Sequence[float]) -> np.ndarray:
        return np.array([c.forward(float(v)) for c, v in zip(self.structure.charts, x)])

    def forward(self, x: Sequence[float]) -> np.ndarray:
        self.structure.domain.require(x)
        return self._P @ self.chart_values(x)

    def inverse(self, z: Sequence[float]) -> np.ndarray:
        y = self._P_inv @ np.asarray(z, dtype=float)
        x = np.empty_like(y)
        for i, (c, yi, (lo, hi)) in enumerate(zip(self.structure.charts, y, self.structure.domain.intervals)):
            try:
                xi = c.inverse(float(yi))
            except ChartError as exc:
                raise DarbouxRangeError(f"z not in image of the Darboux map: coordinate {i + 1}: {exc}", i + 1) from exc
            if not lo < xi < hi:
                raise DarbouxRangeError(
                    f"z not in image of the Darboux map: coordinate {i + 1} maps to {xi!r} outside ({lo}, {hi})",
                    i + 1,
                )
            x[i] = xi
        return x

    def jacobian(self, x: Sequence[float]) -> np.ndarray:
        """``dz/dx = P diag(1/phi)``, from the closed-form ``F' = 1/phi``."""
        return self._P / self.structure.phi(x)[None, :]

    def chart_formulas(self, names: Sequence[str] | None = None) -> list[str]:
        names = names or [f"x{i}" for i in range(1, self.n + 1)]
        return [f"y{i} = {c.formula(name)}" for i, (c, name) in enumerate(zip(self.structure.charts, names), start=1)]


def build_darboux(s: SeparableStructure) -> DarbouxTransform:
    cong = skew_canonical_congruence(s.A)
    if determinant(cong.P) == 0:
        raise ArithmeticError("congruence matrix is singular")
    return DarbouxTransform(
        structure=s,
        P=cong.P,
        rank=cong.rank,
        canonical=cong.canonical,
        P_inv=inverse(cong.P),
    )


def forward_map(t: DarbouxTransform, x: Sequence[float]) -> np.ndarray:
    return t.forward(x)


def inverse_map(t: DarbouxTransform, z: Sequence[float]) -> np.ndarray:
    return t.inverse(z)


def transformed_structure_batch(t: DarbouxTransform, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    for x in X:
        t.structure.domain.require(x)
    phi = t.structure.phi_batch(X)
    return _kernels.transformed_defect_batch(t.P_float, t.structure.A_float, phi, t.canonical_float)


def transformed_structure_check(t: DarbouxTransform, x: Sequence[float]) -> float:
    """``max |Dz J Dz^T - canonical|`` at ``x`` via the transformation law of ``J``."""
    return float(transformed_structure_batch(t, np.asarray(x, dtype=float)[None, :])[0])


def canonical_entries_equal(t: DarbouxTransform) -> bool:
    from .exact_linalg import congruence_apply

    return congruence_apply(t.P, t.structure.A).entries == t.canonical


def det_P(t: DarbouxTransform) -> Fraction:
    return determinant(t.P)
