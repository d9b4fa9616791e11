"""Separable structure matrices ``J^ij = a^ij phi^i(x^i) phi^j(x^j)`` and Jacobi checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _kernels
from . import expr as ex
from .charts import ChartFunction
from .exact_linalg import CoefficientMatrix, DimensionError

__all__ = [
    "DomainError",
    "DomainMismatchError",
    "DomainBox",
    "SeparableStructure",
    "MatrixField",
    "VerificationReport",
    "build_separable",
    "eval_structure_matrix",
    "jacobi_residual_analytic",
    "jacobi_residual_fd",
    "numerical_rank",
    "verify_structure",
    "verify_field",
    "DEFAULT_FD_STEP",
    "DEFAULT_THRESHOLD",
    "SAMPLE_SPAN",
]

DEFAULT_FD_STEP = 1e-5
DEFAULT_THRESHOLD = 1e-8
# unbounded sides of the domain are truncated this far from the finite end
# (or to [-SAMPLE_SPAN, SAMPLE_SPAN]) when drawing sample points
SAMPLE_SPAN = 2.0


class DomainError(ValueError):
    pass


class DomainMismatchError(DomainError):
    pass


@dataclass(frozen=True)
class DomainBox:
    """Product of open intervals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in iv:
            if not lo < hi:
                raise DomainError(f"empty interval ({lo}, {hi})")
        object.__setattr__(self, "intervals", iv)

    @property
    def n(self) -> int:
        return len(self.intervals)

    def contains(self, x: Sequence[float]) -> bool:
        return len(x) == self.n and all(lo < v < hi for v, (lo, hi) in zip(x, self.intervals))

    def outside_coordinates(self, x: Sequence[float]) -> list[int]:
        return [i + 1 for i, (v, (lo, hi)) in enumerate(zip(x, self.intervals)) if not lo < v < hi]

    def require(self, x: Sequence[float]) -> None:
        if len(x) != self.n:
            raise DimensionError(f"point has {len(x)} coordinates, expected {self.n}")
        bad = self.outside_coordinates(x)
        if bad:
            raise DomainError(f"point {list(map(float, x))} outside domain in coordinate(s) {bad}")

    def sampling_box(self, span: float = SAMPLE_SPAN) -> "DomainBox":
        box = []
        for lo, hi in self.intervals:
            if math.isinf(lo) and math.isinf(hi):
                lo, hi = -span, span
            elif math.isinf(hi):
                hi = lo + span
            elif math.isinf(lo):
                lo = hi - span
            box.append((lo, hi))
        return DomainBox(tuple(box))

    def sample(self, count: int, rng: np.random.Generator, box: "DomainBox | None" = None) -> np.ndarray:
        """``count`` points drawn uniformly from ``box`` (default: :meth:`sampling_box`)."""
        box = box or self.sampling_box()
        for (lo, hi), (blo, bhi) in zip(self.intervals, box.intervals):
            if blo < lo or bhi > hi:
                raise DomainError(f"sampling box ({blo}, {bhi}) not inside domain ({lo}, {hi})")
        lows = np.array([lo for lo, _ in box.intervals])
        highs = np.array([hi for _, hi in box.intervals])
        pts = rng.uniform(lows, highs, size=(count, self.n))
        # uniform() is half-open; push exact lower endpoints inward
        bad = pts <= lows
        if np.any(bad):
            pts[bad] = np.nextafter(np.broadcast_to(lows, pts.shape)[bad], np.inf)
        return pts


@dataclass(frozen=True)
class SeparableStructure:
    A: CoefficientMatrix
    charts: tuple[ChartFunction, ...]
    domain: DomainBox
    name: str = ""
    _A: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "charts", tuple(self.charts))
        object.__setattr__(self, "_A", self.A.to_float())

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def A_float(self) -> np.ndarray:
        return self._A

    def phi(self, x: Sequence[float]) -> np.ndarray:
        return np.array([c._phi(float(v)) for c, v in zip(self.charts, x)], dtype=float)

    def dphi(self, x: Sequence[float]) -> np.ndarray:
        return np.array([c._dphi(float(v)) for c, v in zip(self.charts, x)], dtype=float)

    def phi_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([c.phi_array(X[:, i]) for i, c in enumerate(self.charts)])

    def dphi_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([c.dphi_array(X[:, i]) for i, c in enumerate(self.charts)])

    def matrix(self, x: Sequence[float]) -> np.ndarray:
        self.domain.require(x)
        p = self.phi(x)
        return self._A * np.outer(p, p)

    def as_field(self) -> "MatrixField":
        return MatrixField(self.n, self.matrix, self.domain)


@dataclass(frozen=True)
class MatrixField:
    """An arbitrary candidate structure matrix ``x -> J(x)``."""

    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    domain: DomainBox | None = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    @classmethod
    def from_entries(
        cls,
        n: int,
        entries: Mapping[tuple[int, int], "ex.Expr | str"],
        domain: DomainBox | None = None,
    ) -> "MatrixField":
        """Skew-complete the upper-triangle ``entries`` (1-based ``(i, j)``, ``i < j``)."""
        upper: dict[tuple[int, int], ex.Expr] = {}
        for (i, j), e in entries.items():
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise DimensionError(f"entry ({i},{j}) invalid for dimension {n}")
            if isinstance(e, str):
                e = ex.parse(e, n)
            if i > j:
                i, j, e = j, i, ex.neg(e)
            if (i, j) in upper:
                raise ValueError(f"entry ({i},{j}) given twice")
            upper[(i, j)] = e

        def evaluate(x):
            out = np.zeros((n, n))
            for (i, j), e in upper.items():
                v = ex.evaluate(e, x)
                out[i - 1, j - 1] = v
                out[j - 1, i - 1] = -v
            return out

        return cls(n, evaluate, domain or DomainBox(((-math.inf, math.inf),) * n))


def build_separable(
    A: CoefficientMatrix,
    charts: Sequence[ChartFunction],
    domain: DomainBox | Sequence[tuple[float, float]] | None = None,
    name: str = "",
) -> SeparableStructure:
    """Validate and assemble a separable structure.

    ``domain`` defaults to the product of the chart intervals and must lie
    inside them, so every ``phi^i`` is nonvanishing on it.
    """
    if not isinstance(A, CoefficientMatrix):
        A = CoefficientMatrix(A)
    charts = tuple(charts)
    if len(charts) != A.n:
        raise DimensionError(f"{len(charts)} charts given for a {A.n}x{A.n} matrix")
    if domain is None:
        domain = DomainBox(tuple(c.interval for c in charts))
    elif not isinstance(domain, DomainBox):
        domain = DomainBox(tuple(domain))
    if domain.n != A.n:
        raise DimensionError(f"domain has {domain.n} intervals, expected {A.n}")
    for i, ((lo, hi), c) in enumerate(zip(domain.intervals, charts), start=1):
        clo, chi = c.interval
        if lo < clo or hi > chi:
            raise DomainMismatchError(
                f"coordinate {i}: domain ({lo}, {hi}) leaves the interval ({clo}, {chi}) "
                f"on which the {c.family} chart is nonvanishing"
            )
    return SeparableStructure(A, charts, domain, name)


def eval_structure_matrix(s: SeparableStructure, x: Sequence[float]) -> np.ndarray:
    return s.matrix(x)


def _check_batch(s: SeparableStructure, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    for x in X:
        s.domain.require(x)
    return X


def structure_batch(s: SeparableStructure, X: np.ndarray) -> np.ndarray:
    X = _check_batch(s, X)
    return _kernels.structure_batch(s.A_float, s.phi_batch(X))


def jacobi_residual_analytic_batch(s: SeparableStructure, X: np.ndarray) -> np.ndarray:
    """Jacobi residual at each row of ``X`` using the exact derivative of ``J``."""
    X = _check_batch(s, X)
    phi = s.phi_batch(X)
    dphi = s.dphi_batch(X)
    J = _kernels.structure_batch(s.A_float, phi)
    dJ = _kernels.separable_derivative_batch(s.A_float, phi, dphi)
    return _kernels.jacobi_residual_batch(J, dJ)


def jacobi_residual_analytic(s: SeparableStructure, x: Sequence[float]) -> float:
    """Max over ``i<j<k`` of the Jacobi sum at ``x``; zero up to rounding for any separable ``s``."""
    return float(jacobi_residual_analytic_batch(s, np.asarray(x, dtype=float)[None, :])[0])


def _fd_derivative(f: MatrixField, x: np.ndarray, h: float) -> np.ndarray:
    n = f.n
    dJ = np.empty((n, n, n))
    for l in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[l] += h
        xm[l] -= h
        dJ[l] = (f(xp) - f(xm)) / (2.0 * h)
    return dJ


def jacobi_residual_fd(f: MatrixField | SeparableStructure, x: Sequence[float], h: float = DEFAULT_FD_STEP) -> float:
    """Jacobi residual with ``d_l J`` from central differences of step ``h``."""
    if isinstance(f, SeparableStructure):
        f = f.as_field()
    x = np.asarray(x, dtype=float)
    if h <= 0:
        raise ValueError("step h must be positive")
    if f.domain is not None:
        for l in range(f.n):
            for sgn in (-1.0, 1.0):
                y = x.copy()
                y[l] += sgn * h
                if not f.domain.contains(y):
                    raise DomainError(f"x is within h={h} of the domain boundary in coordinate {l + 1}")
    J = f(x)
    dJ = _fd_derivative(f, x, h)
    return float(_kernels.jacobi_residual_batch(J[None], dJ[None])[0])


def numerical_rank(M: np.ndarray, rel_tol: float = 1e-10) -> int:
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


@dataclass
class VerificationReport:
    samples: int
    max_skew_defect: float
    max_residual_analytic: float | None
    max_residual_fd: float
    threshold: float
    step: float
    rank_ok: bool | None = None
    failures: int = 0

    @property
    def passed(self) -> bool:
        primary = self.max_residual_analytic if self.max_residual_analytic is not None else self.max_residual_fd
        return primary <= self.threshold and self.max_skew_defect <= self.threshold and self.rank_ok is not False


def _fd_box(domain: DomainBox, h: float) -> DomainBox:
    box = domain.sampling_box()
    margin = 2 * h
    return DomainBox(tuple(
        (max(blo, lo + margin) if math.isfinite(lo) else blo, min(bhi, hi - margin) if math.isfinite(hi) else bhi)
        for (blo, bhi), (lo, hi) in zip(box.intervals, domain.intervals)
    ))


def verify_structure(
    s: SeparableStructure,
    samples: int = 100,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    h: float = DEFAULT_FD_STEP,
    box: DomainBox | None = None,
    extra_points: Sequence[Sequence[float]] = (),
) -> VerificationReport:
    """Skew, Jacobi (analytic and finite-difference) and rank checks at seeded sample points.

    Passing is necessary, not sufficient: the identities are only tested
    pointwise.
    """
    rng = np.random.default_rng(seed)
    X = s.domain.sample(samples, rng, box or _fd_box(s.domain, h))
    if len(extra_points):
        X = np.vstack([X, np.asarray(extra_points, dtype=float)])
    X = _check_batch(s, X)
    J = structure_batch(s, X)
    skew = float(np.abs(J + np.transpose(J, (0, 2, 1))).max()) if len(X) else 0.0
    analytic = jacobi_residual_analytic_batch(s, X)
    fd = np.array([jacobi_residual_fd(s, x, h) for x in X])
    r = s.A.rank()
    rank_ok = all(numerical_rank(Jp) == r for Jp in J)
    failures = int(np.sum(analytic > threshold))
    return VerificationReport(
        samples=len(X),
        max_skew_defect=skew,
        max_residual_analytic=float(analytic.max()) if len(X) else 0.0,
        max_residual_fd=float(fd.max()) if len(X) else 0.0,
        threshold=threshold,
        step=h,
        rank_ok=rank_ok,
        failures=failures,
    )


def verify_field(
    f: MatrixField,
    samples: int = 100,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    h: float = DEFAULT_FD_STEP,
    box: DomainBox | None = None,
    extra_points: Sequence[Sequence[float]] = (),
) -> VerificationReport:
    domain = f.domain or DomainBox(((-math.inf, math.inf),) * f.n)
    rng = np.random.default_rng(seed)
    X = domain.sample(samples, rng, box or _fd_box(domain, h))
    if len(extra_points):
        X = np.vstack([X, np.asarray(extra_points, dtype=float)])
    skew = 0.0
    fd = []
    for x in X:
        M = f(x)
        skew = max(skew, float(np.abs(M + M.T).max()))
        fd.append(jacobi_residual_fd(f, x, h))
    fd = np.array(fd)
    return VerificationReport(
        samples=len(X),
        max_skew_defect=skew,
        max_residual_analytic=None,
        max_residual_fd=float(fd.max()) if len(X) else 0.0,
        threshold=threshold,
        step=h,
        failures=int(np.sum(fd > threshold)),
    )
