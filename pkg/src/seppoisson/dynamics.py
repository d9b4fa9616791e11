"""Poisson dynamics ``dx/dt = J(x) grad H(x)`` with fixed-step RK4 and drift monitoring."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

import numpy as np

from . import expr as ex
from .casimir import CasimirSet, casimir_set
from .darboux import DarbouxRangeError, DarbouxTransform
from .exact_linalg import DimensionError
from .structure import DomainError, SeparableStructure

__all__ = [
    "PoissonSystem",
    "Trajectory",
    "ConservationReport",
    "IntegrationError",
    "DomainExitError",
    "poisson_system",
    "vector_field",
    "rk4",
    "integrate",
    "conservation_report",
    "darboux_consistency_check",
    "write_trajectory_csv",
    "FD_GRADIENT_STEP",
]

FD_GRADIENT_STEP = 1e-6

COMPLETED = "completed"
DOMAIN_EXIT = "domain_exit"


class IntegrationError(ArithmeticError):
    def __init__(self, message: str, partial: "Trajectory | None" = None):
        self.partial = partial
        super().__init__(message)


class DomainExitError(DomainError):
    pass


@dataclass(frozen=True)
class PoissonSystem:
    structure: SeparableStructure
    hamiltonian: ex.Expr
    gradient: tuple[ex.Expr, ...]

    @property
    def n(self) -> int:
        return self.structure.n

    def H(self, x: Sequence[float]) -> float:
        return ex.evaluate(self.hamiltonian, x)


def poisson_system(s: SeparableStructure, hamiltonian: "ex.Expr | str") -> PoissonSystem:
    if isinstance(hamiltonian, str):
        hamiltonian = ex.parse(hamiltonian, s.n)
    used = ex.variables(hamiltonian)
    if used and max(used) > s.n:
        raise DimensionError(f"Hamiltonian uses x{max(used)} but the structure has dimension {s.n}")
    grad = tuple(ex.differentiate(hamiltonian, j) for j in range(1, s.n + 1))
    return PoissonSystem(s, hamiltonian, grad)


def _field(p: PoissonSystem, x: np.ndarray) -> np.ndarray:
    phi = p.structure.phi(x)
    g = np.array([ex.evaluate(gj, x) for gj in p.gradient])
    # J grad H = Phi A Phi grad H with Phi = diag(phi)
    return phi * (p.structure.A_float @ (phi * g))


def vector_field(p: PoissonSystem, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p.structure.domain.require(x)
    return _field(p, x)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step: float
    status: str = COMPLETED
    message: str = ""

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def __len__(self) -> int:
        return len(self.times)


def rk4(
    f: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    t_end: float,
    dt: float,
    inside: Callable[[np.ndarray], bool],
) -> Trajectory:
    """Classical fixed-step RK4; stops with ``status="domain_exit"`` when a stage leaves the domain."""
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    x = np.array(x0, dtype=float)
    n_steps = max(1, math.ceil(t_end / dt - 1e-9))
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, x.size))
    times[0] = 0.0
    states[0] = x
    status, message = COMPLETED, ""
    k_done = 0
    for k in range(n_steps):
        t = k * dt
        h = min(dt, t_end - t)
        stages_ok = True
        k1 = f(x)
        x2 = x + 0.5 * h * k1
        if inside(x2):
            k2 = f(x2)
            x3 = x + 0.5 * h * k2
            if inside(x3):
                k3 = f(x3)
                x4 = x + h * k3
                if inside(x4):
                    k4 = f(x4)
                    x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                    stages_ok = inside(x_new)
                else:
                    stages_ok = False
            else:
                stages_ok = False
        else:
            stages_ok = False
        if not stages_ok:
            status = DOMAIN_EXIT
            message = f"an RK4 stage left the domain during step {k + 1} (t = {t:.17g})"
            break
        if not np.all(np.isfinite(x_new)):
            partial = Trajectory(times[: k + 1].copy(), states[: k + 1].copy(), dt, DOMAIN_EXIT, "non-finite state")
            raise IntegrationError(f"non-finite state at step {k + 1}", partial)
        x = x_new
        k_done = k + 1
        times[k_done] = min((k + 1) * dt, t_end)
        states[k_done] = x
    return Trajectory(times[: k_done + 1].copy(), states[: k_done + 1].copy(), dt, status, message)


def integrate(p: PoissonSystem, x0: Sequence[float], t_end: float, dt: float) -> Trajectory:
    x0 = np.asarray(x0, dtype=float)
    domain = p.structure.domain
    if not domain.contains(x0):
        raise DomainExitError(f"initial point {x0.tolist()} is outside the domain")
    return rk4(lambda x: _field(p, x), x0, t_end, dt, domain.contains)


@dataclass
class ConservationReport:
    names: list[str]
    drifts: list[float]
    series: np.ndarray = field(repr=False)  # (steps, invariants)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.drifts))

    def format(self) -> str:
        width = max((len(n) for n in self.names), default=1)
        return "\n".join(f"{name:<{width}}  max drift {d:.6e}" for name, d in zip(self.names, self.drifts))


def invariant_series(p: PoissonSystem, traj: Trajectory, casimirs: CasimirSet | None = None) -> tuple[list[str], np.ndarray]:
    cs = casimir_set(p.structure) if casimirs is None else casimirs
    names = ["H"] + [f"C_{i}" for i in range(1, len(cs) + 1)]
    rows = [[p.H(x)] + [C(x) for C in cs] for x in traj.states]
    return names, np.array(rows, dtype=float).reshape(len(traj.states), len(names))


def conservation_report(p: PoissonSystem, traj: Trajectory, casimirs: CasimirSet | None = None) -> ConservationReport:
    """Max absolute drift ``|Q(x_k) - Q(x_0)|`` of ``H`` and each Casimir."""
    names, series = invariant_series(p, traj, casimirs)
    drifts = np.abs(series - series[0]).max(axis=0) if len(series) else np.zeros(len(names))
    return ConservationReport(names, [float(d) for d in drifts], series)


def darboux_consistency_check(
    p: PoissonSystem,
    t: DarbouxTransform,
    x0: Sequence[float],
    t_end: float,
    dt: float,
    fd_step: float = FD_GRADIENT_STEP,
) -> float:
    """Max distance between the x-flow mapped to z and the flow integrated directly in z.

    In z the structure is the constant canonical matrix and the Hamiltonian is
    ``H(x(z))``, differentiated by central differences. When the transform is
    the identity the composed Hamiltonian is ``H`` itself and its symbolic
    gradient is used.
    """
    x_traj = integrate(p, x0, t_end, dt)
    if not x_traj.completed:
        raise DomainExitError(f"x-space integration left the domain: {x_traj.message}")
    z_from_x = np.array([t.forward(x) for x in x_traj.states])

    C = t.canonical_float
    if t.is_identity:
        def grad(z):
            return np.array([ex.evaluate(gj, z) for gj in p.gradient])
    else:
        def H_hat(z):
            return p.H(t.inverse(z))

        def grad(z):
            g = np.empty(z.size)
            for i in range(z.size):
                zp = z.copy()
                zm = z.copy()
                zp[i] += fd_step
                zm[i] -= fd_step
                g[i] = (H_hat(zp) - H_hat(zm)) / (2.0 * fd_step)
            return g

    def in_image(z):
        try:
            t.inverse(z)
        except DarbouxRangeError:
            return False
        return True

    def f(z):
        try:
            return C @ grad(z)
        except DarbouxRangeError:
            return np.full(z.size, np.nan)

    z_traj = rk4(f, z_from_x[0], t_end, dt, in_image)
    if not z_traj.completed:
        raise DomainExitError(f"z-space integration left the image of the domain: {z_traj.message}")
    return float(np.linalg.norm(z_traj.states - z_from_x, axis=1).max())


def write_trajectory_csv(
    out: TextIO | str,
    p: PoissonSystem,
    traj: Trajectory,
    invariants: bool = True,
    casimirs: CasimirSet | None = None,
) -> None:
    """CSV ``t,x1,...,xn[,H,C_1,...,C_m]`` with 17 significant digits."""
    n = traj.states.shape[1] if traj.states.ndim == 2 else p.n
    header = ["t"] + [f"x{i}" for i in range(1, n + 1)]
    inv = None
    if invariants:
        names, inv = invariant_series(p, traj, casimirs)
        header += names
    if isinstance(out, str):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            _write_rows(fh, header, traj, inv)
    else:
        _write_rows(out, header, traj, inv)


def _write_rows(fh: TextIO, header, traj: Trajectory, inv) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for k, (t, x) in enumerate(zip(traj.times, traj.states)):
        row = [t, *x]
        if inv is not None:
            row += list(inv[k])
        w.writerow([format(float(v), ".17g") for v in row])


def trajectory_csv_text(p: PoissonSystem, traj: Trajectory, invariants: bool = True) -> str:
    buf = io.StringIO()
    write_trajectory_csv(buf, p, traj, invariants)
    return buf.getvalue()
