"""Single-variable chart factors ``phi(x)`` and their Darboux charts ``F = ∫ dx / phi``.

Every family fixes one antiderivative (integration constant) so Casimir values
and Darboux coordinates are reproducible:

==============  ========================  ===================  ==================
family          phi(x)                    F(x)                 default interval
==============  ========================  ===================  ==================
constant c      c                         x / c                (-inf, inf)
power k         x^k                       ln x  or             (0, inf)
                                          x^(1-k) / (1-k)
affine a, b     a x + b                   ln|a x + b| / a      (-b/a, inf)
logistic        x (1 - x)                 ln(x / (1 - x))      (0, 1)
exp lambda      exp(lambda x)             -exp(-lambda x)/l    (-inf, inf)
custom expr     expr in ``x``             quadrature           as declared
==============  ========================  ===================  ==================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as ex
from .exact_linalg import format_rational, parse_rational

__all__ = [
    "ChartError",
    "ChartDomainError",
    "ChartRangeError",
    "QuadratureError",
    "ChartFunction",
    "Constant",
    "Power",
    "Affine",
    "Logistic",
    "Exponential",
    "Custom",
    "chart_from_descriptor",
    "eval_phi",
    "eval_phi_prime",
    "chart_forward",
    "chart_inverse",
    "adaptive_simpson",
]

INF = math.inf


class ChartError(ValueError):
    pass


class ChartDomainError(ChartError):
    pass


class ChartRangeError(ChartError):
    pass


class QuadratureError(ChartError):
    pass


def _check_interval(interval) -> tuple[float, float]:
    lo, hi = (float(v) for v in interval)
    if math.isnan(lo) or math.isnan(hi) or not lo < hi:
        raise ChartError(f"interval ({lo}, {hi}) is empty")
    return lo, hi


@dataclass(frozen=True)
class ChartFunction:
    """Base class; subclasses implement the closed forms of one family."""

    interval: tuple[float, float] = field(default=None, kw_only=True)  # type: ignore[assignment]
    family = "abstract"

    def __post_init__(self):
        natural = self.natural_interval()
        if self.interval is None:
            object.__setattr__(self, "interval", natural)
            return
        lo, hi = _check_interval(self.interval)
        if lo < natural[0] or hi > natural[1]:
            raise ChartDomainError(
                f"{self.family} chart: interval ({lo}, {hi}) leaves the nonvanishing "
                f"interval ({natural[0]}, {natural[1]})"
            )
        object.__setattr__(self, "interval", (lo, hi))

    # family hooks ---------------------------------------------------------
    def natural_interval(self) -> tuple[float, float]:
        raise NotImplementedError

    def _phi(self, x):
        raise NotImplementedError

    def _dphi(self, x):
        raise NotImplementedError

    def _forward(self, x: float) -> float:
        raise NotImplementedError

    def _inverse(self, y: float) -> float:
        raise NotImplementedError

    def _forward_limit(self, endpoint: float) -> float:
        """Limit of ``F`` at an interval endpoint (may be infinite)."""
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return float(self._forward(np.float64(endpoint)))

    def formula(self, name: str = "x") -> str:
        raise NotImplementedError

    def phi_formula(self, name: str = "x") -> str:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    # public API -----------------------------------------------------------
    def contains(self, x: float) -> bool:
        lo, hi = self.interval
        return lo < x < hi

    def _require(self, x: float) -> None:
        if not self.contains(x):
            lo, hi = self.interval
            raise ChartDomainError(f"x = {x!r} outside chart interval ({lo}, {hi})")

    def phi(self, x: float) -> float:
        self._require(x)
        return float(self._phi(x))

    def dphi(self, x: float) -> float:
        self._require(x)
        return float(self._dphi(x))

    def phi_array(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self._phi(np.asarray(xs, dtype=float)), dtype=float) * np.ones_like(xs, dtype=float)

    def dphi_array(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self._dphi(np.asarray(xs, dtype=float)), dtype=float) * np.ones_like(xs, dtype=float)

    def forward(self, x: float) -> float:
        self._require(x)
        return float(self._forward(x))

    def range(self) -> tuple[float, float]:
        """Image ``F(interval)`` as an ordered open interval."""
        a = self._forward_limit(self.interval[0])
        b = self._forward_limit(self.interval[1])
        return (a, b) if a <= b else (b, a)

    def inverse(self, y: float) -> float:
        lo, hi = self.range()
        if not lo < y < hi:
            raise ChartRangeError(f"y = {y!r} outside chart range ({lo}, {hi})")
        x = float(self._inverse(y))
        # clamp rounding at the boundary back into the open interval
        a, b = self.interval
        if not a < x < b:
            x = min(max(x, math.nextafter(a, INF)), math.nextafter(b, -INF))
        return x

    def descriptor(self) -> dict:
        d = {"family": self.family, **self.params()}
        if self.interval != self.natural_interval():
            d["interval"] = [_bound_to_json(v) for v in self.interval]
        return d


def _bound_to_json(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if float(v).is_integer():
        return int(v)
    return v


def _fmt(q: Fraction) -> str:
    s = format_rational(q)
    return f"({s})" if "/" in s or q < 0 else s


@dataclass(frozen=True)
class Constant(ChartFunction):
    c: Fraction = Fraction(1)
    family = "constant"

    def __post_init__(self):
        object.__setattr__(self, "c", parse_rational(self.c))
        if self.c == 0:
            raise ChartError("constant chart requires c != 0")
        super().__post_init__()

    def natural_interval(self):
        return (-INF, INF)

    def _phi(self, x):
        return float(self.c) + 0.0 * x

    def _dphi(self, x):
        return 0.0 * x

    def _forward(self, x):
        return x / float(self.c)

    def _inverse(self, y):
        return y * float(self.c)

    def formula(self, name="x"):
        return name if self.c == 1 else f"{name}/{_fmt(self.c)}"

    def phi_formula(self, name="x"):
        return format_rational(self.c)

    def params(self):
        return {"c": format_rational(self.c)}


@dataclass(frozen=True)
class Power(ChartFunction):
    k: int = 1
    family = "power"

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ChartError(f"power chart requires a positive integer k, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        super().__post_init__()

    def natural_interval(self):
        return (0.0, INF)

    def _phi(self, x):
        return x ** self.k

    def _dphi(self, x):
        return self.k * x ** (self.k - 1)

    def _forward(self, x):
        if self.k == 1:
            return np.log(x)
        return x ** (1 - self.k) / (1 - self.k)

    def _inverse(self, y):
        if self.k == 1:
            return math.exp(y)
        return ((1 - self.k) * y) ** (1.0 / (1 - self.k))

    def formula(self, name="x"):
        if self.k == 1:
            return f"ln({name})"
        if self.k == 2:
            return f"-1/{name}"
        return f"-1/({self.k - 1}*{name}^{self.k - 1})"

    def phi_formula(self, name="x"):
        return name if self.k == 1 else f"{name}^{self.k}"

    def params(self):
        return {"k": self.k}


@dataclass(frozen=True)
class Affine(ChartFunction):
    a: Fraction = Fraction(1)
    b: Fraction = Fraction(0)
    family = "affine"

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rational(self.a))
        object.__setattr__(self, "b", parse_rational(self.b))
        if self.a == 0:
            raise ChartError("affine chart requires a != 0 (use the constant family)")
        super().__post_init__()

    @property
    def root(self) -> float:
        return float(-self.b / self.a)

    def natural_interval(self):
        # the component of R \ {-b/a} the declared interval lies in
        if self.interval is not None and float(self.interval[1]) <= self.root:
            return (-INF, self.root)
        return (self.root, INF)

    def _sign(self) -> float:
        # sign of a*x + b on the interval
        on_right = self.interval[0] >= self.root
        return 1.0 if (self.a > 0) == on_right else -1.0

    def _phi(self, x):
        return float(self.a) * x + float(self.b)

    def _dphi(self, x):
        return float(self.a) + 0.0 * x

    def _forward(self, x):
        return np.log(np.abs(float(self.a) * x + float(self.b))) / float(self.a)

    def _inverse(self, y):
        a = float(self.a)
        return (self._sign() * math.exp(a * y) - float(self.b)) / a

    def formula(self, name="x"):
        return f"ln|{_fmt(self.a)}*{name} + {_fmt(self.b)}|/{_fmt(self.a)}"

    def phi_formula(self, name="x"):
        return f"{_fmt(self.a)}*{name} + {_fmt(self.b)}"

    def params(self):
        return {"a": format_rational(self.a), "b": format_rational(self.b)}


def _sigmoid(y: float) -> float:
    if y >= 0:
        return 1.0 / (1.0 + math.exp(-y))
    e = math.exp(y)
    return e / (1.0 + e)


@dataclass(frozen=True)
class Logistic(ChartFunction):
    family = "logistic"

    def natural_interval(self):
        return (0.0, 1.0)

    def _phi(self, x):
        return x * (1.0 - x)

    def _dphi(self, x):
        return 1.0 - 2.0 * x

    def _forward(self, x):
        return np.log(x) - np.log1p(-x)

    def _inverse(self, y):
        return _sigmoid(y)

    def formula(self, name="x"):
        return f"ln({name}/(1 - {name}))"

    def phi_formula(self, name="x"):
        return f"{name}*(1 - {name})"


@dataclass(frozen=True)
class Exponential(ChartFunction):
    lam: Fraction = Fraction(1)
    family = "exp"

    def __post_init__(self):
        object.__setattr__(self, "lam", parse_rational(self.lam))
        if self.lam == 0:
            raise ChartError("exp chart requires lambda != 0")
        super().__post_init__()

    def natural_interval(self):
        return (-INF, INF)

    def _phi(self, x):
        return np.exp(float(self.lam) * x)

    def _dphi(self, x):
        lam = float(self.lam)
        return lam * np.exp(lam * x)

    def _forward(self, x):
        lam = float(self.lam)
        return -np.exp(-lam * x) / lam

    def _inverse(self, y):
        lam = float(self.lam)
        return -math.log(-lam * y) / lam

    def formula(self, name="x"):
        lam = _fmt(self.lam)
        return f"-exp(-{lam}*{name})/{lam}"

    def phi_formula(self, name="x"):
        return f"exp({_fmt(self.lam)}*{name})"

    def params(self):
        return {"lambda": format_rational(self.lam)}


# -- custom charts ----------------------------------------------------------------

def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]`` to absolute ``tol``."""
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # explicit stack: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps or abs(m - a) <= 4 * math.ulp(m):
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not reach tolerance on [{a}, {b}]")
        stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
        stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    if not math.isfinite(total):
        raise QuadratureError("quadrature produced a non-finite value")
    return total


_GRID = 1024
_KNOT_STEP = 0.5
_MAX_UNIFORM = 4000
_MAX_HALVINGS = 50


@dataclass(frozen=True)
class Custom(ChartFunction):
    """Chart given by an expression in the single variable ``x``.

    ``F`` is adaptive Simpson quadrature of ``1/phi`` from a fixed anchor, with
    values memoized on a knot grid. The inverse finds the bracketing knot cell
    and runs safeguarded Newton steps using ``F' = 1/phi``. Nonvanishing is checked on a 1024-point grid,
    which is a heuristic rather than a proof.
    """

    source: str = "1"
    tol: float = 1e-12
    family = "custom"

    def __post_init__(self):
        if self.interval is None:
            object.__setattr__(self, "interval", (-INF, INF))
        lo, hi = _check_interval(self.interval)
        object.__setattr__(self, "interval", (lo, hi))
        try:
            e = ex.parse(self.source, 1, names={"x": 1})
        except ex.ExprSyntaxError as exc:
            raise ChartError(f"custom chart: {exc}") from exc
        object.__setattr__(self, "_expr", e)
        object.__setattr__(self, "_dexpr", ex.differentiate(e, 1))
        object.__setattr__(self, "_memo", {})
        object.__setattr__(self, "_phi_fn", ex.compile_scalar(e))
        self._validate_sign()

    def natural_interval(self):
        return self.interval

    @property
    def expr(self) -> ex.Expr:
        return self._expr  # type: ignore[attr-defined]

    @property
    def anchor(self) -> float:
        lo, hi = self.interval
        if math.isfinite(lo) and math.isfinite(hi):
            return 0.5 * (lo + hi)
        if math.isfinite(lo):
            return lo + 1.0
        if math.isfinite(hi):
            return hi - 1.0
        return 0.0

    def _grid(self) -> np.ndarray:
        lo, hi = self.interval
        t = (np.arange(_GRID) + 0.5) / _GRID
        if math.isfinite(lo) and math.isfinite(hi):
            return lo + (hi - lo) * t
        # spread the grid over several decades around the anchor
        s = np.tan(np.pi * (t - 0.5))
        c = self.anchor
        if math.isfinite(lo):
            return lo + (c - lo) * np.exp(s / 4)
        if math.isfinite(hi):
            return hi - (hi - c) * np.exp(-s / 4)
        return c + s

    def _validate_sign(self) -> None:
        xs = self._grid()
        try:
            v = ex.evaluate_array(self.expr, xs[:, None])
        except ex.ExprEvaluationError as exc:
            raise ChartDomainError(f"custom chart {self.source!r} not evaluable on interval: {exc}") from exc
        if not np.all(np.isfinite(v)) or np.any(v == 0) or not (np.all(v > 0) or np.all(v < 0)):
            raise ChartDomainError(
                f"custom chart {self.source!r} changes sign or vanishes on {self.interval}"
            )
        object.__setattr__(self, "_sign", 1.0 if v[0] > 0 else -1.0)

    def _phi(self, x):
        if np.ndim(x):
            return ex.evaluate_array(self.expr, np.asarray(x, dtype=float).reshape(-1, 1)).reshape(np.shape(x))
        return ex.evaluate(self.expr, (x,))

    def _dphi(self, x):
        d = self._dexpr  # type: ignore[attr-defined]
        if np.ndim(x):
            return ex.evaluate_array(d, np.asarray(x, dtype=float).reshape(-1, 1)).reshape(np.shape(x))
        return ex.evaluate(d, (x,))

    def _integrand(self, t: float) -> float:
        return 1.0 / self._phi_fn((t,))  # type: ignore[attr-defined]

    # F is memoized on a fixed knot grid on each side of the anchor: uniform
    # steps towards an infinite end, halving distances towards a finite one.
    # A knot value is always the same sum of cell integrals, so results do not
    # depend on call order.

    def _knot(self, side: int, k: int) -> float:
        c = self.anchor
        end = self.interval[1] if side > 0 else self.interval[0]
        if math.isinf(end):
            return c + side * k * _KNOT_STEP
        return end - (end - c) * 0.5 ** k

    def _max_knot(self, side: int) -> int:
        end = self.interval[1] if side > 0 else self.interval[0]
        return _MAX_UNIFORM if math.isinf(end) else _MAX_HALVINGS

    def _knot_value(self, side: int, k: int) -> float:
        memo = self._memo  # type: ignore[attr-defined]
        key = (side, k)
        if key in memo:
            return memo[key]
        j = k
        while j > 0 and (side, j - 1) not in memo:
            j -= 1
        v = memo[(side, j - 1)] if j > 0 else 0.0
        for i in range(max(j, 1), k + 1):
            v += adaptive_simpson(self._integrand, self._knot(side, i - 1), self._knot(side, i), tol=self.tol)
            memo[(side, i)] = v
        memo[key] = v
        return v

    def _cell(self, x: float) -> tuple[int, int]:
        """Side and index of the last knot between the anchor and ``x``."""
        c = self.anchor
        side = 1 if x >= c else -1
        end = self.interval[1] if side > 0 else self.interval[0]
        if math.isinf(end):
            k = int(abs(x - c) // _KNOT_STEP)
        else:
            gap = abs(end - x)
            k = int(math.floor(math.log2(abs(end - c) / gap))) if gap > 0 else _MAX_HALVINGS
        k = max(0, min(k, self._max_knot(side)))
        while k > 0 and side * (self._knot(side, k) - x) > 0:
            k -= 1
        while k < self._max_knot(side) and side * (self._knot(side, k + 1) - x) <= 0:
            k += 1
        return side, k

    def _forward(self, x):
        x = float(x)
        side, k = self._cell(x)
        a = self._knot(side, k)
        return self._knot_value(side, k) + adaptive_simpson(self._integrand, a, x, tol=self.tol)

    def _forward_limit(self, endpoint):
        # F at an endpoint is generally not computable; report an open range
        return -INF if endpoint < self.anchor else INF

    def range(self):
        return (-INF, INF)

    def _inverse(self, y):
        lo, hi = self.interval
        increasing = self._sign > 0  # type: ignore[attr-defined]
        side = 1 if (y >= 0) == increasing else -1
        end = hi if side > 0 else lo

        def beyond(f):  # f has passed y walking away from the anchor
            return (f - y) * side * (1 if increasing else -1) >= 0

        a, fa = self.anchor, 0.0
        b = fb = None
        for k in range(1, self._max_knot(side) + 1):
            xk, fk = self._knot(side, k), self._knot_value(side, k)
            if beyond(fk):
                b, fb = xk, fk
                break
            a, fa = xk, fk
        if b is None:
            # past the knot grid: keep doubling the step from the last knot
            step = _KNOT_STEP
            for _ in range(400):
                if math.isinf(end):
                    xb = a + side * step
                else:
                    xb = end - (end - a) * 0.5
                    if xb == a or xb == end:
                        break
                fb_ = fa + adaptive_simpson(self._integrand, a, xb, tol=self.tol)
                if beyond(fb_):
                    b, fb = xb, fb_
                    break
                a, fa = xb, fb_
                step *= 2.0
            if b is None:
                raise ChartRangeError(f"y = {y!r} outside the range of custom chart {self.source!r}")
        if fa == y:
            return a
        # safeguarded Newton on the cell, F' = 1/phi
        left, right = (a, b) if a < b else (b, a)
        x = a + (b - a) * (y - fa) / (fb - fa)
        if not left < x < right:
            x = 0.5 * (left + right)
        fx = fa + adaptive_simpson(self._integrand, a, x, tol=self.tol)
        for _ in range(100):
            r = fx - y
            if abs(r) <= 1e-13 * max(1.0, abs(y)):
                break
            if (r > 0) == increasing:
                right = x
            else:
                left = x
            x_new = x - r * self._phi_fn((x,))  # type: ignore[attr-defined]
            if not left < x_new < right:
                x_new = 0.5 * (left + right)
            if x_new == x or right - left <= 4 * math.ulp(x):
                break
            # short increment from the previous iterate
            fx += adaptive_simpson(self._integrand, x, x_new, tol=self.tol)
            x = x_new
        return x

    def inverse(self, y):
        return float(self._inverse(float(y)))

    def formula(self, name="x"):
        return f"int(1/({ex.to_string(self.expr, [name])}) d{name})"

    def phi_formula(self, name="x"):
        return ex.to_string(self.expr, [name])

    def params(self):
        return {"expr": self.source}

    def descriptor(self):
        return {"family": "custom", "expr": self.source, "interval": [_bound_to_json(v) for v in self.interval]}


# -- descriptor parsing ---------------------------------------------------------

def _parse_bound(v) -> float:
    if isinstance(v, str):
        t = v.strip().lower().replace("−", "-")
        if t in ("inf", "+inf", "infinity"):
            return INF
        if t in ("-inf", "-infinity"):
            return -INF
        return float(parse_rational(t))
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ChartError(f"bad interval bound {v!r}")
    return float(v)


def parse_interval(spec) -> tuple[float, float]:
    """Open interval from ``[lo, hi]`` or from bracket text such as ``"(0, 1)"``.

    Bracket text with a closed end (``"[0, 1]"``, ``"(0, 1]"``) is rejected:
    every domain must be open.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if len(text) < 2 or text[0] not in "([" or text[-1] not in ")]":
            raise ChartError(f"interval text must look like '(lo, hi)', got {spec!r}")
        if text[0] == "[" or text[-1] == "]":
            raise ChartError(f"interval {spec!r} is closed; domains must be open intervals")
        parts = text[1:-1].split(",")
        if len(parts) != 2:
            raise ChartError(f"interval text must have two bounds, got {spec!r}")
        spec = [p.strip() for p in parts]
    if not isinstance(spec, (list, tuple)) or len(spec) != 2:
        raise ChartError(f"interval must be a [lo, hi] pair, got {spec!r}")
    return _check_interval((_parse_bound(spec[0]), _parse_bound(spec[1])))


def _rational_param(d: dict, key: str, default=None) -> Fraction:
    if key not in d:
        if default is None:
            raise ChartError(f"chart descriptor missing {key!r}")
        return Fraction(default)
    v = d[key]
    if isinstance(v, float):
        # decimal JSON numbers are read as the decimal they spell
        v = repr(v)
    return parse_rational(v)


def chart_from_descriptor(d: dict) -> ChartFunction:
    """Build a chart from a model-file descriptor such as ``{"family": "power", "k": 2}``."""
    if not isinstance(d, dict) or "family" not in d:
        raise ChartError(f"chart descriptor must be an object with a 'family' key, got {d!r}")
    fam = d["family"]
    kw = {}
    if "interval" in d:
        kw["interval"] = parse_interval(d["interval"])
    try:
        if fam == "constant":
            return Constant(c=_rational_param(d, "c", 1), **kw)
        if fam == "power":
            return Power(k=d.get("k", 1), **kw)
        if fam == "affine":
            return Affine(a=_rational_param(d, "a", 1), b=_rational_param(d, "b", 0), **kw)
        if fam == "logistic":
            return Logistic(**kw)
        if fam in ("exp", "exponential"):
            return Exponential(lam=_rational_param(d, "lambda", 1), **kw)
        if fam == "custom":
            if "expr" not in d:
                raise ChartError("custom chart requires 'expr'")
            return Custom(source=d["expr"], **kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ChartError):
            raise
        raise ChartError(f"invalid {fam} chart parameters: {exc}") from exc
    raise ChartError(f"unknown chart family {fam!r}")


# -- functional API -----------------------------------------------------------------

def eval_phi(c: ChartFunction, x: float) -> float:
    return c.phi(x)


def eval_phi_prime(c: ChartFunction, x: float) -> float:
    return c.dphi(x)


def chart_forward(c: ChartFunction, x: float) -> float:
    return c.forward(x)


def chart_inverse(c: ChartFunction, y: float) -> float:
    return c.inverse(y)
