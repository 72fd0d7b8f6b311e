"""Exponential weight families w = exp(-Q) and their local data.

Three admissible families are implemented, each with a piecewise definition
that may differ on the two sides of the origin:

* ``freud``      Q(x) = x^alpha on [0, inf), |x|^beta on (-inf, 0),
                 with beta >= alpha > 1.
* ``iterexp``    Q(x) = exp_l(x^alpha) - exp_l(0) on the right and
                 exp_k(|x|^beta) - exp_k(0) on the left, k >= l >= 1,
                 alpha, beta > 1 (beta >= alpha when k = l), where exp_j is
                 the j-times iterated exponential.
* ``pollaczek``  Q(x) = (1-x^2)^(-alpha) - 1 on [0, 1) and
                 (1-x^2)^(-beta) - 1 on (-1, 0), with beta >= alpha > 0;
                 the support is (-1, 1) and Q blows up at both endpoints.

Each spec exposes Q, Q' (closed form; the MRS solver needs it to high
accuracy), w^2 = exp(-2Q) and the growth index T(x) = x Q'(x) / Q(x).
Specs are immutable and all evaluators are pure, so they are safe to share
between threads.
"""

from __future__ import annotations

import dataclasses
import math
import re
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "WeightSpec",
    "ValidationReport",
    "parse_weight",
    "exp_iter",
    "tail_cutoff",
    "validate",
]

# exp(x) overflows float64 near 710; iterated exponentials saturate to +inf
# well before that in the outer argument.
_LOG_FLOAT_MAX = 709.0


def exp_iter(x, k):
    """k-times iterated exponential, saturating to +inf instead of raising."""
    y = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        for _ in range(k):
            y = np.exp(y)
    return y


def exp_iter_delta(u, k):
    """exp_k(u) - exp_k(0), stable for small u via the expm1 recursion
    E_1 = expm1(u), E_j = exp_j(0) * expm1(E_{j-1})."""
    e = np.asarray(u, dtype=np.float64)
    with np.errstate(over="ignore"):
        e = np.expm1(e)
        base = 1.0
        for _ in range(k - 1):
            base = math.exp(base)
            e = base * np.expm1(e)
    return e


def _as_array(x):
    a = np.asarray(x, dtype=np.float64)
    return a, a.ndim == 0


@dataclasses.dataclass(frozen=True)
class WeightSpec:
    """One member of an admissible exponential weight family.

    ``lambda_floor`` is the lower bound required of T on the support; it is
    recorded for validation only and defaults to min(alpha, beta) for the
    unbounded families and to a conservative 1.01 for ``pollaczek`` (where
    T approaches 2 near the origin but no sharp floor is configured).
    """

    family: str
    alpha: float
    beta: float
    ell: int = 1
    k: int = 1
    lambda_floor: Optional[float] = None

    def __post_init__(self):
        fam = self.family.lower()
        if fam not in ("freud", "iterexp", "pollaczek"):
            raise ParameterError(f"unknown weight family {self.family!r}")
        object.__setattr__(self, "family", fam)
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ParameterError("alpha and beta must be finite")
        if fam == "freud":
            if not (b >= a > 1.0):
                raise ParameterError(
                    f"freud requires beta >= alpha > 1, got alpha={a}, beta={b}"
                )
        elif fam == "iterexp":
            if not (isinstance(self.ell, int) and isinstance(self.k, int)):
                raise ParameterError("iterexp l, k must be integers")
            if not (self.k >= self.ell >= 1):
                raise ParameterError(
                    f"iterexp requires k >= l >= 1, got l={self.ell}, k={self.k}"
                )
            if not (a > 1.0 and b > 1.0):
                raise ParameterError("iterexp requires alpha, beta > 1")
            if self.k == self.ell and not b >= a:
                raise ParameterError("iterexp with k = l requires beta >= alpha")
        else:
            if not (b >= a > 0.0):
                raise ParameterError(
                    f"pollaczek requires beta >= alpha > 0, got alpha={a}, beta={b}"
                )
        if self.lambda_floor is None:
            floor = 1.01 if fam == "pollaczek" else min(a, b)
            object.__setattr__(self, "lambda_floor", floor)
        elif not self.lambda_floor > 1.0:
            raise ParameterError("lambda_floor must exceed 1")

    # -- basic geometry -------------------------------------------------

    @property
    def support(self):
        if self.family == "pollaczek":
            return (-1.0, 1.0)
        return (-math.inf, math.inf)

    @property
    def even(self):
        """True when Q(-x) = Q(x), which forces a_{-t} = -a_t."""
        if self.family == "freud" or self.family == "pollaczek":
            return self.alpha == self.beta
        return self.alpha == self.beta and self.ell == self.k

    def key(self):
        """Canonical spec string; doubles as the cache key."""
        if self.family == "iterexp":
            return (
                f"iterexp:l={self.ell},k={self.k},"
                f"alpha={self.alpha:g},beta={self.beta:g}"
            )
        return f"{self.family}:alpha={self.alpha:g},beta={self.beta:g}"

    def _check_support(self, x):
        c, d = self.support
        if np.any(x <= c) or np.any(x >= d):
            raise DomainError(f"point outside support ({c}, {d})")

    # -- evaluators ------------------------------------------------------

    def Q(self, x, checked=True):
        """External field Q(x); saturates to +inf when exp_k overflows."""
        xa, scalar = _as_array(x)
        if checked:
            self._check_support(xa)
        ax = np.abs(xa)
        pos = xa >= 0
        if self.family == "freud":
            out = np.where(pos, ax**self.alpha, ax**self.beta)
        elif self.family == "iterexp":
            right = exp_iter_delta(ax**self.alpha, self.ell)
            left = exp_iter_delta(ax**self.beta, self.k)
            out = np.where(pos, right, left)
        else:
            s = 1.0 - xa * xa
            with np.errstate(over="ignore", divide="ignore"):
                out = np.where(pos, s**-self.alpha, s**-self.beta) - 1.0
        return float(out) if scalar else out

    def Qprime(self, x, checked=True):
        """Closed-form Q'(x); continuous and non-decreasing on the support."""
        xa, scalar = _as_array(x)
        if checked:
            self._check_support(xa)
        ax = np.abs(xa)
        pos = xa >= 0
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.family == "freud":
                out = np.where(
                    pos,
                    self.alpha * ax ** (self.alpha - 1.0),
                    -self.beta * ax ** (self.beta - 1.0),
                )
            elif self.family == "iterexp":
                out = np.where(
                    pos,
                    self.alpha
                    * ax ** (self.alpha - 1.0)
                    * _exp_chain(ax**self.alpha, self.ell),
                    -self.beta
                    * ax ** (self.beta - 1.0)
                    * _exp_chain(ax**self.beta, self.k),
                )
            else:
                s = 1.0 - xa * xa
                out = np.where(
                    pos,
                    2.0 * self.alpha * xa * s ** (-self.alpha - 1.0),
                    2.0 * self.beta * xa * s ** (-self.beta - 1.0),
                )
        return float(out) if scalar else out

    def T(self, x, checked=True):
        """Growth index T(x) = x Q'(x) / Q(x), undefined at x = 0."""
        xa, scalar = _as_array(x)
        if checked:
            self._check_support(xa)
        if np.any(xa == 0.0):
            raise DomainError("T(x) is undefined at x = 0")
        if self.family == "freud":
            out = np.where(xa > 0, self.alpha, self.beta).astype(np.float64)
        else:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                out = xa * self.Qprime(xa, checked=False) / self.Q(xa, checked=False)
        return float(out) if scalar else out

    def w2(self, x, checked=True):
        """Squared weight exp(-2 Q(x)); underflows gracefully to 0."""
        xa, scalar = _as_array(x)
        if checked:
            self._check_support(xa)
        with np.errstate(under="ignore"):
            out = np.exp(-2.0 * self.Q(xa, checked=False))
        return float(out) if scalar else out

    def w2_underflows(self, x):
        """True where w^2(x) is below the float64 normal range."""
        xa, scalar = _as_array(x)
        out = 2.0 * self.Q(xa) > -math.log(2.2250738585072014e-308)
        return bool(out) if scalar else out

    # -- extended precision (gmpy2.mpfr scalars) --------------------------

    def Q_hp(self, x, gm):
        """Q at an mpfr point, for the extended-precision Stieltjes pass."""
        ax = abs(x)
        if self.family == "freud":
            e = self.alpha if x >= 0 else self.beta
            return ax**gm.mpfr(e)
        if self.family == "iterexp":
            e, depth = (self.alpha, self.ell) if x >= 0 else (self.beta, self.k)
            y = gm.expm1(ax ** gm.mpfr(e))
            base = gm.mpfr(1)
            for _ in range(depth - 1):
                base = gm.exp(base)
                y = base * gm.expm1(y)
            return y
        e = self.alpha if x >= 0 else self.beta
        return (1 - ax * ax) ** gm.mpfr(-e) - 1

    def w2_hp(self, x, gm):
        return gm.exp(-2 * self.Q_hp(x, gm))


def _exp_chain(u, depth):
    """Product exp_1(u) * exp_2(u) * ... * exp_depth(u) = d/du exp_depth(u)."""
    y = np.asarray(u, dtype=np.float64)
    prod = np.ones_like(y)
    with np.errstate(over="ignore"):
        for _ in range(depth):
            y = np.exp(y)
            prod = prod * y
    return prod


# -- spec string grammar ---------------------------------------------------

_GRAMMAR = (
    "freud:alpha=<r>,beta=<r> | iterexp:l=<i>,k=<i>,alpha=<r>,beta=<r> "
    "| pollaczek:alpha=<r>,beta=<r>"
)

_KEYS = {
    "freud": ("alpha", "beta"),
    "iterexp": ("l", "k", "alpha", "beta"),
    "pollaczek": ("alpha", "beta"),
}


def parse_weight(text):
    """Parse a weight spec string such as ``freud:alpha=2,beta=3``.

    Family and key names are case-insensitive; unknown keys are errors.
    """
    m = re.fullmatch(r"\s*([A-Za-z_]+)\s*:\s*(.*?)\s*", text)
    if not m:
        raise ParameterError(f"cannot parse weight spec {text!r}; grammar: {_GRAMMAR}")
    family = m.group(1).lower()
    if family not in _KEYS:
        raise ParameterError(
            f"unknown family {family!r} in weight spec; grammar: {_GRAMMAR}"
        )
    kv = {}
    for item in m.group(2).split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ParameterError(f"malformed item {item!r}; grammar: {_GRAMMAR}")
        key, _, val = item.partition("=")
        key = key.strip().lower()
        if key not in _KEYS[family]:
            raise ParameterError(
                f"unknown key {key!r} for family {family!r}; "
                f"accepted keys: {', '.join(_KEYS[family])}"
            )
        if key in kv:
            raise ParameterError(f"duplicate key {key!r} in weight spec")
        try:
            kv[key] = int(val) if key in ("l", "k") else float(val)
        except ValueError as exc:
            raise ParameterError(f"bad value for {key!r}: {val!r}") from exc
    missing = [k for k in _KEYS[family] if k not in kv]
    if missing:
        raise ParameterError(
            f"missing keys {missing} for family {family!r}; grammar: {_GRAMMAR}"
        )
    if family == "iterexp":
        return WeightSpec("iterexp", kv["alpha"], kv["beta"], ell=kv["l"], k=kv["k"])
    return WeightSpec(family, kv["alpha"], kv["beta"])


# -- truncation of the (possibly infinite) support --------------------------


def tail_cutoff(spec, poly_degree=8, tiny=1e-40):
    """Points (lo, hi) beyond which w^2 * (1+|t|)^poly_degree < tiny.

    Estimated from the growth of Q by bisection on the monotone excess
    2Q(t) - poly_degree*log(1+|t|).  Used to cut infinite supports (and the
    Pollaczek endpoint blow-up region) deterministically.
    """
    target = -math.log(tiny) + 12.0

    def excess(t):
        return 2.0 * spec.Q(t, checked=False) - poly_degree * math.log1p(abs(t))

    def search(side):
        c, d = spec.support
        a = 1e-8 if side > 0 else -1e-8
        if math.isinf(d if side > 0 else c):
            b = side * 1.0
            while excess(b) < target:
                b *= 2.0
                if abs(b) > 1e12:
                    break
        else:
            end = d if side > 0 else c
            gap = 0.5
            b = end - side * gap
            while excess(b) < target:
                gap *= 0.5
                b = end - side * gap
                if gap < 1e-15:
                    break
        for _ in range(200):
            mid = 0.5 * (a + b)
            if excess(mid) < target:
                a = mid
            else:
                b = mid
            if abs(b - a) <= 1e-14 * (1.0 + abs(b)):
                break
        return b

    return search(-1), search(+1)


# -- validation --------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    passed: bool
    grid_size: int
    min_T: float
    qprime_violations: int
    cond_e_ratio_range: tuple
    notes: tuple = ()


def _validation_grid(spec, grid_size):
    """Log-spaced points toward both endpoints, on both sides of 0."""
    half = max(grid_size // 2, 50)
    c, d = spec.support
    if math.isinf(d):
        hi = tail_cutoff(spec, poly_degree=0, tiny=1e-60)[1]
        right = np.geomspace(1e-8, hi, half)
    else:
        gap_hi = tail_cutoff(spec, poly_degree=0, tiny=1e-60)[1]
        gaps = np.geomspace(1.0 - 1e-8, 1.0 - gap_hi, half)
        right = 1.0 - gaps
    left = -right[::-1] if spec.even else None
    if left is None:
        if math.isinf(c):
            lo = tail_cutoff(spec, poly_degree=0, tiny=1e-60)[0]
            left = -np.geomspace(1e-8, -lo, half)[::-1]
        else:
            gap_lo = tail_cutoff(spec, poly_degree=0, tiny=1e-60)[0]
            gaps = np.geomspace(1.0 - 1e-8, 1.0 + gap_lo, half)
            left = (gaps - 1.0)[::-1]
    return np.concatenate([left, right])


def validate(spec, grid_size=1000):
    """Numerically spot-check the class conditions on a log-spaced grid.

    Reports monotonicity violations of Q', the minimum of T against the
    configured floor, and the observed ratio range of the local T-regularity
    condition with epsilon_0 = 0.5.  PASS means no violation above a 1e-12
    tolerance; the ratio range is informational only (the condition carries
    unspecified constants).
    """
    if grid_size < 100:
        raise ParameterError("grid_size must be at least 100")
    grid = _validation_grid(spec, grid_size)
    notes = []

    if spec.Q(0.0) != 0.0:
        notes.append("Q(0) != 0")

    qp = spec.Qprime(grid)
    finite = np.isfinite(qp)
    if not np.all(finite):
        notes.append("Q' saturated near the endpoints; comparisons restricted")
    qpf = qp[finite]
    scale = np.maximum(1.0, np.abs(qpf[:-1]))
    violations = int(np.sum(np.diff(qpf) < -1e-12 * scale))

    tvals = spec.T(grid)
    tfin = tvals[np.isfinite(tvals)]
    min_t = float(np.min(tfin))

    eps0 = 0.5
    with np.errstate(invalid="ignore"):
        arg = grid * np.abs(1.0 - eps0 / tvals)
    ok = np.isfinite(tvals) & (arg != 0.0)
    ratio = tvals[ok] / spec.T(arg[ok])
    ratio = ratio[np.isfinite(ratio)]
    rng = (float(np.min(ratio)), float(np.max(ratio)))

    passed = (
        violations == 0
        and min_t >= spec.lambda_floor - 1e-12
        and spec.Q(0.0) == 0.0
    )
    return ValidationReport(
        passed=passed,
        grid_size=len(grid),
        min_T=min_t,
        qprime_violations=violations,
        cond_e_ratio_range=rng,
        notes=tuple(notes),
    )
