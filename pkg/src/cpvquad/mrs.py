"""Mhaskar-Rakhmanov-Saff numbers and the derived scale quantities.

For a weight w = exp(-Q) on (c, d) the pair a_{-t} < 0 < a_t solves

    t = (1/pi) * int_{a_{-t}}^{a_t} x Q'(x) / sqrt((x-a_{-t})(a_t-x)) dx,
    0 = (1/pi) * int_{a_{-t}}^{a_t}   Q'(x) / sqrt((x-a_{-t})(a_t-x)) dx.

The substitution x = beta + delta*cos(theta) (beta the midpoint, delta the
half-width) removes the square-root singularity exactly, leaving

    F1 = (1/pi) int_0^pi x(theta) Q'(x(theta)) dtheta = t,
    F2 = (1/pi) int_0^pi          Q'(x(theta)) dtheta = 0,

which are evaluated by composite Gauss-Legendre panels in theta, split at the
interior kink where x(theta) = 0 (Q' may lose smoothness only there), with
the resolution doubled until the values settle below a tenth of the solver
tolerance.  The outer solve is a damped Newton iteration in variables that
keep the iterates inside the support, reduced to a one-dimensional bracketed
solve for even weights.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from . import cache
from .errors import DomainError, SolverError

__all__ = [
    "MrsNumbers",
    "EdgeScales",
    "solve_mrs",
    "mrs_ladder",
    "edge_scales",
    "phi_n",
    "scaling_exponents",
    "mrs_diagnostics",
]

_GL_ORDER = 24
_GL = {}


def _gl(order):
    if order not in _GL:
        _GL[order] = roots_legendre(order)
    return _GL[order]


@dataclasses.dataclass(frozen=True)
class MrsNumbers:
    """Solution of the two defining equations at one t."""

    t: float
    a_minus: float
    a_plus: float
    residual1: float
    residual2: float

    @property
    def delta(self):
        return 0.5 * (self.a_plus + abs(self.a_minus))

    @property
    def beta(self):
        return 0.5 * (self.a_plus + self.a_minus)


@dataclasses.dataclass(frozen=True)
class EdgeScales:
    n: float
    eta_plus: float
    eta_minus: float


def _equations(spec, a_minus, a_plus, panels):
    """(F1, F2) with `panels` Gauss-Legendre panels per smooth theta piece."""
    beta = 0.5 * (a_plus + a_minus)
    delta = 0.5 * (a_plus - a_minus)
    # x(theta) = 0 at cos(theta) = -beta/delta; split there.
    cos0 = min(1.0, max(-1.0, -beta / delta))
    theta0 = math.acos(cos0)
    xi, wi = _gl(_GL_ORDER)
    f1 = np.longdouble(0.0)
    f2 = np.longdouble(0.0)
    for lo, hi in ((0.0, theta0), (theta0, math.pi)):
        if hi - lo < 1e-15:
            continue
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        theta = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
        ww = (half[:, None] * wi[None, :]).ravel()
        x = beta + delta * np.cos(theta)
        qp = spec.Qprime(x, checked=False)
        f1 += np.sum(np.longdouble(ww) * np.longdouble(x * qp))
        f2 += np.sum(np.longdouble(ww) * np.longdouble(qp))
    return float(f1 / np.longdouble(math.pi)), float(f2 / np.longdouble(math.pi))


def _equations_converged(spec, a_minus, a_plus, tol_f1, tol_f2):
    """Doubling rule: refine panels until both values settle."""
    panels = 4
    prev = _equations(spec, a_minus, a_plus, panels)
    while panels < 1024:
        panels *= 2
        cur = _equations(spec, a_minus, a_plus, panels)
        if abs(cur[0] - prev[0]) <= tol_f1 and abs(cur[1] - prev[1]) <= tol_f2:
            return cur
        prev = cur
    return prev


def _cold_start(spec, t):
    if spec.family == "freud":
        g = t ** (1.0 / spec.lambda_floor)
        return g, g
    if spec.family == "iterexp":
        ya = math.log(math.e + t)
        yb = math.log(math.e + t)
        for _ in range(spec.ell - 1):
            ya = math.log(math.e + ya)
        for _ in range(spec.k - 1):
            yb = math.log(math.e + yb)
        return ya ** (1.0 / spec.alpha), yb ** (1.0 / spec.beta)
    # pollaczek: 1 - a ~ t^{-1/(alpha+1/2)}
    up = max(math.log(2.0 + t) / (spec.alpha + 0.5), 1e-2)
    um = max(math.log(2.0 + t) / (spec.beta + 0.5), 1e-2)
    return -math.expm1(-up), -math.expm1(-um)


def _pack(spec, a_plus_mag, a_minus_mag):
    """Map magnitudes to unconstrained Newton variables."""
    if spec.family == "pollaczek":
        return np.array(
            [-math.log1p(-a_plus_mag), -math.log1p(-a_minus_mag)], dtype=float
        )
    return np.array([math.log(a_plus_mag), math.log(a_minus_mag)], dtype=float)


def _z_to_endpoints(spec, z):
    if spec.family == "pollaczek":
        a_plus = -math.expm1(-z[0])
        a_minus = math.expm1(-z[1])  # = -(1 - exp(-z1))
        return a_minus, a_plus
    return -math.exp(z[1]), math.exp(z[0])


def solve_mrs(spec, t, tol=1e-9):
    """Solve the defining equations at t.

    Convergence means |F1 - t| <= tol*t and |F2| <= tol.  Solutions are
    memoized per (spec, t); a cached entry is reused when it was solved at
    least as tightly.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if not 1e-14 < tol < 1e-4:
        raise DomainError("tol must lie in (1e-14, 1e-4)")
    key = f"{spec.key()}|t={float(t)!r}"
    hit = cache.fetch("mrs", key)
    if hit is not None and hit["tol"] <= tol:
        return MrsNumbers(
            t=float(t),
            a_minus=hit["a_minus"],
            a_plus=hit["a_plus"],
            residual1=hit["residual1"],
            residual2=hit["residual2"],
        )
    result = _solve_uncached(spec, float(t), tol, None)
    cache.store(
        "mrs",
        key,
        {
            "a_minus": result.a_minus,
            "a_plus": result.a_plus,
            "residual1": result.residual1,
            "residual2": result.residual2,
            "tol": tol,
        },
    )
    return result


def _solve_uncached(spec, t, tol, warm):
    tol_f1 = tol * t / 10.0
    tol_f2 = tol / 10.0
    if spec.even:
        return _solve_even(spec, t, tol, tol_f1, tol_f2, warm)
    return _solve_newton(spec, t, tol, tol_f1, tol_f2, warm)


def _solve_even(spec, t, tol, tol_f1, tol_f2, warm):
    def g(a):
        return _equations_converged(spec, -a, a, tol_f1, tol_f2)[0] - t

    a0 = warm[1] if warm else _cold_start(spec, t)[0]
    lo, hi = a0, a0
    c, d = spec.support
    glo, ghi = g(lo), g(hi)
    for _ in range(200):
        if glo < 0.0 < ghi:
            break
        if glo >= 0.0:
            lo *= 0.5
            glo = g(lo)
        if ghi <= 0.0:
            hi = min(hi * 2.0, 0.5 * (hi + d)) if math.isfinite(d) else hi * 2.0
            ghi = g(hi)
    else:
        raise SolverError(f"could not bracket the even MRS solve at t={t}")
    a = brentq(g, lo, hi, xtol=1e-15 * (1.0 + hi), rtol=8.9e-16)
    f1, f2 = _equations_converged(spec, -a, a, tol_f1, tol_f2)
    if abs(f1 - t) > tol * t or abs(f2) > tol:
        raise SolverError(
            f"even MRS solve did not reach tolerance at t={t}",
            residuals=(f1 - t, f2),
        )
    return MrsNumbers(t=t, a_minus=-a, a_plus=a, residual1=f1 - t, residual2=f2)


def _solve_newton(spec, t, tol, tol_f1, tol_f2, warm):
    if warm is not None:
        z = _pack(spec, warm[1], -warm[0])
    else:
        ap, am = _cold_start(spec, t)
        z = _pack(spec, ap, am)

    def residual(zv):
        a_minus, a_plus = _z_to_endpoints(spec, zv)
        f1, f2 = _equations_converged(spec, a_minus, a_plus, tol_f1, tol_f2)
        delta = 0.5 * (a_plus - a_minus)
        s2 = max(1.0, t / delta)
        r = np.array([(f1 - t) / t, f2 / s2])
        return r, (f1, f2)

    r, raw = residual(z)
    merit = float(np.linalg.norm(r))
    for _ in range(100):
        if abs(raw[0] - t) <= tol * t and abs(raw[1]) <= tol:
            a_minus, a_plus = _z_to_endpoints(spec, z)
            return MrsNumbers(
                t=t,
                a_minus=a_minus,
                a_plus=a_plus,
                residual1=raw[0] - t,
                residual2=raw[1],
            )
        jac = np.empty((2, 2))
        for i in range(2):
            h = 1e-6 * (1.0 + abs(z[i]))
            zp = z.copy()
            zp[i] += h
            rp, _ = residual(zp)
            jac[:, i] = (rp - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"singular Jacobian in MRS solve at t={t}", residuals=raw
            ) from exc
        lam = 1.0
        for _ in range(30):
            z_new = z + lam * step
            try:
                r_new, raw_new = residual(z_new)
            except (OverflowError, FloatingPointError):
                lam *= 0.5
                continue
            m_new = float(np.linalg.norm(r_new))
            if math.isfinite(m_new) and m_new < merit:
                z, r, raw, merit = z_new, r_new, raw_new, m_new
                break
            lam *= 0.5
        else:
            raise SolverError(
                f"MRS line search stalled at t={t}",
                residuals=(raw[0] - t, raw[1]),
            )
    raise SolverError(
        f"MRS Newton did not converge at t={t}", residuals=(raw[0] - t, raw[1])
    )


def mrs_ladder(spec, ts, tol=1e-9):
    """Solve along an increasing ladder with warm starts (continuation)."""
    out = []
    warm = None
    for t in sorted(float(v) for v in ts):
        key = f"{spec.key()}|t={t!r}"
        hit = cache.fetch("mrs", key)
        if hit is not None and hit["tol"] <= tol:
            res = MrsNumbers(
                t=t,
                a_minus=hit["a_minus"],
                a_plus=hit["a_plus"],
                residual1=hit["residual1"],
                residual2=hit["residual2"],
            )
        else:
            res = _solve_uncached(spec, t, tol, warm)
            cache.store(
                "mrs",
                key,
                {
                    "a_minus": res.a_minus,
                    "a_plus": res.a_plus,
                    "residual1": res.residual1,
                    "residual2": res.residual2,
                    "tol": tol,
                },
            )
        out.append(res)
        warm = (res.a_minus, res.a_plus)
    return out


def edge_scales(spec, n, mrs):
    """eta_{+-n} = (n T(a_{+-n}) sqrt(|a_{+-n}|/delta_n))^(-2/3)."""
    delta = mrs.delta
    eta_p = (n * spec.T(mrs.a_plus) * math.sqrt(mrs.a_plus / delta)) ** (-2.0 / 3.0)
    eta_m = (n * spec.T(mrs.a_minus) * math.sqrt(abs(mrs.a_minus) / delta)) ** (
        -2.0 / 3.0
    )
    return EdgeScales(n=n, eta_plus=eta_p, eta_minus=eta_m)


def phi_n(spec, n, x, mrs_n, mrs_2n, scales):
    """Local spacing scale, constant beyond [a_{-n}, a_n].

    Inside the interval this is
    |x-a_{-2n}| |a_{2n}-x| / sqrt((|x-a_{-n}|+|a_{-n}|eta_{-n})
    (|x-a_n|+a_n eta_n)); clamping x to the interval realizes the constant
    continuation on both sides.
    """
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xc = np.clip(xa, mrs_n.a_minus, mrs_n.a_plus)
    num = np.abs(xc - mrs_2n.a_minus) * np.abs(mrs_2n.a_plus - xc)
    den = np.sqrt(
        (np.abs(xc - mrs_n.a_minus) + abs(mrs_n.a_minus) * scales.eta_minus)
        * (np.abs(xc - mrs_n.a_plus) + mrs_n.a_plus * scales.eta_plus)
    )
    out = num / den
    return float(out) if scalar else out


def scaling_exponents(spec, t_ladder, tol=1e-9):
    """Least-squares slopes of the MRS growth laws along a t-ladder.

    For the unbounded families the slopes of log a_t and log |a_{-t}| versus
    log t are fitted; for pollaczek the edge gaps 1 -+ a_{+-t} are fitted
    instead.  The ladder must hold at least 6 points spanning two decades.
    """
    ts = np.sort(np.asarray([float(v) for v in t_ladder]))
    if len(ts) < 6 or ts[-1] / ts[0] < 99.0:
        raise DomainError("ladder needs >= 6 points spanning >= 2 decades")
    sols = mrs_ladder(spec, ts, tol=tol)
    logt = np.log([s.t for s in sols])
    if spec.family == "pollaczek":
        up = np.log([1.0 - s.a_plus for s in sols])
        um = np.log([1.0 + s.a_minus for s in sols])
        keys = ("one_minus_a_plus", "one_plus_a_minus")
    else:
        up = np.log([s.a_plus for s in sols])
        um = np.log([-s.a_minus for s in sols])
        keys = ("a_plus", "a_minus")
    slope_p = float(np.polyfit(logt, up, 1)[0])
    slope_m = float(np.polyfit(logt, um, 1)[0])
    return {keys[0]: slope_p, keys[1]: slope_m, "ladder": sols}


def mrs_diagnostics(spec, ts, tol=1e-9):
    """Normalized field/derivative ratios at the MRS points.

    Each row reports Q(a)sqrt(delta T(a)/|a|)/t and |Q'(a)|/(t sqrt(T(a)/
    (delta |a|))) on both sides; for admissible weights these stay in
    O(1) bands along any ladder.
    """
    rows = []
    seq = [ts] if np.isscalar(ts) else list(ts)
    for s in mrs_ladder(spec, seq, tol=tol):
        delta = s.delta
        row = {"t": s.t}
        for label, a in (("plus", s.a_plus), ("minus", s.a_minus)):
            tval = spec.T(a)
            row[f"ratio_Q_{label}"] = (
                spec.Q(a) * math.sqrt(delta * tval / abs(a)) / s.t
            )
            row[f"ratio_Qprime_{label}"] = abs(spec.Qprime(a)) / (
                s.t * math.sqrt(tval / (delta * abs(a)))
            )
        rows.append(row)
    return rows
