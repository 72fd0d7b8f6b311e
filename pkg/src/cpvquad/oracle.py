"""Reference evaluator for CPV integrals against w^2.

The principal value is removed once, globally, by subtracting the integrand
value at the singularity:

    I[g; x] = int w^2(t) (g(t) - g(x)) / (t - x) dt
              + g(x) * CPV int w^2(t) / (t - x) dt,

where the weight-only transform is itself computed by the same subtraction,

    CPV int_lo^hi w^2/(t-x) dt = int_lo^hi (w^2(t) - w^2(x))/(t-x) dt
                                 + w^2(x) ln((hi-x)/(x-lo)),

plus singularity-free tail integrals beyond the truncated interval.  The
remaining integrands are continuous and are handled by adaptive panel
subdivision with an embedded low/high order Gauss pair per panel (worst
panel first, bisection by default, trisection available as an independent
check).  Everything here is pure and deterministic: the final value is a
pairwise tree sum over panels ordered by position, so concurrent use and
re-runs give identical bits.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError, DomainError, InputError
from .weights import tail_cutoff

__all__ = [
    "CpvRequest",
    "CpvResult",
    "cpv_weight_transform",
    "cpv_weight_transform_detail",
    "cauchy_weight_integral",
    "cpv_eval",
    "cpv",
]

_RULES = {}


def _rule(order):
    if order not in _RULES:
        _RULES[order] = roots_legendre(order)
    return _RULES[order]


class _VecFun:
    """Vectorize a scalar callable lazily; pass arrays through when accepted."""

    def __init__(self, fn):
        self.fn = fn
        self.mode = None

    def __call__(self, ts):
        ts = np.asarray(ts, dtype=np.float64)
        if self.mode != "scalar":
            try:
                out = np.asarray(self.fn(ts), dtype=np.float64)
                if out.shape == ts.shape:
                    self.mode = "array"
                    return out
            except (TypeError, ValueError):
                pass
            self.mode = "scalar"
        return np.array([float(self.fn(t)) for t in ts], dtype=np.float64)


def _panel_pair(fv, a, b):
    """(high-order value, error estimate) on [a, b] from a G10/G21 pair."""
    x10, w10 = _rule(10)
    x21, w21 = _rule(21)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    f_lo = fv(mid + half * x10)
    f_hi = fv(mid + half * x21)
    i_lo = half * float(np.dot(w10, f_lo))
    i_hi = half * float(np.dot(w21, f_hi))
    return i_hi, abs(i_hi - i_lo)


def _pairwise_sum(values):
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def _adaptive(fv, lo, hi, atol, rtol, budget, strategy="bisect", seed_edges=()):
    """Worst-first adaptive refinement; returns (value, err, panels, ok)."""
    edges = {lo, hi}
    for e in seed_edges:
        if lo < e < hi:
            edges.add(e)
    base = np.linspace(lo, hi, 33)
    edges.update(base.tolist())
    edges = sorted(edges)
    heap = []
    counter = 0
    total = 0.0
    toterr = 0.0
    panels = {}
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = _panel_pair(fv, a, b)
        panels[(a, b)] = (val, err)
        total += val
        toterr += err
        heapq.heappush(heap, (-err, counter, a, b))
        counter += 1
    nsplit = 3 if strategy == "trisect" else 2
    while len(panels) < budget:
        if toterr <= max(atol, rtol * abs(total)):
            break
        neg_err, _, a, b = heapq.heappop(heap)
        if (a, b) not in panels:
            continue
        val, err = panels.pop((a, b))
        total -= val
        toterr -= err
        cuts = np.linspace(a, b, nsplit + 1)
        for aa, bb in zip(cuts[:-1], cuts[1:]):
            v, e = _panel_pair(fv, aa, bb)
            panels[(aa, bb)] = (v, e)
            total += v
            toterr += e
            heapq.heappush(heap, (-e, counter, aa, bb))
            counter += 1
    value = _pairwise_sum(panels[key][0] for key in sorted(panels))
    toterr = math.fsum(pv[1] for pv in panels.values())
    ok = toterr <= max(atol, rtol * abs(value))
    return value, toterr, len(panels), ok


def _fixed_integral(fv, a, b, parts=6, order=32):
    """Non-adaptive composite rule for the singularity-free tail pieces."""
    if b <= a:
        return 0.0
    xg, wg = _rule(order)
    edges = np.linspace(a, b, parts + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    ww = (half[:, None] * wg[None, :]).ravel()
    return float(np.dot(ww, fv(pts)))


def _default_window(spec, poly_degree):
    return tail_cutoff(spec, poly_degree=poly_degree, tiny=1e-40)


def _extended_window(spec, poly_degree):
    return tail_cutoff(spec, poly_degree=poly_degree, tiny=1e-60)


def cpv_weight_transform_detail(
    spec, x, lo=None, hi=None, atol=1e-12, rtol=1e-12, budget=20000, strategy="bisect"
):
    """CPV int w^2/(t-x) dt with its error estimate and panel count."""
    c, d = spec.support
    if not c < x < d:
        raise DomainError(f"x={x} outside support ({c}, {d})")
    if lo is None or hi is None:
        lo_d, hi_d = _default_window(spec, 0)
        lo = lo_d if lo is None else lo
        hi = hi_d if hi is None else hi
    guard = 1e-13 * max(1.0, abs(lo), abs(hi))
    if x - lo < guard or hi - x < guard:
        raise DomainError(f"x={x} within 1e-13 of the truncation points")
    w2x = spec.w2(x)
    qpx = spec.Qprime(x)

    def psi(ts):
        w = spec.w2(ts, checked=False)
        dt = ts - x
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (w - w2x) / dt
        hit = dt == 0.0
        if np.any(hit):
            out = np.where(hit, -2.0 * qpx * w2x, out)
        return out

    value, err, panels, ok = _adaptive(
        psi, lo, hi, atol, rtol, budget, strategy=strategy, seed_edges=(0.0, x)
    )
    value += w2x * math.log((hi - x) / (x - lo))
    lo2, hi2 = _extended_window(spec, 0)

    def kernel(ts):
        return spec.w2(ts, checked=False) / (ts - x)

    if hi2 > hi:
        value += _fixed_integral(kernel, hi, hi2)
    if lo2 < lo:
        value += _fixed_integral(kernel, lo2, lo)
    if not ok:
        raise AccuracyError(
            "weight transform did not reach tolerance within the panel budget",
            value=value,
            error_estimate=err,
        )
    return value, err, panels


def cpv_weight_transform(spec, x, lo=None, hi=None, atol=1e-12, rtol=1e-12, budget=20000):
    """CPV int w^2/(t-x) dt over the (truncated) support; see the detail variant."""
    return cpv_weight_transform_detail(spec, x, lo, hi, atol, rtol, budget)[0]


def cauchy_weight_integral(spec, x, lo, hi, atol=1e-12, rtol=1e-12, budget=20000):
    """int_lo^hi w^2/(t-x) dt, principal value when x lies inside (lo, hi)."""
    if lo < x < hi:
        w2x = spec.w2(x)
        qpx = spec.Qprime(x)

        def psi(ts):
            w = spec.w2(ts, checked=False)
            dt = ts - x
            with np.errstate(divide="ignore", invalid="ignore"):
                out = (w - w2x) / dt
            hit = dt == 0.0
            if np.any(hit):
                out = np.where(hit, -2.0 * qpx * w2x, out)
            return out

        value, err, _, ok = _adaptive(psi, lo, hi, atol, rtol, budget, seed_edges=(0.0, x))
        value += w2x * math.log((hi - x) / (x - lo))
    else:

        def kernel(ts):
            return spec.w2(ts, checked=False) / (ts - x)

        value, err, _, ok = _adaptive(kernel, lo, hi, atol, rtol, budget)
    if not ok:
        raise AccuracyError(
            "cauchy weight integral did not reach tolerance",
            value=value,
            error_estimate=err,
        )
    return value


@dataclasses.dataclass(frozen=True)
class CpvRequest:
    """One CPV evaluation task I[g; x]; g must be finite on the support and
    locally Lipschitz near x (caller contract, not verified)."""

    integrand: Callable
    x: float
    atol: float = 1e-10
    rtol: float = 1e-10
    envelope_degree: int = 8
    budget: int = 20000
    strategy: str = "bisect"

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise InputError("tolerances must be positive")
        c, d = (-math.inf, math.inf)
        if not c < self.x < d:
            raise InputError("x must be finite")


@dataclasses.dataclass(frozen=True)
class CpvResult:
    value: float
    error_estimate: float
    panels: int


def cpv_eval(spec, req):
    """Evaluate I[g; x] per the request; returns value with error estimate.

    Raises AccuracyError (carrying the best estimate) when the panel budget
    is exhausted before the tolerance is met.
    """
    c, d = spec.support
    x = float(req.x)
    if not c < x < d:
        raise DomainError(f"x={x} outside support ({c}, {d})")
    g = _VecFun(req.integrand)
    gx = float(np.asarray(req.integrand(x), dtype=np.float64))
    if not math.isfinite(gx):
        raise InputError("integrand is not finite at the singularity")
    lo, hi = _default_window(spec, req.envelope_degree)
    if math.isinf(c):
        lo = min(lo, x - 1.0)
        hi = max(hi, x + 1.0)
    else:
        lo = min(lo, 0.5 * (c + x))
        hi = max(hi, 0.5 * (x + d))
    w2x = spec.w2(x)
    h0 = 1e-7 * (1.0 + abs(x))

    def phi(ts):
        w = spec.w2(ts, checked=False)
        gt = g(ts)
        dt = ts - x
        with np.errstate(divide="ignore", invalid="ignore"):
            out = w * (gt - gx) / dt
        hit = dt == 0.0
        if np.any(hit):
            slope = (float(np.asarray(req.integrand(x + h0))) -
                     float(np.asarray(req.integrand(x - h0)))) / (2.0 * h0)
            out = np.where(hit, w2x * slope, out)
        return out

    value, err, panels, ok = _adaptive(
        phi, lo, hi, 0.5 * req.atol, 0.5 * req.rtol, req.budget,
        strategy=req.strategy, seed_edges=(0.0, x),
    )
    lo2, hi2 = _extended_window(spec, req.envelope_degree)

    def phi_tail(ts):
        return spec.w2(ts, checked=False) * (g(ts) - gx) / (ts - x)

    if hi2 > hi:
        value += _fixed_integral(phi_tail, hi, hi2)
    if lo2 < lo:
        value += _fixed_integral(phi_tail, lo2, lo)

    if gx != 0.0:
        wt, wt_err, wt_panels = cpv_weight_transform_detail(
            spec, x, lo, hi,
            atol=0.5 * req.atol / abs(gx), rtol=0.5 * req.rtol,
            budget=req.budget, strategy=req.strategy,
        )
        value += gx * wt
        err += abs(gx) * wt_err
        panels += wt_panels
    if not ok:
        raise AccuracyError(
            "cpv_eval did not reach tolerance within the panel budget",
            value=value,
            error_estimate=err,
        )
    return CpvResult(value=value, error_estimate=err, panels=panels)


def cpv(spec, g, x, **kw):
    """Convenience wrapper: cpv_eval with keyword overrides."""
    return cpv_eval(spec, CpvRequest(integrand=g, x=x, **kw))
