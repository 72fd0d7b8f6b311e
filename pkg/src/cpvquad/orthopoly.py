"""Orthonormal polynomials of w^2: recurrence generation, Gauss rules,
evaluation kernels and the band diagnostics.

The three-term recurrence is produced by the Stieltjes procedure on a
discretized measure (composite Gauss-Legendre panels graded like the
equilibrium density, with geometric extension panels out to a deterministic
truncation).  Moment-based routes are hopeless for exponential weights, so
the inner products are carried in software extended precision (gmpy2/MPFR)
and only the finished coefficients are downcast to float64.

Nodes and Christoffel numbers come from the symmetric tridiagonal
eigenproblem of the Jacobi matrix (Golub-Welsch); nodes are ordered
decreasing, x_{1,n} largest, to match the indexing used by the product-rule
construction downstream.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import roots_legendre

from . import cache, _kernels
from .errors import DomainError, ParameterError, PrecisionError
from .mrs import edge_scales, phi_n, solve_mrs
from .weights import tail_cutoff

__all__ = [
    "DiscretizedMeasure",
    "RecurrenceTable",
    "GaussRule",
    "discretize_measure",
    "stieltjes",
    "recurrence_table",
    "eval_pn",
    "eval_pn_prime",
    "eval_pn_scaled",
    "gauss_rule",
    "christoffel_fn",
    "orthonormality_defect",
    "pn_diagnostics",
]


@dataclasses.dataclass(frozen=True)
class DiscretizedMeasure:
    """Composite quadrature for integrals against w^2 dt."""

    points: np.ndarray
    gl_weights: np.ndarray
    w2: np.ndarray

    @property
    def weights(self):
        return self.gl_weights * self.w2

    def integrate(self, values):
        """Sum values*w2 against the rule; `values` aligned with points."""
        return float(np.dot(self.gl_weights * self.w2, values))


@dataclasses.dataclass(frozen=True)
class RecurrenceTable:
    spec_key: str
    n_max: int
    diag: np.ndarray
    offdiag: np.ndarray
    norm0: float
    working_precision: int
    panels: int
    t_gen: float


@dataclasses.dataclass(frozen=True)
class GaussRule:
    n: int
    nodes: np.ndarray
    christoffel: np.ndarray


def _gl_block(edges, order):
    xg, wg = roots_legendre(order)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    ww = (half[:, None] * wg[None, :]).ravel()
    return pts, ww


def _extension_edges(a_end, cut, count):
    """Geometrically graded edges from a_end out to the truncation point."""
    if cut <= a_end:
        cut = a_end + 1e-3 * max(1.0, abs(a_end))
    offsets = np.geomspace((cut - a_end) * 1e-4, cut - a_end, count)
    return np.concatenate([[a_end], a_end + offsets])


def discretize_measure(spec, mrs, panels, nodes_per_panel=36, poly_degree=None):
    """Composite rule for integrals g -> int g w^2 dt.

    `mrs` should be solved at a t at least as large as the highest polynomial
    degree the rule must handle; interior panels follow the arccos grading of
    the equilibrium density on [a_{-t}, a_t], and geometric panels continue
    to the point where the discarded tail of w^2 (times a polynomial
    envelope) is below 1e-44.  For even weights the left half mirrors the
    right half exactly, so symmetric integrands cancel to working precision.
    """
    if panels < 8:
        raise ParameterError("panels must be at least 8")
    if poly_degree is None:
        poly_degree = int(2 * mrs.t) + 4
    lo_cut, hi_cut = tail_cutoff(spec, poly_degree=poly_degree, tiny=1e-44)
    ext_count = max(12, panels // 6)
    if spec.even:
        half_panels = max(4, panels // 2)
        thetas = np.linspace(0.0, 0.5 * math.pi, half_panels + 1)
        inner = np.sort(mrs.delta * np.cos(thetas))
        inner[0] = 0.0
        ext = _extension_edges(mrs.a_plus, hi_cut, ext_count)
        edges_r = np.concatenate([inner, ext[1:]])
        pts_r, glw_r = _gl_block(edges_r, nodes_per_panel)
        pts = np.concatenate([-pts_r[::-1], pts_r])
        glw = np.concatenate([glw_r[::-1], glw_r])
    else:
        thetas = np.linspace(0.0, math.pi, panels + 1)
        inner = np.sort(mrs.beta + mrs.delta * np.cos(thetas))
        inner[0], inner[-1] = mrs.a_minus, mrs.a_plus
        ext_r = _extension_edges(mrs.a_plus, hi_cut, ext_count)
        ext_l = -_extension_edges(-mrs.a_minus, -lo_cut, ext_count)[::-1]
        edges = np.concatenate([ext_l[:-1], inner, ext_r[1:]])
        pts, glw = _gl_block(edges, nodes_per_panel)
    with np.errstate(under="ignore"):
        w2 = spec.w2(pts, checked=False)
    return DiscretizedMeasure(points=pts, gl_weights=glw, w2=w2)


def stieltjes(spec, n_max, precision_digits=64, panels=None):
    """Recurrence coefficients via the Stieltjes procedure in MPFR arithmetic.

    Raises PrecisionError (asking for more digits) if an off-diagonal loses
    positivity, which is the classical symptom of insufficient working
    precision for this construction.
    """
    import gmpy2 as gm

    if n_max > 256:
        raise ParameterError("n_max is capped at 256")
    if precision_digits < 32:
        raise ParameterError("precision_digits must be at least 32")
    if panels is None:
        panels = n_max + 24
    t_gen = max(2.0 * n_max, 8.0)
    mrs_gen = solve_mrs(spec, t_gen)
    meas = discretize_measure(
        spec, mrs_gen, panels, poly_degree=2 * n_max + 4
    )
    bits = int(precision_digits * 3.3219281) + 16
    with gm.local_context(gm.context(), precision=bits):
        pts = [gm.mpfr(v) for v in meas.points]
        ww = [gm.mpfr(g) * spec.w2_hp(x, gm) for g, x in zip(meas.gl_weights, pts)]
        m = len(pts)
        norm0 = sum(ww)
        inv_sqrt = 1 / gm.sqrt(norm0)
        p_prev = [gm.mpfr(0)] * m
        p = [inv_sqrt] * m
        diag = []
        offdiag = []
        b_k = gm.mpfr(0)
        for k in range(n_max):
            a_k = sum(ww[i] * pts[i] * p[i] * p[i] for i in range(m))
            r = [
                (pts[i] - a_k) * p[i] - b_k * p_prev[i]
                for i in range(m)
            ]
            nrm2 = sum(ww[i] * r[i] * r[i] for i in range(m))
            if nrm2 <= 0:
                raise PrecisionError(
                    f"lost positivity at degree {k + 1}; "
                    f"increase precision_digits above {precision_digits}"
                )
            b_next = gm.sqrt(nrm2)
            p_prev = p
            p = [r[i] / b_next for i in range(m)]
            diag.append(a_k)
            offdiag.append(b_next)
            b_k = b_next
        return RecurrenceTable(
            spec_key=spec.key(),
            n_max=n_max,
            diag=np.array([float(v) for v in diag]),
            offdiag=np.array([float(v) for v in offdiag]),
            norm0=float(norm0),
            working_precision=precision_digits,
            panels=panels,
            t_gen=t_gen,
        )


def recurrence_table(spec, n_max, precision_digits=64, panels=None):
    """Cached front end for stieltjes()."""
    key = f"{spec.key()}|N={n_max}|digits={precision_digits}|panels={panels or 0}"
    hit = cache.fetch("rectable", key)
    if hit is not None:
        return RecurrenceTable(
            spec_key=spec.key(),
            n_max=n_max,
            diag=np.asarray(hit["diag"]),
            offdiag=np.asarray(hit["offdiag"]),
            norm0=hit["norm0"],
            working_precision=precision_digits,
            panels=hit["panels"],
            t_gen=hit["t_gen"],
        )
    table = stieltjes(spec, n_max, precision_digits, panels)
    cache.store(
        "rectable",
        key,
        {
            "diag": table.diag.tolist(),
            "offdiag": table.offdiag.tolist(),
            "norm0": table.norm0,
            "panels": table.panels,
            "t_gen": table.t_gen,
        },
    )
    return table


def _check_degree(table, n):
    if n > table.n_max:
        raise DomainError(f"degree {n} exceeds table n_max={table.n_max}")


def eval_pn(table, n, x):
    """p_n at x (scalar or array) by the forward recurrence.

    Far outside the oscillation interval the recurrence can overflow; those
    entries are recomputed in scaled form and reassembled with ldexp (which
    yields inf only when the true value exceeds the float64 range).
    """
    _check_degree(table, n)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = _kernels.pn_eval(table.diag, table.offdiag, table.norm0, n, xa)
    bad = ~np.isfinite(out)
    if np.any(bad):
        for i in np.nonzero(bad)[0]:
            mant, expo = _kernels.pn_eval_scaled(
                table.diag, table.offdiag, table.norm0, n, float(xa[i])
            )
            out[i] = math.ldexp(mant, expo) if abs(mant) < 1e300 else math.inf
    return float(out[0]) if np.ndim(x) == 0 else out


def eval_pn_prime(table, n, x):
    """p_n' at x via the differentiated recurrence (no finite differences)."""
    _check_degree(table, n)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    _, d = _kernels.pn_eval_pair(table.diag, table.offdiag, table.norm0, n, xa)
    return float(d[0]) if np.ndim(x) == 0 else d


def eval_pn_scaled(table, n, x):
    """p_n(x) as (mantissa, exponent2): value = mantissa * 2**exponent2."""
    _check_degree(table, n)
    return _kernels.pn_eval_scaled(
        table.diag, table.offdiag, table.norm0, n, float(x)
    )


def gauss_rule(table, n):
    """n-point rule: nodes (decreasing) and Christoffel numbers."""
    _check_degree(table, n)
    if n == 1:
        return GaussRule(
            n=1,
            nodes=np.array([table.diag[0]]),
            christoffel=np.array([table.norm0]),
        )
    vals, vecs = eigh_tridiagonal(table.diag[:n], table.offdiag[: n - 1])
    order = np.argsort(vals)[::-1]
    nodes = vals[order]
    lam = table.norm0 * vecs[0, order] ** 2
    return GaussRule(n=n, nodes=nodes, christoffel=lam)


def christoffel_fn(table, n, x):
    """lambda_n(w^2, x) = 1 / sum_{k<n} p_k(x)^2."""
    _check_degree(table, n)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = 1.0 / _kernels.pn_sum_sq(table.diag, table.offdiag, table.norm0, n, xa)
    return float(out[0]) if np.ndim(x) == 0 else out


def verification_measure(spec, table):
    """A rule finer than the generation one, for orthonormality checks."""
    mrs_gen = solve_mrs(spec, table.t_gen)
    return discretize_measure(
        spec,
        mrs_gen,
        2 * table.panels,
        nodes_per_panel=44,
        poly_degree=2 * table.n_max + 4,
    )


def orthonormality_defect(spec, table, upto=None):
    """max_{i,j <= upto} |<p_i, p_j>_{w^2} - delta_ij| on the verification rule."""
    upto = table.n_max if upto is None else upto
    _check_degree(table, upto)
    meas = verification_measure(spec, table)
    mat = _kernels.pn_matrix(
        table.diag, table.offdiag, table.norm0, upto, meas.points
    )
    gram = (mat * meas.weights[:, None]).T @ mat
    return float(np.max(np.abs(gram - np.eye(upto + 1))))


def _sup_grid(spec, mrs_n, scales, per_side=600):
    """Arccos-graded grid on [a_{-n}, a_n] with extra points near the edges."""
    theta = np.linspace(0.0, math.pi, per_side)
    base = mrs_n.beta + mrs_n.delta * np.cos(theta)
    pad_r = mrs_n.a_plus * (
        1.0 - scales.eta_plus * np.geomspace(1e-3, 2.0, 40)
    )
    pad_l = mrs_n.a_minus * (
        1.0 - scales.eta_minus * np.geomspace(1e-3, 2.0, 40)
    )
    grid = np.unique(np.concatenate([base, pad_r, pad_l]))
    return grid[(grid >= mrs_n.a_minus) & (grid <= mrs_n.a_plus)]


def pn_diagnostics(spec, table, ns, per_side=600):
    """Normalized sup/norm/spacing statistics for a ladder of degrees.

    For each n the report carries: (i) the edge-damped sup
    sup |p_n w| |(x-a_{-n})(a_n-x)|^{1/4}; (ii) sup |p_n w| over the
    sup-norm rate k_n; (iii) grid L_p norms of p_n w over their rates for
    p in {1, 2, 4}; (iv) the node-wise band
    |p_n' w| phi_n |(x-a_{-n})(a_n-x)|^{1/4}; and (v) the Markov-Bernstein
    ratio sup|p_n' w| / (h_n sup|p_n w|).  All quantities should sit in
    n-independent bands for admissible weights.
    """
    meas = verification_measure(spec, table)
    out = {}
    for n in ns:
        _check_degree(table, n)
        mrs_n = solve_mrs(spec, float(n))
        mrs_2n = solve_mrs(spec, 2.0 * n)
        scales = edge_scales(spec, n, mrs_n)
        grid = _sup_grid(spec, mrs_n, scales, per_side=per_side)
        w = np.sqrt(spec.w2(grid, checked=False))
        pvals, dvals = _kernels.pn_eval_pair(
            table.diag, table.offdiag, table.norm0, n, grid
        )
        damp = np.abs((grid - mrs_n.a_minus) * (mrs_n.a_plus - grid)) ** 0.25
        sup_damped = float(np.max(np.abs(pvals) * w * damp))
        sup_pw = float(np.max(np.abs(pvals) * w))
        sup_dpw = float(np.max(np.abs(dvals) * w))
        tmax = max(
            spec.T(mrs_n.a_plus) / mrs_n.a_plus,
            spec.T(mrs_n.a_minus) / abs(mrs_n.a_minus),
        )
        delta = mrs_n.delta
        k_n = n ** (1.0 / 6.0) * delta ** (-1.0 / 3.0) * tmax ** (1.0 / 6.0)
        h_n = n / math.sqrt(delta) * math.sqrt(tmax)

        pv_meas = _kernels.pn_eval(
            table.diag, table.offdiag, table.norm0, n, meas.points
        )
        wgrid = np.sqrt(meas.w2)
        lp = {}
        for p in (1, 2, 4):
            norm = float(
                np.dot(meas.gl_weights, np.abs(pv_meas * wgrid) ** p) ** (1.0 / p)
            )
            if p < 4:
                rate = delta ** (1.0 / p - 0.5)
            else:
                rate = delta ** -0.25 * math.log(n + 1.0) ** 0.25
            lp[p] = norm / rate

        rule = gauss_rule(table, n)
        dn = eval_pn_prime(table, n, rule.nodes)
        wn = np.sqrt(spec.w2(rule.nodes, checked=False))
        phin = phi_n(spec, n, rule.nodes, mrs_n, mrs_2n, scales)
        dampn = (
            np.abs((rule.nodes - mrs_n.a_minus) * (mrs_n.a_plus - rule.nodes)) ** 0.25
        )
        node_band = np.abs(dn) * wn * phin * dampn

        out[n] = {
            "sup_damped": sup_damped,
            "sup_pw_over_kn": sup_pw / k_n,
            "lp_normalized": lp,
            "node_band_min": float(np.min(node_band)),
            "node_band_max": float(np.max(node_band)),
            "markov_ratio": sup_dpw / (h_n * sup_pw),
        }
    return out
