"""Exact small-n multiple orthogonal polynomials from moment systems.

p_j (monic in x) satisfies  int p_j(x) e^{kx} e^{-nV(x)} dx = 0  for k < j,
q_j (monic in e^x) satisfies int x^i q_j(e^x) e^{-nV(x)} dx = 0  for i < j,
and h_j = int p_j(x) q_j(e^x) e^{-nV(x)} dx.  All three reduce to the moments

    m[j][k] = int x^j e^{kx} e^{-nV(x)} dx,

which are exponentially ill-conditioned in n, so everything here runs in
extended precision (mpmath).  The module also carries the steepest-descent
integral representation of p_n for V = x^2/2, zero extraction, and the
Kolmogorov distance to the equilibrium distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from mpmath.calculus.quadrature import GaussLegendre
from mpmath.libmp import to_fixed

from .equilibrium import EquilibriumData
from .errors import (
    CoalescenceError,
    ConvergenceError,
    DegeneracyError,
    InvalidArgumentError,
    RangeError,
)
from .field import FieldSpec
from .jmap import boundary_inverse, invert_I1, new_map
from .numerics import DEFAULT_ORACLE_BITS, PrecisionContext, integrate

_GUARD_BITS = 32


def _ctx(bits: int) -> mpmath.context.MPContext:
    ctx = mpmath.mp.clone()
    ctx.prec = bits
    return ctx


@dataclass(frozen=True)
class MomentTable:
    n: int
    jmax: int
    kmax: int
    m: tuple  # m[j][k], mpf at precision.bits + guard bits
    precision: PrecisionContext
    field: FieldSpec
    window: tuple[float, float] = (0.0, 0.0)

    @property
    def ctx(self):
        return _ctx(self.precision.bits + _GUARD_BITS)


@dataclass(frozen=True)
class ExactPoly:
    """Monic polynomial in x (basis 'monomial_x') or in e^x (basis 'exponential')."""

    basis: str
    degree: int
    coeffs: tuple  # ascending, coeffs[degree] == 1
    n: int
    precision: PrecisionContext
    h: object = None

    @property
    def ctx(self):
        return _ctx(self.precision.bits + _GUARD_BITS)

    def eval_mp(self, z):
        """Value at z (for the exponential basis: q(e^z)) as an mpmath number."""
        ctx = self.ctx
        z = ctx.mpmathify(z)
        var = z if self.basis == "monomial_x" else ctx.exp(z)
        return ctx.polyval(list(reversed(self.coeffs)), var)

    def __call__(self, z):
        v = self.eval_mp(z)
        return complex(v) if isinstance(v, mpmath.mpc) else float(v)

    def log_abs(self, z) -> float:
        return float(self.ctx.log(abs(self.eval_mp(z))))


# --- moments ---------------------------------------------------------------

@lru_cache(maxsize=16)
def _gl_nodes(bits: int, degree: int):
    ctx = _ctx(bits)
    return tuple(GaussLegendre(ctx).calc_nodes(degree, bits))


def _window(field: FieldSpec, n: int, jmax: int, kmax: int, bits: int) -> tuple[float, float]:
    """Interval outside of which every integrand is below 2^-bits of its own peak."""
    js = np.arange(jmax + 1)[:, None, None]
    ks = np.arange(kmax + 1)[None, :, None]
    drop = bits * math.log(2) + 20.0
    span = 4.0
    for _ in range(20):
        lam = np.linspace(-span, span, 8001)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = js * np.log(np.abs(lam)) + ks * lam - n * field.V(lam)
        f = np.where(np.isnan(f), -np.inf, f)
        above = (f >= f.max(axis=-1, keepdims=True) - drop).any(axis=(0, 1))
        idx = np.nonzero(above)[0]
        if idx[0] > 0 and idx[-1] < lam.size - 1:
            step = lam[1] - lam[0]
            return float(lam[idx[0]] - 2 * step), float(lam[idx[-1]] + 2 * step)
        span *= 2
    raise RangeError("moment integrands do not decay inside any representable window")


def _log_abs_moments(field, n, jmax, kmax, xs, ws) -> np.ndarray:
    """log of int |x|^j e^{kx} e^{-nV} dx in double precision (error-test scale)."""
    x = np.asarray(xs, dtype=float)
    with np.errstate(divide="ignore"):
        base = np.log(np.asarray(ws, dtype=float)) - n * field.V(x)
        logx = np.log(np.abs(x))
    f = (np.arange(jmax + 1)[:, None, None] * logx
         + np.arange(kmax + 1)[None, :, None] * x + base)
    f = np.where(np.isnan(f), -np.inf, f)
    top = f.max(axis=-1)
    return top + np.log(np.exp(f - top[..., None]).sum(axis=-1))


def _moment_sums(field, n, jmax, kmax, lo, hi, panels, nodes, bits):
    """All m[j][k] on one panel layout.

    Node values are rounded to fixed point (integers scaled by 2^P) and the
    sums are exact integer dot products; P is chosen so the rounding stays
    below 2^-bits of every absolute moment.
    """
    ref = _ctx(bits)
    width = (ref.mpf(hi) - ref.mpf(lo)) / panels
    xs, ws = [], []
    for p in range(panels):
        left = ref.mpf(lo) + p * width
        for x, w in nodes:
            xs.append(left + width * (x + 1) / 2)
            ws.append(w * width / 2)
    log_scale = _log_abs_moments(field, n, jmax, kmax, xs, ws)
    # fixed-point resolution: a rounding unit in either factor, multiplied by
    # the largest entry of the other, must stay below 2^-bits of the moment
    x = np.asarray(xs, dtype=float)
    with np.errstate(divide="ignore"):
        log_a = np.arange(jmax + 1) * np.log(max(np.abs(x).max(), 1.0))
        log_w = np.log(np.asarray(ws, dtype=float)) - n * field.V(x)
    log_b = (np.arange(kmax + 1)[:, None] * x[None, :] + log_w[None, :]).max(axis=1)
    excess = np.maximum(np.maximum(log_a[:, None], log_b[None, :]), 0.0) - log_scale
    frac = bits + 16 + int(max(0.0, excess.max()) / math.log(2)) + len(xs).bit_length()
    grow = max(log_a.max(), log_b.max(), 0.0) / math.log(2)
    ctx = _ctx(frac + max(0, int(grow)) + 32)
    xs = [ctx.mpf(x) for x in xs]
    coeffs = [ctx.mpf(c) for c in reversed(field.coeffs)]
    def fixed(values):
        return np.array([to_fixed(v._mpf_, frac) for v in values], dtype=object)

    ex = [ctx.exp(x) for x in xs]
    row = [w * ctx.exp(-n * ctx.polyval(coeffs, x)) for x, w in zip(xs, ws)]
    rows_k = [fixed(row)]
    for _ in range(kmax):
        row = [r * e for r, e in zip(row, ex)]
        rows_k.append(fixed(row))
    row = [ctx.one] * len(xs)
    rows_j = [fixed(row)]
    for _ in range(jmax):
        row = [r * x for r, x in zip(row, xs)]
        rows_j.append(fixed(row))
    raw = np.dot(np.array(rows_j), np.array(rows_k).T)
    out = _ctx(bits)
    m = [[out.ldexp(out.mpf(int(raw[j, k])), -2 * frac) for k in range(kmax + 1)]
         for j in range(jmax + 1)]
    return m, log_scale


_TABLE_CACHE: dict = {}


def compute_moments(field: FieldSpec, n: int, jmax: int, kmax: int,
                    precision: PrecisionContext | int = DEFAULT_ORACLE_BITS) -> MomentTable:
    """Moment table by composite Gauss-Legendre in extended precision.

    Panels are doubled until every entry is stable to 2^-(bits+8) relative to
    the integral of the absolute integrand.
    """
    if isinstance(precision, int):
        precision = PrecisionContext(precision)
    if n < 1 or jmax < 0 or kmax < 0:
        raise InvalidArgumentError("need n >= 1 and nonnegative jmax, kmax")
    key = (field.coeffs, n, jmax, kmax, precision.bits)
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    # reuse a larger table for the same field, n and precision
    for (c, nn, jj, kk, bb), tab in _TABLE_CACHE.items():
        if (c, nn, bb) == (field.coeffs, n, precision.bits) and jj >= jmax and kk >= kmax:
            sub = tuple(tuple(row[: kmax + 1]) for row in tab.m[: jmax + 1])
            return MomentTable(n, jmax, kmax, sub, precision, field, tab.window)
    bits = precision.bits + _GUARD_BITS
    lo, hi = _window(field, n, jmax, kmax, precision.bits)
    nodes = _gl_nodes(bits, 5)
    # start with panels about one Gaussian width wide
    curv = max(float(np.max(np.abs(field.d2V(np.linspace(lo, hi, 201))))), 1e-3)
    panels = max(4, int(math.ceil((hi - lo) * math.sqrt(n * curv) / 2.0)))
    prev, _ = _moment_sums(field, n, jmax, kmax, lo, hi, panels, nodes, bits)
    ctx = _ctx(bits)
    log_tol = -(precision.bits + 8) * math.log(2)
    for _ in range(8):
        panels *= 2
        cur, log_scale = _moment_sums(field, n, jmax, kmax, lo, hi, panels, nodes, bits)
        worst = max(float(ctx.log(abs(cur[j][k] - prev[j][k]) + ctx.mpf(2) ** (-4 * bits)))
                    - log_scale[j, k] for j in range(jmax + 1) for k in range(kmax + 1))
        if worst <= log_tol:
            table = MomentTable(n, jmax, kmax, tuple(tuple(r) for r in cur), precision, field, (lo, hi))
            if not table.m[0][0] > 0:
                raise RangeError("m[0][0] is not positive")
            _TABLE_CACHE[key] = table
            return table
        prev = cur
    raise ConvergenceError(f"moment quadrature did not reach {precision.bits} bits")


# --- polynomials -------------------------------------------------------------

def _solve(ctx, A, rhs):
    try:
        return ctx.lu_solve(ctx.matrix(A), ctx.matrix(rhs))
    except ZeroDivisionError as exc:
        raise DegeneracyError("moment system is singular") from exc


def _residual_tol(ctx, precision: PrecisionContext, j: int):
    return ctx.mpf(10) ** (-(precision.digits - j))


def exact_p(moments: MomentTable, j: int) -> ExactPoly:
    """Type II polynomial p_j: monic of degree j, orthogonal to e^{kx} for k < j."""
    if j < 0 or j > moments.jmax or j - 1 > moments.kmax:
        raise InvalidArgumentError(f"moment table too small for p_{j}")
    ctx = moments.ctx
    m = moments.m
    if j == 0:
        return ExactPoly("monomial_x", 0, (ctx.one,), moments.n, moments.precision)
    A = [[m[i][k] for i in range(j)] for k in range(j)]
    rhs = [-m[j][k] for k in range(j)]
    c = _solve(ctx, A, rhs)
    coeffs = tuple(c[i] for i in range(j)) + (ctx.one,)
    tol = _residual_tol(ctx, moments.precision, j)
    for k in range(j):
        r = ctx.fsum(coeffs[i] * m[i][k] for i in range(j + 1))
        if abs(r) > tol * abs(m[0][k]):
            raise DegeneracyError(f"p_{j} orthogonality residual {ctx.nstr(r, 3)} at k={k}")
    return ExactPoly("monomial_x", j, coeffs, moments.n, moments.precision)


def exact_q(moments: MomentTable, j: int, route: str = "linear") -> ExactPoly:
    """Type I polynomial q_j: monic in e^x of degree j, orthogonal to x^i for i < j.

    ``route='determinant'`` expands the bordered moment determinant along its
    last row instead of solving the linear system.
    """
    if j < 0 or j > moments.kmax or j - 1 > moments.jmax:
        raise InvalidArgumentError(f"moment table too small for q_{j}")
    ctx = moments.ctx
    m = moments.m
    if j == 0:
        return ExactPoly("exponential", 0, (ctx.one,), moments.n, moments.precision)
    if route == "linear":
        A = [[m[i][k] for k in range(j)] for i in range(j)]
        rhs = [-m[i][j] for i in range(j)]
        d = _solve(ctx, A, rhs)
        coeffs = tuple(d[k] for k in range(j)) + (ctx.one,)
    elif route == "determinant":
        full = [[m[i][k] for k in range(j + 1)] for i in range(j)]
        denom = ctx.det(ctx.matrix([row[:j] for row in full]))
        if denom == 0:
            raise DegeneracyError("moment determinant vanishes")
        coeffs = []
        for k in range(j + 1):
            minor = ctx.matrix([row[:k] + row[k + 1:] for row in full])
            coeffs.append((-1) ** (j + k) * ctx.det(minor) / denom)
        coeffs = tuple(coeffs)
    else:
        raise InvalidArgumentError(f"route must be 'linear' or 'determinant', got {route!r}")
    tol = _residual_tol(ctx, moments.precision, j)
    for i in range(j):
        r = ctx.fsum(coeffs[k] * m[i][k] for k in range(j + 1))
        if abs(r) > tol * abs(m[i][j]):
            raise DegeneracyError(f"q_{j} orthogonality residual {ctx.nstr(r, 3)} at i={i}")
    return ExactPoly("exponential", j, coeffs, moments.n, moments.precision)


def pairing(moments: MomentTable, p: ExactPoly, q: ExactPoly):
    """int p(x) q(e^x) e^{-nV(x)} dx as a bilinear form in the moments."""
    ctx = moments.ctx
    m = moments.m
    return ctx.fsum(p.coeffs[i] * q.coeffs[k] * m[i][k]
                    for i in range(p.degree + 1) for k in range(q.degree + 1))


def exact_h(moments: MomentTable, p: ExactPoly, q: ExactPoly):
    if p.degree != q.degree or p.n != q.n:
        raise InvalidArgumentError("p and q must have the same degree and n")
    return pairing(moments, p, q)


def exact_family(field: FieldSpec, n: int, j: int,
                 precision: PrecisionContext | int = DEFAULT_ORACLE_BITS):
    """(p_j, q_j, h_j) with p, q carrying h, from one moment table."""
    tab = compute_moments(field, n, j, j, precision)
    p, q = exact_p(tab, j), exact_q(tab, j)
    h = exact_h(tab, p, q)
    return (ExactPoly(p.basis, p.degree, p.coeffs, n, p.precision, h),
            ExactPoly(q.basis, q.degree, q.coeffs, n, q.precision, h), h)


# --- steepest-descent integral for V = x^2/2 ------------------------------------

_QUAD_MAP = new_map(1.0, 0.5)


def _log_integrand(s, x: float, n: int, mode: str):
    s = np.asarray(s, dtype=complex)
    if mode == "full_sum":
        shifts = 0.5 - np.arange(n) / n
        logs = np.log(s[..., None] + shifts).sum(axis=-1)
        return 0.5 * n * (s + 0.5 - x) ** 2 + logs
    sp, sm = s + 0.5, s - 0.5
    F = 0.5 * (sp - x) ** 2 + sp * np.log(sp) - sm * np.log(sm) - 1.0
    return n * F + 0.5 * np.log(sp / sm)


def saddle_p_quadratic(x: float, n: int, mode: str = "full_sum") -> float:
    """p_n^{(n)}(x) for V = x^2/2 from its integral over a vertical line.

    The line passes through the saddle I1(x) outside the support, or through
    the conjugate pair of saddles I+(x), I-(x) inside it.  ``full_sum`` uses
    the exact finite product; ``limit_phase`` its large-n limit with the
    half-step correction log sqrt((s+1/2)/(s-1/2)).
    """
    if mode not in ("full_sum", "limit_phase"):
        raise InvalidArgumentError(f"mode must be 'full_sum' or 'limit_phase', got {mode!r}")
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    p = _QUAD_MAP
    x = float(x)
    width = p.b - p.a
    if min(abs(x - p.a), abs(x - p.b)) < 0.02 * width:
        raise CoalescenceError(f"x={x} is within 0.02(b-a) of an edge where the saddles merge")
    if p.a < x < p.b:
        saddle = complex(boundary_inverse(p, x))
        sigma, peaks = saddle.real, [saddle.imag, -saddle.imag]
    else:
        sigma, peaks = invert_I1(p, x).real, [0.0]
    f = lambda y: _log_integrand(sigma + 1j * np.asarray(y), x, n, mode)
    ref = max(f(np.array(peaks)).real)
    # extend the line until the integrand has dropped by e^-45
    ys = np.linspace(0, 1, 201)
    top = 1.0
    while f(np.array([top, -top])).real.max() - ref > -45.0:
        top *= 1.5
    ys = np.linspace(-top, top, 4001)
    logs = f(ys).real - ref
    keep = np.nonzero(logs > -45.0)[0]
    lo, hi = ys[max(keep[0] - 1, 0)], ys[min(keep[-1] + 1, ys.size - 1)]
    g = lambda y: np.exp(f(y) - ref)
    cuts = sorted({lo, hi, *[c for c in peaks if lo < c < hi]})
    total = 0j
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += integrate(g, a, b, tol=1e-13, order=24)
    val = math.sqrt(n / (2 * math.pi)) * total
    return float(val.real * math.exp(ref))


# --- zeros and counting measures ---------------------------------------------

def real_zeros(p: ExactPoly, lo: float, hi: float, tol: float = 1e-12) -> list[float]:
    """All sign changes of p on [lo, hi], refined by bisection."""
    if not lo < hi:
        raise InvalidArgumentError("need lo < hi")
    if p.degree == 0:
        return []
    ctx = p.ctx
    grid = np.linspace(lo, hi, 50 * p.degree + 1)
    vals = [ctx.sign(p.eval_mp(x)) for x in grid]
    zeros = []
    for i in range(grid.size - 1):
        if vals[i] == 0:
            zeros.append(float(grid[i]))
            continue
        if vals[i] * vals[i + 1] < 0:
            a, b, sa = float(grid[i]), float(grid[i + 1]), vals[i]
            while b - a > tol:
                mid = 0.5 * (a + b)
                sm = ctx.sign(p.eval_mp(mid))
                if sm == 0:
                    a = b = mid
                    break
                if sm == sa:
                    a = mid
                else:
                    b = mid
            zeros.append(0.5 * (a + b))
    if vals[-1] == 0:
        zeros.append(float(grid[-1]))
    return zeros


def counting_measure_distance(zeros, eq: EquilibriumData) -> float:
    """Kolmogorov distance between the empirical zero distribution and mu_V."""
    z = np.sort(np.asarray(zeros, dtype=float))
    if z.size == 0:
        raise InvalidArgumentError("need at least one zero")
    n = z.size
    F = eq.cdf(z)
    left = np.arange(n) / n
    right = np.arange(1, n + 1) / n
    dist = max(np.max(np.abs(F - left)), np.max(np.abs(F - right)))
    mids = 0.5 * (z[1:] + z[:-1])
    if mids.size:
        dist = max(dist, np.max(np.abs(eq.cdf(mids) - right[:-1])))
    return float(dist)
