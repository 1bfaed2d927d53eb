"""The transformation J(s) = c1 s + c0 - log((s - 1/2)/(s + 1/2)).

J maps the exterior of the closed region D conformally onto the plane minus
[a, b] (inverse I1) and D minus [-1/2, 1/2] onto the strip |Im z| < pi minus
[a, b] (inverse I2).  The boundary of D is gamma1 (upper arc) and gamma2
(its mirror image), and J maps both onto [a, b]; I+(x) and I-(x) are the
preimages of x on gamma1 and gamma2.

The shape of D only depends on c1: with J0 = J - c0, which is odd, gamma is
the level set Im J0 = 0 through the critical points s_a = -s_b.  It is
described here by the periodic parametrisation

    J0(xi(tau)) = b0 cos(tau),    b0 = J0(s_b),

with tau in [0, pi] running over gamma1 from s_b to s_a and tau in
[pi, 2 pi] over gamma2 back to s_b, i.e. counterclockwise.  xi is analytic
and 2 pi-periodic, so the trapezoid rule on equispaced tau is spectrally
accurate for contour integrals over gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, InvalidArgumentError
from .numerics import bisect_vec, find_root

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class MapParams:
    c1: float
    c0: float
    s_a: float
    s_b: float
    a: float
    b: float

    @property
    def b0(self) -> float:
        """Half-length of the support, (b - a)/2."""
        return 0.5 * (self.b - self.a)

    def J(self, s):
        return eval_J(self, s)

    def dJ(self, s):
        s = np.asarray(s, dtype=complex)
        return self.c1 - 1.0 / (s * s - 0.25)


def _log_ratio(s):
    return np.log((s - 0.5) / (s + 0.5))


def _J0_real(c1: float, s):
    return c1 * s - np.log((s - 0.5) / (s + 0.5))


def new_map(c1: float, c0: float) -> MapParams:
    if not (c1 > 0 and math.isfinite(c1)):
        raise InvalidArgumentError(f"c1 must be positive and finite, got {c1}")
    if not math.isfinite(c0):
        raise InvalidArgumentError(f"c0 must be finite, got {c0}")
    s_b = math.sqrt(0.25 + 1.0 / c1)
    b0 = float(_J0_real(c1, s_b))
    return MapParams(c1=float(c1), c0=float(c0), s_a=-s_b, s_b=s_b, a=c0 - b0, b=c0 + b0)


def eval_J(p: MapParams, s):
    """J(s) with the principal logarithm; rejects points on [-1/2, 1/2]."""
    s_arr = np.asarray(s, dtype=complex)
    on_cut = (s_arr.imag == 0) & (np.abs(s_arr.real) <= 0.5)
    if np.any(on_cut):
        raise DomainError("J is discontinuous on [-1/2, 1/2]; use a one-sided point")
    out = p.c1 * s_arr + p.c0 - _log_ratio(s_arr)
    return out if out.ndim else complex(out)


# --- the curve gamma -----------------------------------------------------

def _height_fn(c1: float, v):
    """h(v) = 1/4 + v cot(c1 v) - v^2, so that gamma1 is u^2 = h(v)."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        vcot = np.where(v == 0.0, 1.0 / c1, v / np.tan(c1 * np.where(v == 0.0, 1.0, v)))
    return 0.25 + vcot - v * v


@lru_cache(maxsize=256)
def _apex_height(c1: float) -> float:
    # h decreases from 1/4 + 1/c1 at v=0 to -inf at v=pi/c1
    top = math.pi / c1
    return find_root(lambda v: float(_height_fn(c1, v)), 0.0, top * (1 - 1e-12), tol=1e-15)


def gamma_height(p: MapParams, u: float) -> float:
    """Height v of gamma1 above the real point u in [s_a, s_b]."""
    if not (p.s_a - 1e-14 <= u <= p.s_b + 1e-14):
        raise DomainError(f"u={u} outside [s_a, s_b]=[{p.s_a}, {p.s_b}]")
    target = u * u
    if target >= p.s_b ** 2:
        return 0.0
    top = math.pi / p.c1
    return find_root(lambda v: float(_height_fn(p.c1, v)) - target, 0.0, top * (1 - 1e-12), tol=1e-15)


def _clog1p(z):
    """log(1 + z) for complex z, accurate for small |z|."""
    x, y = z.real, z.imag
    return 0.5 * np.log1p(2 * x + x * x + y * y) + 1j * np.arctan2(y, 1 + x)


def _edge_offset_residual(c1: float, s_b: float, d):
    """J0(s_b + d) - J0(s_b) and its derivative J0'(s_b + d), without cancellation.

    The linear terms cancel because J0'(s_b) = 0, so for small d the Taylor
    series (convergent for |d| < s_b - 1/2) is summed directly.
    """
    alpha, beta = 1.0 / (s_b - 0.5), 1.0 / (s_b + 0.5)
    d = np.asarray(d, dtype=complex)
    small = np.abs(alpha * d) < 0.5
    val = np.empty_like(d)
    der = np.empty_like(d)
    ds = d[small]
    acc_v = np.zeros_like(ds)
    acc_d = np.zeros_like(ds)
    ak, bk = alpha, beta
    power = np.ones_like(ds)
    for k in range(2, 60):
        ak *= alpha
        bk *= beta
        power = power * ds
        coef = (-1) ** (k + 1) * (bk - ak)
        acc_d += coef * power
        acc_v += coef * power * ds / k
    val[small], der[small] = acc_v, acc_d
    dl = d[~small]
    val[~small] = c1 * dl - _clog1p(alpha * dl) + _clog1p(beta * dl)
    sl = s_b + dl
    der[~small] = c1 * (sl - s_b) * (sl + s_b) / (sl * sl - 0.25)
    return val, der


def _gamma1_right(c1: float, tau) -> np.ndarray:
    """Offsets d = xi - s_b of gamma1 points for tau in [0, pi/2] (vectorised)."""
    tau = np.asarray(tau, dtype=float)
    s_b = math.sqrt(0.25 + 1.0 / c1)
    b0 = float(_J0_real(c1, s_b))
    vtop = _apex_height(c1)
    target = b0 * np.cos(tau)

    def re_j0(v):
        u = np.sqrt(np.maximum(_height_fn(c1, v), 0.0))
        s = u + 1j * v
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(v == 0.0, b0, (c1 * s - _log_ratio(s)).real)
        return val - target

    v = bisect_vec(re_j0, np.zeros_like(target), np.full_like(target, vtop), iterations=60)
    d = np.sqrt(np.maximum(_height_fn(c1, v), 0.0)) - s_b + 1j * v
    # Newton polish of J0(s_b + d) - b0 = -2 b0 sin^2(tau/2)
    rhs = -2 * b0 * np.sin(0.5 * tau) ** 2
    for _ in range(4):
        val, der = _edge_offset_residual(c1, s_b, d)
        res = val - rhs
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = d - res / der
        cval, _ = _edge_offset_residual(c1, s_b, np.where(np.isfinite(cand), cand, d))
        better = np.isfinite(cand) & (cand.imag >= 0) & (np.abs(cval - rhs) < np.abs(res))
        d = np.where(better, cand, d)
    return d


def _gamma1_points(c1: float, tau) -> np.ndarray:
    """Points xi(tau) on gamma1 for tau in [0, pi] (vectorised)."""
    tau = np.asarray(tau, dtype=float)
    s_b = math.sqrt(0.25 + 1.0 / c1)
    left = np.cos(tau) < 0
    xi = s_b + _gamma1_right(c1, np.where(left, math.pi - tau, tau))
    # tau -> pi - tau is s -> -conj(s)
    return np.where(left, -np.conj(xi), xi)


@dataclass(frozen=True)
class Curve:
    """Trapezoid discretisation of gamma at tau_k = (k + 1/2) 2 pi / N."""

    c1: float
    b0: float
    tau: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray

    @property
    def size(self) -> int:
        return self.tau.size

    @property
    def h(self) -> float:
        return 2 * math.pi / self.size

    def integrate(self, values) -> complex:
        """(1/2 pi i) * closed integral of f(xi) d xi given f at the nodes."""
        return complex(np.sum(values * self.dxi) * self.h / (2j * math.pi))


@lru_cache(maxsize=64)
def curve_nodes(c1: float, size: int) -> Curve:
    if size % 4:
        raise InvalidArgumentError("curve node count must be a multiple of 4")
    s_b = math.sqrt(0.25 + 1.0 / c1)
    b0 = float(_J0_real(c1, s_b))
    tau = (np.arange(size) + 0.5) * (2 * math.pi / size)
    quarter = size // 4
    d = _gamma1_right(c1, tau[:quarter])
    _, dj = _edge_offset_residual(c1, s_b, d)
    right = s_b + d
    # mirror images: tau -> pi - tau is s -> -conj(s), tau -> 2 pi - tau is conjugation;
    # J0' is even and real, so it transforms the same way
    upper = np.concatenate([right, -np.conj(right[::-1])])
    dj_upper = np.concatenate([dj, np.conj(dj[::-1])])
    xi = np.concatenate([upper, np.conj(upper[::-1])])
    dJ = np.concatenate([dj_upper, np.conj(dj_upper[::-1])])
    dxi = -b0 * np.sin(tau) / dJ
    for arr in (tau, xi, dxi):
        arr.setflags(write=False)
    return Curve(c1=c1, b0=b0, tau=tau, xi=xi, dxi=dxi)


@lru_cache(maxsize=64)
def curve(c1: float, tol: float = 1e-15, max_size: int = 1 << 15) -> Curve:
    """Curve discretisation whose Fourier coefficients have decayed to ``tol``."""
    size = 64
    while size <= max_size:
        cv = curve_nodes(c1, size)
        coeffs = np.abs(np.fft.fft(cv.xi)) / size
        tail = coeffs[size // 2 - size // 8: size // 2 + size // 8].max()
        if tail <= tol * coeffs.max():
            return cv
        size *= 2
    raise ConvergenceError(f"curve for c1={c1} not resolved with {max_size} nodes")


# --- membership and inverse branches ------------------------------------

def in_domain_D(p: MapParams, s) -> bool | np.ndarray:
    """Open-interior membership of D (points on gamma count as outside)."""
    s_arr = np.asarray(s, dtype=complex)
    u, v = s_arr.real, np.abs(s_arr.imag)
    # v < height(u)  <=>  h(v) > u^2, since h decreases on [0, pi/c1)
    inside = (u > p.s_a) & (u < p.s_b) & (v < math.pi / p.c1) & (_height_fn(p.c1, v) > u * u)
    return bool(inside) if inside.ndim == 0 else inside


def boundary_inverse(p: MapParams, x, side: str = "plus"):
    """I+(x) on gamma1 (side='plus') or I-(x) = conj I+(x) on gamma2."""
    if side not in ("plus", "minus"):
        raise InvalidArgumentError(f"side must be 'plus' or 'minus', got {side!r}")
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr <= p.a) | (x_arr >= p.b)):
        raise DomainError("boundary_inverse needs x strictly inside (a, b)")
    tau = np.arccos(np.clip((x_arr - p.c0) / p.b0, -1.0, 1.0))
    s = _gamma1_points(p.c1, np.atleast_1d(tau)).reshape(x_arr.shape)
    if side == "minus":
        s = np.conj(s)
    return s if s.ndim else complex(s)


def _newton(p: MapParams, z: complex, s: complex, accept, max_steps: int = 100) -> complex:
    """Safeguarded Newton for J(s) = z; steps leaving the accepted region are halved."""
    tol = RESIDUAL_TOL * (1 + abs(z))
    for _ in range(max_steps):
        r = p.c1 * s + p.c0 - complex(_log_ratio(s)) - z
        if abs(r) <= 0.1 * tol:
            return s
        d = p.c1 - 1.0 / (s * s - 0.25)
        if d == 0:
            raise ConvergenceError(f"Newton hit a critical point of J at s={s}")
        step = r / d
        for _ in range(60):
            cand = s - step
            if accept(cand):
                break
            step *= 0.5
        else:
            raise ConvergenceError(f"Newton step for J(s)={z} cannot stay in the branch region")
        s = cand
    r = p.c1 * s + p.c0 - complex(_log_ratio(s)) - z
    if abs(r) <= tol:
        return s
    raise ConvergenceError(f"Newton for J(s)={z} did not converge (residual {abs(r):.2e})")


def _continue(p: MapParams, path, s0: complex, accept) -> complex:
    """Track a root of J(s) = z(t) along a path of z values, refining steps on failure."""
    s = s0
    z_prev = path[0]
    s = _newton(p, z_prev, s, accept)
    for z_next in path[1:]:
        pending = [z_next]
        depth = 0
        while pending:
            target = pending[-1]
            try:
                s_new = _newton(p, target, s, accept, max_steps=30)
            except ConvergenceError:
                depth += 1
                if depth > 30:
                    raise
                pending.append(0.5 * (z_prev + target))
                continue
            s, z_prev = s_new, target
            pending.pop()
    return s


def invert_I1(p: MapParams, z) -> complex:
    """The preimage of z outside the closed region D."""
    z = complex(z)
    if z.imag == 0.0:
        x = z.real
        if p.a <= x <= p.b:
            raise DomainError(f"I1 is not defined on the support [a, b]; got {x}")
        f = lambda s: float(_J0_real(p.c1, s)) + p.c0 - x
        if x > p.b:
            hi = p.s_b + 1.0
            while f(hi) < 0:
                hi = p.s_b + 2 * (hi - p.s_b)
            return complex(find_root(f, p.s_b, hi, tol=1e-15), 0.0)
        lo = p.s_a - 1.0
        while f(lo) > 0:
            lo = p.s_a - 2 * (p.s_a - lo)
        return complex(find_root(f, lo, p.s_a, tol=1e-15), 0.0)
    sign = 1.0 if z.imag > 0 else -1.0

    def accept(s):
        return (s.imag * sign > 0) and not in_domain_D(p, s)

    far = 4.0 * p.c1 * p.s_b + 2.0 * p.b0 + 10.0
    if abs(z - p.c0) > far:
        return _newton(p, z, (z - p.c0) / p.c1, accept)
    top = z.real + 1j * sign * far
    steps = 40
    path = [top + (z - top) * k / steps for k in range(steps + 1)]
    return _continue(p, path, (top - p.c0) / p.c1, accept)


def invert_I2(p: MapParams, z) -> complex:
    """The preimage of z in D minus [-1/2, 1/2]; z must lie in |Im z| < pi."""
    z = complex(z)
    if abs(z.imag) >= math.pi:
        raise DomainError(f"I2 needs |Im z| < pi, got Im z = {z.imag}")
    if z.imag == 0.0:
        x = z.real
        if p.a <= x <= p.b:
            raise DomainError(f"I2 is not defined on the support [a, b]; got {x}")
        f = lambda s: float(_J0_real(p.c1, s)) + p.c0 - x
        if x > p.b:
            # J decreases on (1/2, s_b) from +inf to b
            lo = 0.5 + min(0.25, math.exp(p.c1 / 2 + p.c0 - x))
            while f(lo) < 0:
                lo = 0.5 + 0.5 * (lo - 0.5)
                if lo == 0.5:
                    raise ConvergenceError(f"I2({x}) is too close to 1/2 to resolve")
            if lo >= p.s_b:
                lo = 0.5 + 0.5 * (p.s_b - 0.5)
            return complex(find_root(f, lo, p.s_b, tol=1e-16), 0.0)
        hi = -0.5 - min(0.25, math.exp(x + p.c1 / 2 - p.c0))
        while f(hi) > 0:
            hi = -0.5 - 0.5 * (-0.5 - hi)
            if hi == -0.5:
                raise ConvergenceError(f"I2({x}) is too close to -1/2 to resolve")
        if hi <= p.s_a:
            hi = -0.5 - 0.5 * (-0.5 - p.s_a)
        return complex(find_root(f, p.s_a, hi, tol=1e-16), 0.0)
    sign = 1.0 if z.imag > 0 else -1.0

    def accept(s):
        # upper half of the strip maps to the lower half of D
        return (s.imag * sign < 0) and in_domain_D(p, s)

    shift = p.c1 / 2 + p.c0
    start_re = max(p.b, z.real) + 8.0
    if z.real >= start_re - 1e-12:
        return _newton(p, z, 0.5 + math.exp(shift) * np.exp(-z), accept)
    # travel at a safe height and descend vertically, keeping clear of the
    # branch points at a and b when Im z is tiny
    height = sign * max(abs(z.imag), 1.0)
    zs = complex(start_re, height)
    corner = complex(z.real, height)
    steps = max(8, int(math.ceil((zs.real - z.real) / (0.05 * max(p.b0, 0.2)))))
    path = [zs + (corner - zs) * k / steps for k in range(steps + 1)]
    drop = corner.imag - z.imag
    if drop != 0.0:
        down = max(8, int(math.ceil(abs(drop) / 0.05)))
        path += [corner - 1j * drop * k / down for k in range(1, down + 1)]
    return _continue(p, path, 0.5 + math.exp(shift) * np.exp(-zs), accept)
