"""Shared numerical primitives.

Gauss-Legendre rules, bracketed root finding, composite panel quadrature
with panel doubling, and a self-contained Airy function for real arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from scipy import optimize

from .errors import (
    BracketError,
    ConvergenceError,
    EvalError,
    InvalidArgumentError,
    RangeError,
)

DEFAULT_ORACLE_BITS = 256


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def scaled(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights mapped affinely onto ``[lo, hi]``."""
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights


@dataclass(frozen=True)
class PrecisionContext:
    bits: int = 53

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 53:
            raise InvalidArgumentError(f"precision bits must be an integer >= 53, got {self.bits}")

    @property
    def digits(self) -> int:
        return int(self.bits * math.log10(2))

    def workprec(self):
        return mpmath.workprec(self.bits)


@lru_cache(maxsize=64)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order: int) -> QuadratureRule:
    if int(order) != order or order < 2:
        raise InvalidArgumentError(f"Gauss-Legendre order must be an integer >= 2, got {order}")
    x, w = _leggauss(int(order))
    return QuadratureRule(nodes=x, weights=w, order=int(order))


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Brent's method on a sign-changing bracket; the root stays in ``[lo, hi]``."""
    if not lo < hi:
        raise InvalidArgumentError(f"need lo < hi, got [{lo}, {hi}]")

    def checked(x):
        y = f(x)
        if not math.isfinite(y):
            raise EvalError(f"non-finite function value {y} at x={x}")
        return y

    flo, fhi = checked(lo), checked(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3e}, {fhi:.3e}")
    return optimize.brentq(checked, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def bisect_vec(f: Callable[[np.ndarray], np.ndarray], lo, hi, iterations: int = 64) -> np.ndarray:
    """Elementwise bisection for many independent brackets at once.

    ``f`` must change sign on every ``[lo_i, hi_i]``; no check is made beyond
    the initial signs, and the midpoint of the final bracket is returned.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    flo = f(lo)
    if np.any(flo * f(hi) > 0):
        raise BracketError("bisect_vec: some brackets have no sign change")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, tol: float = 1e-12,
              order: int = 20, panels: int = 1, max_doublings: int = 16):
    """Composite Gauss-Legendre on ``[lo, hi]``; panel count doubles until two
    successive estimates agree to ``tol`` (absolute, scaled by ``1 + |I|``).

    ``f`` is vectorised and may return complex values.
    """
    rule = gauss_legendre(order)
    prev = _composite(f, lo, hi, rule, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = _composite(f, lo, hi, rule, panels)
        if abs(cur - prev) <= tol * (1.0 + abs(cur)):
            return cur
        prev = cur
    raise ConvergenceError(f"panel quadrature on [{lo}, {hi}] did not converge to {tol}")


def _composite(f, lo, hi, rule, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    x = (edges[:-1, None] + half[:, None] * (rule.nodes[None, :] + 1.0)).ravel()
    w = (half[:, None] * rule.weights[None, :]).ravel()
    return np.sum(w * f(x))


def line_integral(f: Callable[[np.ndarray], np.ndarray], z0: complex, z1: complex,
                  tol: float = 1e-12, order: int = 20, max_doublings: int = 16) -> complex:
    """Integral of ``f(z) dz`` along the straight segment from ``z0`` to ``z1``."""
    dz = z1 - z0
    return integrate(lambda t: f(z0 + t * dz) * dz, 0.0, 1.0, tol=tol, order=order,
                     max_doublings=max_doublings)


def graded_integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, singular: str,
                     order: int = 20, ratio: float = 0.15) -> float:
    """Gauss-Legendre on panels graded geometrically toward an integrable
    endpoint singularity (``singular`` is ``"lo"`` or ``"hi"``).

    Panels ``[r^(m+1), r^m]`` (in units of the interval length, measured from
    the singular end) continue until they reach round-off distance from the
    end; for a logarithmic singularity the neglected sliver is of order 1e-13.
    All nodes are evaluated in one vectorised call of ``f``.
    """
    if singular not in ("lo", "hi"):
        raise InvalidArgumentError(f"singular must be 'lo' or 'hi', got {singular!r}")
    if hi <= lo:
        return 0.0
    length = hi - lo
    end = lo if singular == "lo" else hi
    floor = 64 * np.finfo(float).eps * max(1.0, abs(end))
    levels = max(1, int(math.ceil(math.log(floor / length) / math.log(ratio))))
    outer = ratio ** np.arange(levels) * length
    inner = outer * ratio
    rule = gauss_legendre(order)
    half = 0.5 * (outer - inner)
    d = (inner[:, None] + half[:, None] * (rule.nodes[None, :] + 1.0)).ravel()
    w = (half[:, None] * rule.weights[None, :]).ravel()
    x = lo + d if singular == "lo" else hi - d
    return float(np.sum(w * f(x)))


# --- Airy function -------------------------------------------------------

_SERIES_LIMIT = 9.0


def _airy_series(x: float, scaled: bool = False) -> tuple[float, float]:
    zeta = (2.0 / 3.0) * abs(x) ** 1.5
    extra = int(2.0 * zeta / math.log(2.0)) + 24
    with mpmath.workprec(53 + extra):
        c1 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
        X = mpmath.mpf(x)
        # power series sum a_m x^m with a_{m+3} = a_m / ((m+2)(m+3))
        a = [c1, -c2, mpmath.mpf(0)]
        ai = a[0] + a[1] * X
        dai = a[1]
        xpow = X
        tiny = mpmath.mpf(2) ** (-(53 + extra))
        small = 0
        m = 1
        while small < 3:
            m += 1
            if m >= 3:
                a.append(a[m - 3] / (m * (m - 1)))
            dterm = m * a[m] * xpow
            xpow *= X
            term = a[m] * xpow
            ai += term
            dai += dterm
            small = small + 1 if abs(term) + abs(dterm) <= tiny * (abs(ai) + abs(dai)) else 0
        if scaled and x > 0:
            e = mpmath.exp(mpmath.mpf(2) / 3 * X ** mpmath.mpf(1.5))
            ai, dai = ai * e, dai * e
        return float(ai), float(dai)


def _airy_asymptotic_coeffs(zeta: float) -> tuple[list[float], list[float]]:
    u = [1.0]
    v = [1.0]
    k = 0
    while True:
        k += 1
        uk = u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        vk = -uk * (6 * k + 1) / (6 * k - 1)
        # stop at the smallest term (optimal truncation) or at round-off
        if abs(uk) / zeta ** k >= abs(u[-1]) / zeta ** (k - 1) or abs(uk) / zeta ** k < 1e-18:
            break
        u.append(uk)
        v.append(vk)
        if k > 60:
            break
    return u, v


def airy_ai_and_prime(x: float, scaled: bool = False) -> tuple[float, float]:
    """``(Ai(x), Ai'(x))`` for real ``x``.

    Maclaurin series in extended precision for ``|x| <= 9`` (the working
    precision grows with the cancellation ``exp(4/3 |x|^1.5)``), the standard
    asymptotic expansions beyond.  With ``scaled=True`` both values are
    multiplied by ``exp(2/3 x^1.5)`` for ``x > 0``, so they do not underflow.
    """
    x = float(x)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"Airy argument must be finite, got {x}")
    if abs(x) <= _SERIES_LIMIT:
        return _airy_series(x, scaled)
    ax = abs(x)
    zeta = (2.0 / 3.0) * ax ** 1.5
    if x < 0 and zeta * np.finfo(float).eps > 1.0:
        raise RangeError(f"Airy phase for x={x} exceeds double-precision resolution")
    u, v = _airy_asymptotic_coeffs(zeta)
    rsqpi = 1.0 / math.sqrt(math.pi)
    if x > 0:
        su = sum((-1) ** k * uk / zeta ** k for k, uk in enumerate(u))
        sv = sum((-1) ** k * vk / zeta ** k for k, vk in enumerate(v))
        e = 1.0 if scaled else math.exp(-zeta)
        return 0.5 * rsqpi * ax ** -0.25 * e * su, -0.5 * rsqpi * ax ** 0.25 * e * sv
    even_u = sum((-1) ** (k // 2) * u[k] / zeta ** k for k in range(0, len(u), 2))
    odd_u = sum((-1) ** (k // 2) * u[k] / zeta ** k for k in range(1, len(u), 2))
    even_v = sum((-1) ** (k // 2) * v[k] / zeta ** k for k in range(0, len(v), 2))
    odd_v = sum((-1) ** (k // 2) * v[k] / zeta ** k for k in range(1, len(v), 2))
    s, c = math.sin(zeta + math.pi / 4), math.cos(zeta + math.pi / 4)
    ai = rsqpi * ax ** -0.25 * (s * even_u - c * odd_u)
    dai = -rsqpi * ax ** 0.25 * (c * even_v + s * odd_v)
    return ai, dai


def airy_vec(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([airy_ai_and_prime(v) for v in x.ravel()]).reshape(x.shape + (2,))
    return out[..., 0], out[..., 1]
