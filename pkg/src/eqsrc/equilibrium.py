"""Equilibrium measure of a one-cut external field.

Pipeline: solve for the map parameters (c1, c0), build the density from the
Cauchy transform of U = V'(J) over the curve gamma, then the g-functions,
the constant ell, phi and the edge variables f_a, f_b.

Conventions used throughout.  Points of the support are written
x = c0 + b0 cos(tau) with tau in [0, pi] (tau = 0 at b).  The weight

    w(tau) = psi(c0 + b0 cos tau) * b0 sin tau

is even and analytic, and is stored by its cosine (Chebyshev) coefficients
``cheb``: w = sum_m cheb[m] cos(m tau).  Then psi(x) dx = w(tau) dtau, the
total mass is pi*cheb[0], and with rho the exterior Joukowski variable of
(z - c0)/b0,

    g(z) = pi cheb[0] log(b0 rho / 2) - pi sum_{m>=1} cheb[m] rho^(-m) / m.

The difference S(z) = g~(z) - g(z) = int (y + L(z - y)) psi(y) dy with
L(w) = log((e^w - 1)/w) is analytic across the support, so all one-sided
boundary behaviour sits in g.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import (
    ConvergenceError,
    DomainError,
    InvalidArgumentError,
    NearSingularError,
    NoSolutionError,
    RegularityError,
)
from .field import FieldSpec
from .jmap import (
    MapParams,
    boundary_inverse,
    curve,
    curve_nodes,
    in_domain_D,
    new_map,
)
from .numerics import find_root, graded_integrate

__all__ = [
    "EquilibriumData",
    "FieldSpec",
    "build_equilibrium",
    "check_one_cut_regular",
    "compute_ell",
    "contour_integral_Vprime",
    "density_psi",
    "energy",
    "eval_M",
    "eval_f_edge",
    "eval_g",
    "eval_phi",
    "solve_c0",
    "solve_parameters",
]


# --- the parameter system -----------------------------------------------

def _contour_mean(c1: float, values_fn, tol: float = 1e-12) -> complex:
    """(1/2 pi i) closed integral over gamma, refined until two grids agree."""
    cv = curve(c1)
    prev = cv.integrate(values_fn(cv))
    size = cv.size
    while size < (1 << 16):
        size *= 2
        cv = curve_nodes(c1, size)
        cur = cv.integrate(values_fn(cv))
        if abs(cur - prev) <= tol * (1 + abs(cur)):
            return cur
        prev = cur
    raise ConvergenceError(f"contour integral for c1={c1} did not converge")


def contour_integral_Vprime(field: FieldSpec, c1: float, c0: float, weight: str = "one") -> float:
    """(1/2 pi i) closed integral over gamma of V'(J(s)) w(s) ds, with w = 1 or 1/(s - 1/2)."""
    if weight not in ("one", "pole_at_half"):
        raise InvalidArgumentError(f"weight must be 'one' or 'pole_at_half', got {weight!r}")
    if not c1 > 0:
        raise InvalidArgumentError(f"c1 must be positive, got {c1}")

    def values(cv):
        u = field.dV(c0 + cv.b0 * np.cos(cv.tau))
        return u if weight == "one" else u / (cv.xi - 0.5)

    return _contour_mean(float(c1), values).real


def solve_c0(field: FieldSpec, c1: float, tol: float = 1e-13) -> float:
    """The c0 for which the pole-weighted contour integral equals 1."""
    f = lambda c0: contour_integral_Vprime(field, c1, c0, "pole_at_half") - 1.0
    lo, hi = -1.0, 1.0
    flo, fhi = f(lo), f(hi)
    for _ in range(60):
        if flo <= 0 <= fhi:
            break
        width = hi - lo
        if flo > 0:
            hi, fhi = lo, flo
            lo = lo - width
            flo = f(lo)
        else:
            lo, flo = hi, fhi
            hi = hi + width
            fhi = f(hi)
    else:
        raise ConvergenceError(f"could not bracket c0 for c1={c1}")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    return find_root(f, lo, hi, tol=tol)


def _c1_residual(field: FieldSpec, c1: float) -> float:
    c0 = solve_c0(field, c1)
    return contour_integral_Vprime(field, c1, c0, "one") - 1.0 / c1


def solve_parameters(field: FieldSpec, tol: float = 1e-13) -> MapParams:
    """Nested solve: c0 from the pole condition for each c1, then c1 from the mass condition.

    The outer residual is negative for small c1 and positive for large c1;
    a bracket is found by doubling/halving from c1 = 1.
    """
    G = lambda c1: _c1_residual(field, c1)
    c, gc = 1.0, G(1.0)
    for _ in range(40):
        nxt = c * 2 if gc < 0 else c / 2
        gn = G(nxt)
        if gc == 0:
            break
        if gn * gc <= 0:
            break
        c, gc = nxt, gn
    else:
        raise NoSolutionError(f"no sign change of the c1 residual found for {field.describe()}")
    if gc == 0:
        c1 = c
    else:
        lo, hi = sorted((c, nxt))
        flo = gc if lo == c else gn
        probe = np.geomspace(lo, hi, 6)[1:-1]
        signs = [np.sign(flo)] + [np.sign(G(x)) for x in probe]
        changes = int(np.sum(np.diff(signs) != 0)) + int(signs[-1] != np.sign(gn if lo == c else gc))
        if changes > 1:
            warnings.warn(f"c1 residual changes sign {changes} times in [{lo}, {hi}]; returning the first root",
                          RuntimeWarning, stacklevel=2)
        c1 = find_root(G, lo, hi, tol=tol)
    return new_map(c1, solve_c0(field, c1))


# --- Cauchy transform M and the density --------------------------------

def _cauchy(c1: float, U_fn, s: complex, tol: float = 1e-12) -> complex:
    """(1/2 pi i) closed integral of U(xi)/(xi - s), grid refined until converged."""
    def values(cv):
        return U_fn(cv) / (cv.xi - s)

    cv = curve(c1)
    if np.min(np.abs(cv.xi - s)) < 1e-8:
        raise NearSingularError(f"s={s} is within 1e-8 of gamma")
    return _contour_mean(c1, values, tol=tol)


def _density_nodes(field: FieldSpec, p: MapParams, size: int):
    """psi at the upper-arc nodes via the boundary value of the Cauchy transform.

    K(s0) = (1/2 pi i) closed integral of (U(xi) - U(s0))/(xi - s0) d xi is
    smooth in s0 up to gamma, and psi(x) = Im K(I+(x)) / pi.
    """
    cv = curve_nodes(p.c1, size)
    x = p.c0 + p.b0 * np.cos(cv.tau)
    U = field.dV(x)
    half = size // 2
    xi_j = cv.xi[:half]
    diff = cv.xi[None, :] - xi_j[:, None]
    num = U[None, :] - U[:half, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = num / diff * cv.dxi[None, :]
    idx = np.arange(half)
    # removable diagonal: U'(xi) xi'(tau) = V''(x) dx/dtau
    terms[idx, idx] = -field.d2V(x[:half]) * p.b0 * np.sin(cv.tau[:half])
    K = terms.sum(axis=1) * cv.h / (2j * math.pi)
    return cv.tau[:half], K.imag / math.pi


def _cheb_from_nodes(p: MapParams, tau_half, psi_half) -> np.ndarray:
    """Cosine coefficients of w(tau) from samples on the shifted half grid."""
    w_half = psi_half * p.b0 * np.sin(tau_half)
    w = np.concatenate([w_half, w_half[::-1]])
    n = w.size
    spec = np.fft.rfft(w) / n
    m = np.arange(spec.size)
    a = (spec * np.exp(-1j * m * math.pi / n)).real
    a[1:] *= 2.0
    if n % 2 == 0:
        a[-1] *= 0.5
    return a


def _build_density(field: FieldSpec, p: MapParams, tol: float = 1e-14) -> np.ndarray:
    size = curve(p.c1).size
    test = np.linspace(-0.95, 0.95, 37)
    prev = None
    while size <= (1 << 13):
        cheb = _cheb_from_nodes(p, *_density_nodes(field, p, size))
        cheb = _trim(cheb)
        vals = C.chebval(test, cheb)
        if prev is not None and np.max(np.abs(vals - prev)) <= tol * (1 + np.max(np.abs(vals))):
            return cheb
        prev = vals
        size *= 2
    raise ConvergenceError("density coefficients did not converge")


def _trim(cheb: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(cheb))
    keep = np.nonzero(np.abs(cheb) > 1e-17 * scale)[0]
    return cheb[: keep[-1] + 1] if keep.size else cheb[:1]


# --- the main data object ------------------------------------------------

def _L(w):
    """log((e^w - 1)/w), analytic in |Im w| < 2 pi, real for real w."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    big = w.real > 0.5
    small = w.real < -0.5
    mid = ~(big | small)
    wb = w[big]
    out[big] = wb + np.log(-np.expm1(-wb)) - np.log(wb)
    ws = w[small]
    out[small] = np.log(-np.expm1(ws)) - np.log(-ws)
    wm = w[mid]
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(wm == 0, 1.0, np.expm1(wm) / np.where(wm == 0, 1.0, wm))
    out[mid] = np.log(r)
    return out


@dataclass
class EquilibriumData:
    field: FieldSpec
    map: MapParams
    cheb: np.ndarray
    ell: float = float("nan")
    ell_a: float = float("nan")
    density_grid: tuple = ()
    regularity_report: dict = dc_field(default_factory=dict)
    s_nodes: int = 256

    # -- convenience aliases
    @property
    def a(self) -> float:
        return self.map.a

    @property
    def b(self) -> float:
        return self.map.b

    @property
    def c0(self) -> float:
        return self.map.c0

    @property
    def c1(self) -> float:
        return self.map.c1

    @property
    def b0(self) -> float:
        return self.map.b0

    # -- density and distribution
    def _y(self, x):
        return (np.asarray(x, dtype=float) - self.c0) / self.b0

    def psi(self, x):
        """psi(x) from the stored coefficients; zero outside [a, b]."""
        y = self._y(x)
        inside = np.abs(y) < 1
        with np.errstate(divide="ignore", invalid="ignore"):
            val = C.chebval(y, self.cheb) / (self.b0 * np.sqrt(1 - y * y))
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def mass_beyond(self, x):
        """mu([x, b]) for x in [a, b]."""
        tau = np.arccos(np.clip(self._y(x), -1.0, 1.0))
        m = np.arange(1, self.cheb.size)
        out = self.cheb[0] * tau + np.sum(
            self.cheb[1:] * np.sin(np.multiply.outer(tau, m)) / m, axis=-1
        )
        return out if np.ndim(out) else float(out)

    def cdf(self, x):
        y = self._y(x)
        out = np.where(y <= -1, 0.0, np.where(y >= 1, 1.0, 1.0 - self.mass_beyond(x)))
        return out if out.ndim else float(out)

    @property
    def total_mass(self) -> float:
        return math.pi * self.cheb[0]

    def edge_sqrt_coefficient(self, edge: str) -> float:
        """lim psi(x)/sqrt(distance to edge), from the series for w''(0) or w''(pi)."""
        m = np.arange(self.cheb.size)
        sign = 1.0 if edge == "b" else (-1.0) ** m
        w2 = -np.sum(self.cheb * m * m * sign)
        return w2 / (2 * self.b0 * math.sqrt(self.b0 / 2))

    # -- g-functions
    def _rho(self, z, side):
        """Exterior Joukowski variable and its log, with one-sided limits on the cut."""
        z = complex(z)
        zeta = (z - self.c0) / self.b0
        if z.imag == 0.0 and zeta.real < 1.0:
            if side not in (1, -1):
                raise DomainError(f"z={z.real} lies on the cut of g; pass side=+1 or -1")
            x = zeta.real
            if x >= -1.0:
                tau = math.acos(x)
                rho = complex(math.cos(tau), side * math.sin(tau))
                return rho, complex(0.0, side * tau)
            rho = x - math.sqrt(x * x - 1)
            return complex(rho), complex(math.log(-rho), side * math.pi)
        rho = zeta + np.sqrt(zeta - 1) * np.sqrt(zeta + 1)
        if abs(rho) < 1:
            rho = 1 / rho
        return complex(rho), complex(np.log(rho))

    def _g_from_rho(self, rho, logrho) -> complex:
        m = np.arange(1, self.cheb.size)
        tail = np.sum(self.cheb[1:] * np.power(1 / rho, m) / m) if m.size else 0.0
        return math.pi * self.cheb[0] * (math.log(self.b0 / 2) + logrho) - math.pi * tail

    def g(self, z, side=None) -> complex:
        return self._g_from_rho(*self._rho(z, side))

    def L0(self, x):
        """Re g on the real axis: int log|x - y| psi(y) dy."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self.g(v, side=1).real for v in x_arr])
        return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])

    @cached_property
    def _s_grid(self):
        n = self.s_nodes
        tau = (np.arange(n) + 0.5) * (2 * math.pi / n)
        y = self.c0 + self.b0 * np.cos(tau)
        w = C.chebval(np.cos(tau), self.cheb)
        return y, w * (math.pi / n)

    def S(self, z):
        """g~(z) - g(z) = int (y + L(z - y)) psi(y) dy; smooth across [a, b]."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(np.abs(z_arr.imag) >= math.pi):
            raise DomainError("g~ needs |Im z| < pi")
        y, wt = self._s_grid
        out = (wt * (y + _L(z_arr[:, None] - y[None, :]))).sum(axis=1)
        return out.reshape(np.shape(z)) if np.ndim(z) else complex(out[0])

    def g_tilde(self, z, side=None) -> complex:
        return self.g(z, side) + self.S(z)

    def phi(self, z, side=None) -> complex:
        z = complex(z)
        return 2 * self.g(z, side) + self.S(z) - complex(self.field.V(z)) - self.ell

    def Phi(self, x):
        """Real variational function 2 L0 + S - V - ell: zero on [a, b], negative outside."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = 2 * self.L0(x_arr) + self.S(x_arr).real - self.field.V(x_arr) - self.ell
        return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])

    # -- edge variables
    def fb_prime(self) -> float:
        return (math.pi * self.edge_sqrt_coefficient("b")) ** (2.0 / 3.0)

    def fa_prime(self) -> float:
        return -(math.pi * self.edge_sqrt_coefficient("a")) ** (2.0 / 3.0)


# --- public operations ---------------------------------------------------

def build_equilibrium(field: FieldSpec, params: MapParams | None = None, grid_points: int = 201,
                      check_ell: bool = True) -> EquilibriumData:
    """Solve for the parameters (unless given) and assemble every derived quantity."""
    p = solve_parameters(field) if params is None else params
    cheb = _build_density(field, p)
    eq = EquilibriumData(field=field, map=p, cheb=cheb)
    eq.s_nodes = _converged_s_nodes(eq)
    compute_ell(eq, check=check_ell)
    xs = np.linspace(p.a, p.b, grid_points)
    eq.density_grid = (xs, eq.psi(xs))
    eq.regularity_report = check_one_cut_regular(eq)
    return eq


def _converged_s_nodes(eq: EquilibriumData) -> int:
    probes = np.array([eq.b, eq.a, eq.c0 + 0.5j * eq.b0, eq.b + 1.0 + 2.5j])
    n = max(64, 4 * eq.cheb.size)
    eq.s_nodes = n
    prev = eq.S(probes)
    while n < (1 << 14):
        n *= 2
        eq.__dict__.pop("_s_grid", None)
        eq.s_nodes = n
        cur = eq.S(probes)
        if np.max(np.abs(cur - prev)) <= 1e-14 * (1 + np.max(np.abs(cur))):
            return n
        prev = cur
    return n


def compute_ell(eq: EquilibriumData, check: bool = True) -> float:
    """ell from the b end; the same expression at a must agree."""
    b_val = 2 * eq.g(eq.b).real + eq.S(eq.b).real - float(eq.field.V(eq.b))
    a_val = 2 * eq.g(eq.a, side=1).real + eq.S(eq.a).real - float(eq.field.V(eq.a))
    eq.ell, eq.ell_a = b_val, a_val
    if check and abs(a_val - b_val) > 1e-6:
        raise RegularityError(f"ell from a ({a_val}) and from b ({b_val}) disagree")
    return b_val


def eval_M(eq: EquilibriumData, s) -> complex:
    """M(s): minus the Cauchy transform of U outside D, plus it inside."""
    s = complex(s)
    U_fn = lambda cv: eq.field.dV(eq.c0 + cv.b0 * np.cos(cv.tau))
    val = _cauchy(eq.c1, U_fn, s)
    return val if in_domain_D(eq.map, s) else -val


def density_psi(eq: EquilibriumData, x: float) -> float:
    """psi(x) from the log-kernel integral of V'' over the support.

    Independent of the stored coefficients: the integrand is evaluated on
    gamma1 directly, with the logarithmic singularity at u = x handled by
    geometric grading on both sides of the split point.
    """
    x = float(x)
    p = eq.map
    if not p.a < x < p.b:
        raise DomainError(f"x={x} outside (a, b)")
    sp = complex(boundary_inverse(p, x))
    sm = sp.conjugate()
    tau_x = math.acos((x - p.c0) / p.b0)

    def integrand(theta):
        u = p.c0 + p.b0 * np.cos(theta)
        ip = boundary_inverse(p, np.clip(u, np.nextafter(p.a, p.b), np.nextafter(p.b, p.a)))
        with np.errstate(divide="ignore"):
            lg = np.log(np.abs(ip - sm)) - np.log(np.abs(ip - sp))
        return eq.field.d2V(u) * lg * p.b0 * np.sin(theta)

    left = graded_integrate(integrand, 0.0, tau_x, "hi")
    right = graded_integrate(integrand, tau_x, math.pi, "lo")
    return (left + right) / (2 * math.pi ** 2)


def eval_g(eq: EquilibriumData, z, which: str = "g", side=None) -> complex:
    if which == "g":
        return eq.g(z, side)
    if which == "g_tilde":
        return eq.g_tilde(z, side)
    raise InvalidArgumentError(f"which must be 'g' or 'g_tilde', got {which!r}")


def eval_phi(eq: EquilibriumData, z, side=None) -> complex:
    return eq.phi(z, side)


def _cbrt_near(w2: complex, arg_hint: float) -> complex:
    """The cube root of w2 whose argument is closest to arg_hint."""
    r = abs(w2) ** (1.0 / 3.0)
    base = np.angle(w2) / 3.0
    cands = [base + 2 * math.pi * k / 3 for k in range(3)]
    best = min(cands, key=lambda t: abs(math.remainder(t - arg_hint, 2 * math.pi)))
    return r * complex(math.cos(best), math.sin(best))


def eval_f_edge(eq: EquilibriumData, z, edge: str) -> complex:
    """Conformal edge variable f_b or f_a, real on the real axis near the edge."""
    if edge not in ("a", "b"):
        raise InvalidArgumentError(f"edge must be 'a' or 'b', got {edge!r}")
    z = complex(z)
    e = eq.b if edge == "b" else eq.a
    if abs(z - e) > 0.25 * (eq.b - eq.a):
        raise DomainError(f"z={z} is outside the edge neighbourhood of {edge}")
    if z == e:
        return 0j
    if z.imag == 0.0:
        x = z.real
        if edge == "b":
            if x > eq.b:
                return complex((-0.75 * eq.phi(x).real) ** (2.0 / 3.0))
            return complex(-(1.5 * math.pi * eq.mass_beyond(x)) ** (2.0 / 3.0))
        if x < eq.a:
            return complex((-0.75 * eq.phi(x, side=1).real) ** (2.0 / 3.0))
        return complex(-(1.5 * math.pi * eq.cdf(x)) ** (2.0 / 3.0))
    if z.imag < 0:
        return eval_f_edge(eq, z.conjugate(), edge).conjugate()
    phi = eq.phi(z)
    if edge == "b":
        w = -0.75 * phi
        return _cbrt_near(w * w, np.angle(z - e))
    w = -0.75 * phi + 1.5j * math.pi
    return _cbrt_near(w * w, np.angle(z - e) + math.pi)


def check_one_cut_regular(eq: EquilibriumData, var_tol: float = 1e-8,
                          margin: float = 1e-4) -> dict:
    a, b = eq.a, eq.b
    width = b - a
    report: dict = {}
    mass_err = abs(eq.total_mass - 1.0)
    report["normalization"] = {"pass": bool(mass_err <= 1e-8), "residual": mass_err}

    xs = np.linspace(a, b, 202)[1:-1]
    ps = eq.psi(xs)
    report["positivity"] = {"pass": bool(np.all(ps > 0)), "min_psi": float(ps.min())}
    core = np.abs(eq._y(xs)) <= 0.8
    report["near_critical"] = bool(ps[core].min() < 0.01 * ps.max())

    offsets = np.array([1e-3, 1e-4, 1e-5]) * width
    edge = {}
    ok = True
    for name, pts in (("b", b - offsets), ("a", a + offsets)):
        ratios = eq.psi(pts) / np.sqrt(offsets)
        finite_pos = bool(np.all(np.isfinite(ratios)) and np.all(ratios > 0))
        steady = bool(finite_pos and np.all(np.abs(ratios[1:] / ratios[:-1] - 1) <= 0.2))
        edge[name] = {"ratios": [float(r) for r in ratios], "finite_positive": finite_pos,
                      "converging": steady}
        ok &= finite_pos
    report["edge_sqrt"] = {"pass": ok, **edge}

    xin = np.linspace(a, b, 102)[1:-1]
    res = float(np.max(np.abs(eq.Phi(xin))))
    report["variational_equality"] = {"pass": bool(res <= var_tol), "residual": res}

    d = np.geomspace(0.02, 2.0, 10) * width
    xout = np.concatenate([b + d, a - d])
    worst = float(np.max(eq.Phi(xout)))
    report["variational_inequality"] = {"pass": bool(worst < -margin), "max_value": worst}
    report["ell_mismatch"] = abs(eq.ell - eq.ell_a)
    report["one_cut_regular"] = all(
        report[k]["pass"] for k in ("normalization", "positivity", "edge_sqrt",
                                    "variational_equality", "variational_inequality")
    )
    return report


def energy(field: FieldSpec, atoms) -> float:
    """Discretised energy of sum_i m_i delta_{x_i}.

    Off-diagonal pairs carry both logarithmic kernels; the diagonal, where
    they are infinite, is dropped while the external field keeps its full
    weight, so the V part equals sum_i m_i V(x_i) exactly.
    """
    x = np.asarray([float(a[0]) for a in atoms])
    m = np.asarray([float(a[1]) for a in atoms])
    if x.size < 2:
        raise InvalidArgumentError("energy needs at least two atoms")
    if np.any(m <= 0) or abs(m.sum() - 1) > 1e-12:
        raise InvalidArgumentError("atom masses must be positive and sum to 1")
    order = np.argsort(x)
    xs = x[order]
    if np.any(np.diff(xs) <= 0):
        raise InvalidArgumentError("atoms must be pairwise distinct")
    dx = np.abs(x[:, None] - x[None, :])
    hi = np.maximum(x[:, None], x[None, :])
    # log|e^s - e^t| = max(s,t) + log(1 - e^{-|s-t|})
    with np.errstate(divide="ignore"):
        kern = -0.5 * np.log(dx) - 0.5 * (hi + np.log(-np.expm1(-dx)))
    np.fill_diagonal(kern, 0.0)
    return float(m @ kern @ m + np.sum(m * field.V(x)))
