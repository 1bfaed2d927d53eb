"""Leading-order large-n asymptotics of p_{n+k}^{(n)}(z), q_{n+k}^{(n)}(e^z)
and h_{n+k}^{(n)}.

The upper half-plane splits into four regions around the support [a, b]:
C and D are half-disks of radius delta about a and b, B is the thin strip
0 <= Im z <= delta/2 above (a, b), A is everything else.  Each region has
its own formula; the (1 + O(1/n)) correction factors are set to 1.

Exponentially large factors are carried separately: a result is
``mantissa * exp(log_scale)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import EquilibriumData, eval_f_edge
from .errors import DomainError, InvalidArgumentError, NearCutError
from .jmap import MapParams, boundary_inverse, in_domain_D, invert_I1, invert_I2
from .numerics import airy_ai_and_prime

NEAR_CUT_TOL = 1e-10
REGIONS = ("A", "B", "C", "D")
FORMS = ("outside", "bulk", "edge_airy", "edge_scaled", "norming")


@dataclass(frozen=True)
class RegionTag:
    tag: str
    delta: float

    def __post_init__(self):
        if self.tag not in REGIONS:
            raise InvalidArgumentError(f"region tag must be one of {REGIONS}, got {self.tag!r}")
        if not self.delta > 0:
            raise InvalidArgumentError("delta must be positive")


@dataclass(frozen=True)
class AsymptoticResult:
    """Leading-order value ``mantissa * exp(log_scale)``.

    ``value`` is the plain complex number when it fits in a double and
    ``None`` otherwise.
    """

    mantissa: complex
    log_scale: float
    region: RegionTag | None
    n: int
    k: int
    form: str

    @property
    def value(self) -> complex | None:
        if self.mantissa == 0:
            return 0j
        log_abs = math.log(abs(self.mantissa)) + self.log_scale
        if log_abs > 709.0:
            return None
        return self.mantissa * math.exp(self.log_scale)

    @property
    def log_abs(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.log_scale


def _params(obj) -> MapParams:
    return obj.map if isinstance(obj, EquilibriumData) else obj


def default_delta(eq: EquilibriumData) -> float:
    return 0.05 * (eq.b - eq.a)


# --- square root with a cut on gamma1 or gamma2 --------------------------------

def _distance_to_arc(p: MapParams, s: complex, cut: str) -> float:
    """Approximate distance from s to the arc gamma1 (upper) or gamma2 (lower)."""
    d_end = min(abs(s - p.s_a), abs(s - p.s_b))
    upper = cut == "gamma1"
    if s.imag == 0.0 or (s.imag > 0) != upper:
        return d_end
    z = p.J(s)
    if not (p.a <= z.real <= p.b):
        return d_end
    return min(d_end, abs(z.imag) / max(abs(p.dJ(s)), 1e-300))


def branch_sqrt(eq, s, cut: str, side: str | None = None) -> complex:
    """sqrt((s - s_a)(s - s_b)) ~ s at infinity, cut along gamma1 or gamma2.

    Off the cut the sign is fixed by region: the product of principal roots
    already has its cut on [s_a, s_b]; moving that cut onto the arc flips the
    sign in the part of D on the same side as the arc.  Points on the arc
    itself need ``side='outside'`` or ``side='inside'`` for the one-sided limit.
    """
    if cut not in ("gamma1", "gamma2"):
        raise InvalidArgumentError(f"cut must be 'gamma1' or 'gamma2', got {cut!r}")
    p = _params(eq)
    s = complex(s)
    w0 = complex(np.sqrt(s - p.s_a) * np.sqrt(s - p.s_b))
    if side is not None:
        if side not in ("outside", "inside"):
            raise InvalidArgumentError(f"side must be 'outside' or 'inside', got {side!r}")
        if _distance_to_arc(p, s, cut) > 1e-6:
            raise InvalidArgumentError("one-sided values are only defined on the cut")
        if s.imag == 0.0:
            raise NearCutError("the arc endpoints are branch points")
        return w0 if side == "outside" else -w0
    if _distance_to_arc(p, s, cut) < NEAR_CUT_TOL:
        raise NearCutError(f"s={s} lies on the cut {cut}")
    upper = cut == "gamma1"
    if s.imag == 0.0:
        if p.s_a < s.real < p.s_b:
            r = math.sqrt((s.real - p.s_a) * (p.s_b - s.real))
            return complex(0.0, -r if upper else r)
        return w0
    if (s.imag > 0) == upper and in_domain_D(p, s):
        return -w0
    return w0


def eval_Gk(eq, k: int, s, side: str | None = None) -> complex:
    """c1^k (s + 1/2)(s - 1/2)^k / sqrt(s^2 - 1/4 - 1/c1), cut on gamma1."""
    p = _params(eq)
    s = complex(s)
    w = branch_sqrt(p, s, "gamma1", side)
    return p.c1 ** k * (s + 0.5) * (s - 0.5) ** k / w


def eval_Ghatk(eq, k: int, s, side: str | None = None) -> complex:
    """i e^{k(c1/2 + c0)} / sqrt(c1) (s - 1/2)^{-k} / sqrt(...), cut on gamma2."""
    p = _params(eq)
    s = complex(s)
    if k > 0 and s == 0.5:
        raise DomainError("Ghat_k has a pole at s = 1/2 for k > 0")
    w = branch_sqrt(p, s, "gamma2", side)
    return 1j * math.exp(k * (p.c1 / 2 + p.c0)) / math.sqrt(p.c1) * (s - 0.5) ** (-k) / w


# --- regions -----------------------------------------------------------------

def classify_region(eq: EquilibriumData, z, delta: float | None = None) -> RegionTag:
    """Region of z in the closed upper half-plane; ties go to C/D, then B."""
    delta = default_delta(eq) if delta is None else float(delta)
    if not delta > 0:
        raise InvalidArgumentError("delta must be positive")
    z = complex(z)
    if z.imag < 0:
        raise DomainError("classify_region expects Im z >= 0; conjugate first")
    if abs(z - eq.a) <= delta:
        return RegionTag("C", delta)
    if abs(z - eq.b) <= delta:
        return RegionTag("D", delta)
    if eq.a <= z.real <= eq.b and z.imag <= delta / 2:
        return RegionTag("B", delta)
    return RegionTag("A", delta)


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    return int(n)


def _combine(terms) -> tuple[complex, float]:
    """Sum of coeff * exp(expo) as (mantissa, log_scale)."""
    scale = max(t[1].real for t in terms)
    mant = sum(c * np.exp(e - scale) for c, e in terms)
    return complex(mant), float(scale)


def _quarter_root(f: float, edge: str) -> complex:
    """f^{1/4} at real points, as the limit from the upper half-plane."""
    if f >= 0:
        return complex(f ** 0.25)
    phase = math.pi / 4 if edge == "b" else -math.pi / 4
    return abs(f) ** 0.25 * complex(math.cos(phase), math.sin(phase))


def _airy_term(n: int, f: float):
    """(Ai, Ai') at n^{2/3} f with the decay exp(-2/3 n f^{3/2}) split off."""
    x = n ** (2.0 / 3.0) * f
    if x > 0:
        ai, dai = airy_ai_and_prime(x, scaled=True)
        return ai, dai, -(2.0 / 3.0) * x ** 1.5
    ai, dai = airy_ai_and_prime(x)
    return ai, dai, 0.0


def _boundary_pair(p: MapParams, x: float):
    """I1 and I2 at x + i0: I+(x) seen from outside D and I-(x) from inside."""
    return complex(boundary_inverse(p, x, "plus")), complex(boundary_inverse(p, x, "minus"))


def _edge_constants(eq: EquilibriumData, k: int, edge: str, kind: str) -> float:
    """Right-hand side constant of the edge-scaled limit, without Ai(t)."""
    c1, c0 = eq.c1, eq.c0
    sb = math.sqrt(0.25 + 1.0 / c1)
    base = math.sqrt(2 * math.pi) * (0.25 + 1.0 / c1) ** -0.125
    if edge == "b":
        fp = eq.fb_prime()
        if kind == "p":
            return base * (sb - 0.5) ** (k - 1) * c1 ** (k - 0.5) * fp ** 0.25
        return base * (sb - 0.5) ** (-k) * math.exp(k * (c1 / 2 + c0)) * fp ** 0.25
    fp = -eq.fa_prime()
    sign = -1.0 if k % 2 else 1.0
    if kind == "p":
        return sign * base * (sb + 0.5) ** (k - 1) * c1 ** (k - 0.5) * fp ** 0.25
    return sign * base * (sb + 0.5) ** (-k) * math.exp(k * (c1 / 2 + c0)) * fp ** 0.25


def edge_point(eq: EquilibriumData, n: int, t: float, edge: str) -> float:
    """z = edge + t / (f'(edge) n^{2/3})."""
    if edge not in ("a", "b"):
        raise InvalidArgumentError(f"edge must be 'a' or 'b', got {edge!r}")
    fp = eq.fb_prime() if edge == "b" else eq.fa_prime()
    e = eq.b if edge == "b" else eq.a
    return e + t / (fp * n ** (2.0 / 3.0))


def edge_log_normalizer(eq: EquilibriumData, n: int, x: float, kind: str) -> float:
    """log of the factor multiplying p (or q) on the left of the edge-scaled limit.

    p: exp(n/2 (g~ - g - V - ell));  q: exp(n/2 (g - g~ - V - ell)).
    """
    S = eq.S(x).real
    V = float(eq.field.V(x))
    sgn = 1.0 if kind == "p" else -1.0
    return 0.5 * n * (sgn * S - V - eq.ell)


def edge_scaled(eq: EquilibriumData, n: int, k: int, t: float, edge: str, kind: str = "p") -> float:
    """Right side of the edge-scaled Airy limit, constant * n^{1/6} Ai(t)."""
    n = _check_n(n)
    if kind not in ("p", "q"):
        raise InvalidArgumentError(f"kind must be 'p' or 'q', got {kind!r}")
    if edge not in ("a", "b"):
        raise InvalidArgumentError(f"edge must be 'a' or 'b', got {edge!r}")
    ai, _ = airy_ai_and_prime(t)
    return _edge_constants(eq, k, edge, kind) * n ** (1.0 / 6.0) * ai


# --- p and q -----------------------------------------------------------------

def _prepare(eq, n, z, delta):
    n = _check_n(n)
    z = complex(z)
    conj = z.imag < 0
    if conj:
        z = z.conjugate()
    return n, z, conj, classify_region(eq, z, delta)


def _finish(mant, scale, region, n, k, form, conj, real):
    if real:
        mant = complex(mant.real, 0.0)
    elif conj:
        mant = mant.conjugate()
    return AsymptoticResult(mant, scale, region, n, k, form)


def _asym(eq: EquilibriumData, n: int, k: int, z, delta, kind: str) -> AsymptoticResult:
    n, z, conj, region = _prepare(eq, n, z, delta)
    p = eq.map
    real = z.imag == 0.0
    x = z.real
    if kind == "q" and abs(z.imag) >= math.pi:
        raise DomainError("q asymptotics need |Im z| < pi")
    G = eval_Gk if kind == "p" else eval_Ghatk

    if region.tag == "A":
        g = eq.g(z, side=1 if real else None)
        if kind == "p":
            terms = [(G(p, k, invert_I1(p, z)), n * g)]
        else:
            terms = [(G(p, k, invert_I2(p, z)), n * (g + eq.S(z)))]
        mant, scale = _combine(terms)
        return _finish(mant, scale, region, n, k, "outside", conj, real)

    if region.tag == "B":
        if real:
            ip, im = _boundary_pair(p, x)
            if kind == "p":
                amp = eval_Gk(p, k, ip, side="outside")
                level = eq.L0(x)
            else:
                amp = eval_Ghatk(p, k, im, side="inside")
                level = eq.L0(x) + eq.S(x).real
            phase = n * math.pi * eq.mass_beyond(x) + np.angle(amp)
            mant = 2 * abs(amp) * math.cos(phase)
            return _finish(complex(mant), level * n, region, n, k, "bulk", conj, real)
        g = eq.g(z)
        S = eq.S(z)
        V = complex(eq.field.V(z))
        i1, i2 = invert_I1(p, z), invert_I2(p, z)
        if kind == "p":
            terms = [(G(p, k, i1), n * g), (G(p, k, i2), n * (V - g - S + eq.ell))]
        else:
            terms = [(G(p, k, i2), n * (g + S)), (G(p, k, i1), n * (V - g + eq.ell))]
        mant, scale = _combine(terms)
        return _finish(mant, scale, region, n, k, "bulk", conj, real)

    edge = "a" if region.tag == "C" else "b"
    if not real:
        raise DomainError("edge-region asymptotics are implemented for real z only "
                          "(complex-argument Airy functions are not supported)")
    e = eq.a if edge == "a" else eq.b
    sgn = 1.0 if kind == "p" else -1.0
    if x == e:
        # both Airy terms are singular separately; use the t = 0 limit
        rhs = edge_scaled(eq, n, k, 0.0, edge, kind)
        return _finish(complex(rhs), -edge_log_normalizer(eq, n, x, kind), region, n, k,
                       "edge_scaled", conj, real)
    if eq.a < x < eq.b:
        i1, i2 = _boundary_pair(p, x)
        sides = ("outside", None) if kind == "p" else (None, "inside")
    else:
        i1, i2 = invert_I1(p, x), invert_I2(p, x)
        sides = (None, None)
    if kind == "p":
        g1, g2 = eval_Gk(p, k, i1, sides[0]), eval_Gk(p, k, i2, sides[1])
    else:
        g1, g2 = eval_Ghatk(p, k, i2, sides[1]), eval_Ghatk(p, k, i1, sides[0])
    f = eval_f_edge(eq, x, edge).real
    q4 = _quarter_root(f, edge)
    ai, dai, decay = _airy_term(n, f)
    # at a the roles of +i and -i swap relative to b (f_a decreases through a);
    # checked against the exact polynomials and against the bulk cosine form
    rot = 1j if edge == "b" else -1j
    bracket = ((g1 - rot * g2) * n ** (1 / 6) * q4 * ai
               - (g1 + rot * g2) * n ** (-1 / 6) / q4 * dai)
    mant = math.sqrt(math.pi) * bracket
    scale = 0.5 * n * (-sgn * eq.S(x).real + float(eq.field.V(x)) + eq.ell) + decay
    return _finish(complex(mant), scale, region, n, k, "edge_airy", conj, real)


def asym_p(eq: EquilibriumData, n: int, k: int, z, delta: float | None = None) -> AsymptoticResult:
    """Leading-order p_{n+k}^{(n)}(z)."""
    return _asym(eq, n, k, z, delta, "p")


def asym_q(eq: EquilibriumData, n: int, k: int, z, delta: float | None = None) -> AsymptoticResult:
    """Leading-order q_{n+k}^{(n)}(e^z); needs |Im z| < pi."""
    return _asym(eq, n, k, z, delta, "q")


def asym_h(eq: EquilibriumData, n: int, k: int) -> AsymptoticResult:
    """2 pi c1^{k+1/2} e^{k(c1/2 + c0)} e^{n ell}, with e^{n ell} kept as log_scale."""
    n = _check_n(n)
    c1, c0 = eq.c1, eq.c0
    mant = 2 * math.pi * c1 ** (k + 0.5) * math.exp(k * (c1 / 2 + c0))
    return AsymptoticResult(complex(mant), n * eq.ell, None, n, k, "norming")
