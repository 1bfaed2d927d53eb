"""External fields V: quadratic, quartic, or a general even-degree polynomial."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class FieldSpec:
    """A polynomial external field.

    ``kind`` records how the field was specified; ``coeffs`` always holds
    the ascending monomial coefficients of V.
    """

    kind: str
    coeffs: tuple[float, ...]
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        if c.size < 3 or not np.all(np.isfinite(c)):
            raise InvalidArgumentError("V must be a finite polynomial of degree >= 2")
        deg = c.size - 1
        if deg % 2 or c[-1] <= 0:
            raise InvalidArgumentError(
                "V must grow faster than |x|: even leading degree with positive leading coefficient"
            )
        object.__setattr__(self, "coeffs", tuple(float(v) for v in c))

    @classmethod
    def quadratic(cls, t: float) -> "FieldSpec":
        if not t > 0:
            raise InvalidArgumentError(f"quadratic field needs t > 0, got {t}")
        return cls("quadratic", (0.0, 0.0, 1.0 / (2.0 * t)), {"t": float(t)})

    @classmethod
    def quartic(cls, u: float) -> "FieldSpec":
        """V(x) = x^4/4 + u x^2/2 + x/2."""
        return cls("quartic", (0.0, 0.5, 0.5 * u, 0.0, 0.25), {"u": float(u)})

    @classmethod
    def polynomial(cls, coeffs) -> "FieldSpec":
        return cls("polynomial", tuple(coeffs), {"coeffs": [float(c) for c in coeffs]})

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    def V(self, x):
        return self.poly(x)

    def dV(self, x):
        return self.poly.deriv(1)(x)

    def d2V(self, x):
        return self.poly.deriv(2)(x)

    def is_convex(self) -> bool:
        """True when V'' > 0 on the whole real line."""
        d2 = self.poly.deriv(2)
        if d2.degree() == 0:
            return d2.coef[0] > 0
        crit = d2.deriv().roots()
        crit = crit[np.abs(crit.imag) < 1e-12].real
        return bool(np.all(d2(crit) > 0)) if crit.size else bool(d2.coef[-1] > 0)

    def describe(self) -> dict:
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coeffs": list(self.coeffs)}
        return {"kind": self.kind, **self.params}
