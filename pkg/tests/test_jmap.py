import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqsrc.errors import DomainError, InvalidArgumentError
from eqsrc.jmap import (
    boundary_inverse,
    curve,
    eval_J,
    gamma_height,
    in_domain_D,
    invert_I1,
    invert_I2,
    new_map,
)

# ¼ + v cot v − v² = 0 solved with mpmath.findroot at 30 digits
APEX_HEIGHT_C1_1 = 0.960188873914782859


def test_map_constants(unit_map):
    p = unit_map
    assert abs(p.s_b - math.sqrt(1.25)) < 1e-15 and p.s_a == -p.s_b
    assert abs(p.b - 2.58045763886910174) < 1e-12
    assert abs(p.a + 1.58045763886910174) < 1e-12


def test_new_map_rejects_bad_c1():
    with pytest.raises(InvalidArgumentError):
        new_map(0.0, 0.0)


def test_eval_J_value_and_domain(unit_map):
    assert abs(eval_J(unit_map, 2.0) - 3.01082562376599072) < 1e-14
    with pytest.raises(DomainError):
        eval_J(unit_map, 0.25)


def test_schwarz_symmetry(unit_map):
    for s in (1 + 1j, -0.3 + 0.2j, 3 - 2j, 0.1 + 5j):
        assert abs(eval_J(unit_map, s.conjugate()) - eval_J(unit_map, s).conjugate()) < 1e-14


def test_critical_points(unit_map):
    h = 1e-6
    for s in (unit_map.s_a, unit_map.s_b):
        d = (eval_J(unit_map, s + h) - eval_J(unit_map, s - h)) / (2 * h)
        assert abs(d) < 1e-6


def test_gamma_height(unit_map):
    assert abs(gamma_height(unit_map, 0.0) - APEX_HEIGHT_C1_1) < 1e-12
    assert gamma_height(unit_map, unit_map.s_b) == 0.0
    for c1 in (0.3, 1.0, 7.0):
        assert gamma_height(new_map(c1, 0.0), 0.0) < math.pi / c1


def test_boundary_inverse(unit_map):
    s = boundary_inverse(unit_map, 0.5)
    assert abs(s - 1j * APEX_HEIGHT_C1_1) < 1e-12
    assert abs(boundary_inverse(unit_map, unit_map.b - 1e-10) - unit_map.s_b) < 1e-4
    xs = np.linspace(unit_map.a, unit_map.b, 102)[1:-1]
    s = boundary_inverse(unit_map, xs)
    assert np.max(np.abs(unit_map.J(s) - xs)) < 1e-9
    assert np.all(np.diff(s.real) > 0)
    assert np.all(s.imag > 0)
    assert np.allclose(boundary_inverse(unit_map, xs, side="minus"), np.conj(s))
    with pytest.raises(DomainError):
        boundary_inverse(unit_map, unit_map.b + 0.1)


def test_invert_I1_examples(unit_map):
    assert abs(invert_I1(unit_map, 3.01082562376599072) - 2.0) < 1e-10
    z = 1e6
    assert abs(invert_I1(unit_map, z) - (z - 0.5)) < 1e-5
    with pytest.raises(DomainError):
        invert_I1(unit_map, 0.3)


def test_invert_I2_examples(unit_map):
    s = invert_I2(unit_map, 20.0)
    assert abs(s - 0.5 - math.e * math.exp(-20.0)) <= 1e-12
    with pytest.raises(DomainError):
        invert_I2(unit_map, 1 + 4j)
    # approaching the support from above lands on gamma2
    x = 0.7
    assert abs(invert_I2(unit_map, x + 1e-9j) - boundary_inverse(unit_map, x, "minus")) < 1e-6


def test_in_domain_D(unit_map):
    assert in_domain_D(unit_map, 0.3j)
    assert not in_domain_D(unit_map, 2.0)
    on_gamma = boundary_inverse(unit_map, 0.5)
    assert not in_domain_D(unit_map, on_gamma.real + 1j * (on_gamma.imag + 1e-9))


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1.2, max_value=10.0), st.floats(min_value=-math.pi, max_value=math.pi))
def test_I1_round_trip(radius, angle):
    p = new_map(1.0, 0.5)
    s = radius * cmath.exp(1j * angle)
    if abs(s.imag) > 5 or in_domain_D(p, s) or abs(s.imag) < 1e-3:
        return
    back = invert_I1(p, p.J(s))
    assert abs(back - s) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-0.99, max_value=0.99), st.floats(min_value=0.02, max_value=0.98))
def test_I2_round_trip(u_frac, v_frac):
    p = new_map(1.0, 0.5)
    u = u_frac * p.s_b
    v = -v_frac * gamma_height(p, u)
    s = complex(u, v)
    if abs(u) <= 0.5 and abs(v) < 1e-3:
        return
    back = invert_I2(p, p.J(s))
    assert abs(back - s) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-6.0, max_value=8.0), st.floats(min_value=0.01, max_value=5.0))
def test_I1_preserves_upper_half_plane(x, y):
    p = new_map(1.0, 0.5)
    assert invert_I1(p, complex(x, y)).imag > 0


def test_curve_nodes_lie_on_support():
    c = curve(0.7)
    p = new_map(0.7, 0.0)
    assert np.max(np.abs(p.J(c.xi).imag)) < 1e-12
    assert np.max(np.abs(p.J(c.xi).real - p.b0 * np.cos(c.tau))) < 1e-12
    # counterclockwise circle around [-1/2, 1/2]: the contour integral of 1/s
    assert abs(c.integrate(1 / c.xi) - 1) < 1e-12
