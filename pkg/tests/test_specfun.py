import cmath
import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conformal_blocks import specfun as sf
from conformal_blocks.errors import (DegenerateParameters, Divergent, LowerParamPole,
                                     NearIntegerOrder, PoleAt)

# frozen references: mpmath at 40-60 digits
LOG_GAMMA_REF = {
    0.25 + 1j: complex(-0.6423663036589742, -1.3811810329667324),
    -3.3 + 0.5j: complex(-1.8954094760318236, -11.30824908104594),
    30 + 100j: complex(-19.89114383262329, 402.56565508665443),
    0.6 - 2j: complex(-2.154392068665906, 0.438015262807997),
}
SIN_PI_REF = complex(8.196748768318878, 8.166191913672924)          # sin(pi (0.25+1i))
F32_REF = complex(0.9918093338485456, -0.015586401196151267)
F32_LARGE = [
    (complex(-2.080734182735712, 4.546487134128409), complex(1.067295203711384, -0.059860111288999304)),
    (complex(-3.2682181043180596, -3.7840124765396412), complex(1.0661069554582567, 0.05566732988364524)),
]
J_REF = complex(0.7559179830608629, 0.186054366311322)              # J_{0.3+0.2i}(1.5-0.4i)
H2_REF = complex(0.2021450915844896, -0.17375398353233848)          # H2_{0.25+0.5i}(2)
H1_80 = complex(-0.11955160050144786, -0.02452088325100828)         # H1_{0.3+0.2i}(80)
H1_BIG = complex(-4.508047654910692e-15, -1.535030772460547e-14)    # H1_{0.25+0.5i}(100+30i)
H2_BIG = complex(353435.59886203357, 20647.43187610406)             # H2_{-0.4+0.25i}(-20+15i)


def close(a, b, rel):
    return abs(a - b) <= rel * max(abs(b), 1e-300)


# ---------------------------------------------------------------- gamma

def test_log_gamma_trivial_values():
    assert abs(sf.log_gamma(1)) < 1e-15
    assert abs(sf.log_gamma(5) - math.log(24)) < 1e-14
    assert abs(sf.log_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-15


@pytest.mark.parametrize("z", list(LOG_GAMMA_REF))
def test_log_gamma_frozen(z):
    assert close(sf.log_gamma(z), LOG_GAMMA_REF[z], 1e-13)


@pytest.mark.parametrize("z", [0, -1, -7, -3 + 1e-11])
def test_log_gamma_poles(z):
    with pytest.raises(PoleAt):
        sf.log_gamma(z)


@settings(max_examples=200, deadline=None)
@given(st.floats(-30, 30), st.floats(-30, 30))
def test_log_gamma_principal_branch_matches_mpmath(x, y):
    z = complex(x, y)
    if sf.dist_to_int(z) < 1e-3:
        return
    ref = complex(mp.loggamma(z))
    assert abs(sf.log_gamma(z) - ref) <= 1e-12 * max(1.0, abs(ref))


@settings(max_examples=100, deadline=None)
@given(st.floats(-8, 8), st.floats(-5, 5))
def test_gamma_recurrence(x, y):
    z = complex(x, y)
    if sf.dist_to_int(z) < 1e-2:
        return
    # log Gamma(z+1) = log z + log Gamma(z) up to 2 pi i
    d = sf.log_gamma(z + 1) - sf.log_gamma(z) - cmath.log(z)
    assert abs(d - 2j * math.pi * round(d.imag / (2 * math.pi))) < 1e-11


def test_rgamma_zero_at_poles():
    assert sf.rgamma(-3) == 0
    assert close(sf.rgamma(0.5), 1 / math.sqrt(math.pi), 1e-14)


# ---------------------------------------------------------------- sin(pi z)

def test_sin_pi_values():
    assert sf.sin_pi(0.5) == pytest.approx(1.0, abs=1e-16)
    for n in (-5, 0, 1, 12, 1000):
        assert abs(sf.sin_pi(n)) <= 4 * np.finfo(float).eps * math.pi * max(abs(n), 1)
    assert close(sf.sin_pi(0.25 + 1j), SIN_PI_REF, 1e-14)


def test_sin_pi_log_large_imaginary_part():
    z = 0.3 + 100j
    assert close(sf.sin_pi_log(z), complex(mp.log(mp.sinpi(z))), 1e-14)


def test_sin_pi_overflow():
    with pytest.raises(OverflowError):
        sf.sin_pi(0.3 + 400j)


# ---------------------------------------------------------------- pFq

def test_pfq_elementary():
    assert close(sf.pfq([0.3], [], 0.5).value, 0.5 ** -0.3, 1e-14)
    assert close(sf.pfq([1, 1], [2], 0.5).value, 2 * math.log(2), 1e-14)


def test_pfq_frozen_3f2():
    r = sf.pfq([0.2 + 0.1j, 0.7, -0.3], [1.4, 0.9 - 0.1j], 0.4 + 0.2j)
    assert r.converged and r.tail_bound <= 1e-13 * abs(r.value)
    assert close(r.value, F32_REF, 1e-13)


def test_pfq_errors():
    with pytest.raises(Divergent):
        sf.pfq([0.3, 0.4], [1.2], 1.0)
    with pytest.raises(LowerParamPole):
        sf.pfq([0.3, 0.4], [-2.0], 0.3)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.85), st.floats(-np.pi, np.pi), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(0.3, 2))
def test_pfq_2f1_matches_mpmath(r, th, a, b, c):
    z = r * cmath.exp(1j * th)
    ref = complex(mp.hyp2f1(a, b, c, z))
    assert close(sf.pfq([a, b], [c], z).value, ref, 1e-11)


def test_pfq_large_z_elementary_branch():
    z = 3 * cmath.exp(1j * math.pi / 3)
    assert close(sf.pfq_large_z([0.3], [], z).value, (1 - z) ** -0.3, 1e-13)


@pytest.mark.parametrize("z, ref", F32_LARGE)
def test_pfq_large_z_frozen(z, ref):
    assert close(sf.pfq_large_z([0.3 + 0.1j, 0.45, -0.2], [1.3, 0.8 + 0.2j], z).value, ref, 1e-12)


def test_pfq_large_z_errors():
    with pytest.raises(DegenerateParameters):
        sf.pfq_large_z([0.3, 1.3], [1.5], -3.0)
    with pytest.raises(Divergent):
        sf.pfq_large_z([0.3, 0.4], [1.5], 0.5)


def test_connection_coeffs_reproduce_small_z_series():
    # inside the overlap of the two representations the continuation is analytic:
    # evaluate just outside the unit disk against the ODE-free mpmath value
    up, lo = [0.31 + 0.1j, 0.57, -0.22], [1.4, 0.83 - 0.2j]
    z = 1.3 * cmath.exp(2.2j)
    assert close(sf.pfq_large_z(up, lo, z).value, complex(mp.hyper(up, lo, z)), 1e-12)


# ---------------------------------------------------------------- Bessel / Hankel

def test_bessel_j_values():
    assert close(sf.bessel_j(0.5, 2).value, math.sqrt(2 / (math.pi * 2)) * math.sin(2), 1e-14)
    assert abs(sf.bessel_j(0, 1e-8).value - 1) < 1e-15
    assert close(sf.bessel_j(0.3 + 0.2j, 1.5 - 0.4j).value, J_REF, 1e-13)


def test_hankel_half_integer_closed_form():
    ref = -1j * math.sqrt(2 / math.pi) * cmath.exp(1j)
    assert close(sf.hankel(1, 0.5, 1), ref, 1e-13)


@pytest.mark.parametrize("kind, nu, z, ref", [
    (2, 0.25 + 0.5j, 2, H2_REF),
    (1, 0.3 + 0.2j, 80, H1_80),
    (1, 0.25 + 0.5j, 100 + 30j, H1_BIG),
    (2, -0.4 + 0.25j, -20 + 15j, H2_BIG),
])
def test_hankel_frozen(kind, nu, z, ref):
    assert close(sf.hankel(kind, nu, z), ref, 1e-10)


def test_hankel_near_integer_order_flags_and_extrapolates():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        v = sf.hankel(1, 1 + 3e-6, 2.0 + 0.5j)
    assert any(issubclass(w.category, NearIntegerOrder) for w in caught)
    assert close(v, complex(mp.hankel1(1 + 3e-6, 2.0 + 0.5j)), 1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-0.8, 0.8), st.floats(0.3, 30), st.floats(-3, 3))
def test_hankel_kinds_are_reflections(nr, ni, r, th):
    # H1_{-nu} = e^{i pi nu} H1_nu  and  H2_{-nu} = e^{-i pi nu} H2_nu
    nu = complex(nr, ni)
    if sf.dist_to_int(nu) < 1e-3:
        return
    z = r * cmath.exp(1j * th)
    for kind, sg in ((1, 1j), (2, -1j)):
        a = sf.hankel(kind, -nu, z)
        b = cmath.exp(sg * math.pi * nu) * sf.hankel(kind, nu, z)
        assert abs(a - b) <= 1e-8 * max(abs(a), abs(b), 1e-300)
