"""Two-dimensional Fourier transforms of power laws.

Power-law transform

    I = int dx dy  t^(gamma-1) tbar^(gamma_t-1) exp(i (qbar t + q tbar)),

and the QCD-domain integral

    I = int dx dy  exp(i/2 (q zbar + qbar z))
                   / ((z^2 - rho^2/4)^(u+1/2) (zbar^2 - rhobar^2/4)^(uhat+1/2)),

with u = -v1 + i v2 and uhat = v1 + i v2.  In both cases the exponent
differences are integers in the cases with closed forms, so the integrands
are single valued.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun as sf
from .errors import GammaPole, HalfIntegerPole, InputError, OracleNotConverged


@dataclass(frozen=True)
class FourierParams:
    gamma: complex
    gamma_t: complex
    q: complex

    def __post_init__(self):
        for name in ("gamma", "gamma_t", "q"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.q == 0:
            raise InputError("q must be nonzero")
        for name in ("gamma", "gamma_t"):
            if sf.is_nonpositive_integer(getattr(self, name)):
                raise GammaPole(f"{name} = {getattr(self, name)!r}")

    @property
    def s(self):
        return self.gamma + self.gamma_t

    @property
    def in_window(self):
        return 0 < self.s.real < 1


@dataclass(frozen=True)
class QCDParams:
    v1: float
    v2: float
    rho: complex
    q: complex

    def __post_init__(self):
        object.__setattr__(self, "v1", float(self.v1))
        object.__setattr__(self, "v2", float(self.v2))
        object.__setattr__(self, "rho", complex(self.rho))
        object.__setattr__(self, "q", complex(self.q))
        if self.rho == 0 or self.q == 0:
            raise InputError("rho and q must be nonzero")
        if abs((self.q * self.rho.conjugate()).real) < 1e-14:
            raise InputError("Re(q conj(rho)) must be nonzero")
        for name, x in (("u", self.u), ("uhat", self.uhat)):
            if sf.is_integer(x - 0.5) and round((x - 0.5).real) >= 0:
                raise HalfIntegerPole(f"{name} = {x!r} is 1/2 + n")

    @property
    def u(self):
        return complex(-self.v1, self.v2)

    @property
    def uhat(self):
        return complex(self.v1, self.v2)

    @property
    def q1(self):
        return self.q * self.rho.conjugate() / 4


# ---------------------------------------------------------------- power-law transform

def _q_factor(q, gamma, gamma_t):
    # q^{-gamma_t} qbar^{-gamma}, principal branch
    lq = cmath.log(q)
    return cmath.exp(-gamma_t * lq - gamma * lq.conjugate())


def theorem1_integer_case(gamma, n, q):
    """sin(pi gamma) e^{i pi n/2} q^{-gamma_t} qbar^{-gamma} Gamma(gamma) Gamma(gamma+n),
    the transform for gamma_t = gamma + n."""
    gamma = complex(gamma)
    n = int(n)
    gamma_t = gamma + n
    for name, x in (("gamma", gamma), ("gamma+n", gamma_t)):
        if sf.is_nonpositive_integer(x):
            raise GammaPole(f"{name} = {x!r}")
    lv = sf.log_gamma(gamma) + sf.log_gamma(gamma_t)
    phase = 1j ** (n % 4)
    return sf.sin_pi(gamma) * phase * _q_factor(complex(q), gamma, gamma_t) * cmath.exp(lv)


def ordered_integral(gamma, gamma_t, tol=1e-12):
    """I(gamma, gamma_t) = int_0^inf dv int_v^inf du u^(gamma-1) v^(gamma_t-1) e^{i(u+v)}.

    With v = c u and the u-integral rotated onto the imaginary axis this is
    e^{i pi s/2} Gamma(s) int_0^1 c^(gamma_t-1) (1+c)^(-s) dc, s = gamma + gamma_t,
    and the c-integral is continued to Re gamma_t > -1 by subtracting 1 near c = 0.
    """
    g, gt = complex(gamma), complex(gamma_t)
    s = g + gt
    if not s.real > 0:
        raise InputError("the ordered integral needs Re(gamma + gamma_t) > 0")
    if sf.is_nonpositive_integer(gt):
        raise GammaPole(f"gamma_t = {gt!r}")
    if not gt.real > -1:
        raise InputError("the continuation used needs Re(gamma_t) > -1")

    def h(x):
        # exp(gt x) ((1 + e^x)^(-s) - 1), without cancellation as x -> -inf
        m = -s * math.log1p(math.exp(x))
        if m == 0:
            return 0j
        half = math.sin(0.5 * m.imag)
        em1 = complex(math.expm1(m.real) * math.cos(m.imag) - 2 * half * half,
                      math.exp(m.real) * math.sin(m.imag))
        return cmath.exp(gt * x + cmath.log(em1))

    opts = dict(epsabs=tol * 1e-2, epsrel=tol, limit=400)
    re, e1 = integrate.quad(lambda x: h(x).real, -np.inf, 0, **opts)
    im, e2 = integrate.quad(lambda x: h(x).imag, -np.inf, 0, **opts)
    total = 1 / gt + complex(re, im)
    if e1 + e2 > 1e3 * tol * max(1.0, abs(total)):
        raise OracleNotConverged(f"ordered integral quadrature error {e1 + e2:.3g}")
    return cmath.exp(0.5j * math.pi * s + sf.log_gamma(s)) * total


def theorem1_general(params):
    """Closed form of the power-law transform for 0 < Re(gamma + gamma_t) < 1.

    Off the integer locus gamma - gamma_t in Z the integrand is multivalued;
    the formula belongs to the branch arg t in [arg q, arg q + 2 pi), arg q
    principal (the cut turns with q under t -> t / qbar).

    I = q^{-gamma_t} qbar^{-gamma} [ (i/2)(1 - e^{2 pi i gamma}) e^{-2 pi i gamma_t}
            e^{i pi s/2} Gamma(gamma) Gamma(gamma_t)
        + (i/2)(e^{2 pi i (gamma - gamma_t)} - 1) I(gamma, gamma_t) ].
    """
    g, gt, q = params.gamma, params.gamma_t, params.q
    s = g + gt
    d = g - gt
    if sf.is_integer(d):
        return theorem1_integer_case(g, int(round((gt - g).real)), q)
    e2g = cmath.exp(2j * math.pi * g)
    first = (0.5j * (1 - e2g) * cmath.exp(-2j * math.pi * gt + 0.5j * math.pi * s)
             * cmath.exp(sf.log_gamma(g) + sf.log_gamma(gt)))
    second = 0.5j * (cmath.exp(2j * math.pi * d) - 1) * ordered_integral(g, gt)
    return _q_factor(q, g, gt) * (first + second)


# ---------------------------------------------------------------- QCD domain

def _hankel_bracket(u, uh, q1):
    h = sf.hankel
    q1b = q1.conjugate()
    return (h(1, -u, q1b) * h(1, uh, q1) - h(2, -u, q1b) * h(2, uh, q1))


def theorem2_reduced(u, uhat, q1):
    """I_1(q_1) of the half-integer case,

        pi Gamma(1/2 - uhat) / (4 Gamma(1/2 + u)) (q_1/2)^uhat (qbar_1/2)^u
            [H1_{-u}(qbar_1) H1_uhat(q_1) - H2_{-u}(qbar_1) H2_uhat(q_1)],

    for the rescaled integral with exponent i (q_1 wbar + qbar_1 w) and
    singular points +-1.  I_1 is even in q_1; Re q_1 > 0 is used.  This is
    the literal published form; with d^2z = dx dy the integral is i pi times it.
    """
    u, uh, q1 = complex(u), complex(uhat), complex(q1)
    if q1.real < 0:
        q1 = -q1
    if q1.real == 0:
        raise InputError("Re q_1 must be nonzero")
    for name, x in (("1/2-uhat", 0.5 - uh), ("1/2+u", 0.5 + u)):
        if sf.is_nonpositive_integer(x):
            raise HalfIntegerPole(f"{name} = {x!r}")
    lq = cmath.log(q1 / 2)
    pref = (math.pi / 4 * cmath.exp(sf.log_gamma(0.5 - uh) - sf.log_gamma(0.5 + u))
            * cmath.exp(uh * lq + u * lq.conjugate()))
    return pref * _hankel_bracket(u, uh, q1)


def _rho_factor(rho, u, uh):
    # (rho^2/4)^{-u} (rhobar^2/4)^{-uhat}, principal branch
    l = cmath.log(rho * rho / 4)
    return cmath.exp(-u * l - uh * l.conjugate())


def theorem2_halfinteger_case(params, normalization="dxdy"):
    """The QCD-domain integral for v1 = n/2 with d^2z = dx dy.

    The literal published formula for I_1 comes out too small by a
    constant i pi against brute-force quadrature and against the large-q_1
    asymptotics built from the two endpoint singularities; the default
    includes that factor.  ``normalization="literal"`` returns the formula
    without it.
    """
    if not sf.is_integer(2 * params.v1):
        raise InputError(f"v1 = {params.v1} is not a half-integer multiple")
    if params.v2 == 0:
        raise InputError("v2 must be nonzero")
    if normalization not in ("dxdy", "literal"):
        raise InputError(f"unknown normalization {normalization!r}")
    u, uh = params.u, params.uhat
    val = _rho_factor(params.rho, u, uh) * theorem2_reduced(u, uh, params.q1)
    return val * (1j * math.pi) if normalization == "dxdy" else val


def general_v1_extra_term(params, tol=1e-8):
    """Experimental: the additional term of the published general-v1 formula,

        2i sin(pi(uhat-u)) sin[(pi - qbar_1 - q_1)(uhat-u)] e^{i phi (uhat-u)} I(qhat_1),

    with I(qhat_1) evaluated by direct double quadrature.  The formula mixes
    q_1 into a sine argument and is reproduced literally; it is not part of
    the supported surface and is never used by theorem2_halfinteger_case.
    """
    u, uh = params.u, params.uhat
    q1 = params.q1
    if q1.real < 0:
        q1 = -q1
    qh, phi = abs(q1), cmath.phase(q1)
    ep, em = cmath.exp(1j * phi), cmath.exp(-1j * phi)

    # rotate both rays onto the positive imaginary axis: r = i R, y = i Y
    def f(X, Y):
        r, y = 1j * (X + Y), 1j * Y
        val = (cmath.exp(1j * qh * (r + y)) * (-1)
               * cmath.exp(-(u + 0.5) * cmath.log(r * (2 + r * ep))
                           - (uh + 0.5) * cmath.log(y * (2 + y * em))))
        return val

    re, e1 = integrate.dblquad(lambda X, Y: f(X, Y).real, 0, np.inf, 0, np.inf,
                               epsabs=tol, epsrel=tol)
    im, e2 = integrate.dblquad(lambda X, Y: f(X, Y).imag, 0, np.inf, 0, np.inf,
                               epsabs=tol, epsrel=tol)
    iq = complex(re, im)
    d = uh - u
    extra = (2j * cmath.sin(math.pi * d) * cmath.sin((math.pi - q1.conjugate() - q1) * d)
             * cmath.exp(1j * phi * d) * iq)
    return {"I_qhat": iq, "extra_term": extra, "quad_error": e1 + e2}
